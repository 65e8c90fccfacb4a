"""Numerical ingredients of the copolymer/micro-emulsion variational formula."""

from __future__ import annotations

__version__ = "0.1.0"
