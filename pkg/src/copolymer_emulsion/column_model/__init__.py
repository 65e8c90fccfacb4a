"""Single-column free energies: type algebra, direct transfer and variational formulas."""

from __future__ import annotations

from .direct import psi_quenched_column
from .types import (
    ColumnDisorder,
    ColumnGeometry,
    ColumnType,
    Interfaces,
    column_distance,
    geometry,
    interface_count,
    locate_interfaces,
    minimal_time,
)
from .variational import Allocation, psi_int_variational, psi_nint, psi_variational

__all__ = [
    "Allocation",
    "ColumnDisorder",
    "ColumnGeometry",
    "ColumnType",
    "Interfaces",
    "column_distance",
    "geometry",
    "interface_count",
    "locate_interfaces",
    "minimal_time",
    "psi_int_variational",
    "psi_nint",
    "psi_quenched_column",
    "psi_variational",
]
