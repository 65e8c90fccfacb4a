"""Brute-force enumerators used as independent oracles by the self-check.

Everything here walks every path explicitly and labels bonds by looking at
their midpoints, so it shares no code with the transfer-matrix routines.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterator, Optional

import numpy as np

from .column_model.types import ColumnType


def _logsumexp(terms: list[float]) -> Optional[float]:
    if not terms:
        return None
    t = np.array(terms)
    top = t.max()
    return float(top + math.log(np.exp(t - top).sum()))


def directed_paths(n: int, start=(0, 0), target=None) -> Iterator[list[tuple[int, int]]]:
    """All ``n``-step up/down/right self-avoiding paths, as vertex lists.

    With ``target`` only paths ending there, and never passing its abscissa,
    are produced; the search is pruned accordingly.
    """

    def rec(path, last):
        left = n + 1 - len(path)
        x, y = path[-1]
        if left == 0:
            if target is None or (x, y) == target:
                yield list(path)
            return
        for step, (dx, dy) in (("R", (1, 0)), ("U", (0, 1)), ("D", (0, -1))):
            if {step, last} == {"U", "D"}:
                continue
            nx, ny = x + dx, y + dy
            if target is not None and (nx > target[0] or abs(target[0] - nx) + abs(target[1] - ny) > left - 1):
                continue
            path.append((nx, ny))
            yield from rec(path, step)
            path.pop()

    yield from rec([start], None)


def crossing_count(L: int, n: int, rise: int) -> int:
    """Paths of ``n`` steps from ``(0, 0)`` to ``(L, rise)`` that stay in ``x <= L``."""
    return sum(1 for _ in directed_paths(n, target=(L, rise)))


def interface_log_z(word: str, L: int, n: int, alpha: float, beta: float) -> float:
    """Single flat interface at height 0: bonds strictly below it carry the reward."""
    terms = []
    for p in directed_paths(n, target=(L, 0)):
        h = 0.0
        for i, ((_, y0), (_, y1)) in enumerate(zip(p, p[1:])):
            below = y0 <= -1 if y0 == y1 else max(y0, y1) <= 0
            if below:
                h += beta if word[i] == "B" else -alpha
        terms.append(h)
    return _logsumexp(terms)


def _cell(v, L: int) -> int:
    return math.ceil(v / L) - 1


def column_log_z(word: str, theta: ColumnType, u, L: int, alpha: float, beta: float) -> Optional[float]:
    """One column of width ``L`` with block letters ``theta.chi``; ``None`` if no path qualifies."""
    n = int(Fraction(u) * L)
    y0 = int(theta.b0 * L)
    y1 = int((theta.delta_pi + theta.b1) * L)
    chi = theta.chi
    terms = []
    for p in directed_paths(n, (0, y0), target=(L, y1)):
        hit = False
        for _, y in p:
            if y % L == 0 and abs(y // L) <= chi.w and abs(y // L - 1) <= chi.w:
                hit |= chi(y // L - 1) != chi(y // L)
        if not theta.is_int and hit != (theta.x == 2):
            continue
        h = 0.0
        for i, ((_, a), (_, b)) in enumerate(zip(p, p[1:])):
            if a == b and a % L == 0:
                is_b = chi(a // L - 1) == chi(a // L) == "B"
            else:
                is_b = chi(_cell(Fraction(a + b, 2), L)) == "B"
            if is_b:
                h += beta if word[i] == "B" else -alpha
        terms.append(h)
    return _logsumexp(terms)


def full_log_z(n: int, L: int, M: int, alpha: float, beta: float, word: str, block,
               m: Optional[int] = None, star: bool = False) -> Optional[float]:
    """Full model from ``(0, 1)``; ``block(col, row)`` returns the letter of a block."""
    terms = []
    for p in directed_paths(n, (0, 1)):
        last_row: dict[int, int] = {}
        steps_in: dict[int, int] = {}
        h = 0.0
        for i, ((x0, y0), (x1, y1)) in enumerate(zip(p, p[1:])):
            col = max(0, _cell((x0 + x1) / 2, L))
            row = _cell((y0 + y1) / 2, L)
            if y0 == y1 and y0 % L == 0:
                is_b = block(col, y0 // L - 1) == block(col, y0 // L) == "B"
            else:
                is_b = block(col, row) == "B"
            if is_b:
                h += beta if word[i] == "B" else -alpha
            last_row[col] = row
            steps_in[col] = steps_in.get(col, 0) + 1
        prev, ok = 0, True
        for col in sorted(last_row):
            ok &= abs(last_row[col] - prev) <= M
            prev = last_row[col]
        if m is not None:
            ok &= max(steps_in.values()) <= m * L
        if star:
            ok &= p[-1][0] % L == 0 and p[-1][0] > 0
        if ok:
            terms.append(h)
    return _logsumexp(terms)
