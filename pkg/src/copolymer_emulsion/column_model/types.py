"""Column types, interfaces and crossing geometry.

Heights are in block units.  Block row ``j`` of a column of width ``L`` covers
heights ``(jL, (j+1)L]``, so an AB-interface at height ``n`` separates rows
``n - 1`` and ``n``.  A path enters at height ``b0`` (row 0) and exits at
``delta_pi + b1`` (row ``delta_pi``), with ``b0, b1`` in ``(0, 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from ..errors import InvalidSpecError, WindowError
from ..lattice_paths import as_fraction


@dataclass(frozen=True)
class ColumnDisorder:
    """Block letters ``chi(j)`` for rows ``j = -w..w``."""

    letters: str
    w: int

    def __post_init__(self):
        if len(self.letters) != 2 * self.w + 1:
            raise WindowError(f"window of half-width {self.w} needs {2 * self.w + 1} letters")
        if set(self.letters) - {"A", "B"}:
            raise InvalidSpecError("block letters must be A or B")

    @classmethod
    def from_rows(cls, rows: dict[int, str]) -> "ColumnDisorder":
        w = max(abs(j) for j in rows)
        if set(rows) != set(range(-w, w + 1)):
            raise WindowError("rows must form a symmetric contiguous window")
        return cls("".join(rows[j] for j in range(-w, w + 1)), w)

    @classmethod
    def uniform(cls, letter: str, w: int) -> "ColumnDisorder":
        return cls(letter * (2 * w + 1), w)

    def __call__(self, j: int) -> str:
        if abs(j) > self.w:
            raise WindowError(f"row {j} outside window of half-width {self.w}")
        return self.letters[j + self.w]

    def covers(self, lo: int, hi: int) -> bool:
        return -self.w <= lo and hi <= self.w

    def swapped(self) -> "ColumnDisorder":
        return ColumnDisorder(self.letters.translate(str.maketrans("AB", "BA")), self.w)

    def to_dict(self) -> dict:
        return {"offset": -self.w, "letters": self.letters}


@dataclass(frozen=True)
class Interfaces:
    """Interface heights split into ``n_0 >= n_{-1} > ...`` (at or below 0) and ``n_1 < n_2 < ...``."""

    lower: tuple[int, ...]  # n_0, n_{-1}, ... in decreasing order
    upper: tuple[int, ...]  # n_1, n_2, ... in increasing order

    def n(self, i: int) -> Optional[int]:
        seq, k = (self.upper, i - 1) if i >= 1 else (self.lower, -i)
        return seq[k] if k < len(seq) else None

    @property
    def heights(self) -> list[int]:
        return sorted(self.lower) + list(self.upper)


def locate_interfaces(chi: ColumnDisorder) -> Interfaces:
    heights = [n for n in range(-chi.w + 1, chi.w + 1) if chi(n - 1) != chi(n)]
    return Interfaces(
        tuple(sorted((n for n in heights if n <= 0), reverse=True)),
        tuple(n for n in heights if n > 0),
    )


def interface_count(chi: ColumnDisorder, r: int) -> int:
    """Signed number of interfaces crossed going from row 0 to row ``r``."""
    if abs(r) > chi.w:
        raise WindowError(f"r={r} outside window of half-width {chi.w}")
    inter = locate_interfaces(chi)
    if r > 0:
        return sum(1 for n in inter.upper if n <= r)
    if r < 0:
        return -sum(1 for n in inter.lower if n >= r + 1)
    return 0


def _frac_in_unit(b) -> Fraction:
    b = as_fraction(b)
    if not 0 < b <= 1:
        raise InvalidSpecError(f"entry/exit offset {b} not in (0, 1]")
    return b


@dataclass(frozen=True)
class ColumnType:
    chi: ColumnDisorder
    delta_pi: int
    b0: Fraction
    b1: Fraction
    x: int = 1

    def __post_init__(self):
        object.__setattr__(self, "b0", _frac_in_unit(self.b0))
        object.__setattr__(self, "b1", _frac_in_unit(self.b1))
        if self.x not in (1, 2):
            raise InvalidSpecError("x must be 1 or 2")
        if abs(self.delta_pi) > self.chi.w:
            raise WindowError("window does not reach the exit row")
        if self.x == 2 and self.k != 0:
            raise InvalidSpecError("interface columns admit only x=1")

    @property
    def k(self) -> int:
        return interface_count(self.chi, self.delta_pi)

    @property
    def is_int(self) -> bool:
        return self.k != 0

    @property
    def rise(self) -> Fraction:
        """Net vertical displacement in block units."""
        return self.delta_pi + self.b1 - self.b0

    def check_caps(self, M: int, m: Optional[int] = None) -> None:
        if abs(self.delta_pi) > M:
            raise InvalidSpecError(f"|delta_pi|={abs(self.delta_pi)} exceeds M={M}")
        if m is not None:
            if self.chi.w < m - 1:
                raise WindowError(f"window half-width {self.chi.w} < m-1={m - 1}")
            if minimal_time(self) > m:
                raise InvalidSpecError(f"t_theta={minimal_time(self)} exceeds m={m}")

    def fits_width(self, L: int) -> bool:
        return (self.b0 * L).denominator == 1 and (self.b1 * L).denominator == 1

    def with_x(self, x: int) -> "ColumnType":
        return ColumnType(self.chi, self.delta_pi, self.b0, self.b1, x)

    def to_dict(self) -> dict:
        return {"chi_window": self.chi.to_dict(), "delta_pi": self.delta_pi,
                "b0": str(self.b0), "b1": str(self.b1), "x": self.x}

    @classmethod
    def from_dict(cls, d: dict) -> "ColumnType":
        win = d["chi_window"]
        letters = win["letters"]
        chi = ColumnDisorder(letters, (len(letters) - 1) // 2)
        if win.get("offset", -chi.w) != -chi.w:
            raise WindowError("chi_window must be centred on row 0")
        return cls(chi, int(d["delta_pi"]), Fraction(d["b0"]), Fraction(d["b1"]), int(d["x"]))


def l_nint(delta_pi: int, b0: Fraction, b1: Fraction) -> Fraction:
    """Vertical distance between entry and exit of a column crossed without an interface."""
    return abs(delta_pi + b1 - b0)


def l_int(theta: ColumnType) -> Optional[Fraction]:
    """Shortest vertical travel that touches an interface and then exits; ``None`` if none is in range."""
    inter = locate_interfaces(theta.chi)
    n1, n0 = inter.n(1), inter.n(0)
    s = theta.b0 + theta.b1 + theta.delta_pi
    options = []
    if n1 is not None:
        options.append(2 * n1 - s)
    if n0 is not None:
        options.append(2 * abs(n0) + s)
    return min(options) if options else None


def minimal_time(theta: ColumnType) -> Fraction:
    """Minimal steps per unit width needed to cross a column of this type."""
    if theta.x == 1:
        dp = theta.delta_pi
        if dp != 0:
            sign = 1 if dp > 0 else -1
            return 1 + sign * (dp + theta.b1 - theta.b0)
        return 1 + abs(theta.b1 - theta.b0)
    li = l_int(theta)
    if li is None:
        raise WindowError("no interface inside the window; cannot reach one")
    return 1 + li


@dataclass(frozen=True)
class ColumnGeometry:
    interfaces: tuple[int, ...]
    k_theta: int
    t_theta: Fraction
    l_A: Fraction
    l_B: Fraction
    l_nint: Optional[Fraction]
    l_int: Optional[Fraction]
    segments: tuple[tuple[Fraction, str], ...]

    def to_dict(self) -> dict:
        def s(v):
            return None if v is None else str(v)

        return {"interfaces": list(self.interfaces), "k_theta": self.k_theta,
                "t_theta": str(self.t_theta), "l_A": str(self.l_A), "l_B": str(self.l_B),
                "l_nint": s(self.l_nint), "l_int": s(self.l_int)}


def _segments(theta: ColumnType) -> list[tuple[Fraction, str]]:
    """Vertical stretches between entry, crossed interfaces and exit, with their block letter."""
    start, end = theta.b0, theta.rise + theta.b0
    lo, hi = min(start, end), max(start, end)
    cuts = [n for n in locate_interfaces(theta.chi).heights if lo <= n <= hi]
    points = [lo] + [Fraction(n) for n in cuts] + [hi]
    out = []
    for a, b in zip(points, points[1:]):
        # a zero-length stretch (entry or exit on an interface) still gets a letter
        out.append((b - a, theta.chi(_row_containing((a + b) / 2))))
    if theta.delta_pi < 0:
        out.reverse()
    return out


def _row_containing(y: Fraction) -> int:
    """Row ``j`` with ``j < y <= j + 1``."""
    f = y.numerator // y.denominator
    return f - 1 if f == y else f


def geometry(theta: ColumnType) -> ColumnGeometry:
    segs = _segments(theta)
    l_a = sum((s for s, c in segs if c == "A"), Fraction(0))
    l_b = sum((s for s, c in segs if c == "B"), Fraction(0))
    nint = None if theta.is_int else l_nint(theta.delta_pi, theta.b0, theta.b1)
    li = None if theta.is_int else l_int(theta)
    t = minimal_time(theta) if (theta.x == 1 or li is not None) else None
    return ColumnGeometry(tuple(locate_interfaces(theta.chi).heights), theta.k, t,
                          l_a, l_b, nint, li, tuple(segs))


def column_distance(t1: ColumnType, t2: ColumnType) -> Fraction:
    """Distance between column types; the block-letter term is weighted by ``2^-|j|``."""
    if t1.chi.w != t2.chi.w:
        raise WindowError("column types have different window widths")
    w = t1.chi.w
    d = sum((Fraction(1, 2 ** abs(j)) for j in range(-w, w + 1) if t1.chi(j) != t2.chi(j)), Fraction(0))
    d += abs(t1.delta_pi - t2.delta_pi) + abs(t1.b0 - t2.b0) + abs(t1.b1 - t2.b1)
    return d + abs(t1.x - t2.x)
