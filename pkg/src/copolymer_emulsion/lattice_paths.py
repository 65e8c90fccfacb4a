"""Directed self-avoiding up/down/right paths crossing a column of width L.

A path in ``W_L(u, l)`` starts at ``(0, 0)``, makes ``uL`` unit steps, each
right, up or down, never revisits a site and ends at ``(L, lL)``.  For this step
set self-avoidance is equivalent to forbidding an up step directly after a
down step and vice versa, which is what every counting routine here uses.

Three exact routes to ``|W_L(u, l)|`` are provided and cross-checked in the
tests: exhaustive enumeration, a dynamic program over ``(x, y, last step)``,
and a closed-form sum over vertical stretches.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

import numpy as np

from .errors import (
    BudgetExceededError,
    CapExceededError,
    EmptyPathSetError,
    InvalidSpecError,
)

ENUMERATION_CAP = 18
DP_BUDGET = 50_000_000
LOG3 = math.log(3.0)


class StepDirection(str, enum.Enum):
    RIGHT = "R"
    UP = "U"
    DOWN = "D"


_DELTA = {"R": (1, 0), "U": (0, 1), "D": (0, -1)}
_REVERSAL = {("U", "D"), ("D", "U")}


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**9)
    return Fraction(value)


@dataclass(frozen=True)
class CrossingSpec:
    """Width ``L``, steps per unit width ``u`` and rise per unit width ``l``."""

    L: int
    u: Fraction
    l: Fraction

    def __post_init__(self):
        object.__setattr__(self, "u", as_fraction(self.u))
        object.__setattr__(self, "l", as_fraction(self.l))
        if not isinstance(self.L, (int, np.integer)) or self.L < 1:
            raise InvalidSpecError(f"L must be a positive integer, got {self.L!r}")
        n, rise = self.u * self.L, self.l * self.L
        if n.denominator != 1 or rise.denominator != 1:
            raise InvalidSpecError(f"uL={n} and lL={rise} must be integers")
        slack = n - self.L - abs(rise)
        if slack < 0 or slack % 2:
            raise InvalidSpecError(
                f"(u, l)=({self.u}, {self.l}) not in H_L for L={self.L}: "
                "uL - L - |l|L must be a nonnegative even integer"
            )

    @classmethod
    def from_steps(cls, L: int, n_steps: int, rise: int) -> "CrossingSpec":
        return cls(L, Fraction(n_steps, L), Fraction(rise, L))

    @property
    def n_steps(self) -> int:
        return int(self.u * self.L)

    @property
    def rise(self) -> int:
        return int(self.l * self.L)

    @property
    def excess(self) -> int:
        """Number of up/down pairs beyond the minimal crossing."""
        return (self.n_steps - self.L - abs(self.rise)) // 2

    def mirrored(self) -> "CrossingSpec":
        return CrossingSpec(self.L, self.u, -self.l)

    def to_dict(self) -> dict:
        return {"L": int(self.L), "u": str(self.u), "l": str(self.l)}


@dataclass(frozen=True)
class VerticalCorridor:
    """Interior points must satisfy ``B0*L < y < B1*L`` (block units)."""

    B0: Fraction
    B1: Fraction

    def __post_init__(self):
        object.__setattr__(self, "B0", as_fraction(self.B0))
        object.__setattr__(self, "B1", as_fraction(self.B1))

    def validate(self, spec: CrossingSpec) -> None:
        L = spec.L
        if (self.B0 * L).denominator != 1 or (self.B1 * L).denominator != 1:
            raise InvalidSpecError("corridor bounds must be multiples of 1/L")
        if self.B1 - self.B0 < 1:
            raise InvalidSpecError("corridor needs B1 - B0 >= 1")
        if self.B1 < max(0, spec.l) or self.B0 > min(0, spec.l):
            raise InvalidSpecError("corridor must contain both endpoints")

    def bounds(self, L: int) -> tuple[int, int]:
        return int(self.B0 * L), int(self.B1 * L)

    def to_dict(self) -> dict:
        return {"B0": str(self.B0), "B1": str(self.B1)}


@dataclass(frozen=True)
class LatticePath:
    steps: str
    start: tuple[int, int] = (0, 0)

    def points(self) -> list[tuple[int, int]]:
        x, y = self.start
        pts = [(x, y)]
        for s in self.steps:
            dx, dy = _DELTA[s]
            x, y = x + dx, y + dy
            pts.append((x, y))
        return pts

    @property
    def end(self) -> tuple[int, int]:
        return self.points()[-1]

    def is_self_avoiding(self) -> bool:
        pts = self.points()
        return len(set(pts)) == len(pts)

    def __len__(self) -> int:
        return len(self.steps)


def _walks(L: int, n: int, rise: int, lo: Optional[int], hi: Optional[int]) -> Iterator[str]:
    """Depth-first generation of all no-reversal step words hitting (L, rise)."""
    word: list[str] = []

    def rec(i: int, x: int, y: int, last: str):
        left = n - i
        if left == 0:
            if x == L and y == rise:
                yield "".join(word)
            return
        for s in "RUD":
            if (last, s) in _REVERSAL:
                continue
            dx, dy = _DELTA[s]
            nx, ny = x + dx, y + dy
            if nx > L or (L - nx) + abs(rise - ny) > left - 1:
                continue
            if lo is not None and left - 1 > 0 and not (lo < ny < hi):
                continue
            word.append(s)
            yield from rec(i + 1, nx, ny, s)
            word.pop()

    yield from rec(0, 0, 0, "R")


def enumerate_crossings(
    spec: CrossingSpec,
    corridor: Optional[VerticalCorridor] = None,
    cap: int = ENUMERATION_CAP,
) -> list[LatticePath]:
    """All paths of ``W_L(u, l)``, or of its corridor restriction."""
    if spec.n_steps > cap:
        raise CapExceededError(f"uL={spec.n_steps} exceeds enumeration cap {cap}")
    lo = hi = None
    if corridor is not None:
        corridor.validate(spec)
        lo, hi = corridor.bounds(spec.L)
    return [LatticePath(w) for w in _walks(spec.L, spec.n_steps, spec.rise, lo, hi)]


def count_crossings_dp(
    spec: CrossingSpec,
    corridor: Optional[VerticalCorridor] = None,
    budget: int = DP_BUDGET,
) -> int:
    """``|W_L(u, l)|`` (or its corridor restriction) as an exact integer.

    The state is (x, y, last step); the step index is the loop counter.  The
    height range is cut to what a path of the given length can reach, so no
    path is lost.
    """
    L, n, rise = spec.L, spec.n_steps, spec.rise
    y_lo = min(0, rise) - spec.excess
    y_hi = max(0, rise) + spec.excess
    mask = None
    if corridor is not None:
        corridor.validate(spec)
        b_lo, b_hi = corridor.bounds(L)
        heights = np.arange(y_lo, y_hi + 1)
        mask = (heights > b_lo) & (heights < b_hi)
    H = y_hi - y_lo + 1
    if 3 * (L + 1) * H * max(n, 1) > budget:
        raise BudgetExceededError(f"DP size {(L + 1) * H}x{n} over budget {budget}")

    right = np.zeros((L + 1, H), dtype=object)
    up = np.zeros((L + 1, H), dtype=object)
    down = np.zeros((L + 1, H), dtype=object)
    # the empty path behaves like one whose last step was horizontal
    right[0, -y_lo] = 1
    for i in range(1, n + 1):
        total = right + up + down
        new_r = np.zeros_like(total)
        new_u = np.zeros_like(total)
        new_d = np.zeros_like(total)
        new_r[1:, :] = total[:-1, :]
        new_u[:, 1:] = (right + up)[:, :-1]
        new_d[:, :-1] = (right + down)[:, 1:]
        if mask is not None and i < n:
            new_r[:, ~mask] = 0
            new_u[:, ~mask] = 0
            new_d[:, ~mask] = 0
        right, up, down = new_r, new_u, new_d
    j = rise - y_lo
    return int(right[L, j] + up[L, j] + down[L, j])


def count_crossings_closed_form(spec: CrossingSpec) -> int:
    """``|W_L(u, l)|`` summed over vertical-stretch patterns.

    Every path is a sequence of ``L + 1`` monotone vertical stretches (one per
    column ``x = 0..L``, possibly empty) separated by right steps.  Choosing
    which columns carry an up stretch (``ru`` of them) and which a down stretch
    (``rd``), and composing the up and down totals into that many positive
    parts, enumerates the set exactly.
    """
    L = spec.L
    ups = (spec.n_steps - L + spec.rise) // 2
    downs = (spec.n_steps - L - spec.rise) // 2
    total = 0
    for ru in range(0, L + 2):
        cu = _compositions(ups, ru)
        if cu == 0:
            continue
        for rd in range(0, L + 2 - ru):
            cd = _compositions(downs, rd)
            if cd == 0:
                continue
            placements = math.comb(L + 1, ru) * math.comb(L + 1 - ru, rd)
            total += placements * cu * cd
    return total


def _compositions(total: int, parts: int) -> int:
    """Number of ways to write ``total`` as an ordered sum of ``parts`` positive integers."""
    if parts == 0:
        return 1 if total == 0 else 0
    if total < parts:
        return 0
    return math.comb(total - 1, parts - 1)


STRETCH_SUMMANDS = ("composition", "printed")


def count_crossings_stretch_formula(L: int, u, summand: str = "composition") -> int:
    """Number of ``uL``-step paths whose endpoint lies in column ``x = L``.

    ``summand="composition"`` splits the ``(u-1)L`` vertical steps into ``r``
    nonempty stretches with ``C((u-1)L - 1, r - 1)`` compositions and matches
    exhaustive enumeration.  ``summand="printed"`` uses ``C((u-1)L, r)``, kept
    only to document that it over-counts (12 instead of 8 at ``L=1, u=3``).
    """
    u = as_fraction(u)
    vertical = (u - 1) * L
    if L < 1 or u < 1 or vertical.denominator != 1:
        raise InvalidSpecError(f"u={u} is not in 1 + N/L for L={L}")
    if summand not in STRETCH_SUMMANDS:
        raise InvalidSpecError(f"unknown summand {summand!r}")
    v = int(vertical)
    if v == 0:
        return 1
    total = 0
    for r in range(1, L + 2):
        if summand == "composition":
            parts = _compositions(v, r)
        else:
            parts = math.comb(v, r)
        total += math.comb(L + 1, r) * parts * 2**r
    return total


def count_endpoint_column_dp(L: int, u) -> int:
    """Same quantity as :func:`count_crossings_stretch_formula`, summed over DP endpoints."""
    u = as_fraction(u)
    n = u * L
    if n.denominator != 1 or u < 1:
        raise InvalidSpecError(f"u={u} is not in 1 + N/L for L={L}")
    n = int(n)
    return sum(
        count_crossings_dp(CrossingSpec.from_steps(L, n, rise))
        for rise in range(-(n - L), n - L + 1, 2)
    )


def kappa_L(spec: CrossingSpec, corridor: Optional[VerticalCorridor] = None) -> float:
    """Entropy per step ``(1/uL) log |W_L(u, l)|``."""
    count = count_crossings_dp(spec, corridor)
    if count == 0:
        raise EmptyPathSetError(f"no paths for {spec} with corridor {corridor}")
    return math.log(count) / spec.n_steps


def is_admissible(L: int, u, l) -> bool:
    try:
        CrossingSpec(L, u, l)
    except InvalidSpecError:
        return False
    return True


@dataclass
class KappaLimitRow:
    L: int
    admissible: bool
    count: Optional[int] = None
    kappa: Optional[float] = None
    running_max: Optional[float] = None


def kappa_limit(u, l, L_list) -> tuple[float, list[KappaLimitRow]]:
    """Running maximum of ``kappa_L(u, l)`` over ``L_list``.

    The supremum over ``L`` equals the limit, so the maximum is a lower bound
    on the limiting entropy that needs no extrapolation.
    """
    u, l = as_fraction(u), as_fraction(l)
    rows: list[KappaLimitRow] = []
    best = None
    for L in L_list:
        if not is_admissible(L, u, l):
            rows.append(KappaLimitRow(L, False, running_max=best))
            continue
        spec = CrossingSpec(L, u, l)
        count = count_crossings_dp(spec)
        k = math.log(count) / spec.n_steps
        best = k if best is None else max(best, k)
        rows.append(KappaLimitRow(L, True, count, k, best))
    if best is None:
        raise InvalidSpecError(f"no L in {list(L_list)} admits (u, l)=({u}, {l})")
    return best, rows


def kappa_restricted_gap(spec: CrossingSpec, corridor: VerticalCorridor) -> float:
    """``|kappa_L(u, l, B0, B1) - kappa_L(u, l)|``."""
    corridor.validate(spec)
    return abs(kappa_L(spec, corridor) - kappa_L(spec))


def admissible_specs(L: int, max_steps: int) -> Iterator[CrossingSpec]:
    """Every spec of width ``L`` with ``uL <= max_steps``."""
    for n in range(L, max_steps + 1):
        for rise in range(-(n - L), n - L + 1, 2):
            yield CrossingSpec.from_steps(L, n, rise)
