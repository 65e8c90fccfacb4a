"""Exact quenched partition function of the full model for small ``n``.

Paths start at ``(0, 1)`` and take up, down or right steps without
self-intersection.  Column ``j`` holds the x-range ``(jL, (j+1)L]``: a right
step from ``x`` lies in column ``x // L`` and a vertical step at ``x`` in
column ``(x - 1) // L`` (column 0 for ``x = 0``).  The row of the last step of
each column is compared with the row recorded for the previous column, which
enforces the cap ``M`` on block-scale jumps.

State of the transfer: ``(steps in current column, entry row, x, y)`` for each
last-step direction.  All operations are additions of nonnegative numbers in
a fixed order and exact power-of-two rescalings, so enlarging ``M`` can never
lower the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .emulsion_field import BlockField, sample_block_field
from .errors import BudgetExceededError, DisorderTooShortError, InvalidSpecError, ModelError, OutOfFieldError
from .rng import TAG_FIELD, TAG_MONOMERS, derived_seed, sample_word
from .single_interface import MicroDisorder, check_cone, map_ordered, step_rewards

LN2 = math.log(2.0)
LOG3 = math.log(3.0)
FULL_BUDGET = 60_000_000


class InvariantViolation(RuntimeError):
    """A computed value broke a bound that holds for every input."""


@dataclass(frozen=True)
class ModelInstance:
    n: int
    L: int
    M: int
    alpha: float
    beta: float
    omega: MicroDisorder
    field: BlockField = field(repr=False)
    m: Optional[int] = None
    star: bool = False

    def __post_init__(self):
        if self.n < 1 or self.L < 1 or self.M < 1:
            raise InvalidSpecError("n, L and M must be positive")
        if self.L > self.n:
            raise InvalidSpecError(f"block size L={self.L} exceeds n={self.n}")
        if self.m is not None and self.m < 1:
            raise InvalidSpecError("m must be positive")
        check_cone(self.alpha, self.beta)
        if len(self.omega) < self.n:
            raise DisorderTooShortError(f"need {self.n} monomers, got {len(self.omega)}")

    def with_(self, **kw) -> "ModelInstance":
        d = {k: getattr(self, k) for k in ("n", "L", "M", "alpha", "beta", "omega", "field", "m", "star")}
        d.update(kw)
        return ModelInstance(**d)

    @property
    def regime_flag(self) -> str:
        return "blocks small vs n" if self.L * self.L <= self.n else "blocks large vs n"

    def to_dict(self) -> dict:
        return {"n": self.n, "L": self.L, "M": self.M, "alpha": self.alpha, "beta": self.beta,
                "m": self.m, "star": self.star, "omega_seed": self.omega.seed,
                "omega_index": self.omega.index, "field_seed": self.field.seed, "p": self.field.p}


def required_field(n: int, L: int) -> tuple[int, int]:
    """Smallest (width, height) of a field covering every block an ``n``-step path can touch."""
    return (n - 1) // L + 1, (n + 1) // L + 2


def _b_masks(fld: BlockField, L: int, xs: np.ndarray, ys: np.ndarray):
    """B-indicators of the bond created by each step, indexed at the arrival vertex."""
    h = fld.height

    def b(col, row):
        if np.any(np.abs(row) > h) or np.any(col >= fld.width):
            raise OutOfFieldError("field does not cover the reachable blocks")
        return ~fld.is_a[col, row + h]

    X, Y = np.meshgrid(xs, ys, indexing="ij")
    from_x = np.maximum(X - 1, 0)
    # right step arriving at (x, y): horizontal bond at height y in column (x-1)//L
    col_r = from_x // L
    on_edge = Y % L == 0
    right = np.where(on_edge, b(col_r, Y // L - 1) & b(col_r, Y // L), b(col_r, (Y - 1) // L))
    right[0, :] = False  # unreachable
    col_v = np.maximum(X - 1, 0) // L
    up = b(col_v, (Y - 1) // L)  # bond (y-1, y)
    down = b(col_v, Y // L)  # bond (y, y+1)
    return right, up, down


def full_log_partition(inst: ModelInstance, budget: int = FULL_BUDGET) -> float:
    n, L, M = inst.n, inst.L, inst.M
    ys = np.arange(1 - n, n + 2)
    xs = np.arange(0, n + 1)
    rows_lo, rows_hi = (ys[0] - 1) // L, ys[-1] // L
    E = rows_hi - rows_lo + 1
    C = inst.m * L + 1 if inst.m is not None else 1
    X, Y = len(xs), len(ys)
    if 3 * C * E * X * Y > budget:
        raise BudgetExceededError(f"state space {3 * C * E * X * Y} over budget {budget}")
    right_b, up_b, down_b = _b_masks(inst.field, L, xs, ys)
    rewards = step_rewards(inst.omega.word[:n], inst.alpha, inst.beta)

    # row of the last step, for each direction of that step, by arrival height
    row_last = {"R": (ys - 1) // L, "U": (ys - 1) // L, "D": ys // L}
    shape = (C, E, X, Y)
    R, U, D = np.zeros(shape), np.zeros(shape), np.zeros(shape)
    R[0, -rows_lo, 0, 1 - ys[0]] = 1.0
    exponent = 0
    capped = inst.m is not None

    def bump(a):
        if not capped:
            return a
        out = np.zeros_like(a)
        out[1:] = a[:-1]  # mass past the cap falls off
        return out

    y0 = 1 - ys[0]
    for i in range(n):
        g = math.exp(rewards[i])
        # light cone after i+1 steps: x <= i+1 and |y - 1| <= i+1
        xb_, ya, yb = min(i + 2, X), max(y0 - i - 1, 0), min(y0 + i + 2, Y)
        box = (slice(None), slice(None), slice(0, xb_), slice(ya, yb))
        r, u, d = R[box], U[box], D[box]
        bshape = r.shape
        nR, nU, nD = np.zeros(bshape), np.zeros(bshape), np.zeros(bshape)
        bx_all = xs[: xb_ - 1]
        boundary = (bx_all % L == 0) & (bx_all >= L)
        inner = np.flatnonzero(~boundary)
        nR[:, :, inner + 1, :] = bump((r + u + d)[:, :, inner, :])
        bx = np.flatnonzero(boundary)
        if bx.size:
            ycols = np.arange(yb - ya)
            cols = np.arange(bx.size)[:, None]
            for arr, key in ((r, "R"), (u, "U"), (d, "D")):
                # (E, boundaries, Y); the step count restarts in the new column
                mass = arr[:, :, bx, :].sum(axis=0) if capped else arr[0][:, bx, :]
                r_idx = row_last[key][ya:yb] - rows_lo
                slot = 1 if capped else 0
                for off in range(-M, M + 1):
                    e_idx = r_idx - off
                    ok = (e_idx >= 0) & (e_idx < E)
                    vals = np.where(ok[None, :], mass[np.clip(e_idx, 0, E - 1)[None, :], cols, ycols[None, :]], 0.0)
                    nR[slot, r_idx[None, :], (bx + 1)[:, None], ycols[None, :]] += vals
        nU[..., 1:] = bump((r + u)[..., :-1])
        nD[..., :-1] = bump((r + d)[..., 1:])
        if g != 1.0:
            mb = (slice(0, xb_), slice(ya, yb))
            nR = np.where(right_b[mb], nR * g, nR)
            nU = np.where(up_b[mb], nU * g, nU)
            nD = np.where(down_b[mb], nD * g, nD)
        top = max(nR.max(), nU.max(), nD.max())
        if top == 0.0:
            raise ModelError("no admissible path")
        _, e = math.frexp(top)
        R[box], U[box], D[box] = np.ldexp(nR, -e), np.ldexp(nU, -e), np.ldexp(nD, -e)
        exponent += e

    e_vals = np.arange(rows_lo, rows_hi + 1)[:, None]
    z = 0.0
    for arr, key in ((R, "R"), (U, "U"), (D, "D")):
        ok = np.abs(row_last[key][None, :] - e_vals) <= M  # (E, Y)
        sel = arr.sum(axis=0) if capped else arr[0]
        if inst.star:
            keep = (xs % L == 0) & (xs > 0)
            sel = sel[:, keep, :]
        z += float(np.where(ok[:, None, :], sel, 0.0).sum())
    if z <= 0:
        raise ModelError("no admissible path")
    mant, ez = math.frexp(z)
    return (math.log2(mant) + ez + exponent) * LN2


def finite_free_energy(inst: ModelInstance, budget: int = FULL_BUDGET) -> float:
    f = full_log_partition(inst, budget) / inst.n
    if abs(f) > LOG3 + inst.alpha + 1e-12:
        raise InvariantViolation(f"free energy {f} outside [-(log 3 + alpha), log 3 + alpha]")
    return f


def directed_walk_count(n: int) -> int:
    """Number of ``n``-step up/down/right self-avoiding paths (no cap)."""
    a, b = 1, 3
    for _ in range(n):
        a, b = b, 2 * b + a
    return a


def random_instance(n: int, L: int, M: int, alpha: float, beta: float, p: float, seed: int, index: int,
                    m: Optional[int] = None, star: bool = False) -> ModelInstance:
    """Instance ``index`` of a disorder ensemble: independent word and field substreams."""
    width, height = required_field(n, L)
    fld = sample_block_field(p, width, height, derived_seed(seed, TAG_FIELD, index))
    omega = MicroDisorder(sample_word(seed, index, n, TAG_MONOMERS), seed, index)
    return ModelInstance(n, L, M, alpha, beta, omega, fld, m, star)


@dataclass
class ConvergenceRow:
    n: int
    L: int
    mean: float
    std: float
    samples: int
    lower_bound: Optional[float]
    gap: Optional[float]

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _f_job(args):
    n, L, M, alpha, beta, p, seed, i, m = args
    return finite_free_energy(random_instance(n, L, M, alpha, beta, p, seed, i, m))


def convergence_report(n_list: Sequence[int], L_list: Sequence[int], M: int, alpha: float, beta: float,
                       p: float, samples: int, seed: int, m: Optional[int] = None,
                       lower_bound: Optional[float] = None, workers: int = 1) -> list[ConvergenceRow]:
    """Mean and spread of ``f_n`` over disorder draws, next to a variational lower bound.

    The gap is reported, not asserted: at desk-scale ``n`` the limit is out of reach.
    """
    if list(n_list) != sorted(n_list):
        raise InvalidSpecError("n_list must be ascending")
    if len(L_list) != len(n_list):
        raise InvalidSpecError("one block size per n")
    if list(L_list) != sorted(L_list):
        raise InvalidSpecError("block sizes must be nondecreasing")
    rows = []
    for n, L in zip(n_list, L_list):
        jobs = [(n, L, M, alpha, beta, p, seed, i, m) for i in range(samples)]
        fs = np.array(map_ordered(_f_job, jobs, workers))
        std = float(fs.std(ddof=1)) if samples > 1 else 0.0
        gap = None if lower_bound is None else float(fs.mean() - lower_bound)
        rows.append(ConvergenceRow(n, L, float(fs.mean()), std, samples, lower_bound, gap))
    return rows


def star_gap(inst: ModelInstance) -> float:
    """``(log Z - log Z*) / L`` for the column-boundary endpoint restriction."""
    full = full_log_partition(inst.with_(star=False))
    star = full_log_partition(inst.with_(star=True))
    if star > full:
        raise InvariantViolation("restricted partition function exceeds the full one")
    return (full - star) / inst.L
