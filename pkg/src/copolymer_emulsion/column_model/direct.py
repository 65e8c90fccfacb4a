"""Quenched free energy of one column by exact transfer over (x, y, last step, reached).

Bond labels follow the block convention: a horizontal bond at height ``y``
on a block boundary takes the letter A when the two blocks differ and the
shared letter otherwise; inside a row it takes that row's letter.  A
vertical bond between ``y`` and ``y + 1`` lies in row ``y // L``.  A path
"reaches" an AB-interface when one of its vertices, the entry point included,
sits at an interface height.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import BudgetExceededError, DisorderTooShortError, EmptyPathSetError, InvalidSpecError
from ..lattice_paths import DP_BUDGET, as_fraction
from ..single_interface import MicroDisorder, step_rewards
from .types import ColumnDisorder, ColumnType, minimal_time

LN2 = math.log(2.0)


def horizontal_letter(chi: ColumnDisorder, y: int, L: int) -> str:
    if y % L == 0:
        below, above = chi(y // L - 1), chi(y // L)
        return below if below == above else "A"
    return chi((y - 1) // L)


def vertical_letter(chi: ColumnDisorder, y: int, L: int) -> str:
    """Letter of the bond joining heights ``y`` and ``y + 1``."""
    return chi(y // L)


def is_interface_height(chi: ColumnDisorder, y: int, L: int) -> bool:
    return y % L == 0 and chi(y // L - 1) != chi(y // L)


def check_budget(theta: ColumnType, u, L: int) -> tuple[int, int, int]:
    """Validate ``(theta, u)`` at width ``L``; return entry height, exit height and step count."""
    u = as_fraction(u)
    if not theta.fits_width(L):
        raise InvalidSpecError(f"b0={theta.b0}, b1={theta.b1} not on the 1/{L} grid")
    n = u * L
    gap = (u - minimal_time(theta)) * L
    if n.denominator != 1 or gap.denominator != 1 or gap < 0 or gap % 2:
        raise InvalidSpecError(f"u={u} not in t_theta + 2N/L for L={L}")
    return int(theta.b0 * L), int((theta.delta_pi + theta.b1) * L), int(n)


def psi_quenched_column(
    omega: MicroDisorder,
    theta: ColumnType,
    u,
    L: int,
    alpha: float,
    beta: float,
    budget: int = DP_BUDGET,
) -> float:
    """``(1/uL) log Z`` over the paths crossing a width-``L`` column of type ``theta`` in ``uL`` steps."""
    return column_log_partition(omega, theta, u, L, alpha, beta, budget) / (as_fraction(u) * L)


def column_log_partition(omega, theta, u, L, alpha, beta, budget=DP_BUDGET) -> float:
    y0, y1, n = check_budget(theta, u, L)
    if len(omega) < n:
        raise DisorderTooShortError(f"need {n} monomers, got {len(omega)}")
    excess = (n - L - abs(y1 - y0)) // 2
    ylo, yhi = min(y0, y1) - excess, max(y0, y1) + excess
    ys = list(range(ylo, yhi + 1))
    H = len(ys)
    if 6 * (L + 1) * H * n > budget:
        raise BudgetExceededError(f"column DP of size {(L + 1) * H}x{n} over budget {budget}")
    chi = theta.chi
    h_b = np.array([horizontal_letter(chi, y, L) == "B" for y in ys])[None, :]
    # up step arriving at y uses bond (y-1, y); down step arriving at y uses (y, y+1)
    up_b = np.array([y > ylo and vertical_letter(chi, y - 1, L) == "B" for y in ys])[None, :]
    down_b = np.array([y < yhi and vertical_letter(chi, y, L) == "B" for y in ys])[None, :]
    hit = np.array([is_interface_height(chi, y, L) for y in ys])[None, :]
    rewards = step_rewards(omega.word[:n], alpha, beta)

    # arrays indexed [reached][x, y]
    shape = (2, L + 1, H)
    right, up, down = np.zeros(shape), np.zeros(shape), np.zeros(shape)
    right[int(hit[0, y0 - ylo]), 0, y0 - ylo] = 1.0
    exponent = 0
    for i in range(n):
        g = math.exp(rewards[i])
        total = right + up + down
        nr, nu, nd = np.zeros(shape), np.zeros(shape), np.zeros(shape)
        nr[:, 1:, :] = total[:, :-1, :]
        nu[:, :, 1:] = (right + up)[:, :, :-1]
        nd[:, :, :-1] = (right + down)[:, :, 1:]
        if g != 1.0:
            nr = np.where(h_b, nr * g, nr)
            nu = np.where(up_b, nu * g, nu)
            nd = np.where(down_b, nd * g, nd)
        for arr in (nr, nu, nd):
            arr[1] += np.where(hit, arr[0], 0.0)
            arr[0] = np.where(hit, 0.0, arr[0])
        top = max(nr.max(), nu.max(), nd.max())
        if top == 0.0:
            raise EmptyPathSetError("no path survives")
        _, e = math.frexp(top)
        right, up, down = np.ldexp(nr, -e), np.ldexp(nu, -e), np.ldexp(nd, -e)
        exponent += e
    end = right + up + down
    j = y1 - ylo
    if theta.is_int:
        z = end[0, L, j] + end[1, L, j]
    else:
        z = end[theta.x - 1, L, j]
    if z <= 0:
        raise EmptyPathSetError(f"no path of type {theta.to_dict()} with u={u}, L={L}")
    mant, ez = math.frexp(z)
    return (math.log2(mant) + ez + exponent) * LN2
