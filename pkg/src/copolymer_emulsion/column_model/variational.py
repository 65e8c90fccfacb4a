"""Variational free energy of a column from the entropy and interface oracles.

Interface columns split their width and their steps between an A-part, a
B-part and an interface part; the split is an :class:`Allocation`.  With
``h_I = 1 - h_A - h_B`` and the slack ``S = u - 1 - l_A - l_B`` shared out as
``a_A = h_A + l_A + s_A S``, ``a_B = h_B + l_B + s_B S`` and
``a_I = h_I + (1 - s_A - s_B) S``, the feasible set becomes a product of two
triangles and the map is affine, so concavity of the objective survives.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import InfeasibleError
from ..oracles import KappaOracle, PhiOracle
from ..rng import TAG_OPTIMIZER, substream
from .types import ColumnGeometry, ColumnType, geometry

FEAS_TOL = 1e-12


@dataclass(frozen=True)
class Allocation:
    h_A: float
    h_B: float
    h_I: float
    a_A: float
    a_B: float
    a_I: float

    def violation(self, u: float, l_A: float, l_B: float) -> float:
        """Largest violation of the allocation constraints (0 when feasible)."""
        checks = [
            abs(self.h_A + self.h_B + self.h_I - 1),
            abs(self.a_A + self.a_B + self.a_I - u),
            -min(self.h_A, self.h_B, self.h_I, 0.0),
            max(self.h_A, self.h_B, self.h_I, 1.0) - 1,
            (self.h_A + l_A) - self.a_A,
            (self.h_B + l_B) - self.a_B,
            self.h_I - self.a_I,
        ]
        return max(0.0, *checks)

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


@dataclass
class VariationalResult:
    value: float
    allocation: Optional[Allocation]
    evaluations: int = 0

    def __iter__(self):
        yield self.value
        yield self.allocation


def simplex_grid(resolution: int) -> np.ndarray:
    """Points ``(i, j) / resolution`` with ``i + j <= resolution``."""
    pts = [(i, j) for i in range(resolution + 1) for j in range(resolution + 1 - i)]
    return np.array(pts, dtype=float) / resolution


def _project_triangle(p: np.ndarray) -> np.ndarray:
    """Map ``(..., 2)`` points into ``{x, y >= 0, x + y <= 1}``."""
    p = np.maximum(p, 0.0)
    s = p.sum(axis=-1, keepdims=True)
    return np.where(s > 1.0, p / np.where(s > 1.0, s, 1.0), p)


class _IntProblem:
    def __init__(self, u, l_A, l_B, alpha, beta, kap: KappaOracle, phi: PhiOracle):
        self.u, self.l_A, self.l_B = float(u), float(l_A), float(l_B)
        self.slack = self.u - 1 - self.l_A - self.l_B
        self.c = (beta - alpha) / 2
        self.kap, self.phi = kap, phi
        self.dim = 4
        self.evals = 0

    def unpack(self, z):
        h_a, h_b, s_a, s_b = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
        h_i = np.maximum(1 - h_a - h_b, 0.0)
        a_a = h_a + self.l_A + s_a * self.slack
        a_b = h_b + self.l_B + s_b * self.slack
        a_i = h_i + np.maximum(1 - s_a - s_b, 0.0) * self.slack
        return h_a, h_b, h_i, a_a, a_b, a_i

    def __call__(self, z):
        z = np.atleast_2d(z)
        self.evals += z.shape[0]
        h_a, h_b, h_i, a_a, a_b, a_i = self.unpack(z)
        num = (self.kap.weighted(a_a, h_a, self.l_A)
               + self.kap.weighted(a_b, h_b, self.l_B) + self.c * a_b
               + self.phi.weighted(a_i, h_i))
        return num / self.u

    def project(self, z):
        return np.concatenate([_project_triangle(z[..., :2]), _project_triangle(z[..., 2:])], axis=-1)

    def feasible(self, z):
        t1 = (z[..., 0] >= 0) & (z[..., 1] >= 0) & (z[..., 0] + z[..., 1] <= 1 + FEAS_TOL)
        t2 = (z[..., 2] >= 0) & (z[..., 3] >= 0) & (z[..., 2] + z[..., 3] <= 1 + FEAS_TOL)
        return t1 & t2

    def grid(self, resolution):
        tri = simplex_grid(resolution)
        n = len(tri)
        return np.concatenate([np.repeat(tri, n, axis=0), np.tile(tri, (n, 1))], axis=1)

    def allocation(self, z) -> Allocation:
        vals = [float(v) for v in self.unpack(np.asarray(z, dtype=float))]
        return Allocation(*vals)


class _NintProblem:
    def __init__(self, u, l, chi0_is_b, alpha, beta, kap: KappaOracle, phi: PhiOracle):
        self.u, self.l = float(u), float(l)
        self.span = self.u - 1 - self.l
        self.c = (beta - alpha) / 2 if chi0_is_b else 0.0
        self.kap, self.phi = kap, phi
        self.dim = 2
        self.evals = 0

    def unpack(self, z):
        h_i = z[..., 0]
        u_i = h_i + z[..., 1] * self.span
        return h_i, u_i

    def __call__(self, z):
        z = np.atleast_2d(z)
        self.evals += z.shape[0]
        h_i, u_i = self.unpack(z)
        rest = self.u - u_i
        num = self.kap.weighted(rest, 1 - h_i, self.l) + self.c * rest + self.phi.weighted(u_i, h_i)
        return num / self.u

    def project(self, z):
        return np.clip(z, 0.0, 1.0)

    def feasible(self, z):
        return np.all((z >= 0) & (z <= 1), axis=-1)

    def grid(self, resolution):
        g = np.linspace(0.0, 1.0, resolution + 1)
        return np.array(list(itertools.product(g, g)))


def _directions(dim: int, n_random: int, seed: int) -> np.ndarray:
    eye = np.eye(dim)
    dirs = [eye, -eye]
    for i, j in itertools.combinations(range(dim), 2):
        for si, sj in itertools.product((1, -1), repeat=2):
            d = np.zeros(dim)
            d[i], d[j] = si, sj
            dirs.append(d[None, :] / np.sqrt(2))
    rnd = substream(seed, TAG_OPTIMIZER, dim).normal(size=(n_random, dim))
    dirs.append(rnd / np.linalg.norm(rnd, axis=1, keepdims=True))
    return np.concatenate(dirs)


def _pattern_search(problem, starts, step, tol, max_iter=5000, seed=0):
    """Compass search with expanding/shrinking steps, run for all starts in one batch."""
    dirs = _directions(problem.dim, 4 * problem.dim, seed)
    x = np.array(starts, dtype=float)
    fx = problem(x)
    steps = np.full(len(x), float(step))
    min_step = max(tol * 1e-3, 1e-12)
    for _ in range(max_iter):
        live = np.flatnonzero(steps > min_step)
        if live.size == 0:
            break
        cand = problem.project(x[live, None, :] + steps[live, None, None] * dirs[None, :, :])
        vals = problem(cand.reshape(-1, problem.dim)).reshape(live.size, len(dirs))
        k = np.argmax(vals, axis=1)
        best = vals[np.arange(live.size), k]
        better = best > fx[live]
        up = live[better]
        x[up] = cand[better, k[better]]
        fx[up] = best[better]
        steps[up] *= 1.5
        steps[live[~better]] *= 0.5
    i = int(np.argmax(fx))
    return x[i], float(fx[i])


def _maximize(problem, tol, seed_resolution=16, n_starts=6):
    pts = problem.grid(seed_resolution)
    vals = problem(pts)
    order = np.argsort(-vals, kind="stable")
    best_x, best_f = pts[order[0]], float(vals[order[0]])
    starts = pts[order[:n_starts]]
    x, f = _pattern_search(problem, starts, 1.0 / seed_resolution, tol)
    if f > best_f:
        best_x, best_f = x, f
    return best_x, best_f


def _check_int(u, l_A, l_B):
    if min(l_A, l_B) < 0:
        raise InfeasibleError("l_A and l_B must be nonnegative")
    if u < 1 + l_A + l_B - FEAS_TOL:
        raise InfeasibleError(f"u={u} below 1 + l_A + l_B = {1 + l_A + l_B}")


def psi_int_variational(u, l_A, l_B, alpha, beta, kappa_oracle: KappaOracle,
                        phi_oracle: PhiOracle, tol: float = 1e-6) -> VariationalResult:
    """Free energy per step of an interface column, maximised over allocations."""
    u, l_A, l_B = float(u), float(l_A), float(l_B)
    _check_int(u, l_A, l_B)
    prob = _IntProblem(u, l_A, l_B, alpha, beta, kappa_oracle, phi_oracle)
    x, f = _maximize(prob, tol)
    return VariationalResult(f, prob.allocation(x), prob.evals)


def _check_nint(u, l):
    if u < 1 + l - FEAS_TOL:
        raise InfeasibleError(f"u={u} below the minimal time {1 + l}")


def psi_nint(u, geom: ColumnGeometry, chi0: str, x: int, alpha, beta,
             kappa_oracle: KappaOracle, phi_oracle: PhiOracle, tol: float = 1e-6) -> float:
    """Free energy per step of a column crossed without meeting (x=1) or after touching (x=2) an interface."""
    c = (beta - alpha) / 2 if chi0 == "B" else 0.0
    u = float(u)
    if x == 1:
        l = float(geom.l_nint)
        _check_nint(u, l)
        return float(kappa_oracle.kappa(u, l)) + c
    if geom.l_int is None:
        raise InfeasibleError("no interface within reach")
    l = float(geom.l_int)
    _check_nint(u, l)
    prob = _NintProblem(u, l, chi0 == "B", alpha, beta, kappa_oracle, phi_oracle)
    _, f = _maximize(prob, tol)
    return f


def psi_variational(theta: ColumnType, u, alpha, beta, kappa_oracle, phi_oracle, tol=1e-6) -> float:
    geom = geometry(theta)
    if theta.is_int:
        return psi_int_variational(u, geom.l_A, geom.l_B, alpha, beta, kappa_oracle, phi_oracle, tol).value
    return psi_nint(u, geom, theta.chi(0), theta.x, alpha, beta, kappa_oracle, phi_oracle, tol)


def _zoom_search(problem, resolution: int, floor: float, per_dim: int, chunk: int = 250_000):
    """Exhaustive grid, then repeated exhaustive grids on shrinking boxes around the best point."""
    pts = problem.grid(resolution)
    best_f, best_x = -np.inf, None
    for lo in range(0, len(pts), chunk):
        vals = problem(pts[lo:lo + chunk])
        k = int(np.argmax(vals))
        if vals[k] > best_f:
            best_f, best_x = float(vals[k]), pts[lo + k]
    radius = 1.0 / resolution
    offsets = np.linspace(-1.0, 1.0, per_dim)
    mesh = np.array(list(itertools.product(offsets, repeat=problem.dim)))
    # recentre at the same radius while the box keeps improving, shrink once it stops
    while radius > floor:
        cand = best_x[None, :] + radius * mesh
        cand = cand[problem.feasible(cand)]
        vals = problem(cand)
        k = int(np.argmax(vals))
        if vals[k] > best_f:
            best_f, best_x = float(vals[k]), cand[k]
        else:
            radius /= 4
    return best_x, best_f


def grid_reference_int(u, l_A, l_B, alpha, beta, kappa_oracle, phi_oracle,
                       resolution: int = 64, floor: float = 1e-8, per_dim: int = 17):
    """Brute-force reference for :func:`psi_int_variational` (no local search)."""
    _check_int(float(u), float(l_A), float(l_B))
    prob = _IntProblem(u, l_A, l_B, alpha, beta, kappa_oracle, phi_oracle)
    x, f = _zoom_search(prob, resolution, floor, per_dim)
    return f, prob.allocation(x)


def grid_reference_nint(u, l_int, chi0, alpha, beta, kappa_oracle, phi_oracle,
                        resolution: int = 64, floor: float = 1e-10, per_dim: int = 33):
    """Brute-force reference for the x=2 branch of :func:`psi_nint`."""
    _check_nint(float(u), float(l_int))
    prob = _NintProblem(u, l_int, chi0 == "B", alpha, beta, kappa_oracle, phi_oracle)
    _, f = _zoom_search(prob, resolution, floor, per_dim)
    return f
