"""Maximise the ratio functional over per-column step budgets.

For a finitely supported measure ``rho`` over column types the functional is

    V(rho, u) = sum rho(T) u_T psi(T, u_T) / sum rho(T) u_T,

maximised over budgets ``t_T <= u_T <= m``.  This is a fractional program:
with ``g_T(u) = u psi(T, u)`` concave, ``F(y) = sum rho(T) max_u (g_T(u) - y u)``
is strictly decreasing and its root is the maximal ratio.  Dinkelbach
iteration finds it; bisection on ``F`` is the fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Optional, Sequence

import numpy as np

from .column_model import ColumnType, minimal_time, psi_variational
from .column_model.types import geometry
from .errors import ConvergenceError, InvalidSpecError, ModelError
from .oracles import Oracles
from .single_interface import map_ordered

LOG3 = math.log(3.0)
GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class AtomCurve:
    """``g(u) = u psi(u)`` on ``[t, m]``: tabulated (linear between nodes) or a callable ``psi``."""

    t: float
    m: float
    us: Optional[np.ndarray] = field(default=None, repr=False)
    g: Optional[np.ndarray] = field(default=None, repr=False)
    psi_fn: Optional[Callable[[float], float]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.t > self.m + 1e-12:
            raise InvalidSpecError(f"t={self.t} exceeds m={self.m}")
        if (self.us is None) == (self.psi_fn is None):
            raise InvalidSpecError("give either a table or a callable")

    @property
    def tabulated(self) -> bool:
        return self.us is not None

    def g_at(self, u) -> float:
        if self.tabulated:
            return float(np.interp(u, self.us, self.g))
        return float(u) * float(self.psi_fn(float(u)))

    def psi_at(self, u) -> float:
        return self.g_at(u) / float(u)

    def check_budget(self, u) -> None:
        if not self.t - 1e-12 <= u <= self.m + 1e-12:
            raise InvalidSpecError(f"budget {u} outside [{self.t}, {self.m}]")

    def scaled(self, c: float) -> "AtomCurve":
        if self.tabulated:
            return AtomCurve(self.t, self.m, self.us, self.g * c)
        fn = self.psi_fn
        return AtomCurve(self.t, self.m, psi_fn=lambda u: c * fn(u))

    def concavity_defect(self) -> float:
        """Largest midpoint-concavity violation of ``g`` over consecutive equally spaced nodes."""
        if not self.tabulated or len(self.us) < 3:
            return 0.0
        return float(max(0.0, np.max((self.g[:-2] + self.g[2:]) / 2 - self.g[1:-1])))


@dataclass(frozen=True)
class PsiTable:
    curves: dict = field(repr=False)
    m: float
    alpha: float = 0.0
    provenance: dict = field(default_factory=dict)

    def __getitem__(self, key) -> AtomCurve:
        try:
            return self.curves[key]
        except KeyError:
            raise ModelError("atom missing from the psi table") from None

    def __contains__(self, key) -> bool:
        return key in self.curves

    def scaled(self, c: float) -> "PsiTable":
        return PsiTable({k: v.scaled(c) for k, v in self.curves.items()}, self.m, self.alpha,
                        {**self.provenance, "scaled_by": c})

    def bound(self) -> float:
        vals = [abs(c.g / c.us).max() for c in self.curves.values() if c.tabulated]
        return max([LOG3 + abs(self.alpha), *vals])

    def concavity_defect(self) -> float:
        return max((c.concavity_defect() for c in self.curves.values()), default=0.0)

    @classmethod
    def from_functions(cls, fns: dict, ts: dict, m: float, alpha: float = 0.0) -> "PsiTable":
        return cls({k: AtomCurve(float(ts[k]), float(m), psi_fn=fn) for k, fn in fns.items()}, float(m), alpha,
                   {"kind": "callable"})

    @classmethod
    def from_tables(cls, tables: dict, m: float, alpha: float = 0.0) -> "PsiTable":
        """``tables[key] = (us, psi values)``."""
        curves = {}
        for k, (us, ps) in tables.items():
            us = np.asarray(us, dtype=float)
            curves[k] = AtomCurve(float(us[0]), float(m), us, us * np.asarray(ps, dtype=float))
        return cls(curves, float(m), alpha, {"kind": "table"})


def _geometry_key(theta: ColumnType):
    g = geometry(theta)
    if theta.is_int:
        return ("int", g.l_A, g.l_B)
    if theta.x == 1:
        return ("nint1", g.l_nint, theta.chi(0))
    return ("nint2", g.l_int, theta.chi(0))


def _curve_values(args):
    theta, us, alpha, beta, oracles, tol = args
    return [psi_variational(theta, u, alpha, beta, oracles.kappa, oracles.phi, tol) for u in us]


def build_psi_table(atoms: Sequence[ColumnType], m: int, alpha: float, beta: float, oracles: Oracles,
                    n_grid: int = 33, tol: float = 1e-6, workers: int = 1) -> PsiTable:
    """Variational ``psi`` of every atom on an equally spaced ``u``-grid over ``[t_theta, m]``.

    Atoms with the same crossing geometry share one curve.
    """
    if n_grid < 2:
        raise InvalidSpecError("n_grid must be at least 2")
    reps: dict = {}
    for theta in dict.fromkeys(atoms):
        reps.setdefault(_geometry_key(theta), theta)
    jobs = []
    for key, theta in reps.items():
        t = float(minimal_time(theta))
        if t > m + 1e-12:
            raise InvalidSpecError(f"atom with t_theta={t} above m={m}")
        us = np.linspace(t, float(m), n_grid) if t < m else np.array([t])
        jobs.append((theta, us, alpha, beta, oracles, tol))
    values = map_ordered(_curve_values, jobs, workers)
    by_key = {}
    for (theta, us, *_), vals in zip(jobs, values):
        by_key[_geometry_key(theta)] = AtomCurve(float(us[0]), float(m), us, us * np.array(vals))
    curves = {theta: by_key[_geometry_key(theta)] for theta in dict.fromkeys(atoms)}
    prov = {"kind": "variational", "n_grid": n_grid, "tol": tol, "alpha": alpha, "beta": beta,
            "oracles": oracles.provenance()}
    return PsiTable(curves, float(m), alpha, prov)


def _atoms_of(rho) -> list[tuple[Hashable, float]]:
    atoms = rho.atoms if hasattr(rho, "atoms") else rho
    out = [(k, float(w)) for k, w in atoms if w > 0]
    if not out:
        raise ModelError("measure has no atom of positive weight")
    return out


def ratio_value(rho, u: Sequence[float], psi: PsiTable) -> float:
    atoms = _atoms_of(rho)
    if len(u) != len(atoms):
        raise InvalidSpecError("one budget per atom of positive weight")
    num = den = 0.0
    for (k, w), ui in zip(atoms, u):
        c = psi[k]
        c.check_budget(ui)
        num += w * c.g_at(ui)
        den += w * ui
    return num / den


def inner_argmax(curve: AtomCurve, y: float, tol: float = 1e-10) -> float:
    """Maximiser of ``g(u) - y u`` over ``[t, m]``; ties go to the smaller budget."""
    if curve.tabulated:
        return float(curve.us[int(np.argmax(curve.g - y * curve.us))])
    h = lambda u: curve.g_at(u) - y * u  # noqa: E731
    a, b = curve.t, curve.m
    if b - a <= tol:
        return a
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    hc, hd = h(c), h(d)
    while b - a > tol:
        if hc >= hd:
            b, d, hd = d, c, hc
            c = b - GOLDEN * (b - a)
            hc = h(c)
        else:
            a, c, hc = c, d, hd
            d = a + GOLDEN * (b - a)
            hd = h(d)
    mid = (a + b) / 2
    best = max(((h(curve.t), 0, curve.t), (h(mid), 1, mid), (h(curve.m), 2, curve.m)), key=lambda r: (r[0], -r[1]))
    return best[2]


@dataclass
class SolverResult:
    value: float
    u_star: list
    y_star: float
    iterations: int
    residual: float
    method: str
    trace: list = field(default_factory=list)

    @property
    def f_decreasing(self) -> bool:
        ys = [y for y, _ in self.trace]
        fs = [f for _, f in self.trace]
        order = np.argsort(ys, kind="stable")
        fs = np.array(fs)[order]
        return bool(np.all(np.diff(np.array(ys)[order]) > 0) and np.all(np.diff(fs) < 0))

    def to_dict(self) -> dict:
        return {"value": self.value, "y_star": self.y_star, "u_star": [float(u) for u in self.u_star],
                "iterations": self.iterations, "residual": self.residual, "method": self.method,
                "trace": [[float(y), float(f)] for y, f in self.trace]}


def _evaluate(atoms, curves, y):
    us = [inner_argmax(c, y) for c in curves]
    f = sum(w * (c.g_at(u) - y * u) for (_, w), c, u in zip(atoms, curves, us))
    return f, us


def solve_ratio(rho, psi: PsiTable, m: Optional[float] = None, tol: float = 1e-8,
                max_iter: int = 200) -> SolverResult:
    atoms = _atoms_of(rho)
    curves = [psi[k] for k, _ in atoms]
    if m is not None and any(abs(c.m - m) > 1e-12 for c in curves):
        raise InvalidSpecError(f"psi table does not cover budgets up to m={m}")
    exact = all(c.tabulated for c in curves)

    def ratio(us):
        return sum(w * c.g_at(u) for (_, w), c, u in zip(atoms, curves, us)) / sum(
            w * u for (_, w), u in zip(atoms, us))

    us = [c.t for c in curves]
    y = ratio(us)
    trace = []
    for it in range(1, max_iter + 1):
        f, new = _evaluate(atoms, curves, y)
        trace.append((y, f))
        if (exact and new == us) or (not exact and f <= tol):
            return SolverResult(y, new, y, it, abs(f), "dinkelbach", trace)
        y_next = ratio(new)
        if not y_next > y:
            break  # no progress in floating point: settle by bisection
        us, y = new, y_next
    return _bisect(atoms, curves, psi.bound(), tol, max_iter, trace)


def _bisect(atoms, curves, bound, tol, max_iter, trace):
    lo, hi = -bound, bound
    f_lo, _ = _evaluate(atoms, curves, lo)
    f_hi, _ = _evaluate(atoms, curves, hi)
    if f_lo < 0 or f_hi > 0:
        raise ConvergenceError("ratio root not bracketed", bracket=(lo, hi))
    for it in range(1, max_iter + 1):
        mid = (lo + hi) / 2
        f, us = _evaluate(atoms, curves, mid)
        trace.append((mid, f))
        if abs(f) <= tol or hi - lo <= tol:
            return SolverResult(mid, us, mid, it, abs(f), "bisection", trace)
        lo, hi = (mid, hi) if f > 0 else (lo, mid)
    raise ConvergenceError(f"no convergence after {max_iter} bisection steps", bracket=(lo, hi))


def grid_search_ratio(rho, psi: PsiTable) -> tuple[float, tuple]:
    """Exhaustive search over tabulated nodes of every atom (small instances only)."""
    atoms = _atoms_of(rho)
    curves = [psi[k] for k, _ in atoms]
    if not all(c.tabulated for c in curves):
        raise InvalidSpecError("grid search needs tabulated curves")
    w = [wt for _, wt in atoms]
    head, rest = curves[0], curves[1:]
    # broadcast over all atoms but the first, loop over the first one's nodes
    num_rest = sum((g for g in np.ix_(*[c.g * wi for c, wi in zip(rest, w[1:])])), np.zeros(()))
    den_rest = sum((u for u in np.ix_(*[c.us * wi for c, wi in zip(rest, w[1:])])), np.zeros(()))
    best, arg = -np.inf, None
    for i in range(len(head.us)):
        r = (w[0] * head.g[i] + num_rest) / (w[0] * head.us[i] + den_rest)
        j = int(np.argmax(r))
        if r.flat[j] > best:
            best = float(r.flat[j])
            arg = (i, *np.unravel_index(j, r.shape))
    return best, tuple(float(c.us[k]) for c, k in zip(curves, arg))


@dataclass
class LowerBoundRow:
    index: int
    value: float
    result: SolverResult


def _solve_job(args):
    mu, psi, m, tol = args
    return solve_ratio(mu, psi, m, tol)


def best_lower_bound(measures: Sequence, psi: PsiTable, m: Optional[float] = None, tol: float = 1e-8,
                     workers: int = 1) -> tuple[float, int, list[LowerBoundRow]]:
    """Largest solved ratio over a family of measures; a lower bound on the free energy."""
    if not measures:
        raise ModelError("no measures given")
    results = map_ordered(_solve_job, [(mu, psi, m, tol) for mu in measures], workers)
    rows = [LowerBoundRow(i, r.value, r) for i, r in enumerate(results)]
    best = 0
    for row in rows:
        if row.value > rows[best].value:
            best = row.index
    return rows[best].value, best, rows
