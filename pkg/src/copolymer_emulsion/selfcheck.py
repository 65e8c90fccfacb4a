"""Reduced-size oracle comparisons, runnable from the command line in well under a minute."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import reference
from .column_model import ColumnDisorder, ColumnType, geometry, minimal_time, psi_int_variational, psi_nint
from .column_model.direct import column_log_partition
from .column_model.variational import grid_reference_int, grid_reference_nint
from .emulsion_field import sample_block_field, sample_trajectories, window_half_width
from .errors import EmptyPathSetError, InvalidSpecError, WindowError
from .full_simulation import full_log_partition, random_instance
from .lattice_paths import (
    admissible_specs,
    count_crossings_closed_form,
    count_crossings_dp,
    count_crossings_stretch_formula,
    count_endpoint_column_dp,
)
from .oracles import Oracles, build_oracles, log_crossing_counts
from .rng import substream
from .single_interface import InterfaceSpec, MicroDisorder, interface_log_partition
from .variational_solver import PsiTable, grid_search_ratio, solve_ratio

CHECKS: dict[str, Callable[["Context"], tuple[bool, str]]] = {}


def check(name: str):
    def register(fn):
        CHECKS[name] = fn
        return fn

    return register


@dataclass
class Context:
    seed: int
    oracles: Oracles


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = field(compare=False)


@dataclass
class SelfcheckReport:
    results: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failed(self) -> list[str]:
        return [r.name for r in self.results if not r.passed]

    def lines(self) -> list[str]:
        return [f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}" for r in self.results]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [{"name": r.name, "passed": r.passed, "detail": r.detail}
                                                  for r in self.results]}


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(b))


@check("lattice.dp_vs_enumeration")
def _lattice_dp(ctx):
    n = 0
    for L in range(1, 5):
        for spec in admissible_specs(L, 10):
            if count_crossings_dp(spec) != reference.crossing_count(L, spec.n_steps, spec.rise):
                return False, f"mismatch at {spec.to_dict()}"
            n += 1
    return True, f"{n} specs exact"


@check("lattice.closed_form_vs_dp")
def _lattice_closed(ctx):
    specs = [s for L in range(1, 7) for s in admissible_specs(L, 14)]
    bad = [s for s in specs if count_crossings_closed_form(s) != count_crossings_dp(s)]
    return not bad, f"{len(specs)} specs" if not bad else f"mismatch at {bad[0].to_dict()}"


@check("lattice.stretch_formula")
def _lattice_stretch(ctx):
    if count_crossings_stretch_formula(1, 3) != 8:
        return False, "(L=1, u=3) is not 8"
    n = 0
    for L in range(1, 6):
        for k in range(L, 15, 1):
            u = Fraction(k, L)
            if count_crossings_stretch_formula(L, u) != count_endpoint_column_dp(L, u):
                return False, f"mismatch at L={L}, u={u}"
            n += 1
    return True, f"{n} endpoint-column counts exact"


@check("interface.dp_vs_enumeration")
def _interface(ctx):
    rng = substream(ctx.seed, 90, 0)
    worst = 0.0
    for L in (1, 2, 3, 4):
        for n in range(L, 10, 2):
            word = "".join(rng.choice(["A", "B"], size=n))
            got = interface_log_partition(MicroDisorder(word), InterfaceSpec(L, Fraction(n, L), 2.0, 1.0))
            worst = max(worst, _rel(got, reference.interface_log_z(word, L, n, 2.0, 1.0)))
    return worst <= 1e-10, f"max rel err {worst:.2e}"


@check("interface.mu_one_is_zero")
def _mu_one(ctx):
    vals = [interface_log_partition(MicroDisorder.sample(ctx.seed, L, i), InterfaceSpec(L, 1, 2.0, 1.0))
            for L in (2, 4, 8) for i in range(10)]
    worst = max(abs(v) for v in vals)
    return worst <= 1e-12, f"max |log Z| {worst:.1e}"


@check("column.direct_vs_enumeration")
def _column(ctx):
    rng = substream(ctx.seed, 91, 0)
    done, worst = 0, 0.0
    while done < 8:
        L = int(rng.integers(1, 4))
        chi = ColumnDisorder("".join(rng.choice(["A", "B"], size=17)), 8)
        try:
            theta = ColumnType(chi, int(rng.integers(-1, 2)), Fraction(int(rng.integers(1, L + 1)), L),
                               Fraction(int(rng.integers(1, L + 1)), L), int(rng.integers(1, 3)))
            t = minimal_time(theta)
        except (InvalidSpecError, WindowError):
            continue
        u = t + Fraction(2 * int(rng.integers(0, 3)), L)
        if u * L > 10:
            continue
        word = "".join(rng.choice(["A", "B"], size=int(u * L)))
        want = reference.column_log_z(word, theta, u, L, 2.0, 1.0)
        try:
            got = column_log_partition(MicroDisorder(word), theta, u, L, 2.0, 1.0)
        except EmptyPathSetError:
            got = None
        if (got is None) != (want is None):
            return False, "empty/non-empty disagreement"
        if got is not None:
            worst = max(worst, _rel(got, want))
        done += 1
    return worst <= 1e-10, f"max rel err {worst:.2e}"


@check("field.measure_rebuilt_by_hand")
def _measure(ctx):
    fld = sample_block_field(0.5, 6, 8, ctx.seed)
    w = window_half_width(1, 3)
    for traj, mu in sample_trajectories(fld, 1, 3, 4, 3, ctx.seed, L=4):
        want: dict = {}
        hs = traj.heights
        for j in range(4):
            letters = "".join(fld(j, hs[j] + k) for k in range(-w, w + 1))
            key = (letters, traj.pi_increments[j], traj.b[j], traj.b[j + 1], traj.x[j])
            want[key] = want.get(key, 0) + Fraction(1, 4)
        got = {(t.chi.letters, t.delta_pi, t.b0, t.b1, t.x): wt for t, wt in mu.atoms}
        if got != want:
            return False, "atom multiset differs"
    return True, "3 measures exact"


@check("oracle.kappa_vs_exact_counts")
def _kappa(ctx):
    L = 1024
    worst = -math.inf
    for u, l in ((1.5, 0.25), (2, 0.5), (3, 0), (5, 1)):
        p, q = (u - 1 + abs(l)) / 2, (u - 1 - abs(l)) / 2
        exact = float(log_crossing_counts(L, np.array([round(p * L)]), np.array([round(q * L)]))[0, 0]) / L
        gap = float(ctx.oracles.kappa.G(u, l)) - exact
        # the limit dominates every finite width, by at most u log L / L
        if not 0 <= gap <= u * math.log(L) / L:
            return False, f"gap {gap:.4f} at (u, l)=({u}, {l})"
        worst = max(worst, gap)
    return True, f"largest gap {worst:.4f}"


@check("oracle.phi_anchor_and_bound")
def _phi(ctx):
    phi = ctx.oracles.phi
    g1 = float(phi.G(1.0))
    mus = np.linspace(1, 12, 45)
    vals = phi.phi(mus)
    ok = abs(g1) <= 1e-12 and bool(np.all(np.abs(vals) <= math.log(3) + phi.alpha))
    return ok, f"G(1)={g1:.2e}"


@check("column.variational_vs_grid")
def _variational(ctx):
    k, p, tol = ctx.oracles.kappa, ctx.oracles.phi, 1e-6
    v, _ = psi_int_variational(3.0, 0.5, 0.5, 2.0, 1.0, k, p, tol)
    ref, _ = grid_reference_int(3.0, 0.5, 0.5, 2.0, 1.0, k, p, resolution=32, per_dim=9)
    chi = ColumnDisorder.from_rows({-2: "A", -1: "A", 0: "B", 1: "A", 2: "A"})
    g = geometry(ColumnType(chi, 0, Fraction(1, 2), Fraction(1, 2), 2))
    w = psi_nint(2.5, g, "B", 2, 2.0, 1.0, k, p, tol)
    ref2 = grid_reference_nint(2.5, g.l_int, "B", 2.0, 1.0, k, p)
    err = max(abs(v - ref), abs(w - ref2))
    return err <= 2 * tol, f"max abs err {err:.1e}"


@check("solver.vs_grid")
def _solver(ctx):
    rng = substream(ctx.seed, 92, 0)
    worst = 0.0
    for trial in range(5):
        tabs = {}
        for a in range(1 + trial % 3):
            t = 1 + rng.uniform(0, 1.5)
            us = np.linspace(t, 4, 33)
            g = rng.uniform(0.2, 2) * np.log(us - t + 1) + rng.uniform(-1, 1) * us
            tabs[a] = (us, g / us)
        psi = PsiTable.from_tables(tabs, 4)
        rho = list(zip(tabs, rng.dirichlet(np.ones(len(tabs)))))
        res = solve_ratio(rho, psi)
        if not res.f_decreasing:
            return False, "F(y) not decreasing"
        worst = max(worst, abs(res.value - grid_search_ratio(rho, psi)[0]))
    return worst <= 3e-6, f"max abs err {worst:.1e}"


@check("full.dp_vs_enumeration")
def _full(ctx):
    worst = 0.0
    for i, (n, L, M, m, star) in enumerate(((6, 2, 1, None, False), (8, 2, 1, 2, False), (7, 3, 2, None, True),
                                            (8, 1, 1, None, False))):
        inst = random_instance(n, L, M, 2.0, 1.0, 0.5, ctx.seed, i, m, star)
        want = reference.full_log_z(n, L, M, 2.0, 1.0, inst.omega.word, inst.field, m, star)
        worst = max(worst, _rel(full_log_partition(inst), want))
    return worst <= 1e-10, f"max rel err {worst:.2e}"


@check("full.monotone_in_M")
def _monotone(ctx):
    inst = random_instance(20, 2, 1, 2.0, 1.0, 0.5, ctx.seed, 0, 3)
    vals = [full_log_partition(inst.with_(M=M)) for M in range(1, 6)]
    return all(a <= b for a, b in zip(vals, vals[1:])), "nondecreasing" if vals == sorted(vals) else str(vals)


@check("full.zero_coupling_count")
def _zero(ctx):
    inst = random_instance(9, 3, 1, 0.0, 0.0, 0.5, ctx.seed, 0)
    brute = reference.full_log_z(9, 3, 1, 0.0, 0.0, inst.omega.word, inst.field)
    err = _rel(full_log_partition(inst), brute)
    return err <= 1e-10, f"rel err {err:.1e}"


def run_selfcheck(seed: int = 0, corrupt: Optional[str] = None, only: Optional[list[str]] = None) -> SelfcheckReport:
    """Run the registered checks; ``corrupt`` in {"kappa", "phi"} swaps in a shifted oracle."""
    oracles = build_oracles(2.0, 1.0, L_oracle=16, phi_samples=4, seed=seed)
    if corrupt == "kappa":
        oracles = Oracles(oracles.kappa.corrupted(), oracles.phi)
    elif corrupt == "phi":
        oracles = Oracles(oracles.kappa, oracles.phi.corrupted())
    elif corrupt is not None:
        raise InvalidSpecError(f"unknown oracle {corrupt!r}")
    names = list(CHECKS) if only is None else only
    unknown = set(names) - set(CHECKS)
    if unknown:
        raise InvalidSpecError(f"unknown checks {sorted(unknown)}")
    ctx = Context(seed, oracles)
    results = []
    for name in names:
        start = time.perf_counter()
        try:
            ok, detail = CHECKS[name](ctx)
        except Exception as exc:  # a crash is a failure of that item
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - start))
    return SelfcheckReport(results)
