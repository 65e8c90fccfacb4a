"""End-to-end runs: sampled measures to a variational lower bound, next to the direct model."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

from .emulsion_field import sample_block_field, sample_measures, window_half_width
from .errors import InvalidSpecError
from .full_simulation import ConvergenceRow, convergence_report
from .oracles import build_oracles
from .rng import TAG_FIELD, derived_seed
from .single_interface import check_cone
from .variational_solver import best_lower_bound, build_psi_table


@dataclass(frozen=True)
class VarfeConfig:
    alpha: float
    beta: float
    p: float = 0.5
    M: int = 1
    m: int = 3
    N: int = 8
    n_measures: int = 10
    seed: int = 0
    L_oracle: int = 16
    phi_samples: int = 8
    n_grid: int = 17
    trajectory_L: int = 8
    workers: int = 1

    def __post_init__(self):
        check_cone(self.alpha, self.beta)
        if not 0 < self.p < 1:
            raise InvalidSpecError(f"p={self.p} not in (0, 1)")
        if self.M < 1 or self.m < 1 or self.N < 1 or self.n_measures < 1:
            raise InvalidSpecError("M, m, N and n_measures must be positive")

    def field_shape(self) -> tuple[int, int]:
        return self.N, self.N * self.M + window_half_width(self.M, self.m) + 1


@dataclass
class VarfeResult:
    value: float
    best_index: int
    values: list[float]
    u_star: list[list[float]]
    n_atoms: list[int]
    config: dict

    def to_dict(self) -> dict:
        return asdict(self)


def variational_lower_bound(cfg: VarfeConfig) -> VarfeResult:
    width, height = cfg.field_shape()
    fld = sample_block_field(cfg.p, width, height, derived_seed(cfg.seed, TAG_FIELD))
    mus = sample_measures(fld, cfg.M, cfg.m, cfg.N, cfg.n_measures, seed=cfg.seed, L=cfg.trajectory_L,
                          workers=cfg.workers)
    oracles = build_oracles(cfg.alpha, cfg.beta, L_oracle=cfg.L_oracle, phi_samples=cfg.phi_samples, seed=cfg.seed)
    atoms = [t for mu in mus for t, _ in mu.atoms]
    psi = build_psi_table(atoms, cfg.m, cfg.alpha, cfg.beta, oracles, n_grid=cfg.n_grid, workers=cfg.workers)
    value, best, rows = best_lower_bound(mus, psi, cfg.m, workers=cfg.workers)
    return VarfeResult(value, best, [r.value for r in rows], [list(r.result.u_star) for r in rows],
                       [len(mu.atoms) for mu in mus], asdict(cfg))


@dataclass
class CoherenceResult:
    bound: VarfeResult
    rows: list[ConvergenceRow]
    gap: float

    @property
    def lower_bound(self) -> float:
        return self.bound.value

    def to_dict(self) -> dict:
        return {"lower_bound": self.lower_bound, "gap": self.gap, "rows": [r.to_dict() for r in self.rows],
                "bound": self.bound.to_dict()}


def coherence_run(cfg: VarfeConfig, n_list: list[int], L_list: list[int], samples: int,
                  sim_seed: Optional[int] = None) -> CoherenceResult:
    """Mean ``f_n`` of the direct model against the sampled-measure lower bound.

    The reported gap is mean ``f_n`` at the largest ``n`` minus the bound; no
    convergence is asserted.
    """
    bound = variational_lower_bound(cfg)
    seed = cfg.seed if sim_seed is None else sim_seed
    rows = convergence_report(n_list, L_list, cfg.M, cfg.alpha, cfg.beta, cfg.p, samples, seed, cfg.m,
                              lower_bound=bound.value, workers=cfg.workers)
    return CoherenceResult(bound, rows, rows[-1].gap)
