"""Copolymer near a single flat AB-interface.

The interface is the line ``y = 0``; the B-liquid fills the lower half-plane
and the interface itself belongs to the A side.  A horizontal bond at height
``y`` is below the interface iff ``y <= -1``; a vertical bond between ``y - 1``
and ``y`` is below iff ``y <= 0``.  A step below the interface earns
``beta`` for a B-monomer and ``-alpha`` for an A-monomer.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import DisorderTooShortError, InvalidSpecError
from .lattice_paths import CrossingSpec, as_fraction, count_crossings_dp
from .rng import TAG_MONOMERS, sample_word

LOG3 = math.log(3.0)
LN2 = math.log(2.0)


@dataclass(frozen=True)
class MicroDisorder:
    word: str
    seed: Optional[int] = None
    index: Optional[int] = None

    def __post_init__(self):
        if set(self.word) - {"A", "B"}:
            raise InvalidSpecError("monomer word must be over {A, B}")

    @classmethod
    def sample(cls, seed: int, length: int, index: int = 0) -> "MicroDisorder":
        return cls(sample_word(seed, index, length, TAG_MONOMERS), seed, index)

    def flipped(self) -> "MicroDisorder":
        return MicroDisorder(self.word.translate(str.maketrans("AB", "BA")))

    def __len__(self) -> int:
        return len(self.word)


def check_cone(alpha: float, beta: float) -> None:
    if not alpha >= abs(beta):
        raise InvalidSpecError(f"(alpha, beta)=({alpha}, {beta}) outside the cone alpha >= |beta|")


@dataclass(frozen=True)
class InterfaceSpec:
    L: int
    mu: Fraction
    alpha: float
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "mu", as_fraction(self.mu))
        if self.L < 1:
            raise InvalidSpecError("L must be positive")
        n = self.mu * self.L
        if self.mu < 1 or n.denominator != 1 or (n - self.L) % 2:
            raise InvalidSpecError(f"mu={self.mu} not in 1 + 2N/L for L={self.L}")
        check_cone(self.alpha, self.beta)

    @property
    def n_steps(self) -> int:
        return int(self.mu * self.L)

    def to_dict(self) -> dict:
        return {"L": self.L, "mu": str(self.mu), "alpha": self.alpha, "beta": self.beta}


def step_rewards(word: str, alpha: float, beta: float) -> np.ndarray:
    letters = np.frombuffer(word.encode(), dtype=np.uint8)
    return np.where(letters == ord("B"), float(beta), -float(alpha))


def interface_log_partitions(rewards: np.ndarray, L: int, record: Sequence[int]) -> dict[int, float]:
    """``log Z`` of ``L``-wide interface paths for every step count in ``record``.

    ``rewards[i]`` is the reward of step ``i + 1`` when it lies below the
    interface.  One forward pass serves all requested lengths; the state
    vector is rescaled by a power of two after every step, which is exact,
    and the exponent is carried separately.
    """
    record = sorted(set(int(n) for n in record))
    n_max = record[-1]
    if len(rewards) < n_max:
        raise DisorderTooShortError(f"need {n_max} monomers, got {len(rewards)}")
    reach = max(0, (n_max - L) // 2)
    ys = np.arange(-reach, reach + 1)
    H = ys.size
    below_h = (ys <= -1)[None, :]
    below_up = (ys <= 0)[None, :]
    zero = reach

    right = np.zeros((L + 1, H))
    up = np.zeros((L + 1, H))
    down = np.zeros((L + 1, H))
    right[0, zero] = 1.0
    exponent = 0
    out: dict[int, float] = {}
    wanted = set(record)
    for i in range(1, n_max + 1):
        g = math.exp(rewards[i - 1])
        total = right + up + down
        new_r = np.zeros_like(total)
        new_u = np.zeros_like(total)
        new_d = np.zeros_like(total)
        new_r[1:, :] = total[:-1, :]
        new_u[:, 1:] = (right + up)[:, :-1]
        new_d[:, :-1] = (right + down)[:, 1:]
        if g != 1.0:
            new_r = np.where(below_h, new_r * g, new_r)
            new_u = np.where(below_up, new_u * g, new_u)
            new_d = np.where(below_h, new_d * g, new_d)
        _, e = math.frexp(max(new_r.max(), new_u.max(), new_d.max()))
        right, up, down = np.ldexp(new_r, -e), np.ldexp(new_u, -e), np.ldexp(new_d, -e)
        exponent += e
        if i in wanted:
            z = right[L, zero] + up[L, zero] + down[L, zero]
            if z > 0:
                mant, ez = math.frexp(z)
                out[i] = (math.log2(mant) + (ez + exponent)) * LN2
            else:
                out[i] = -math.inf
    return out


def interface_log_partition(omega: MicroDisorder, spec: InterfaceSpec) -> float:
    """``log Z`` for the first ``mu*L`` monomers of ``omega``."""
    n = spec.n_steps
    if len(omega) < n:
        raise DisorderTooShortError(f"need {n} monomers, got {len(omega)}")
    if spec.alpha == 0 and spec.beta == 0:
        return math.log(count_crossings_dp(CrossingSpec(spec.L, spec.mu, 0)))
    rewards = step_rewards(omega.word[:n], spec.alpha, spec.beta)
    return interface_log_partitions(rewards, spec.L, [n])[n]


def phi_omega(omega: MicroDisorder, spec: InterfaceSpec) -> float:
    return interface_log_partition(omega, spec) / spec.n_steps


@dataclass
class PhiEstimate:
    mean: float
    std_error: float
    std: float
    samples: np.ndarray = field(repr=False)
    seed: int = 0

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    def __iter__(self):
        yield self.mean
        yield self.std_error


def _phi_sample(args) -> float:
    spec, seed, index = args
    return phi_omega(MicroDisorder.sample(seed, spec.n_steps, index), spec)


def map_ordered(fn, items: list, workers: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally on a process pool, in input order."""
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def summarize(samples: np.ndarray, seed: int = 0) -> PhiEstimate:
    samples = np.asarray(samples, dtype=float)
    mean = float(samples.mean())
    std = float(samples.std(ddof=1)) if samples.size > 1 else 0.0
    return PhiEstimate(mean, std / math.sqrt(samples.size), std, samples, seed)


def phi_mean(spec: InterfaceSpec, n_samples: int, seed: int, workers: int = 1) -> PhiEstimate:
    """Monte-Carlo estimate of the disorder-averaged interface free energy."""
    if n_samples < 2:
        raise InvalidSpecError("phi_mean needs at least two samples")
    vals = map_ordered(_phi_sample, [(spec, seed, i) for i in range(n_samples)], workers)
    return summarize(np.array(vals), seed)


@dataclass
class ConcavityRow:
    mu: Fraction
    phi: float
    std_error: float
    mu_phi: float


@dataclass
class ConcavityScan:
    L: int
    alpha: float
    beta: float
    rows: list[ConcavityRow]
    concave: bool
    increasing: bool
    violations: list[str]
    grid_eps: float


def default_grid_eps(L: int) -> float:
    """Allowance for the finite-L curvature defect of ``mu*phi_L`` (measured, see tests)."""
    return 0.5 / L


def mu_concavity_scan(
    L: int,
    mu_grid: Sequence,
    alpha: float,
    beta: float,
    n_samples: int,
    seed: int,
    grid_eps: Optional[float] = None,
) -> ConcavityScan:
    """Midpoint concavity and monotonicity of ``mu -> mu*phi_L(mu)`` on a grid.

    All grid points share the same monomer words (common random numbers), so
    second differences are estimated per sample and their standard error is
    the statistical tolerance.
    """
    mus = [as_fraction(m) for m in mu_grid]
    if mus != sorted(mus) or len(set(mus)) != len(mus):
        raise InvalidSpecError("mu_grid must be strictly ascending")
    for m in mus:
        InterfaceSpec(L, m, alpha, beta)
    if grid_eps is None:
        grid_eps = default_grid_eps(L)
    steps = [int(m * L) for m in mus]
    n_max = steps[-1]
    per_sample = np.empty((n_samples, len(mus)))
    for s in range(n_samples):
        word = sample_word(seed, s, n_max, TAG_MONOMERS)
        logs = interface_log_partitions(step_rewards(word, alpha, beta), L, steps)
        per_sample[s] = [logs[n] / L for n in steps]  # = mu * phi
    mean = per_sample.mean(axis=0)

    def se(v: np.ndarray) -> float:
        return float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0

    rows = [
        ConcavityRow(m, float(mean[k] / m), se(per_sample[:, k]) / float(m), float(mean[k]))
        for k, m in enumerate(mus)
    ]
    violations = []
    index = {m: k for k, m in enumerate(mus)}
    for i in range(len(mus)):
        for k in range(i + 2, len(mus)):
            mid = (mus[i] + mus[k]) / 2
            j = index.get(mid)
            if j is None:
                continue
            defect = (per_sample[:, i] + per_sample[:, k]) / 2 - per_sample[:, j]
            if defect.mean() > 2 * se(defect) + grid_eps:
                violations.append(f"concavity at mu={mus[i]},{mid},{mus[k]}: {defect.mean():.3g}")
    concave = not violations
    increasing = True
    for k in range(len(mus) - 1):
        diff = per_sample[:, k + 1] - per_sample[:, k]
        if diff.mean() < -2 * se(diff):
            increasing = False
            violations.append(f"decrease between mu={mus[k]} and {mus[k + 1]}: {diff.mean():.3g}")
    return ConcavityScan(L, alpha, beta, rows, concave, increasing, violations, grid_eps)
