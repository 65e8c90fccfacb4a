"""Interpolated tables standing in for the limiting entropy and interface free energy.

Both ψ formulas consume positively homogeneous functions of the form
``a * kappa(a/h, l/h)`` and ``a * phi(a/h)``.  The tables store the
homogeneous profiles ``G(u, l) = u * kappa(u, l)`` and ``G_I(mu) = mu * phi(mu)``
at a fixed oracle width ``L``; homogeneity then gives
``a * kappa(a/h, l/h) = h * G(a/h, l/h)``, extended by ``0`` at ``h = 0``.

Bilinear interpolation of the entropy table is not concave inside a cell,
which leaves spurious local maxima in the column optimisation.  The default
entropy oracle is therefore :class:`KappaLimit`, the exact large-width limit
of the stretch decomposition, and the interface table is replaced by a
smoothed concave majorant of its nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import entr, gammaln, logsumexp, ndtr

from .errors import InvalidSpecError
from .rng import TAG_MONOMERS, sample_word
from .single_interface import check_cone, interface_log_partitions, step_rewards

H_EPS = 1e-12


def _log_binom(n, k):
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    ok = (k >= 0) & (k <= n)
    with np.errstate(invalid="ignore"):
        val = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    return np.where(ok, val, -np.inf)


def _log_compositions(totals: np.ndarray, parts: int) -> np.ndarray:
    """``log C(t - 1, r - 1)`` for every total ``t`` and ``r = 0..parts``."""
    t = np.asarray(totals, dtype=float)[:, None]
    r = np.arange(parts + 1, dtype=float)[None, :]
    out = _log_binom(t - 1, r - 1)
    out[:, 0] = np.where(t[:, 0] == 0, 0.0, -np.inf)
    return out


def log_crossing_counts(L: int, ups: np.ndarray, downs: np.ndarray) -> np.ndarray:
    """``log |W_L|`` for paths with ``U`` up and ``D`` down steps, on the grid ``ups x downs``.

    Uses the stretch decomposition: choose ``ru`` up-columns and ``rd``
    down-columns among ``L + 1`` and compose ``U`` and ``D`` into them.
    """
    r = np.arange(L + 2)
    log_place = _log_binom(L + 1, r)[:, None] + _log_binom(L + 1 - r[:, None], r[None, :])
    au = _log_compositions(ups, L + 1)
    ad = _log_compositions(downs, L + 1)
    left = logsumexp(au[:, :, None] + log_place[None, :, :], axis=1)  # (U, rd)
    return logsumexp(left[:, None, :] + ad[None, :, :], axis=2)


def default_nodes(L: int, dense_factor: int = 8, growth: float = 1.05, top: float = 1e6) -> np.ndarray:
    nodes = list(range(dense_factor * L + 1))
    x = float(nodes[-1])
    while x < top * L:
        x = math.ceil(x * growth)
        nodes.append(int(x))
    return np.array(nodes, dtype=float)


def _bilinear(xs: np.ndarray, ys: np.ndarray, table: np.ndarray, x, y):
    x = np.clip(x, xs[0], xs[-1])
    y = np.clip(y, ys[0], ys[-1])
    i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
    j = np.clip(np.searchsorted(ys, y, side="right") - 1, 0, len(ys) - 2)
    tx = (x - xs[i]) / (xs[i + 1] - xs[i])
    ty = (y - ys[j]) / (ys[j + 1] - ys[j])
    return (
        table[i, j] * (1 - tx) * (1 - ty)
        + table[i + 1, j] * tx * (1 - ty)
        + table[i, j + 1] * (1 - tx) * ty
        + table[i + 1, j + 1] * tx * ty
    )


@dataclass(frozen=True)
class KappaOracle:
    """Table of ``G_L(u, l) = log|W_L(u, l)| / L`` indexed by up/down step counts.

    The node set is every integer ``U, D`` up to ``dense_factor * L`` and then a
    geometric ladder; node values are exact counts evaluated in log space.
    Between nodes the table is interpolated bilinearly; beyond the last node
    it is clamped, which can only underestimate the entropy.
    """

    L: int
    nodes: np.ndarray = field(repr=False)
    table: np.ndarray = field(repr=False)
    label: str = "lattice"

    @classmethod
    def build(cls, L: int = 32, **node_kw) -> "KappaOracle":
        nodes = default_nodes(L, **node_kw)
        return cls(L, nodes, log_crossing_counts(L, nodes, nodes) / L)

    def G(self, u, l):
        u = np.asarray(u, dtype=float)
        l = np.abs(np.asarray(l, dtype=float))
        p = np.maximum((u - 1 + l) / 2, 0.0) * self.L
        q = np.maximum((u - 1 - l) / 2, 0.0) * self.L
        return _bilinear(self.nodes, self.nodes, self.table, p, q)

    def kappa(self, u, l):
        return self.G(u, l) / np.asarray(u, dtype=float)

    def weighted(self, a, h, l):
        """``a * kappa(a/h, l/h)``, with the value ``0`` when ``h`` vanishes."""
        a = np.asarray(a, dtype=float)
        h = np.asarray(h, dtype=float)
        safe = np.where(h < H_EPS, 1.0, h)
        val = safe * self.G(a / safe, np.asarray(l, dtype=float) / safe)
        return np.where(h < H_EPS, 0.0, val)

    def corrupted(self, shift: float = 0.05) -> "KappaOracle":
        return replace(self, table=self.table + shift, label="corrupted")

    def provenance(self) -> dict:
        return {"kind": "kappa", "L_oracle": self.L, "nodes": int(self.nodes.size),
                "max_steps_per_width": float(1 + 2 * self.nodes[-1] / self.L), "label": self.label}


def _cone_coordinates(u, l):
    u = np.asarray(u, dtype=float)
    l = np.abs(np.asarray(l, dtype=float))
    return np.maximum((u - 1 + l) / 2, 0.0), np.maximum((u - 1 - l) / 2, 0.0)


def _stretch_share(t, p):
    """Root ``r`` of ``r^2 = t (p - r)`` and its derivative in ``t``."""
    s = np.sqrt(t * t + 4 * t * p)
    r = 2 * t * p / (s + t)
    dr = np.where(s > 0, ((t + 2 * p) / np.where(s > 0, s, 1.0) - 1) / 2, 0.0)
    return r, dr


def limit_entropy(p, q, max_iter: int = 100) -> np.ndarray:
    """Per-width entropy of crossings with ``pL`` up and ``qL`` down steps as ``L`` grows.

    Maximises ``H(r_u, r_d, t) + p H(r_u/p) + q H(r_d/q)`` over the fractions of
    up-stretch, down-stretch and flat columns; stationarity gives
    ``r^2 = t (p - r)`` for each kind, leaving one monotone equation in ``t``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    # start from the small-t approximation r ~ sqrt(t p)
    w = np.sqrt(p) + np.sqrt(q)
    t = np.broadcast_to(((np.sqrt(w * w + 4) - w) / 2) ** 2, np.broadcast(p, q).shape).copy()
    for _ in range(max_iter):
        ru, du = _stretch_share(t, p)
        rd, dd = _stretch_share(t, q)
        resid = t + ru + rd - 1
        t = np.clip(t - resid / (1 + du + dd), 1e-300, 1.0)
        if np.max(np.abs(resid), initial=0.0) < 1e-15:
            break
    ru, _ = _stretch_share(t, p)
    rd, _ = _stretch_share(t, q)
    return (entr(t) + 2 * entr(ru) + 2 * entr(rd)
            + entr(p - ru) - entr(p) + entr(q - rd) - entr(q))


@dataclass(frozen=True)
class KappaLimit:
    """Large-width entropy ``G(u, l) = u * kappa(u, l)``; smooth and concave."""

    shift: float = 0.0
    label: str = "limit"

    def G(self, u, l):
        p, q = _cone_coordinates(u, l)
        return limit_entropy(p, q) + self.shift

    def kappa(self, u, l):
        return self.G(u, l) / np.asarray(u, dtype=float)

    def weighted(self, a, h, l):
        """``a * kappa(a/h, l/h)``, with the value ``0`` when ``h`` vanishes."""
        a = np.asarray(a, dtype=float)
        h = np.asarray(h, dtype=float)
        safe = np.where(h < H_EPS, 1.0, h)
        val = safe * self.G(a / safe, np.asarray(l, dtype=float) / safe)
        return np.where(h < H_EPS, 0.0, val)

    def corrupted(self, shift: float = 0.05) -> "KappaLimit":
        return replace(self, shift=self.shift + shift, label="corrupted")

    def provenance(self) -> dict:
        return {"kind": "kappa", "L_oracle": None, "label": self.label}


def concave_majorant(xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the least concave majorant of the points ``(xs, ys)``, xs ascending."""
    hull: list[int] = []
    for i in range(len(xs)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or below the chord a -> i
            if (ys[b] - ys[a]) * (xs[i] - xs[a]) <= (ys[i] - ys[a]) * (xs[b] - xs[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return xs[hull], ys[hull]


def smoothed_piecewise_linear(kx, ky, tail_slope, sigma, grid):
    """Gaussian smoothing of a piecewise-linear function (linear left of ``kx[0]``)."""
    slopes = np.diff(ky) / np.diff(kx)
    slopes = np.append(slopes, tail_slope)
    s0 = slopes[0]
    changes = np.diff(slopes)
    x = np.asarray(grid, dtype=float)[:, None]
    if sigma <= 0:
        ramp = np.maximum(x - kx[None, 1:], 0.0)
    else:
        d = (x - kx[None, 1:]) / sigma
        ramp = (x - kx[None, 1:]) * ndtr(d) + sigma * np.exp(-d * d / 2) / math.sqrt(2 * math.pi)
    return ky[0] + s0 * (x[:, 0] - kx[0]) + ramp @ changes


@dataclass(frozen=True)
class PhiOracle:
    """Table of ``G_I(mu) = mu * phi_L(mu)`` on ``mu = 1 + 2k/L``, averaged over samples.

    With ``regularize`` the sampled nodes are replaced by their least concave
    majorant (the limit is concave, the table is not because of sampling
    noise), held constant beyond ``mu_max`` and smoothed with a Gaussian of
    width ``1/L``; the result is tabulated finely and interpolated linearly.
    """

    L: int
    mus: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    alpha: float = 0.0
    beta: float = 0.0
    n_samples: int = 0
    seed: int = 0
    label: str = "lattice"
    regularize: bool = True
    _fine: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        xs, ys = np.asarray(self.mus, dtype=float), np.asarray(self.values, dtype=float)
        if not self.regularize:
            object.__setattr__(self, "_fine", (xs, ys))
            return
        kx, ky = concave_majorant(xs, ys)
        last = (ky[-1] - ky[-2]) / (kx[-1] - kx[-2]) if len(kx) > 1 else 0.0
        sigma = 1.0 / self.L if self.L else 0.0
        if len(kx) == 1:
            kx, ky = np.array([kx[0], kx[0] + 1]), np.array([ky[0], ky[0]])
        grid = np.arange(xs[0], xs[-1] + 8 * sigma + 1e-12, max(sigma, 1 / 64) / 16)
        vals = smoothed_piecewise_linear(kx, ky, min(last, 0.0), sigma, grid)
        vals += ys[0] - vals[0]  # keep the node value at the left end (phi(1) = 0)
        if last >= 0:
            vals = np.maximum.accumulate(vals)  # remove rounding noise on the flat tail
        object.__setattr__(self, "_fine", (grid, vals))

    @classmethod
    def build(cls, L: int, alpha: float, beta: float, mu_max: float = 12.0,
              n_samples: int = 16, seed: int = 0) -> "PhiOracle":
        check_cone(alpha, beta)
        k_max = int(math.floor((mu_max - 1) * L / 2))
        steps = [L + 2 * k for k in range(k_max + 1)]
        acc = np.zeros(len(steps))
        for s in range(n_samples):
            rewards = step_rewards(sample_word(seed, s, steps[-1], TAG_MONOMERS), alpha, beta)
            logs = interface_log_partitions(rewards, L, steps)
            acc += np.array([logs[n] for n in steps]) / L
        mus = np.array(steps, dtype=float) / L
        return cls(L, mus, acc / max(n_samples, 1), alpha, beta, n_samples, seed)

    @classmethod
    def from_function(cls, fn, mu_max: float = 12.0, step: float = 1 / 64) -> "PhiOracle":
        mus = np.arange(1.0, mu_max + step / 2, step)
        return cls(0, mus, np.array([fn(m) for m in mus]), label="function", regularize=False)

    def G(self, mu):
        return np.interp(np.asarray(mu, dtype=float), *self._fine)

    def phi(self, mu):
        mu = np.asarray(mu, dtype=float)
        return self.G(mu) / mu

    def weighted(self, a, h):
        """``a * phi(a/h)``, with the value ``0`` when ``h`` vanishes."""
        a = np.asarray(a, dtype=float)
        h = np.asarray(h, dtype=float)
        safe = np.where(h < H_EPS, 1.0, h)
        val = safe * self.G(a / safe)
        return np.where(h < H_EPS, 0.0, val)

    def corrupted(self, shift: float = 0.05) -> "PhiOracle":
        return replace(self, values=self.values + shift, label="corrupted")

    def provenance(self) -> dict:
        return {"kind": "phi", "L_oracle": self.L, "mu_max": float(self.mus[-1]),
                "n_samples": self.n_samples, "seed": self.seed, "alpha": self.alpha,
                "beta": self.beta, "label": self.label, "regularized": self.regularize}


@dataclass(frozen=True)
class Oracles:
    kappa: KappaOracle | KappaLimit
    phi: PhiOracle

    def provenance(self) -> dict:
        return {"kappa": self.kappa.provenance(), "phi": self.phi.provenance()}


def build_oracles(alpha: float, beta: float, L_oracle: int = 32, mu_max: float = 12.0,
                  phi_samples: int = 16, seed: int = 0, kappa_kind: str = "limit") -> Oracles:
    if L_oracle < 1:
        raise InvalidSpecError("L_oracle must be positive")
    if kappa_kind == "limit":
        kappa = KappaLimit()
    elif kappa_kind == "table":
        kappa = KappaOracle.build(L_oracle)
    else:
        raise InvalidSpecError(f"unknown kappa oracle {kappa_kind!r}")
    return Oracles(kappa, PhiOracle.build(L_oracle, alpha, beta, mu_max, phi_samples, seed))
