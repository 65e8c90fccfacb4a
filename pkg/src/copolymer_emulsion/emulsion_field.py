"""Block fields, coarse trajectories and empirical measures over column types.

The field stores one letter per block ``(i, j)``, column ``i`` in
``0..width-1`` and row ``j`` in ``-height..height``.  Column ``j`` of a coarse
trajectory sees the window ``k -> field(j, Pi_j + k)`` for ``|k| <= w`` with
``w = max(m - 1, M)``; that half-width covers every row a path making at most
``m L`` steps per column can visit, and the exit row.
"""

from __future__ import annotations

import itertools
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from .column_model import ColumnDisorder, ColumnType, minimal_time
from .errors import InvalidSpecError, ModelError, OutOfFieldError, WindowError
from .lattice_paths import as_fraction
from .rng import TAG_FIELD, TAG_MEASURES, substream
from .single_interface import map_ordered


def window_half_width(M: int, m: int) -> int:
    return max(m - 1, M)


def _rle(s: str) -> str:
    return "".join(f"{len(g)}{g[0]}" for g in (m.group(0) for m in re.finditer(r"A+|B+", s)))


def _unrle(s: str) -> str:
    return "".join(ch * int(n) for n, ch in re.findall(r"(\d+)([AB])", s))


@dataclass(frozen=True)
class BlockField:
    """Letters of the blocks; ``is_a[i, j + height]`` is True for an A-block."""

    p: float
    seed: Optional[int]
    is_a: np.ndarray = field(repr=False, compare=False)

    @property
    def width(self) -> int:
        return self.is_a.shape[0]

    @property
    def height(self) -> int:
        return (self.is_a.shape[1] - 1) // 2

    def __call__(self, i: int, j: int) -> str:
        if not (0 <= i < self.width and abs(j) <= self.height):
            raise OutOfFieldError(f"block ({i}, {j}) outside field")
        return "A" if self.is_a[i, j + self.height] else "B"

    def __eq__(self, other) -> bool:
        return (isinstance(other, BlockField) and self.p == other.p and self.seed == other.seed
                and np.array_equal(self.is_a, other.is_a))

    def column_window(self, i: int, centre: int, w: int) -> ColumnDisorder:
        if not (0 <= i < self.width) or abs(centre) + w > self.height:
            raise OutOfFieldError(f"window of column {i} around row {centre} leaves the field")
        lo = centre - w + self.height
        letters = "".join("A" if a else "B" for a in self.is_a[i, lo:lo + 2 * w + 1])
        return ColumnDisorder(letters, w)

    def with_flipped(self, cells: Sequence[tuple[int, int]]) -> "BlockField":
        grid = self.is_a.copy()
        for i, j in cells:
            grid[i, j + self.height] = not grid[i, j + self.height]
        return BlockField(self.p, self.seed, grid)

    def a_fraction(self) -> float:
        return float(self.is_a.mean())

    def to_dict(self) -> dict:
        rows = ["".join("A" if a else "B" for a in col) for col in self.is_a]
        return {"p": self.p, "seed": self.seed, "width": self.width, "height": self.height,
                "rows": [_rle(r) for r in rows]}

    @classmethod
    def from_dict(cls, d: dict) -> "BlockField":
        cols = [_unrle(r) for r in d["rows"]]
        h = int(d["height"])
        if len(cols) != int(d["width"]) or any(len(c) != 2 * h + 1 for c in cols):
            raise InvalidSpecError("field rows do not match width/height")
        grid = np.array([[ch == "A" for ch in c] for c in cols], dtype=bool).reshape(len(cols), 2 * h + 1)
        return cls(float(d["p"]), d.get("seed"), grid)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def sample_block_field(p: float, width: int, height: int, seed: int) -> BlockField:
    """Independent blocks, each A with probability ``p``."""
    if not 0 < p < 1:
        raise InvalidSpecError(f"p={p} not in (0, 1)")
    if width < 1 or height < 0:
        raise InvalidSpecError("width must be positive and height nonnegative")
    rng = substream(seed, TAG_FIELD, 0)
    return BlockField(float(p), int(seed), rng.random((width, 2 * height + 1)) < p)


@dataclass(frozen=True)
class CoarseTrajectory:
    pi_increments: tuple[int, ...]
    b: tuple[Fraction, ...]
    x: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "pi_increments", tuple(int(d) for d in self.pi_increments))
        object.__setattr__(self, "b", tuple(as_fraction(v) for v in self.b))
        if len(self.b) != len(self.pi_increments) + 1:
            raise InvalidSpecError("need one more offset b than increments")
        if any(not 0 < v <= 1 for v in self.b):
            raise InvalidSpecError("offsets b must lie in (0, 1]")
        if self.x is not None:
            object.__setattr__(self, "x", tuple(int(v) for v in self.x))
            if len(self.x) != len(self.pi_increments):
                raise InvalidSpecError("need one x per column")
            if set(self.x) - {1, 2}:
                raise InvalidSpecError("x values must be 1 or 2")

    def __len__(self) -> int:
        return len(self.pi_increments)

    @property
    def heights(self) -> list[int]:
        """``Pi_j`` for ``j = 0..N``."""
        return [0, *itertools.accumulate(self.pi_increments)]

    def check_caps(self, M: int) -> None:
        if any(abs(d) > M for d in self.pi_increments):
            raise InvalidSpecError(f"increment beyond M={M}")

    def with_x(self, x: Sequence[int]) -> "CoarseTrajectory":
        return CoarseTrajectory(self.pi_increments, self.b, tuple(x))

    def to_dict(self) -> dict:
        return {"pi_increments": list(self.pi_increments), "b": [str(v) for v in self.b],
                "x": None if self.x is None else list(self.x)}

    @classmethod
    def from_dict(cls, d: dict) -> "CoarseTrajectory":
        return cls(tuple(d["pi_increments"]), tuple(Fraction(v) for v in d["b"]),
                   None if d.get("x") is None else tuple(d["x"]))


def column_type(fld: BlockField, traj: CoarseTrajectory, j: int, x: int, w: int) -> ColumnType:
    centre = traj.heights[j]
    return ColumnType(fld.column_window(j, centre, w), traj.pi_increments[j], traj.b[j], traj.b[j + 1], x)


def _fits_cap(theta: ColumnType, m: int) -> bool:
    try:
        return minimal_time(theta) <= m
    except WindowError:
        return False


def column_choices(fld: BlockField, traj: CoarseTrajectory, j: int, M: int, m: int) -> tuple[int, ...]:
    w = window_half_width(M, m)
    out = []
    base = column_type(fld, traj, j, 1, w)
    if _fits_cap(base, m):
        out.append(1)
    if not base.is_int and _fits_cap(base.with_x(2), m):
        out.append(2)
    return tuple(out)


@dataclass(frozen=True)
class AdmissibleX:
    choices: tuple[tuple[int, ...], ...]

    @property
    def count(self) -> int:
        n = 1
        for c in self.choices:
            n *= len(c)
        return n

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*self.choices)

    def __contains__(self, x) -> bool:
        return len(x) == len(self.choices) and all(v in c for v, c in zip(x, self.choices))


def admissible_x(fld: BlockField, traj: CoarseTrajectory, M: int, m: int) -> AdmissibleX:
    """Per column, the values of ``x`` keeping the column type within the caps ``(M, m)``."""
    traj.check_caps(M)
    return AdmissibleX(tuple(column_choices(fld, traj, j, M, m) for j in range(len(traj))))


def _type_key(theta: ColumnType):
    return (theta.chi.letters, theta.delta_pi, theta.b0, theta.b1, theta.x)


@dataclass(frozen=True)
class FrequencyMeasure:
    atoms: tuple[tuple[ColumnType, Fraction], ...]
    support_cap: tuple[int, int]

    def __post_init__(self):
        atoms = tuple(sorted(((t, Fraction(wt)) for t, wt in self.atoms), key=lambda a: _type_key(a[0])))
        object.__setattr__(self, "atoms", atoms)
        if any(wt < 0 for _, wt in atoms):
            raise InvalidSpecError("negative weight")
        if abs(float(sum(wt for _, wt in atoms)) - 1) > 1e-12:
            raise InvalidSpecError("weights do not sum to 1")
        M, m = self.support_cap
        for t, _ in atoms:
            t.check_caps(M, m)

    def __len__(self) -> int:
        return len(self.atoms)

    def to_dict(self) -> dict:
        return {"support_cap": list(self.support_cap),
                "atoms": [{"type": t.to_dict(), "weight": str(wt)} for t, wt in self.atoms]}

    @classmethod
    def from_dict(cls, d: dict) -> "FrequencyMeasure":
        return cls(tuple((ColumnType.from_dict(a["type"]), Fraction(a["weight"])) for a in d["atoms"]),
                   tuple(d["support_cap"]))


def empirical_measure(fld: BlockField, traj: CoarseTrajectory, N: int, M: int, m: int) -> FrequencyMeasure:
    """Frequencies of the first ``N`` column types along ``traj``."""
    if traj.x is None:
        raise InvalidSpecError("trajectory has no x sequence")
    if N < 1 or len(traj) < N:
        raise ModelError(f"trajectory of {len(traj)} columns shorter than N={N}")
    traj.check_caps(M)
    w = window_half_width(M, m)
    counts = Counter(column_type(fld, traj, j, traj.x[j], w) for j in range(N))
    for theta in counts:
        if not _fits_cap(theta, m):
            raise InvalidSpecError(f"column type with t_theta > m={m}")
    return FrequencyMeasure(tuple((t, Fraction(c, N)) for t, c in counts.items()), (M, m))


def random_walk_trajectory(fld: BlockField, M: int, m: int, N: int, L: int, rng: np.random.Generator,
                           max_tries: int = 1000) -> CoarseTrajectory:
    """Uniform increments, offsets and admissible ``x``; moves leaving the field are redrawn."""
    if N > fld.width:
        raise OutOfFieldError(f"N={N} columns but field width {fld.width}")
    w = window_half_width(M, m)
    if w > fld.height:
        raise OutOfFieldError("field too short for the column window")
    incs, xs = [], []
    bs = [Fraction(int(rng.integers(1, L + 1)), L)]
    pi = 0
    for j in range(N):
        for _ in range(max_tries):
            d = int(rng.integers(-M, M + 1))
            b1 = Fraction(int(rng.integers(1, L + 1)), L)
            if abs(pi + d) + w > fld.height or abs(pi) + w > fld.height:
                continue
            part = CoarseTrajectory((*incs, d), (*bs, b1))
            choices = column_choices(fld, part, j, M, m)
            if choices:
                break
        else:
            raise ModelError(f"no admissible column found at j={j}")
        incs.append(d)
        bs.append(b1)
        xs.append(int(choices[int(rng.integers(len(choices)))]))
        pi += d
    return CoarseTrajectory(tuple(incs), tuple(bs), tuple(xs))


def _sample_one(args):
    fld, M, m, N, L, seed, index = args
    traj = random_walk_trajectory(fld, M, m, N, L, substream(seed, TAG_MEASURES, index))
    return traj, empirical_measure(fld, traj, N, M, m)


def sample_trajectories(fld: BlockField, M: int, m: int, N: int, n_measures: int, seed: int,
                        L: int = 8, workers: int = 1) -> list[tuple[CoarseTrajectory, FrequencyMeasure]]:
    items = [(fld, M, m, N, L, seed, i) for i in range(n_measures)]
    return map_ordered(_sample_one, items, workers)


def sample_measures(fld: BlockField, M: int, m: int, N: int, n_measures: int,
                    strategy="random_walk", seed: int = 0, L: int = 8, workers: int = 1) -> list[FrequencyMeasure]:
    """Empirical measures for ``n_measures`` trajectories, sampled or supplied.

    ``strategy`` is ``"random_walk"`` or a list of :class:`CoarseTrajectory`.
    """
    if M < 1 or m < 1:
        raise InvalidSpecError("M and m must be positive")
    if strategy == "random_walk":
        return [mu for _, mu in sample_trajectories(fld, M, m, N, n_measures, seed, L, workers)]
    if isinstance(strategy, str):
        raise InvalidSpecError(f"unknown strategy {strategy!r}")
    trajs = list(strategy)[:n_measures]
    return [empirical_measure(fld, t, N, M, m) for t in trajs]


def visited_cells(traj: CoarseTrajectory, N: int, w: int) -> set[tuple[int, int]]:
    """Blocks read when building the first ``N`` column types."""
    hs = traj.heights
    return {(j, hs[j] + k) for j in range(N) for k in range(-w, w + 1)}
