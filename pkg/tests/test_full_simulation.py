from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from copolymer_emulsion.emulsion_field import BlockField, sample_block_field
from copolymer_emulsion.errors import BudgetExceededError, DisorderTooShortError, InvalidSpecError, OutOfFieldError
from copolymer_emulsion.full_simulation import (
    ModelInstance,
    convergence_report,
    directed_walk_count,
    finite_free_energy,
    full_log_partition,
    random_instance,
    required_field,
    star_gap,
)
from copolymer_emulsion.single_interface import MicroDisorder


def walks(n):
    """All n-step up/down/right self-avoiding paths from (0, 1), as vertex lists."""
    out = []

    def rec(path, last):
        if len(path) == n + 1:
            out.append(list(path))
            return
        x, y = path[-1]
        for step, (dx, dy) in (("R", (1, 0)), ("U", (0, 1)), ("D", (0, -1))):
            if {step, last} == {"U", "D"}:
                continue
            path.append((x + dx, y + dy))
            rec(path, step)
            path.pop()

    rec([(0, 1)], None)
    return out


def cell(v, L):
    # half-open cells (kL, (k+1)L]
    return math.ceil(v / L) - 1


def brute_log_z(inst: ModelInstance) -> float:
    L, fld = inst.L, inst.field
    total = 0.0
    for path in walks(inst.n):
        last_row = {}
        steps_in = {}
        energy = 0.0
        for i, ((x0, y0), (x1, y1)) in enumerate(zip(path, path[1:])):
            mx, my = (x0 + x1) / 2, (y0 + y1) / 2
            col = max(0, cell(mx, L))
            row = cell(my, L)
            if y0 == y1 and y0 % L == 0:
                is_b = fld(col, y0 // L - 1) == "B" and fld(col, y0 // L) == "B"
            else:
                is_b = fld(col, row) == "B"
            if is_b:
                energy += inst.beta if inst.omega.word[i] == "B" else -inst.alpha
            last_row[col] = row
            steps_in[col] = steps_in.get(col, 0) + 1
        prev, ok = 0, True
        for col in sorted(last_row):
            ok &= abs(last_row[col] - prev) <= inst.M
            prev = last_row[col]
        if inst.m is not None:
            ok &= max(steps_in.values()) <= inst.m * L
        if inst.star:
            ok &= path[-1][0] % L == 0 and path[-1][0] > 0
        if ok:
            total += math.exp(energy)
    return math.log(total)


def instance(n, L, M, alpha, beta, seed, p=0.5, m=None, star=False):
    return random_instance(n, L, M, alpha, beta, p, seed, 0, m, star)


def test_walk_count_recursion():
    assert [directed_walk_count(n) for n in range(6)] == [1, 3, 7, 17, 41, 99]
    assert all(len(walks(n)) == directed_walk_count(n) for n in range(1, 9))


CASES = [
    (n, L, M, m, star)
    for n, L in ((4, 1), (6, 2), (8, 2), (9, 3), (10, 2), (10, 3), (7, 4))
    for M in (1, 2)
    for m, star in ((None, False), (2, False), (None, True), (3, True))
]


@pytest.mark.parametrize("n,L,M,m,star", CASES)
def test_matches_enumeration(n, L, M, m, star):
    seed = 31 * n + 7 * L + M
    inst = instance(n, L, M, 1.3, -0.4, seed, m=m, star=star)
    try:
        want = brute_log_z(inst)
    except ValueError:  # no admissible path
        pytest.skip("empty path set")
    assert full_log_partition(inst) == pytest.approx(want, rel=1e-12, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 9), L=st.integers(1, 4), M=st.integers(1, 3), seed=st.integers(0, 10**6),
       p=st.sampled_from([0.2, 0.5, 0.8]), beta=st.floats(-1, 1))
def test_matches_enumeration_random(n, L, M, seed, p, beta):
    if L > n:
        return
    inst = instance(n, L, M, 1.0, beta, seed, p=p)
    assert full_log_partition(inst) == pytest.approx(brute_log_z(inst), rel=1e-12, abs=1e-12)


def test_zero_coupling_counts_paths():
    for n, L in ((12, 2), (20, 3), (30, 5)):
        inst = instance(n, L, n, 0.0, 0.0, 1)
        assert full_log_partition(inst) == pytest.approx(math.log(directed_walk_count(n)), rel=1e-13)


def test_uniform_fields():
    n, L = 10, 2
    w, h = required_field(n, L)
    omega = MicroDisorder.sample(3, n)
    all_b = BlockField(0.5, None, np.zeros((w, 2 * h + 1), dtype=bool))
    all_a = BlockField(0.5, None, np.ones((w, 2 * h + 1), dtype=bool))
    base = ModelInstance(n, L, n, 1.0, 0.5, omega, all_a)
    assert full_log_partition(base) == pytest.approx(math.log(directed_walk_count(n)), rel=1e-13)
    # every bond is B: each path weighs exp(sum of rewards)
    rewards = sum(0.5 if c == "B" else -1.0 for c in omega.word)
    got = full_log_partition(base.with_(field=all_b))
    assert got == pytest.approx(rewards + math.log(directed_walk_count(n)), rel=1e-13)


def test_monotone_in_M_exactly():
    for seed in range(6):
        inst = instance(24, 2, 1, 2.0, 1.0, seed, m=3)
        vals = [full_log_partition(inst.with_(M=M)) for M in range(1, 8)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_monotone_in_m_and_star_subset():
    inst = instance(20, 2, 2, 1.5, 0.5, 4)
    by_m = [full_log_partition(inst.with_(m=m)) for m in (1, 2, 3, 6)]
    assert all(a <= b for a, b in zip(by_m, by_m[1:]))
    assert by_m[-1] <= full_log_partition(inst)
    assert star_gap(inst.with_(m=3)) >= 0


def test_free_energy_bound():
    for seed in range(5):
        inst = instance(30, 3, 2, 2.0, 1.0, seed, m=3)
        f = finite_free_energy(inst)
        assert abs(f) <= math.log(3) + 2.0


def test_flipping_unvisited_blocks():
    inst = instance(8, 2, 1, 1.0, 0.0, 2)
    w, h = required_field(8, 2)
    bigger = np.ones((w + 3, 2 * (h + 3) + 1), dtype=bool)
    bigger[:w, 3:3 + 2 * h + 1] = inst.field.is_a
    big = inst.with_(field=BlockField(0.5, None, bigger))
    assert full_log_partition(big) == full_log_partition(inst)
    bigger[w:, :] = ~bigger[w:, :]
    assert full_log_partition(inst.with_(field=BlockField(0.5, None, bigger))) == full_log_partition(big)


def test_errors():
    omega = MicroDisorder.sample(0, 10)
    fld = sample_block_field(0.5, *required_field(10, 2), 0)
    with pytest.raises(InvalidSpecError):
        ModelInstance(10, 11, 1, 1.0, 0.0, omega, fld)
    with pytest.raises(InvalidSpecError):
        ModelInstance(10, 2, 1, 1.0, 2.0, omega, fld)
    with pytest.raises(DisorderTooShortError):
        ModelInstance(12, 2, 1, 1.0, 0.0, omega, fld)
    with pytest.raises(OutOfFieldError):
        full_log_partition(ModelInstance(10, 2, 1, 1.0, 0.0, omega, sample_block_field(0.5, 2, 2, 0)))
    with pytest.raises(BudgetExceededError):
        full_log_partition(ModelInstance(10, 2, 1, 1.0, 0.0, omega, fld), budget=100)


def test_convergence_report_shape():
    rows = convergence_report([8, 16], [2, 4], 1, 2.0, 1.0, 0.5, samples=3, seed=0, m=3, lower_bound=0.1)
    assert [r.n for r in rows] == [8, 16]
    assert all(r.gap == pytest.approx(r.mean - 0.1) for r in rows)
    again = convergence_report([8, 16], [2, 4], 1, 2.0, 1.0, 0.5, samples=3, seed=0, m=3, workers=2)
    assert [r.mean for r in again] == [r.mean for r in rows]
    with pytest.raises(InvalidSpecError):
        convergence_report([16, 8], [2, 4], 1, 2.0, 1.0, 0.5, 2, 0)
