from __future__ import annotations

import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from copolymer_emulsion.errors import CapExceededError, InvalidSpecError
from copolymer_emulsion.lattice_paths import (
    CrossingSpec,
    LatticePath,
    VerticalCorridor,
    admissible_specs,
    count_crossings_closed_form,
    count_crossings_dp,
    count_endpoint_column_dp,
    count_crossings_stretch_formula,
    enumerate_crossings,
    kappa_L,
    kappa_limit,
    kappa_restricted_gap,
)

LOG3 = math.log(3)


def brute_force_paths(L, n, rise, lo=None, hi=None):
    """Every word in {R,U,D}^n, filtered by a site-revisit check."""
    out = []
    for word in itertools.product("RUD", repeat=n):
        path = LatticePath("".join(word))
        pts = path.points()
        if pts[-1] != (L, rise) or len(set(pts)) != len(pts):
            continue
        if lo is not None and not all(lo < y < hi for _, y in pts[1:-1]):
            continue
        out.append(path.steps)
    return sorted(out)


def test_frozen_small_sets():
    assert [p.steps for p in enumerate_crossings(CrossingSpec(1, 1, 0))] == ["R"]
    assert sorted(p.steps for p in enumerate_crossings(CrossingSpec(1, 3, 0))) == ["DRU", "URD"]
    assert sorted(p.steps for p in enumerate_crossings(CrossingSpec(1, 3, 2))) == ["RUU", "URU", "UUR"]


@pytest.mark.parametrize("L,n", [(1, 5), (2, 6), (2, 8), (3, 7), (4, 8)])
def test_enumeration_matches_word_brute_force(L, n):
    for rise in range(-(n - L), n - L + 1, 2):
        spec = CrossingSpec.from_steps(L, n, rise)
        got = sorted(p.steps for p in enumerate_crossings(spec))
        assert got == brute_force_paths(L, n, rise)


def test_corridor_enumeration_matches_brute_force():
    spec = CrossingSpec(2, 3, 0)
    corridor = VerticalCorridor(-1, 1)
    got = sorted(p.steps for p in enumerate_crossings(spec, corridor))
    assert got == brute_force_paths(2, 6, 0, -2, 2)


def test_enumerated_paths_are_valid():
    spec = CrossingSpec(3, Fraction(8, 3), Fraction(1, 3))
    for p in enumerate_crossings(spec):
        assert p.is_self_avoiding()
        assert p.end == (3, 1)
        assert "UD" not in p.steps and "DU" not in p.steps


def test_dp_matches_enumeration_all_small_specs():
    for L in range(1, 11):
        for spec in admissible_specs(L, 10):
            assert count_crossings_dp(spec) == len(enumerate_crossings(spec))


def test_dp_l2_u2_l1():
    spec = CrossingSpec(2, 2, 1)
    assert count_crossings_dp(spec) == len(enumerate_crossings(spec))


@pytest.mark.parametrize("L,rise", [(1, 1), (1, 5), (2, 4), (3, 3), (4, 8), (6, 6)])
def test_all_up_case_is_binomial(L, rise):
    spec = CrossingSpec.from_steps(L, L + rise, rise)
    assert count_crossings_dp(spec) == math.comb(L + rise, L)
    if L + rise <= 12:
        assert len(enumerate_crossings(spec)) == math.comb(L + rise, L)


def test_closed_form_matches_dp():
    for L in range(1, 8):
        for spec in admissible_specs(L, 16):
            assert count_crossings_closed_form(spec) == count_crossings_dp(spec)


def test_stretch_formula_frozen():
    assert count_crossings_stretch_formula(1, 1) == 1
    assert count_crossings_stretch_formula(1, 3) == 8
    assert count_crossings_stretch_formula(1, 3, summand="printed") == 12


def test_stretch_formula_l2_u2_sums_endpoints():
    total = sum(
        count_crossings_dp(CrossingSpec.from_steps(2, 4, r)) for r in (-2, 0, 2)
    )
    assert count_crossings_stretch_formula(2, 2) == total


def test_stretch_formula_matches_endpoint_enumeration():
    for L in range(1, 8):
        for n in range(L, 15):
            enumerated = sum(
                len(enumerate_crossings(CrossingSpec.from_steps(L, n, r)))
                for r in range(-(n - L), n - L + 1, 2)
            )
            assert count_crossings_stretch_formula(L, Fraction(n, L)) == enumerated
            assert count_endpoint_column_dp(L, Fraction(n, L)) == enumerated


def test_invalid_specs_rejected():
    with pytest.raises(InvalidSpecError):
        CrossingSpec(2, 2, 0.75)
    with pytest.raises(InvalidSpecError):
        CrossingSpec(2, Fraction(5, 2), 0)
    with pytest.raises(InvalidSpecError):
        CrossingSpec(1, 1, 1)
    with pytest.raises(InvalidSpecError):
        count_crossings_stretch_formula(2, Fraction(1, 2))
    with pytest.raises(CapExceededError):
        enumerate_crossings(CrossingSpec(1, 19, 0))


def test_kappa_trivial_and_bounds():
    assert kappa_L(CrossingSpec(1, 1, 0)) == 0.0
    for L in (1, 2, 3, 5):
        for spec in admissible_specs(L, 20):
            k = kappa_L(spec)
            assert 0.0 <= k <= LOG3


def test_kappa_limit_table():
    est, rows = kappa_limit(3, 0, [1, 2, 4, 8])
    assert [r.count for r in rows] == [2, 12, 780, 6077196]
    running = [r.running_max for r in rows]
    assert running == sorted(running)
    assert est == pytest.approx(math.log(6077196) / 24, rel=1e-15)
    est0, rows0 = kappa_limit(1, 0, [1, 2, 3])
    assert est0 == 0.0 and all(r.kappa == 0.0 for r in rows0)


def test_kappa_limit_skips_inadmissible_and_raises_when_none():
    _, rows = kappa_limit(Fraction(3, 2), Fraction(1, 2), [1, 2, 4])
    assert [r.admissible for r in rows] == [False, True, True]
    with pytest.raises(InvalidSpecError):
        kappa_limit(Fraction(3, 2), Fraction(1, 2), [1, 3])


def test_restricted_gap():
    spec = CrossingSpec(2, 3, 0)
    wide = VerticalCorridor(-10, 10)
    assert kappa_restricted_gap(spec, wide) == 0.0
    narrow = VerticalCorridor(-1, 1)
    restricted = len(enumerate_crossings(spec, narrow))
    full = len(enumerate_crossings(spec))
    expected = abs(math.log(restricted) - math.log(full)) / 6
    assert kappa_restricted_gap(spec, narrow) == pytest.approx(expected, rel=1e-12)
    assert kappa_restricted_gap(CrossingSpec(8, 3, 0), narrow) <= kappa_restricted_gap(spec, narrow)


def test_corridor_validation():
    with pytest.raises(InvalidSpecError):
        count_crossings_dp(CrossingSpec(2, 3, 0), VerticalCorridor(0, Fraction(1, 2)))
    with pytest.raises(InvalidSpecError):
        count_crossings_dp(CrossingSpec(2, 3, 1), VerticalCorridor(Fraction(1, 2), 2))


def test_decay_at_large_u():
    for L in (2, 4, 8):
        assert kappa_L(CrossingSpec(L, 16, 0)) < kappa_L(CrossingSpec(L, 4, 0))


def _unimodality_defect(L, u_max=6):
    worst = 0.0
    for n in range(L, u_max * L + 1):
        rises = [r for r in range(0, n - L + 1) if (n - L - r) % 2 == 0]
        ks = [kappa_L(CrossingSpec.from_steps(L, n, r)) for r in rises]
        worst = max([worst] + [b - a for a, b in zip(ks, ks[1:])])
    return worst


def test_unimodal_in_l():
    # exact from L=6 on; at small L the all-vertical corner l=u-1 beats its neighbour
    for L in (6, 8, 12):
        assert _unimodality_defect(L) == 0.0
    defects = [_unimodality_defect(L) for L in (1, 2, 3, 4)]
    assert defects == sorted(defects, reverse=True)
    # L=1, 5 steps: 2 paths at rise 2 against 5 at rise 4
    assert defects[0] == pytest.approx((math.log(5) - math.log(2)) / 5, rel=1e-12)


# measured worst midpoint defects of u*kappa_L on u <= 8: 0.525 (L=2),
# 0.082 (L=4), 0.016 (L=8); the tolerance keeps a margin over that decay
def _concavity_eps(L):
    return 2.2 / L**2


@pytest.mark.parametrize("L", [2, 4, 8])
def test_midpoint_concavity_of_G(L):
    nodes = {}
    for spec in admissible_specs(L, 8 * L):
        nodes[(spec.n_steps, spec.rise)] = spec.n_steps * kappa_L(spec) / L
    worst = 0.0
    for (n1, r1), g1 in nodes.items():
        for (n2, r2), g2 in nodes.items():
            if (n1 + n2) % 2 or (r1 + r2) % 2:
                continue
            mid = ((n1 + n2) // 2, (r1 + r2) // 2)
            if mid in nodes:
                worst = max(worst, (g1 + g2) / 2 - nodes[mid])
    assert worst <= _concavity_eps(L)


spec_strategy = st.integers(1, 6).flatmap(
    lambda L: st.tuples(st.just(L), st.integers(L, 40)).flatmap(
        lambda t: st.tuples(
            st.just(t[0]),
            st.just(t[1]),
            st.sampled_from(list(range(-(t[1] - t[0]), t[1] - t[0] + 1, 2))),
        )
    )
)


@settings(max_examples=60, deadline=None)
@given(spec_strategy)
def test_property_symmetry_and_bounds(t):
    L, n, rise = t
    spec = CrossingSpec.from_steps(L, n, rise)
    c = count_crossings_dp(spec)
    assert c == count_crossings_dp(spec.mirrored())
    assert 1 <= c <= 3**n
    assert c == count_crossings_closed_form(spec)
    assert 0.0 <= kappa_L(spec) <= LOG3
