from __future__ import annotations

import math

import pytest

from copolymer_emulsion.errors import InvalidSpecError
from copolymer_emulsion.pipeline import VarfeConfig, variational_lower_bound
from copolymer_emulsion.records import canonical

SMALL = dict(alpha=2.0, beta=1.0, N=3, n_measures=3, L_oracle=8, phi_samples=4, n_grid=9, trajectory_L=4)


@pytest.fixture(scope="module")
def small_result():
    return variational_lower_bound(VarfeConfig(**SMALL))


def test_bound_is_best_of_measures(small_result):
    assert math.isfinite(small_result.value)
    assert small_result.value == max(small_result.values)
    assert small_result.values[small_result.best_index] == small_result.value
    assert len(small_result.n_atoms) == SMALL["n_measures"]


def test_same_seed_same_record(small_result):
    again = variational_lower_bound(VarfeConfig(**SMALL))
    assert canonical(again.to_dict()) == canonical(small_result.to_dict())


def test_workers_do_not_change_result(small_result):
    par = variational_lower_bound(VarfeConfig(**SMALL, workers=2))
    assert par.values == small_result.values


@pytest.mark.parametrize("bad", [dict(p=0.0), dict(p=1.0), dict(M=0), dict(m=0), dict(N=0),
                                 dict(n_measures=0), dict(alpha=-1.0), dict(beta=3.0)])
def test_config_validation(bad):
    with pytest.raises(InvalidSpecError):
        VarfeConfig(**{**SMALL, **bad})


def test_field_shape_covers_window():
    cfg = VarfeConfig(2.0, 1.0, M=2, m=3, N=5)
    width, height = cfg.field_shape()
    assert width == 5 and height >= 5 * 2 + 1
