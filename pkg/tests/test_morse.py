import math

import numpy as np
import pytest

from supercrit.errors import PreconditionError
from supercrit.morse import (
    BORDERLINE,
    FINITE,
    INFINITE,
    linearized_zero_count,
    linearized_zero_counts,
    morse_regime_check,
    potential,
)
from supercrit.nonlinearity import make_builtin
from supercrit.singular import construct_singular

EXP = make_builtin("exp")


@pytest.fixture(scope="module")
def exp3():
    return construct_singular(EXP, 3)


def euler_zeros(N, c, r0, count):
    """Zeros of r^{-(N-2)/2} sin(w ln(r/r0)) below r0 for r^2 f'(u*) = c."""
    w = math.sqrt(c - (N - 2) ** 2 / 4)
    return r0 * np.exp(-math.pi * np.arange(1, count + 1) / w)


def test_potential_is_constant_for_exp(exp3):
    for t in np.linspace(exp3.t[0], math.log(1.3), 9):
        assert potential(exp3, t) == pytest.approx(2.0, rel=1e-8)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_zero_positions_match_euler_oracle(exp3, k):
    z = euler_zeros(3, 2.0, math.sqrt(2), 5)[k - 1]
    assert linearized_zero_count(EXP, exp3, z * 1.02) == k - 1
    assert linearized_zero_count(EXP, exp3, z * 0.98) == k


def test_exp3_counts(exp3):
    counts = dict(linearized_zero_counts(EXP, exp3))
    assert counts[1e-3] in (2, 3, 4)
    assert counts[1e-5] - counts[1e-3] in (1, 2, 3)


def test_exp3_report():
    rep = morse_regime_check(EXP, 3)
    assert rep.c_star == pytest.approx(2.0, abs=0.02)
    assert rep.hardy == 0.25 and rep.verdict == INFINITE
    assert rep.consistent_with_exponents
    counts = [c for _, c in rep.zero_counts]
    assert all(b >= a for a, b in zip(counts, counts[1:]))
    for a, b in zip(counts, counts[1:]):
        assert abs((b - a) - rep.predicted_per_decade) <= 1


def test_exp12_finite():
    rep = morse_regime_check(EXP, 12)
    assert rep.c_star == pytest.approx(20.0, rel=1e-8) and rep.hardy == 25.0
    assert rep.verdict == FINITE
    below = [c for e, c in rep.zero_counts if e <= 1e-3]
    assert len(set(below)) == 1


def test_exp10_borderline():
    assert morse_regime_check(EXP, 10).verdict == BORDERLINE


def test_shifted_power_margin():
    rep = morse_regime_check(make_builtin("power:p=7,a=1"), 11)
    assert rep.c_star == pytest.approx(364 / 18, rel=1e-3)
    assert rep.verdict == FINITE


@pytest.mark.parametrize("spec,N", [("exp", 3), ("exp", 12), ("power:p=6,a=1", 3),
                                    ("power:p=7,a=1", 11), ("exppow:p=2", 3)])
def test_identity(spec, N):
    rep = morse_regime_check(make_builtin(spec), N)
    assert abs(rep.c_star - rep.c_star_identity) <= 0.01 * rep.c_star
    assert rep.consistent_with_exponents


def test_eps_precondition(exp3):
    with pytest.raises(PreconditionError):
        linearized_zero_count(EXP, exp3, 1.0)


def test_json_has_all_fields():
    rep = morse_regime_check(EXP, 12)
    d = rep.to_dict()
    for key in ("c_star", "hardy", "zero_counts", "verdict"):
        assert key in d
    assert rep.to_json() == morse_regime_check(EXP, 12).to_json()
