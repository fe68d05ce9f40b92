import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from supercrit.errors import ConstraintError, PreconditionError
from supercrit.intersect import FunctionProfile, comparison_bound_check, count_intersections
from supercrit.nonlinearity import make_builtin
from supercrit.radial_ode import exact_limit_critical, shoot_limit
from supercrit.singular import construct_singular, exact_singular_limit
from supercrit.transforms import cole_hopf_forward, similarity_rescale

P5 = make_builtin("power:p=5")


@pytest.fixture(scope="module")
def v1():
    return shoot_limit(P5, 3, 1.25, 1.0, s_max=10)


def test_two_bubbles_cross_once(v1):
    # (1+s^2/3)^{-1/2} = 2(1+4s^2/3)^{-1/2}  <=>  s^2 = 3/4
    v2 = shoot_limit(P5, 3, 1.25, 2.0, s_max=10)
    rep = count_intersections(v1, v2, (0, 10))
    assert rep.count == 1
    assert rep.zeros[0] == pytest.approx(math.sqrt(3) / 2, abs=1e-5)


def test_bubble_against_singular(v1):
    # (1+s^2/3)^{-1/2} = (3/4)^{1/4} s^{-1/2}  <=>  s^2 - 6s + 3 = 0
    vs = FunctionProfile(lambda s: exact_singular_limit(P5, 3, 1.25, s), singular=True)
    rep = count_intersections(v1, vs, (0, 10))
    assert rep.count == 2
    assert rep.zeros == pytest.approx([3 - math.sqrt(6), 3 + math.sqrt(6)], abs=1e-4)
    assert rep.clipped_at is not None and rep.clipped_at < rep.zeros[0]


def test_closed_form_profiles():
    a = FunctionProfile(lambda s: exact_limit_critical(P5, 3, 1.0, s))
    b = FunctionProfile(lambda s: exact_limit_critical(P5, 3, 2.0, s))
    rep = count_intersections(a, b, (0, 10))
    assert rep.count == 1 and rep.zeros[0] == pytest.approx(math.sqrt(0.75), rel=1e-9)


def test_symmetric(v1):
    v2 = shoot_limit(P5, 3, 1.25, 3.0, s_max=10)
    assert count_intersections(v1, v2, (0, 10)).zeros == pytest.approx(
        count_intersections(v2, v1, (0, 10)).zeros, rel=1e-9)


def test_exp_oscillatory_growth():
    f = make_builtin("exp")
    v0 = shoot_limit(f, 3, 1.0, 0.0, s_max=2e4)
    vs = FunctionProfile(lambda s: exact_singular_limit(f, 3, 1.0, s), singular=True)
    rep = count_intersections(v0, vs, (0, 2e4), s_max=2e4)
    z = np.array(rep.zeros)
    assert rep.count == 5
    ratios = z[1:] / z[:-1]
    target = math.exp(2 * math.pi / math.sqrt(7))
    assert np.all(np.abs(ratios[-2:] / target - 1) <= 0.05)


def test_exp_separated_regime():
    f = make_builtin("exp")
    a = shoot_limit(f, 10, 1.0, 0.0, s_max=1e3)
    b = shoot_limit(f, 10, 1.0, 1.0, s_max=1e3)
    rep = count_intersections(a, b, (0, 1e3))
    assert rep.count == 0 and rep.min_gap > 0
    vs = FunctionProfile(lambda s: exact_singular_limit(f, 10, 1.0, s), singular=True)
    rep = count_intersections(a, vs, (0, 1e3))
    assert rep.count == 0 and rep.min_gap > 0


def test_count_is_transform_invariant():
    f = make_builtin("power:p=3,a=1")
    a = shoot_limit(f, 5, 1.5, 1.0, s_max=10)
    b = shoot_limit(f, 5, 1.5, 3.0, s_max=10)
    base = count_intersections(a, b, (0, 10))
    mapped = count_intersections(cole_hopf_forward(f, 1.5, a), cole_hopf_forward(f, 1.5, b), (0, 10))
    assert mapped.count == base.count
    assert mapped.zeros == pytest.approx(base.zeros, rel=1e-7)


@settings(max_examples=10, deadline=None)
@given(lam=st.floats(min_value=0.5, max_value=3.0))
def test_similarity_moves_zeros(lam):
    f = make_builtin("power:p=6,a=1")
    a = shoot_limit(f, 3, 1.2, 1.0, s_max=8)
    b = shoot_limit(f, 3, 1.2, 2.0, s_max=8)
    base = count_intersections(a, b, (0, 8))
    scaled = count_intersections(similarity_rescale(f, a, lam), similarity_rescale(f, b, lam), (0, 8 / lam))
    assert scaled.count == base.count
    assert np.allclose(np.array(scaled.zeros) * lam, base.zeros, rtol=1e-7)


def test_truncation_flag(v1):
    v2 = shoot_limit(P5, 3, 1.25, 2.0, s_max=10)
    assert count_intersections(v1, v2, (0, math.inf)).truncated
    assert not count_intersections(v1, v2, (0, 5)).truncated


def test_singular_solution_profile():
    f = make_builtin("exp")
    sing = construct_singular(f, 3)
    above = FunctionProfile(lambda s: exact_singular_limit(f, 3, 1.0, s) + 1e-3, singular=True)
    rep = count_intersections(sing, above, (0, 1.0))
    assert rep.count == 0 and rep.min_gap == pytest.approx(1e-3, rel=1e-4)
    reg = FunctionProfile(lambda s: 1.0 - 0.5 * s)
    assert count_intersections(sing, reg, (0, 1.4)).count == 1


def test_report_json_keys(v1):
    rep = count_intersections(v1, v1, (0, 1))
    assert set(rep.to_dict()) == {"interval", "count", "zeros", "near_tangencies", "truncated"}


def test_bad_interval(v1):
    with pytest.raises(ConstraintError):
        count_intersections(v1, v1, (2, 1))


@pytest.mark.parametrize("spec,N,q,sigma", [("power:p=7,a=1", 11, 7 / 6, 1.0), ("exp", 10, 1.0, 0.0)])
def test_comparison_bound_holds(spec, N, q, sigma):
    rep = comparison_bound_check(make_builtin(spec), N, q, sigma)
    assert rep.passed and rep.max_violation <= 1e-9


def test_comparison_bound_precondition():
    with pytest.raises(PreconditionError):
        comparison_bound_check(make_builtin("exp"), 3, 1.0, 0.0)
