import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from supercrit.errors import ConstraintError, RegimeError
from supercrit.nonlinearity import classify, make_builtin
from supercrit.radial_ode import (
    RadialSolution,
    exact_limit_critical,
    residual_norm,
    shoot_limit,
    shoot_regular,
    write_csv,
)


def bubble(r):
    return (1 + r * r / 3) ** -0.5


@pytest.fixture(scope="module")
def p5():
    return make_builtin("power:p=5")


def test_bubble_residual_oracle_first(p5):
    # the oracle itself solves the equation: sampled at 1e-3 spacing
    r = np.arange(0, 10 + 1e-12, 1e-3)
    u = bubble(r)
    du = -(r / 3) * (1 + r * r / 3) ** -1.5
    sol = RadialSolution("Original", 3, p5, 1.0, r, u, du)
    assert residual_norm(p5, sol) <= 1e-6


def test_bubble_agreement_and_order(p5):
    r = np.linspace(0, 10, 2001)
    errs = []
    for tol in (1e-8, 5e-9):
        sol = shoot_regular(p5, 3, 1.0, r_max=10, tol=tol)
        errs.append(np.max(np.abs(sol(r) - bubble(r))))
    assert errs[0] <= 1e-6
    assert errs[0] / errs[1] >= 4


def test_residual_within_ten_tol(p5):
    sol = shoot_regular(p5, 3, 1.0)
    assert residual_norm(p5, sol) <= 10 * sol.tol


def test_constant_fake_solution_residual():
    # Node curvatures come from the equation (-e at every node), the interpolant of
    # du is flat, so the midpoint defect is e + e/2 before normalizing by f(1) = e.
    f = make_builtin("exp")
    r = np.linspace(0, 1, 11)
    sol = RadialSolution("Original", 3, f, 1.0, r, np.ones_like(r), np.zeros_like(r))
    assert residual_norm(f, sol) == pytest.approx(1.5, rel=1e-12)


def test_exp_series_start():
    f = make_builtin("exp")
    sol = shoot_regular(f, 3, 0.0, r_max=5)
    assert np.all(sol.u[1:] < 0)
    r = 1e-4
    assert sol.eval(r)[1] / r == pytest.approx(-1 / 3, rel=1e-6)
    assert sol.u[0] == 0.0 and sol.du[0] == 0.0


def test_p6_ground_state_stays_positive():
    f = make_builtin("power:p=6")
    sol = shoot_regular(f, 3, 1.0, r_max=1e3)
    assert sol.first_zero is None
    assert sol.termination == "ReachedRmax"
    assert np.all(sol.u > 0)
    assert np.all(sol.du[1:] < 0)


def test_first_zero_is_refined():
    f = make_builtin("power:p=3")
    sol = shoot_regular(f, 3, 1.0)
    assert sol.termination == "FirstZero"
    assert abs(sol.u[-1]) <= 1e-10
    assert np.all(sol.u[:-1] > 0)


def test_limit_equals_regular_when_gradient_term_vanishes():
    for spec, sigma in (("power:p=5", 1.0), ("exp", 0.0)):
        f = make_builtin(spec)
        q = classify(f, 3).q
        a = shoot_limit(f, 3, q, sigma, s_max=10)
        b = shoot_regular(f, 3, sigma, r_max=10)
        s = np.linspace(0, 9.9, 300)
        assert np.max(np.abs(a(s) - b(s))) <= 1e-8


def test_limit_residual_numeric_F():
    f = make_builtin("exppow:p=2")
    sol = shoot_limit(f, 3, 1.0, 1.0, s_max=3)
    assert residual_norm(f, sol) <= 1e-6


def test_exact_limit_critical_values(p5):
    assert exact_limit_critical(p5, 3, 1.0, math.sqrt(3)) == pytest.approx(2 ** -0.5, abs=1e-7)
    assert exact_limit_critical(p5, 3, 1.0, 0.0) == pytest.approx(1.0)
    a = exact_limit_critical(p5, 3, 1.0, math.sqrt(3) / 2)
    b = exact_limit_critical(p5, 3, 2.0, math.sqrt(3) / 2)
    assert a == pytest.approx(2 / math.sqrt(5), abs=1e-7)
    assert b == pytest.approx(2 / math.sqrt(5), abs=1e-7)


def test_exact_limit_critical_matches_shooting(p5):
    sol = shoot_limit(p5, 3, 1.25, 2.0, s_max=5)
    s = np.linspace(0, 4.9, 50)
    assert np.max(np.abs(sol(s) - exact_limit_critical(p5, 3, 2.0, s))) <= 1e-7
    # the other reading of the inner constant is off the trajectory for sigma != 1
    other = exact_limit_critical(p5, 3, 2.0, s, inner="one")
    assert np.max(np.abs(sol(s) - other)) > 1e-2


def test_exact_limit_critical_regime_error():
    with pytest.raises(RegimeError):
        exact_limit_critical(make_builtin("exp"), 3, 1.0, 1.0)


@settings(max_examples=8, deadline=None)
@given(lam=st.floats(min_value=0.3, max_value=3.0))
def test_scale_invariance_exp(lam):
    # v_lam(s) = v(lam s) + 2 log lam solves the same equation
    f = make_builtin("exp")
    base = shoot_regular(f, 3, 0.0, r_max=10)
    other = shoot_regular(f, 3, 2 * math.log(lam), r_max=10 / lam)
    s = np.linspace(0, 9.5 / max(lam, 1.0), 40)
    pred = np.array([f.log_F_inv(-2 * math.log(lam) + f.log_F(v)) for v in base(lam * s)])
    assert np.max(np.abs(pred - other(s))) <= 1e-6


@settings(max_examples=8, deadline=None)
@given(lam=st.floats(min_value=0.3, max_value=3.0))
def test_scale_invariance_power(lam):
    f = make_builtin("power:p=7")
    base = shoot_regular(f, 3, 1.0, r_max=10)
    center = f.log_F_inv(-2 * math.log(lam) + f.log_F(1.0))
    other = shoot_regular(f, 3, center, r_max=10 / lam)
    s = np.linspace(0, 9.5 / max(lam, 1.0), 40)
    pred = np.array([f.log_F_inv(-2 * math.log(lam) + f.log_F(v)) for v in base(lam * s)])
    assert np.max(np.abs(pred - other(s)) / np.maximum(1, np.abs(pred))) <= 1e-6


def test_large_center_value_does_not_overflow():
    f = make_builtin("exp")
    sol = shoot_regular(f, 3, 1000.0, r_max=2.0, tol=1e-8)
    assert sol.first_zero == pytest.approx(math.sqrt(2), abs=1e-6)


def test_monotone_decreasing(p5):
    sol = shoot_regular(make_builtin("exp"), 3, 5.0, r_max=1.3)
    assert np.all(np.diff(sol.u) < 0)


def test_bad_inputs(p5):
    with pytest.raises(ConstraintError):
        shoot_regular(p5, 2, 1.0)
    with pytest.raises(ConstraintError):
        shoot_regular(p5, 3, -1.0)
    with pytest.raises(ConstraintError):
        shoot_regular(p5, 3, 1.0, tol=1e-3)


def test_csv(tmp_path, p5):
    sol = shoot_regular(p5, 3, 1.0, r_max=2)
    path = tmp_path / "traj.csv"
    write_csv(sol, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "r,u,du"
    assert len(lines) == len(sol.r) + 1
    assert float(lines[-1].split(",")[0]) == sol.r[-1]
