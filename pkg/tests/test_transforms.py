import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from supercrit.nonlinearity import make_builtin
from supercrit.radial_ode import exact_limit_critical, shoot_limit, shoot_regular
from supercrit.singular import construct_singular, exact_singular_limit
from supercrit.transforms import (
    cole_hopf_forward,
    cole_hopf_inverse,
    similarity_rescale,
    verify_cole_hopf,
)


def test_similarity_power_gives_sigma_two_solution():
    f = make_builtin("power:p=5")
    u = shoot_regular(f, 3, 1.0, r_max=10)
    v = similarity_rescale(f, u, 4.0)
    s = np.linspace(0, 2.4, 40)
    assert np.max(np.abs(v(s) - exact_limit_critical(f, 3, 2.0, s))) <= 1e-8
    assert v.center_value == pytest.approx(2.0)


def test_similarity_exp_is_a_shift():
    f = make_builtin("exp")
    u = shoot_regular(f, 3, 3.0, r_max=2)
    lam = 1.7
    v = similarity_rescale(f, u, lam)
    assert np.allclose(v.u, u.u + 2 * math.log(lam), atol=1e-12)
    assert np.allclose(v.du, u.du * lam, rtol=1e-12)


def test_similarity_identity():
    f = make_builtin("power:p=6,a=1")
    u = shoot_regular(f, 3, 2.0, r_max=3)
    v = similarity_rescale(f, u, 1.0)
    assert np.allclose(v.u, u.u, rtol=1e-13) and np.allclose(v.r, u.r)


@settings(max_examples=15, deadline=None)
@given(a=st.floats(min_value=0.2, max_value=5), b=st.floats(min_value=0.2, max_value=5))
def test_similarity_composes(a, b):
    f = make_builtin("power:p=7")
    u = shoot_regular(f, 3, 1.0, r_max=4)
    two = similarity_rescale(f, similarity_rescale(f, u, a), b)
    one = similarity_rescale(f, u, a * b)
    assert np.allclose(two.u, one.u, rtol=1e-9) and np.allclose(two.r, one.r, rtol=1e-12)


@pytest.mark.parametrize("spec,q", [("power:p=5", 1.25), ("exp", 1.0)])
def test_cole_hopf_fixed_points(spec, q):
    f = make_builtin(spec)
    v = shoot_limit(f, 3, q, 1.0, s_max=5)
    w = cole_hopf_forward(f, q, v)
    assert np.allclose(w.u, v.u, rtol=1e-12, atol=1e-12)


def test_cole_hopf_shifted_cubic():
    f = make_builtin("power:p=3,a=1")
    rep = verify_cole_hopf(f, 5, 1.5, 1.0)
    assert rep.residual <= 1e-6
    assert rep.tau == 2.0
    assert rep.tau_gap <= 1e-14


def test_cole_hopf_exppow_against_quadrature():
    f = make_builtin("exppow:p=2")
    rep = verify_cole_hopf(f, 3, 1.0, 1.0)
    F1, _ = integrate.quad(lambda t: math.exp(-t * t), 1, np.inf, epsabs=0, epsrel=1e-13)
    assert rep.residual <= 1e-5
    assert rep.tau == pytest.approx(-math.log(F1), abs=1e-12)


def test_round_trip():
    f = make_builtin("power:p=3,a=1")
    v = shoot_limit(f, 5, 1.5, 1.0, s_max=10)
    back = cole_hopf_inverse(f, 1.5, cole_hopf_forward(f, 1.5, v))
    assert np.max(np.abs(back.u - v.u)) <= 1e-9
    assert np.max(np.abs(back.du - v.du)) <= 1e-9


def test_singular_image():
    # F_q(w*) for w* = F_q^{-1}[k^{-1} s^2] maps back to the exact limit singular solution
    f = make_builtin("power:p=6,a=1")
    q, N = 1.2, 3
    s = np.geomspace(0.1, 3, 20)
    fq = make_builtin("power:p=6")
    k = 2 * N - 4 * q
    w_star = np.array([fq.log_F_inv(2 * math.log(si) - math.log(k)) for si in s])
    v = [f.log_F_inv(fq.log_F(w)) for w in w_star]
    assert np.allclose(v, exact_singular_limit(f, N, q, s), atol=1e-9)


def test_tau_increasing():
    f = make_builtin("exppow:p=2")
    fq = make_builtin("exp")
    sig = np.linspace(-2, 4, 25)
    tau = [fq.log_F_inv(f.log_F(x)) for x in sig]
    assert np.all(np.diff(tau) > 0)


def test_transform_accepts_singular_solution():
    f = make_builtin("exp")
    sol = construct_singular(f, 3)
    v = similarity_rescale(f, sol, 2.0)
    assert np.all(np.isfinite(v.u))
