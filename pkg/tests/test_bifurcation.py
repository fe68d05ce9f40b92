import math
import pickle

import numpy as np
import pytest

from supercrit.errors import ConstraintError, PreconditionError
from supercrit.bifurcation import (
    BifurcationOptions,
    ExtendedNonlinearity,
    count_crossings,
    extend_nonlinearity,
    find_turning_points,
    is_increasing,
    mu_of_rho,
    mu_star,
    sweep_curve,
)
from supercrit.nonlinearity import make_builtin
from supercrit.radial_ode import shoot_regular

EXP = make_builtin("exp")
GRID = np.geomspace(1e-2, 1e3, 200)


@pytest.fixture(scope="module")
def exp3_curve():
    return sweep_curve(EXP, 3, GRID)


@pytest.mark.parametrize("spec,delta", [("exp", 1.0), ("power:p=5,a=1", 1.0), ("exppow:p=2", 1.0)])
def test_extension_delta(spec, delta):
    g = extend_nonlinearity(make_builtin(spec))
    assert g.delta == pytest.approx(delta)
    assert g.f(-5.0) == pytest.approx(delta / 2)


def test_extension_rejects_zero_at_origin():
    with pytest.raises(PreconditionError):
        extend_nonlinearity(make_builtin("power:p=5"))


@pytest.mark.parametrize("spec", ["exp", "power:p=5,a=1", "power:p=7,a=1", "exppow:p=2"])
def test_extension_is_c1_and_monotone(spec):
    g = extend_nonlinearity(make_builtin(spec))
    u = np.linspace(-1.5, 0.5, 2001)
    L = np.array([g.log_f(x) for x in u])
    assert np.all(np.diff(L) >= -1e-15)
    h = 1e-7
    for x in (-1.0, 0.0):
        left = (g.log_f(x) - g.log_f(x - h)) / h
        right = (g.log_f(x + h) - g.log_f(x)) / h
        assert left == pytest.approx(right, abs=1e-5)


def test_extension_is_inert_before_the_zero():
    base = make_builtin("power:p=5,a=1")
    u = shoot_regular(base, 3, 2.0, r_max=10, stop_at_zero=True)
    v = shoot_regular(extend_nonlinearity(base), 3, 2.0, r_max=10, stop_at_zero=True)
    assert v.first_zero == pytest.approx(u.first_zero, rel=1e-12)


def test_extension_shape_does_not_change_mu():
    a = ExtendedNonlinearity(EXP, 1.0)
    b = ExtendedNonlinearity(EXP, 0.25)
    assert mu_of_rho(a, 3, 1.0)[0] == pytest.approx(mu_of_rho(b, 3, 1.0)[0], rel=1e-10)


def test_extension_pickles():
    g = extend_nonlinearity(make_builtin("power:p=7,a=1"))
    assert pickle.loads(pickle.dumps(g)) == g


def test_small_rho_linearisation():
    # u ~ rho - r^2 / 6 for f(0) = 1, N = 3
    assert mu_of_rho(EXP, 3, 1e-4)[0] / 1e-4 == pytest.approx(6.0, rel=1e-2)
    assert mu_of_rho(EXP, 3, 1e-4)[0] < 1e-2 * mu_of_rho(EXP, 3, 1.0)[0]


def test_mu_continuous():
    m = [mu_of_rho(EXP, 3, 1.0 + h)[0] for h in (0.0, 1e-3, 1e-5)]
    assert abs(m[1] - m[0]) > abs(m[2] - m[0]) and abs(m[2] - m[0]) < 1e-4


def test_mu_rejects_nonpositive_rho():
    with pytest.raises(ConstraintError):
        mu_of_rho(EXP, 3, 0.0)


@pytest.mark.parametrize("N,expected,tol", [(3, 2.0, 1e-8), (9, 14.0, 1e-6), (10, 16.0, 1e-6)])
def test_mu_star_exp(N, expected, tol):
    assert mu_star(EXP, N) == pytest.approx(expected, abs=tol)


def test_mu_star_shifted_power_stable():
    f = make_builtin("power:p=6,a=1")
    a, b = mu_star(f, 3, tol=1e-9), mu_star(f, 3, tol=5e-10)
    assert a > 0 and abs(a - b) <= 1e-4


def test_gelfand_oscillation(exp3_curve):
    c = exp3_curve
    assert c.mu_star == pytest.approx(2.0, abs=1e-6)
    assert len(c.turning_points) >= 2 and c.crossings_of_mu_star >= 3
    assert c.classification == "Oscillatory-consistent"
    assert np.all(c.mu > 0) and not c.failures


def test_sign_change_between_turning_points(exp3_curve):
    c = exp3_curve
    tp = c.turning_points
    for a, b in zip(tp[:-1], tp[1:]):
        seg = [mu_of_rho(EXP, 3, x)[0] - 2.0 for x in np.linspace(a, b, 9)]
        assert min(seg) < 0 < max(seg)


def test_turning_points_persist_under_refinement(exp3_curve):
    fine = sweep_curve(EXP, 3, np.geomspace(1, 30, 4 * 60))
    coarse = [x for x in exp3_curve.turning_points if 1 <= x <= 30]
    assert len(fine.turning_points) == len(coarse)
    assert np.allclose(fine.turning_points, coarse, rtol=1e-2)


def test_exp_n10_monotone():
    c = sweep_curve(EXP, 10, GRID)
    assert c.classification == "Monotone-consistent" and not c.turning_points
    assert np.interp(30, c.rho, c.mu) == pytest.approx(16.0, rel=2e-2)
    assert np.all(c.mu <= 16.0 + 1e-6)


def test_shifted_power_monotone():
    c = sweep_curve(make_builtin("power:p=7,a=1"), 11, GRID)
    assert c.classification == "Monotone-consistent"


def test_parallel_matches_serial():
    grid = np.geomspace(0.1, 10, 12)
    a = sweep_curve(EXP, 3, grid, BifurcationOptions(jobs=1, compute_mu_star=False))
    b = sweep_curve(EXP, 3, grid, BifurcationOptions(jobs=3, compute_mu_star=False))
    assert a.write_csv() == b.write_csv()


def test_csv_and_json(exp3_curve, tmp_path):
    text = exp3_curve.write_csv(tmp_path / "b.csv")
    assert text.splitlines()[0] == "rho,mu,dmu_drho"
    assert len(text.splitlines()) == len(GRID) + 1
    assert set(exp3_curve.summary()) == {"mu_star", "turning_points", "crossings", "classification"}


def test_bad_grid():
    with pytest.raises(ConstraintError):
        sweep_curve(EXP, 3, [1.0, 0.5, 2.0])


def test_helpers():
    mu = [1.0, 2.0, 3.0, 2.5, 2.0, 2.6, 2.7]
    tps = find_turning_points(np.arange(7.0), mu)
    assert [j for j, _ in tps] == [2, 4] and [m for _, m in tps] == [True, False]
    assert count_crossings(mu, 2.2) == 3
    assert is_increasing([1.0, 2.0, 2.0 + 1e-12, 3.0])
    assert not is_increasing([1.0, 2.0, 1.5])
