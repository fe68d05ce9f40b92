"""The bifurcation diagram mu(rho) = r_0(rho)^2 of the Dirichlet problem on the ball.

A radial solution u(r, rho) with first zero r_0 rescales to a solution of
Delta U + mu f(U) = 0 on the unit ball with mu = r_0^2.  The singular
solution gives the limiting value mu* = (r_0*)^2.

Only the part of f on [0, inf) influences mu(rho): the trajectory is stopped
at its first zero.  ``extend_nonlinearity`` still provides a C^1 positive
continuation below zero so that f is defined on the whole line.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintError, NumericalError, PreconditionError, SupercritError
from .nonlinearity import Nonlinearity
from .radial_ode import DEFAULT_TOL, shoot_regular
from .singular import SingularOptions, construct_singular

__all__ = [
    "ExtendedNonlinearity",
    "extend_nonlinearity",
    "mu_of_rho",
    "mu_star",
    "BifurcationOptions",
    "BifurcationCurve",
    "sweep_curve",
    "find_turning_points",
    "count_crossings",
    "is_increasing",
]

_SAMPLE_HI = 50.0
H_MAX_ZERO = 0.1


def _hermite_unit(x, m):
    """Increasing h on [0, 1] with h(0) = 0, h'(0) = 0, h(1) = 1, h'(1) = m.

    The cubic is monotone for m <= 3; beyond that x**m is used, which is
    still C^1 at both ends.
    """
    if m <= 3.0:
        return x * x * (3.0 - 2.0 * x) + m * x * x * (x - 1.0), x * (6.0 - 6.0 * x) + m * x * (3.0 * x - 2.0), \
            6.0 - 12.0 * x + m * (6.0 * x - 2.0)
    return x ** m, m * x ** (m - 1.0), m * (m - 1.0) * x ** (m - 2.0)


class ExtendedNonlinearity(Nonlinearity):
    """f on [0, inf) continued to the whole line.

    On [-1, 0] log f is blended monotonically from log(delta/2) to log f(0)
    with matching slope at 0; below -1 f is the constant delta/2.
    """

    kind = "extended"
    domain_class = "F12"
    u_lo = -math.inf

    def __init__(self, base: Nonlinearity, delta: float):
        self.base = base
        self.delta = float(delta)
        self.params = {}
        self.q_analytic = base.q_analytic
        self.u_c2_floor = max(base.u_c2_floor, 0.0)
        self.breakpoints = tuple(sorted({-1.0, 0.0, *[b for b in base.breakpoints if b > 0]}))
        self._L0 = base.log_f(0.0)
        self._Lm = math.log(self.delta / 2.0)
        self._gap = self._L0 - self._Lm
        self._m = base.dlog_f(0.0) / self._gap

    @property
    def spec(self):
        return self.base.spec

    def __repr__(self):
        return f"ExtendedNonlinearity({self.base.spec!r}, delta={self.delta!r})"

    def __eq__(self, other):
        return isinstance(other, ExtendedNonlinearity) and other.base == self.base and other.delta == self.delta

    def __hash__(self):
        return hash((self.base.spec, self.delta))

    def __reduce__(self):
        return (ExtendedNonlinearity, (self.base, self.delta))

    def record(self):
        return {"base": self.base.spec, "delta": self.delta,
                "shape": "log-space C1 monotone blend on [-1, 0], constant delta/2 below -1"}

    def _blend(self, u):
        h, dh, d2h = _hermite_unit(u + 1.0, self._m)
        return self._Lm + self._gap * h, self._gap * dh, self._gap * d2h

    def log_f(self, u):
        if u >= 0.0:
            return self.base.log_f(u)
        if u <= -1.0:
            return self._Lm
        return self._blend(u)[0]

    def dlog_f(self, u):
        if u >= 0.0:
            return self.base.dlog_f(u)
        if u <= -1.0:
            return 0.0
        return self._blend(u)[1]

    def d2log_f(self, u):
        if u >= 0.0:
            return self.base.d2log_f(u)
        if u <= -1.0:
            return 0.0
        return self._blend(u)[2]

    def delta_log_f(self, u, s):
        s = np.asarray(s, dtype=float)
        if u >= 0.0:
            return self.base.delta_log_f(u, s)
        lu = self.log_f(u)
        return np.array([self.log_f(u + si) - lu for si in np.atleast_1d(s)]).reshape(s.shape)

    def J(self, u):
        if u >= 0.0:
            return self.base.J(u)
        return self._numeric_J(u)

    def log_F(self, u):
        if u >= 0.0:
            return self.base.log_F(u)
        return super().log_F(u)

    def phi(self, u):
        if u >= 0.0:
            return self.base.phi(u)
        return super().phi(u)

    def log_F_inv(self, logw):
        if logw <= self.base.log_F(0.0):
            return self.base.log_F_inv(logw)
        return super().log_F_inv(logw)


def extend_nonlinearity(f: Nonlinearity, u_hi: float = _SAMPLE_HI) -> ExtendedNonlinearity:
    """Continue f below zero; requires f > 0 on [0, inf).

    delta is the infimum of f over a sample grid of [0, u_hi].
    """
    if isinstance(f, ExtendedNonlinearity):
        return f
    if not f.in_domain(0.0) or f.f(0.0) <= 0.0:
        raise PreconditionError(f"f(0) must be positive to extend {f.spec} below zero")
    grid = np.concatenate([[0.0], np.geomspace(1e-6, u_hi, 200)])
    log_vals = np.array([f.log_f(u) for u in grid])
    if not np.all(np.isfinite(log_vals) | (log_vals == math.inf)):
        raise PreconditionError(f"f is not positive on [0, {u_hi}] for {f.spec}")
    delta = math.exp(float(np.min(log_vals)))
    if not delta > 0:
        raise PreconditionError(f"f has no positive lower bound on [0, {u_hi}] for {f.spec}")
    return ExtendedNonlinearity(f, delta)


def mu_of_rho(f: Nonlinearity, N: int, rho: float, *, r_max: float = 1e3,
              tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """(mu, r_0) with r_0 the first zero of u(., rho)."""
    if not rho > 0:
        raise ConstraintError(f"rho must be positive, got {rho}")
    g = extend_nonlinearity(f)
    # only the zero is used, so the dense-output step cap is not needed
    sol = shoot_regular(g, N, rho, r_max=r_max, tol=tol, stop_at_zero=True, h_max=H_MAX_ZERO)
    if sol.first_zero is None:
        raise NumericalError(f"no zero of u(., {rho}) before r = {sol.r_end:.6g} ({sol.termination})")
    return sol.first_zero ** 2, sol.first_zero


def mu_star(f: Nonlinearity, N: int, *, tol: float = 1e-10,
            opts: SingularOptions | None = None) -> float:
    """(r_0*)^2 from the singular solution.

    The singular solution is built from the unextended f: it is positive up
    to r_0*, where the extension is never used.
    """
    base = f.base if isinstance(f, ExtendedNonlinearity) else f
    opts = opts or SingularOptions(tol=tol, switch_on_box_exit=True)
    sing = construct_singular(base, N, opts=opts)
    if sing.r0_star is None:
        raise NumericalError(f"singular solution of {base.spec} has no zero before r = {sing.r_end:.6g}")
    return sing.r0_star ** 2


@dataclass(frozen=True)
class BifurcationOptions:
    tol: float = DEFAULT_TOL
    r_max: float = 1e3
    jobs: int = 1
    refine_steps: int = 3
    # relative changes of mu below noise_factor * tol are treated as flat
    noise_factor: float = 100.0
    compute_mu_star: bool = True


@dataclass
class BifurcationCurve:
    f_id: str
    N: int
    extension_record: dict
    rho: np.ndarray
    mu: np.ndarray
    dmu_drho: np.ndarray
    mu_star: float | None = None
    turning_points: list = field(default_factory=list)
    crossings_of_mu_star: int = 0
    classification: str = "Inconclusive"
    failures: list = field(default_factory=list)
    tol: float = DEFAULT_TOL

    def summary(self):
        return {"mu_star": self.mu_star, "turning_points": [float(x) for x in self.turning_points],
                "crossings": int(self.crossings_of_mu_star), "classification": self.classification}

    def to_json(self):
        return json.dumps(self.summary(), sort_keys=True)

    def write_csv(self, dest=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rho", "mu", "dmu_drho"])
        for row in zip(self.rho, self.mu, self.dmu_drho):
            w.writerow(["%.17g" % v for v in row])
        text = buf.getvalue()
        if dest is not None:
            with open(dest, "w", newline="") as fh:
                fh.write(text)
        return text


def _sample(args):
    f, N, rho, r_max, tol = args
    try:
        return mu_of_rho(f, N, rho, r_max=r_max, tol=tol)[0], None
    except SupercritError as exc:
        return math.nan, f"{type(exc).__name__}: {exc}"


def _map(args, jobs):
    if jobs <= 1 or len(args) < 2:
        return [_sample(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sample, args, chunksize=max(1, len(args) // (4 * jobs))))


def _flat(a, b, noise):
    return abs(b - a) <= noise * max(abs(a), abs(b), 1e-300)


def find_turning_points(rho, mu, noise=1e-7):
    """Indices i where mu has a strict local extremum over its neighbours.

    Differences below the noise floor are dropped before comparing signs.
    """
    idx = [i for i in range(len(mu)) if math.isfinite(mu[i])]
    out = []
    prev_sign, prev_i = 0, None
    for a, b in zip(idx[:-1], idx[1:]):
        if _flat(mu[a], mu[b], noise):
            continue
        s = 1 if mu[b] > mu[a] else -1
        if prev_sign and s != prev_sign:
            # extremum at the sample after the last rise (or fall)
            seg = idx[idx.index(prev_i):idx.index(b) + 1]
            vals = [mu[j] for j in seg]
            j = seg[int(np.argmax(vals) if prev_sign > 0 else np.argmin(vals))]
            out.append((j, prev_sign > 0))
        prev_sign, prev_i = s, a
    return out


def count_crossings(mu, mu_star, noise=1e-7):
    """Sign changes of mu - mu*, ignoring samples within the noise band."""
    signs = [1 if m > mu_star else -1 for m in mu
             if math.isfinite(m) and not _flat(m, mu_star, noise)]
    return sum(1 for a, b in zip(signs[:-1], signs[1:]) if a != b)


def is_increasing(mu, noise=1e-7):
    """True when every resolved step of mu rises and none falls beyond the floor."""
    m = np.asarray(mu, dtype=float)
    m = m[np.isfinite(m)]
    if len(m) < 2:
        return False
    d = np.diff(m)
    resolved = np.abs(d) > noise * np.maximum(np.abs(m[1:]), np.abs(m[:-1]))
    return bool(np.any(resolved) and np.all(d[resolved] > 0))


def _refine_turning(f, N, rho, j, is_max, opts):
    """Shrink a 3-point log bracket around the extremum 4x per step."""
    lo, hi = math.log(rho[max(j - 1, 0)]), math.log(rho[min(j + 1, len(rho) - 1)])
    best = math.log(rho[j])
    for _ in range(opts.refine_steps):
        xs = np.linspace(lo, hi, 5)
        vals = [_sample((f, N, math.exp(x), opts.r_max, opts.tol))[0] for x in xs]
        vals = np.array([(v if is_max else -v) if math.isfinite(v) else -math.inf for v in vals])
        k = int(np.argmax(vals))
        best = xs[k]
        width = (hi - lo) / 4.0
        lo, hi = best - width / 2, best + width / 2
    return math.exp(best)


def sweep_curve(f: Nonlinearity, N: int, rho_grid, opts: BifurcationOptions | None = None) -> BifurcationCurve:
    """mu(rho) on a grid with mu*, turning points, crossings and a classification."""
    opts = opts or BifurcationOptions()
    rho = np.asarray(rho_grid, dtype=float)
    if rho.ndim != 1 or len(rho) < 3 or np.any(rho <= 0) or np.any(np.diff(rho) <= 0):
        raise ConstraintError("rho grid must be increasing, positive and hold at least 3 points")
    g = extend_nonlinearity(f)
    results = _map([(g, N, float(x), opts.r_max, opts.tol) for x in rho], opts.jobs)
    mu = np.array([m for m, _ in results])
    failures = [(float(x), err) for x, (_, err) in zip(rho, results) if err is not None]
    ok = np.isfinite(mu)
    dmu = np.full_like(mu, math.nan)
    if ok.sum() >= 2:
        dmu[ok] = np.gradient(mu[ok], rho[ok])

    ms = None
    if opts.compute_mu_star:
        try:
            ms = mu_star(f, N)
        except SupercritError as exc:
            failures.append(("mu_star", f"{type(exc).__name__}: {exc}"))

    noise = opts.noise_factor * opts.tol
    turns = [_refine_turning(g, N, rho, j, is_max, opts)
             for j, is_max in find_turning_points(rho, mu, noise)]
    crossings = count_crossings(mu, ms, noise) if ms is not None else 0
    if len(turns) >= 2 and crossings >= 1:
        label = "Oscillatory-consistent"
    elif not turns and is_increasing(mu, noise):
        label = "Monotone-consistent"
    else:
        label = "Inconclusive"
    return BifurcationCurve(f_id=f.spec, N=int(N), extension_record=g.record(), rho=rho, mu=mu,
                            dmu_drho=dmu, mu_star=ms, turning_points=turns,
                            crossings_of_mu_star=crossings, classification=label,
                            failures=failures, tol=opts.tol)
