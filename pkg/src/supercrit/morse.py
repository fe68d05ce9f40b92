"""Morse-index diagnostics for the singular solution.

Two independent indicators are compared against the Hardy constant
(N-2)^2/4:

* c* = lim r^2 f'(u*(r)) as r -> 0.  With F(u*) = r^2 (1+x)/k one has
  r^2 f'(u*) = k F f'(u*) / (1+x), which is evaluated without cancellation
  and tends to qk = 2q(N-2q).
* zero counts of the linearised equation psi'' + (N-1)/r psi' + f'(u*) psi = 0
  integrated inward from r_0*.  Near r = 0 it is an Euler equation whose
  solutions oscillate iff c* > (N-2)^2/4, with ln(10) sqrt(c* - hardy) / pi
  zeros per decade of r.

Both give "consistent-with" verdicts, not an exact index.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, PreconditionError
from .integrate import integrate
from .nonlinearity import Nonlinearity, classify
from .singular import SingularOptions, SingularSolution, construct_singular

__all__ = [
    "MorseReport",
    "EPS_LADDER",
    "potential",
    "linearized_zero_count",
    "linearized_zero_counts",
    "morse_regime_check",
]

EPS_LADDER = (1e-2, 1e-3, 1e-4, 1e-5)
VERDICT_TOL = 1e-3  # relative to the Hardy constant

INFINITE = "InfiniteIndexConsistent"
FINITE = "FiniteIndexConsistent"
BORDERLINE = "BorderlineInconclusive"


def potential(sing: SingularSolution, t: float) -> float:
    """r^2 f'(u*(r)) at r = e^t."""
    f = sing.f
    if sing.outer is None or t <= math.log(sing.r_switch):
        t = max(t, sing.t[0])
        x, _, u, J = sing._inner(t)
        return sing.k * f.dlog_f(u) * J / (1.0 + x)
    u = sing.outer(math.exp(t))
    if not f.in_domain(u):
        return 0.0
    return math.exp(2.0 * t + f.log_f(u)) * f.dlog_f(u)


def _integrate_linearized(sing: SingularSolution, eps: float, tol: float, h_max: float):
    """psi and r psi' on log-radius nodes from r_0* down to eps."""
    r0 = sing.r0_star
    if r0 is None:
        raise PreconditionError("the singular solution has no first zero r_0*")
    if not 0 < eps < r0 / 2:
        raise PreconditionError(f"eps must lie in (0, r_0*/2) = (0, {r0 / 2:.6g})")
    t_lo = math.log(eps)
    if t_lo < sing.t[0]:
        raise PreconditionError(f"eps = {eps:g} is below the inner end e^{sing.t[0]:.4g} of u*")
    N = sing.N

    def rhs(t, y):
        psi, P = y
        return (P, -(N - 2) * P - potential(sing, t) * psi)

    t0 = math.log(r0)
    ts, ys, _, status = integrate(rhs, t0, (0.0, -r0), t_lo, rtol=tol, atol=tol * 1e-3, h_max=h_max)
    if status != "done":
        raise NumericalError(f"linearized integration stopped at r = {math.exp(ts[-1]):.6g} ({status})")
    return np.exp(np.array(ts)), np.array(ys)[:, 0]


def _count_sign_changes(r, psi, eps):
    keep = r >= eps * (1 - 1e-12)
    s = np.sign(psi[keep][1:])  # the start r_0* is a zero by construction
    s = s[s != 0]
    return int(np.sum(s[1:] != s[:-1]))


def linearized_zero_counts(f: Nonlinearity, sing: SingularSolution, eps_list=EPS_LADDER, *,
                           tol: float = 1e-10, h_max: float = 0.05):
    """[(eps, zeros of psi in (eps, r_0*))] from one inward integration to min(eps_list)."""
    r, psi = _integrate_linearized(sing, min(eps_list), tol, h_max)
    return [(float(e), _count_sign_changes(r, psi, e)) for e in eps_list]


def linearized_zero_count(f: Nonlinearity, sing: SingularSolution, eps: float, *,
                          tol: float = 1e-10, h_max: float = 0.05) -> int:
    """Interior zeros of psi on (eps, r_0*) with psi(r_0*) = 0, psi'(r_0*) = -1."""
    return linearized_zero_counts(f, sing, (eps,), tol=tol, h_max=h_max)[0][1]


@dataclass
class MorseReport:
    f_id: str
    N: int
    q: float
    c_star: float
    c_star_identity: float
    hardy: float
    zero_counts: list
    verdict: str
    regime: str
    consistent_with_exponents: bool
    predicted_per_decade: float | None
    c_star_samples: list = field(default_factory=list)

    def to_dict(self):
        d = dict(self.__dict__)
        d["zero_counts"] = [[float(e), int(c)] for e, c in self.zero_counts]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _verdict(c_star, hardy, rel_tol):
    band = rel_tol * hardy
    if c_star > hardy + band:
        return INFINITE
    if c_star < hardy - band:
        return FINITE
    return BORDERLINE


def morse_regime_check(f: Nonlinearity, N: int, *, eps_list=EPS_LADDER, rel_tol: float = VERDICT_TOL,
                       opts: SingularOptions | None = None) -> MorseReport:
    """c*, Hardy comparison and zero counts for the singular solution of f."""
    rep = classify(f, N)
    sing = construct_singular(f, N, q=rep.q, opts=opts or SingularOptions(switch_on_box_exit=True))
    # the inner end is where theta is smallest; the first few nodes show the trend
    ts = sing.t[:5]
    samples = [potential(sing, t) for t in ts]
    c_star = samples[0]
    hardy = (N - 2) ** 2 / 4.0
    verdict = _verdict(c_star, hardy, rel_tol)
    counts = linearized_zero_counts(f, sing, eps_list)
    if verdict == BORDERLINE:
        consistent = True
    else:
        consistent = (verdict == INFINITE) == (rep.regime == "Oscillatory")
    per_decade = math.log(10) * math.sqrt(c_star - hardy) / math.pi if c_star > hardy else None
    return MorseReport(f_id=f.spec, N=int(N), q=rep.q, c_star=c_star,
                       c_star_identity=2 * rep.q * (N - 2 * rep.q), hardy=hardy, zero_counts=counts,
                       verdict=verdict, regime=rep.regime, consistent_with_exponents=consistent,
                       predicted_per_decade=per_decade,
                       c_star_samples=[[float(t), float(v)] for t, v in zip(ts, samples)])
