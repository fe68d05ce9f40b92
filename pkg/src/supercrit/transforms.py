"""Pointwise value maps between radial profiles.

Both transformations act on values only, u -> G(u) with G strictly
increasing, so they preserve the sign of u_0 - u_1 and hence intersection
counts.  Derivatives are carried by the chain rule; nothing is re-integrated.

similarity      v(s) = F^{-1}[lam^{-2} F(u(lam s))]
Cole-Hopf       w(s) = F_q^{-1}[F(v(s))]

Every map is written with log F and log f so that nothing overflows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintError
from .nonlinearity import Nonlinearity, Power, make_reference
from .radial_ode import RadialSolution, residual_norm, shoot_limit

__all__ = [
    "similarity_rescale",
    "cole_hopf_forward",
    "cole_hopf_inverse",
    "ColeHopfReport",
    "verify_cole_hopf",
]


def _as_radial(sol):
    if isinstance(sol, RadialSolution):
        return sol
    to_radial = getattr(sol, "as_radial", None)
    if to_radial is None:
        raise ConstraintError(f"cannot transform a {type(sol).__name__}")
    return to_radial()


def _power_pair(src, dst, u, shift):
    """Closed form of dst.F^{-1}[exp(shift) src.F(u)] for two (shifted) powers.

    (v + a') = c (u + a)^e with e = (p-1)/(p'-1); exact when e = 1 and shift = 0.
    """
    p, a, pp, aa = src.p, src.a, dst.p, dst.a
    e = (p - 1.0) / (pp - 1.0)
    log_c = (math.log((p - 1.0) / (pp - 1.0)) - shift) / (pp - 1.0)
    base = u + a
    if e == 1.0:
        return (base if log_c == 0.0 else base * math.exp(log_c)) - aa
    return math.exp(log_c + e * math.log(base)) - aa


def _inverse_image(src, dst, u, shift):
    if type(src) is Power and type(dst) is Power:
        return _power_pair(src, dst, u, shift)
    return dst.log_F_inv(src.log_F(u) + shift)


def _value_map(src: Nonlinearity, dst: Nonlinearity, u, du, shift=0.0):
    """v = dst.F^{-1}[exp(shift) src.F(u)] with dv = dst.f(v)/src.f(u) * du * exp(shift)."""
    v = np.empty_like(u)
    dv = np.empty_like(du)
    for i, (ui, dui) in enumerate(zip(u, du)):
        if math.isinf(ui):
            v[i], dv[i] = ui, dui
            continue
        vi = _inverse_image(src, dst, ui, shift)
        v[i] = vi
        dv[i] = math.exp(dst.log_f(vi) - src.log_f(ui) + shift) * dui if dui != 0.0 else 0.0
    return v, dv


def _center(src, dst, value, shift=0.0):
    if math.isinf(value):
        return value
    return _inverse_image(src, dst, value, shift)


def similarity_rescale(f: Nonlinearity, sol, lam: float) -> RadialSolution:
    """v(s) = F^{-1}[lam^{-2} F(u(lam s))] on the grid s_i = r_i / lam."""
    if not lam > 0:
        raise ConstraintError("lambda must be positive")
    sol = _as_radial(sol)
    shift = -2.0 * math.log(lam)
    v, dv = _value_map(f, f, sol.u, sol.du, shift)
    # chain rule: d/ds = lam d/dr, and the value map contributes f(v)/f(u) lam^{-2}
    dv = dv * lam
    return RadialSolution(equation="Limit", N=sol.N, f=f, center_value=_center(f, f, sol.center_value, shift),
                          r=sol.r / lam, u=v, du=dv, q=sol.q if sol.q is not None else f.q_analytic,
                          first_zero=None if sol.first_zero is None else sol.first_zero / lam,
                          termination=sol.termination, tol=sol.tol, meta={"lambda": lam})


def cole_hopf_forward(f: Nonlinearity, q: float, sol) -> RadialSolution:
    """w = F_q^{-1}[F(v)]; the result solves the equation with the reference f_q."""
    sol = _as_radial(sol)
    fq = make_reference(q)
    w, dw = _value_map(f, fq, sol.u, sol.du)
    return RadialSolution(equation="Original", N=sol.N, f=fq, center_value=_center(f, fq, sol.center_value),
                          r=sol.r.copy(), u=w, du=dw, q=q, first_zero=None,
                          termination=sol.termination, tol=sol.tol)


def cole_hopf_inverse(f: Nonlinearity, q: float, sol) -> RadialSolution:
    """v = F^{-1}[F_q(w)]."""
    sol = _as_radial(sol)
    fq = make_reference(q)
    v, dv = _value_map(fq, f, sol.u, sol.du)
    return RadialSolution(equation="Limit", N=sol.N, f=f, center_value=_center(fq, f, sol.center_value),
                          r=sol.r.copy(), u=v, du=dv, q=q, first_zero=None,
                          termination=sol.termination, tol=sol.tol)


@dataclass
class ColeHopfReport:
    residual: float
    tau: float
    w0: float
    tau_gap: float
    s_end: float

    def to_dict(self):
        return dict(self.__dict__)


def verify_cole_hopf(f: Nonlinearity, N: int, q: float, sigma: float, *, s_max: float = 10.0,
                     tol: float = 1e-9) -> ColeHopfReport:
    """Shoot the limit problem, map it by Cole-Hopf and measure the residual of
    w'' + (N-1)/s w' + f_q(w) = 0 together with the gap w(0) - F_q^{-1}[F(sigma)]."""
    v = shoot_limit(f, N, q, sigma, s_max=s_max, tol=tol, stop_at_zero=False)
    w = cole_hopf_forward(f, q, v)
    fq = w.f
    tau = _center(f, fq, sigma)
    return ColeHopfReport(residual=residual_norm(fq, w), tau=tau, w0=float(w.u[0]),
                          tau_gap=abs(float(w.u[0]) - tau), s_end=float(w.r[-1]))
