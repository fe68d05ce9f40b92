"""Counting intersections of radial profiles and the comparison bound.

A *profile* is anything evaluable on an interval of radii: a RadialSolution,
a SingularSolution or a plain function wrapped in FunctionProfile.  Crossings
are sign changes of the difference on the merged node grid (plus midpoints),
refined by bisection; contacts without a sign change are reported separately.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintError, PreconditionError
from .nonlinearity import Nonlinearity, critical_exponents, make_reference
from .radial_ode import RadialSolution, shoot_regular
from .singular import SingularSolution, eval_singular
from .transforms import cole_hopf_forward

__all__ = [
    "FunctionProfile",
    "IntersectionReport",
    "count_intersections",
    "ComparisonReport",
    "comparison_bound_check",
    "S_MAX",
]

S_MAX = 1e4
NEAR_TOL = 1e-8
REL_TOL = 1e-10


@dataclass
class FunctionProfile:
    """A profile given by a vectorised callable on (lo, hi)."""

    fn: object
    lo: float = 0.0
    hi: float = math.inf
    singular: bool = False
    per_decade: int = 64

    def __call__(self, r):
        return np.asarray(self.fn(np.asarray(r, dtype=float)), dtype=float)

    def nodes(self, a, b):
        a = max(a, self.lo)
        start = a if a > 0 else 1e-8 * max(b, 1.0)
        n = max(16, int(self.per_decade * math.log10(b / start)) + 1)
        pts = np.unique(np.concatenate([[a], np.geomspace(start, b, n), np.linspace(a, b, 64)]))
        # a singular profile is not evaluable at the origin
        return pts[pts > 0] if self.singular else pts


class _Adapter:
    """Uniform view: value(r), nodes in [a, b], domain and singular flag."""

    def __init__(self, p):
        self.p = p
        if isinstance(p, RadialSolution):
            self.lo, self.hi = float(p.r[0]), float(p.r[-1])
            self.singular = math.isinf(p.center_value)
        elif isinstance(p, SingularSolution):
            self.lo, self.hi = math.exp(p.t[0]), p.r_end
            self.singular = True
        elif isinstance(p, FunctionProfile):
            self.lo, self.hi = p.lo, p.hi
            self.singular = p.singular
        else:
            raise ConstraintError(f"not a profile: {type(p).__name__}")

    def value(self, r):
        p = self.p
        if isinstance(p, SingularSolution):
            return np.asarray(eval_singular(p, r)[0], dtype=float)
        return np.asarray(p(r), dtype=float)

    def nodes(self, a, b):
        p = self.p
        if isinstance(p, RadialSolution):
            r = p.r
        elif isinstance(p, SingularSolution):
            r = np.exp(p.t)
            if p.outer is not None:
                r = np.concatenate([r, p.outer.r])
        else:
            return p.nodes(a, b)
        return r[(r >= a) & (r <= b)]


@dataclass
class IntersectionReport:
    interval: tuple
    count: int
    zeros: list
    near_tangencies: list = field(default_factory=list)
    truncated: bool = False
    residuals: list = field(default_factory=list)
    clipped_at: float | None = None
    min_gap: float = math.nan  # min |difference| over the grid, away from the zeros

    def to_dict(self):
        return {"interval": [float(self.interval[0]), float(self.interval[1])],
                "count": int(self.count), "zeros": [float(z) for z in self.zeros],
                "near_tangencies": [float(z) for z in self.near_tangencies],
                "truncated": bool(self.truncated)}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _clip_radius(sing, reg, a, b):
    """Radius below which the singular profile sits well above the regular one."""
    center = float(reg.value(max(reg.lo, a)))
    threshold = center + max(abs(center), 1.0)
    r = sing.nodes(max(a, sing.lo), b)
    if len(r) == 0:
        return a
    vals = sing.value(r)
    above = vals >= threshold
    if not above[0]:
        return max(a, sing.lo)
    # first node where u* has come down below the threshold
    idx = np.argmin(above)
    if above[idx]:
        return b
    return float(r[idx - 1]) if idx > 0 else max(a, sing.lo)


def count_intersections(a, b, interval=(0.0, math.inf), *, s_max: float = S_MAX,
                        near_tol: float = NEAR_TOL, rel_tol: float = REL_TOL) -> IntersectionReport:
    """Z_I[a - b]: transversal crossings of two profiles on the open interval I."""
    A, B = _Adapter(a), _Adapter(b)
    lo_req, hi_req = float(interval[0]), float(interval[1])
    if not hi_req > lo_req:
        raise ConstraintError("empty interval")
    hi_cap = min(hi_req, s_max)
    lo = max(lo_req, A.lo, B.lo)
    hi = min(hi_cap, A.hi, B.hi)
    truncated = hi < hi_req * (1 - 1e-12)
    clipped = None
    if A.singular != B.singular:
        sing, reg = (A, B) if A.singular else (B, A)
        c = _clip_radius(sing, reg, lo, hi)
        if c > lo:
            lo = clipped = c
    if not hi > lo:
        return IntersectionReport(interval=(lo_req, hi_req), count=0, zeros=[], truncated=truncated,
                                  clipped_at=clipped)

    grid = np.unique(np.concatenate([[lo, hi], A.nodes(lo, hi), B.nodes(lo, hi)]))
    grid = grid[(grid >= lo) & (grid <= hi)]
    if (A.singular or B.singular) and grid[0] <= 0:
        grid = grid[1:]
        lo = float(grid[0])
    mids = 0.5 * (grid[1:] + grid[:-1])
    grid = np.sort(np.concatenate([grid, mids]))

    def diff(r):
        return A.value(r) - B.value(r)

    d = diff(grid)
    scale = np.maximum(1.0, np.abs(A.value(grid)))
    sgn = np.sign(d)
    # carry the last nonzero sign through exact zeros
    last = 0.0
    for i in range(len(sgn)):
        if sgn[i] == 0:
            sgn[i] = last
        else:
            last = sgn[i]

    zeros, residuals = [], []
    for i in range(len(grid) - 1):
        if sgn[i] != 0 and sgn[i + 1] != 0 and sgn[i] != sgn[i + 1]:
            x0, x1 = grid[i], grid[i + 1]
            s0 = sgn[i]
            while x1 - x0 > rel_tol * max(abs(x1), 1e-300):
                xm = 0.5 * (x0 + x1)
                dm = float(diff(xm))
                if dm == 0.0:
                    x0 = x1 = xm
                    break
                if np.sign(dm) == s0:
                    x0 = xm
                else:
                    x1 = xm
            z = 0.5 * (x0 + x1)
            if lo < z < hi:
                zeros.append(float(z))
                residuals.append(abs(float(diff(z))))

    near = []
    absd = np.abs(d) / scale
    for i in range(1, len(grid) - 1):
        if absd[i] < near_tol and absd[i] <= absd[i - 1] and absd[i] <= absd[i + 1]:
            if sgn[i - 1] == sgn[i + 1] != 0 and d[i] != 0:
                near.append(float(grid[i]))

    mask = np.ones(len(grid), dtype=bool)
    for z in zeros:
        mask &= np.abs(grid - z) > 1e-3 * max(z, 1e-12)
    min_gap = float(np.min(np.abs(d[mask]))) if np.any(mask) else math.nan

    return IntersectionReport(interval=(lo_req, hi_req), count=len(zeros), zeros=zeros,
                              near_tangencies=near, truncated=truncated, residuals=residuals,
                              clipped_at=clipped, min_gap=min_gap)


@dataclass
class ComparisonReport:
    passed: bool
    max_violation: float
    r_at_max: float
    preconditions: dict

    def to_dict(self):
        return dict(self.__dict__)


def _phi_samples(f: Nonlinearity):
    us = [u for u in np.concatenate([[0.0], np.geomspace(1e-3, 1e6, 55)]) if f.in_domain(u)]
    return np.array(us), np.array([f.phi(u) for u in us])


def comparison_bound_check(f: Nonlinearity, N: int, q: float, sigma: float,
                           r_max: float = 1e2, *, tol: float = 1e-9,
                           margin: float = 1e-9) -> ComparisonReport:
    """Check F_q^{-1}[F(u(r, sigma))] <= F_q^{-1}[k^{-1} r^2] along the regular solution."""
    _, q_jl, _, _ = critical_exponents(N)
    us, phis = _phi_samples(f)
    pre = {"q": q, "q_JL": q_jl, "q_le_qJL": bool(q <= q_jl + 1e-12),
           "min_Ff'": float(np.min(phis)), "Ff'_ge_q": bool(np.min(phis) >= q - 1e-12)}
    if not pre["q_le_qJL"]:
        raise PreconditionError(f"q={q} exceeds q_JL={q_jl:.6g} for N={N}")
    if not pre["Ff'_ge_q"]:
        lowest = float(np.min(phis))
        raise PreconditionError(f"F f' drops to {lowest:.6g} < q on the sample grid")
    sol = shoot_regular(f, N, sigma, r_max=r_max, tol=tol)
    w = cole_hopf_forward(f, q, sol)
    fq = make_reference(q)
    k = 2 * N - 4 * q
    r = w.r[1:]
    bound = np.array([fq.log_F_inv(2 * math.log(ri) - math.log(k)) for ri in r])
    viol = w.u[1:] - bound
    i = int(np.argmax(viol))
    return ComparisonReport(passed=bool(viol[i] <= margin), max_violation=float(viol[i]),
                            r_at_max=float(r[i]), preconditions=pre)
