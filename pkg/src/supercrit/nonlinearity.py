"""Nonlinearities f, the tail integral F(u) = int_u^inf dt/f(t), and exponents.

Every family is described through ``L = log f`` and its first two derivatives,
plus a cancellation-free increment ``L(u+s) - L(u)``.  With those, the scaled
tail integral

    J(u) = F(u) f(u) = int_0^inf exp(-(L(u+s) - L(u))) ds

is an integral of a function bounded by one, and F, F^{-1} and F f' are all
available in log-space even where f itself overflows (iterated exponentials,
tetration, exp at large arguments).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, asdict
from functools import cached_property

import numpy as np
from scipy.special import roots_legendre

from .errors import (
    BracketError,
    ConstraintError,
    LimitDetectionError,
    QuadratureError,
    SpecParseError,
)

__all__ = [
    "Nonlinearity",
    "ExponentReport",
    "make_builtin",
    "make_reference",
    "eval_F",
    "eval_F_inv",
    "estimate_q",
    "classify",
    "check_superlinearity",
    "critical_exponents",
]

_INF = math.inf
_GL_HI = roots_legendre(32)
_GL_LO = roots_legendre(16)


def _exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return _INF


def _gauss(fun, a, b, rule):
    x, w = rule
    half = 0.5 * (b - a)
    return half * float(np.dot(w, fun(a + half * (x + 1.0))))


def _adaptive_piece(fun, a, b, scale, depth=0):
    hi = _gauss(fun, a, b, _GL_HI)
    lo = _gauss(fun, a, b, _GL_LO)
    if abs(hi - lo) <= 1e-14 * (scale + abs(hi)) or depth >= 48:
        return hi
    m = 0.5 * (a + b)
    left = _adaptive_piece(fun, a, m, scale, depth + 1)
    return left + _adaptive_piece(fun, m, b, scale + abs(left), depth + 1)


class Nonlinearity:
    """Base class.  Subclasses define the log-space evaluators.

    Instances are immutable and picklable (they carry only their parameters),
    so they can be shipped to worker processes.
    """

    kind = "custom"
    domain_class = "F12"
    u_lo = -_INF
    q_analytic: float | None = None
    u_c2_floor = 1.0
    breakpoints: tuple = ()

    def __init__(self, **params):
        self.params = dict(params)

    def __repr__(self):
        return f"Nonlinearity({self.spec!r})"

    def __eq__(self, other):
        return isinstance(other, Nonlinearity) and self.spec == other.spec

    def __hash__(self):
        return hash(self.spec)

    def __reduce__(self):
        return (make_builtin, (self.spec,))

    @property
    def spec(self):
        if not self.params:
            return self.kind
        body = ",".join(f"{k}={_fmt(v)}" for k, v in self.params.items())
        return f"{self.kind}:{body}"

    # log-space interface -------------------------------------------------
    def log_f(self, u):
        raise NotImplementedError

    def dlog_f(self, u):
        raise NotImplementedError

    def d2log_f(self, u):
        raise NotImplementedError

    def delta_log_f(self, u, s):
        """L(u+s) - L(u) for an array of offsets ``s``."""
        raise NotImplementedError

    # plain evaluators ----------------------------------------------------
    def in_domain(self, u):
        return u > self.u_lo

    def f(self, u):
        return _exp(self.log_f(u)) if self.in_domain(u) else 0.0

    def df(self, u):
        return self.dlog_f(u) * self.f(u)

    def d2f(self, u):
        d1 = self.dlog_f(u)
        return (self.d2log_f(u) + d1 * d1) * self.f(u)

    def q_local(self, u):
        """f'^2 / (f f'') at u, computed without forming f."""
        d1 = self.dlog_f(u)
        return d1 * d1 / (self.d2log_f(u) + d1 * d1)

    # the tail integral ---------------------------------------------------
    def J(self, u):
        """F(u) f(u)."""
        return self._numeric_J(u)

    def log_F(self, u):
        return math.log(self.J(u)) - self.log_f(u)

    def F(self, u):
        return _exp(self.log_F(u))

    def phi(self, u):
        """F(u) f'(u); tends to q as u grows."""
        return self.dlog_f(u) * self.J(u)

    def log_F_inv(self, logw):
        return _invert_log_F(self, logw)

    @cached_property
    def log_F_sup(self):
        """log of sup F, i.e. log F at the lower end of the domain."""
        if math.isinf(self.u_lo):
            return _INF
        return self._log_F_at_lower_end()

    def _log_F_at_lower_end(self):
        return _INF

    def _numeric_J(self, u):
        if not self.in_domain(u):
            raise ConstraintError(f"u={u!r} outside the domain of {self.spec}")
        q_hat = self.q_analytic

        def integrand(s):
            with np.errstate(over="ignore", invalid="ignore"):
                v = np.exp(-self.delta_log_f(u, s))
            return np.nan_to_num(v, nan=0.0)

        start = 0.0
        total = 0.0
        for b in self.breakpoints:
            if b > u:
                total += _adaptive_piece(integrand, start, b - u, total)
                start = b - u
                break
        x0 = u + start
        d1 = self.dlog_f(x0)
        h = 1.0 / d1 if d1 > 0 else 1.0
        h = min(h, max(1.0, abs(u)))
        if not math.isfinite(h) or h <= 0.0:
            raise QuadratureError(f"degenerate length scale at u={u!r} for {self.spec}")
        a, span = start, h
        prev = None
        for _ in range(400):
            b = a + span
            total += _adaptive_piece(integrand, a, b, total)
            end_weight = float(integrand(np.array([b]))[0])
            if end_weight == 0.0:
                return total
            T = u + b
            dT = self.dlog_f(T)
            if dT > 0:
                qT = q_hat if q_hat is not None else self.q_local(T)
                est = total + end_weight * qT / dT
                if prev is not None and abs(est - prev) <= 1e-12 * est:
                    return est
                prev = est
            a, span = b, 2.0 * span
        raise QuadratureError(
            f"tail of F did not settle for {self.spec} at u={u!r}: "
            f"reached T={u + a!r}, last estimate {prev!r}"
        )


def _fmt(v):
    if isinstance(v, int):
        return str(v)
    return repr(float(v)).removesuffix(".0") if float(v).is_integer() else repr(float(v))


# ---------------------------------------------------------------------------
# builtin families


class Power(Nonlinearity):
    """f(u) = (u+a)^p."""

    kind = "power"

    def __init__(self, p, a=0.0):
        if not p > 1:
            raise ConstraintError(f"power needs p > 1, got {p}")
        if not a >= 0:
            raise ConstraintError(f"power needs a >= 0, got {a}")
        super().__init__(p=float(p), a=float(a))
        self.p, self.a = float(p), float(a)
        self.u_lo = -self.a
        self.domain_class = "F11" if self.a == 0 else "F12"
        self.q_analytic = self.p / (self.p - 1.0)

    def log_f(self, u):
        x = u + self.a
        return self.p * math.log(x) if x > 0 else -_INF

    def dlog_f(self, u):
        return self.p / (u + self.a)

    def d2log_f(self, u):
        x = u + self.a
        return -self.p / (x * x)

    def delta_log_f(self, u, s):
        return self.p * np.log1p(np.asarray(s) / (u + self.a))

    def J(self, u):
        return (u + self.a) / (self.p - 1.0)

    def log_F(self, u):
        x = u + self.a
        if x <= 0:
            return _INF
        return (1.0 - self.p) * math.log(x) - math.log(self.p - 1.0)

    def phi(self, u):
        return self.q_analytic

    def log_F_inv(self, logw):
        logx = (logw + math.log(self.p - 1.0)) / (1.0 - self.p)
        return _exp(logx) - self.a


class Exponential(Nonlinearity):
    """f(u) = e^u."""

    kind = "exp"
    q_analytic = 1.0

    def __init__(self):
        super().__init__()

    def log_f(self, u):
        return u

    def dlog_f(self, u):
        return 1.0

    def d2log_f(self, u):
        return 0.0

    def delta_log_f(self, u, s):
        return np.asarray(s, dtype=float)

    def J(self, u):
        return 1.0

    def log_F(self, u):
        return -u

    def phi(self, u):
        return 1.0

    def log_F_inv(self, logw):
        return -logw


class ExpPower(Nonlinearity):
    """f(u) = exp(u^p) for u >= 0, continued by f = 1 below zero when p > 1."""

    kind = "exppow"
    q_analytic = 1.0

    def __init__(self, p):
        if not p >= 1:
            raise ConstraintError(f"exppow needs p >= 1, got {p}")
        super().__init__(p=float(p))
        self.p = float(p)
        if self.p > 1:
            self.breakpoints = (0.0,)

    def log_f(self, u):
        if self.p == 1.0:
            return u
        return u ** self.p if u > 0 else 0.0

    def dlog_f(self, u):
        if self.p == 1.0:
            return 1.0
        return self.p * u ** (self.p - 1.0) if u > 0 else 0.0

    def d2log_f(self, u):
        if self.p == 1.0:
            return 0.0
        return self.p * (self.p - 1.0) * u ** (self.p - 2.0) if u > 0 else 0.0

    def delta_log_f(self, u, s):
        s = np.asarray(s, dtype=float)
        if self.p == 1.0:
            return s
        if u > 0:
            return u ** self.p * np.expm1(self.p * np.log1p(s / u))
        return np.maximum(u + s, 0.0) ** self.p


class IteratedExp(Nonlinearity):
    """f(u) = exp(exp(...exp(u))), n nested exponentials."""

    kind = "iterexp"
    q_analytic = 1.0

    def __init__(self, n=2):
        if int(n) != n or n < 2:
            raise ConstraintError(f"iterexp needs an integer n >= 2, got {n}")
        super().__init__(n=int(n))
        self.n = int(n)

    def _levels(self, u):
        # E_m, E_m', E_m'' for m = n-1 (so that L = E_{n-1})
        e, d, dd = u, 1.0, 0.0
        for _ in range(self.n - 1):
            e = _exp(e)
            d, dd = e * d, e * (d * d + dd)
        return e, d, dd

    def log_f(self, u):
        return self._levels(u)[0]

    def dlog_f(self, u):
        return self._levels(u)[1]

    def d2log_f(self, u):
        return self._levels(u)[2]

    def delta_log_f(self, u, s):
        ds = np.asarray(s, dtype=float)
        e = u
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(self.n - 1):
                ds = math.exp(e) * np.expm1(ds) if e < 709 else np.where(ds > 0, _INF, 0.0)
                e = _exp(e)
        return ds


class PowerLog(Nonlinearity):
    """f(u) = (u+a)^p (log(u+a))^gamma with a > 1."""

    kind = "powlog"
    u_c2_floor = 0.0

    def __init__(self, p, gamma=1.0, a=2.0):
        if not p > 1:
            raise ConstraintError(f"powlog needs p > 1, got {p}")
        if not gamma >= 0:
            raise ConstraintError(f"powlog needs gamma >= 0, got {gamma}")
        if not a > 1:
            raise ConstraintError(f"powlog needs a > 1, got {a}")
        super().__init__(p=float(p), gamma=float(gamma), a=float(a))
        self.p, self.gamma, self.a = float(p), float(gamma), float(a)
        self.u_lo = (1.0 if self.gamma > 0 else 0.0) - self.a
        self.q_analytic = self.p / (self.p - 1.0)

    def log_f(self, u):
        x = u + self.a
        if x <= 0 or (self.gamma > 0 and x <= 1):
            return -_INF
        out = self.p * math.log(x)
        if self.gamma > 0:
            out += self.gamma * math.log(math.log(x))
        return out

    def dlog_f(self, u):
        x = u + self.a
        if self.gamma == 0:
            return self.p / x
        return self.p / x + self.gamma / (x * math.log(x))

    def d2log_f(self, u):
        x = u + self.a
        if self.gamma == 0:
            return -self.p / (x * x)
        lg = math.log(x)
        return -self.p / (x * x) - self.gamma * (lg + 1.0) / (x * lg) ** 2

    def delta_log_f(self, u, s):
        x = u + self.a
        r = np.log1p(np.asarray(s, dtype=float) / x)
        out = self.p * r
        if self.gamma > 0:
            out = out + self.gamma * np.log1p(r / math.log(x))
        return out

    def _log_F_at_lower_end(self):
        if self.gamma >= 1 or self.gamma == 0:
            return _INF
        return self.log_F(self.u_lo + 1e-300 + abs(self.u_lo) * 1e-15)


class Tetration(Nonlinearity):
    """n-th tetration of (u+a): f_1 = u+a, f_{m+1} = (u+a)^{f_m}."""

    kind = "tetration"
    q_analytic = 1.0

    def __init__(self, n=2, a=2.0):
        if int(n) != n or n < 2:
            raise ConstraintError(f"tetration needs an integer n >= 2, got {n}")
        if not a > 1:
            raise ConstraintError(f"tetration needs a > 1, got {a}")
        super().__init__(n=int(n), a=float(a))
        self.n, self.a = int(n), float(a)
        self.u_lo = -self.a

    def _levels(self, u):
        x = u + self.a
        lx = math.log(x)
        L, d, dd = lx, 1.0 / x, -1.0 / (x * x)
        for _ in range(self.n - 1):
            e = _exp(L)
            g = d * lx + 1.0 / x
            L, d, dd = e * lx, e * g, e * (d * g + dd * lx + d / x - 1.0 / (x * x))
        return L, d, dd

    def log_f(self, u):
        if u + self.a <= 0:
            return -_INF
        return self._levels(u)[0]

    def dlog_f(self, u):
        return self._levels(u)[1]

    def d2log_f(self, u):
        return self._levels(u)[2]

    def delta_log_f(self, u, s):
        x = u + self.a
        s = np.asarray(s, dtype=float)
        lxs = np.log(x + s)
        lx = math.log(x)
        r = np.log1p(s / x)
        dl, L = r, lx
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(self.n - 1):
                dl = _exp(L) * (np.expm1(dl) * lxs + r)
                L = _exp(L) * lx
        return dl

    def _log_F_at_lower_end(self):
        return self.log_F(self.u_lo * (1 - 1e-15) if self.u_lo < 0 else 1e-300)


# ---------------------------------------------------------------------------
# construction from the spec grammar

_FAMILIES = {
    "power": (Power, {"p": None, "a": 0.0}),
    "exp": (Exponential, {}),
    "exppow": (ExpPower, {"p": None}),
    "iterexp": (IteratedExp, {"n": 2}),
    "powlog": (PowerLog, {"p": None, "gamma": 1.0, "a": 2.0}),
    "tetration": (Tetration, {"n": 2, "a": 2.0}),
}
_SPEC_RE = re.compile(r"^([a-z]+)(?::(.+))?$")
_NUM_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def make_builtin(spec: str) -> Nonlinearity:
    """Parse ``name[:key=value(,key=value)*]`` into a Nonlinearity.

    >>> make_builtin("power:p=5").q_analytic
    1.25
    """
    m = _SPEC_RE.match(spec.strip())
    if not m:
        raise SpecParseError(f"malformed nonlinearity spec {spec!r}")
    name, body = m.groups()
    if name not in _FAMILIES:
        raise SpecParseError(f"unknown nonlinearity {name!r}; expected one of {sorted(_FAMILIES)}")
    cls, defaults = _FAMILIES[name]
    kwargs = dict(defaults)
    if body is not None:
        seen = set()
        for item in body.split(","):
            key, eq, value = item.partition("=")
            key, value = key.strip(), value.strip()
            if not eq or not key:
                raise SpecParseError(f"malformed parameter {item!r} in {spec!r}")
            if key not in defaults:
                raise SpecParseError(f"unknown key {key!r} for {name}")
            if key in seen:
                raise SpecParseError(f"duplicate key {key!r} in {spec!r}")
            if not _NUM_RE.match(value):
                raise SpecParseError(f"{key}={value!r} is not a decimal literal")
            seen.add(key)
            x = float(value)
            if key == "n":
                if not x.is_integer():
                    raise ConstraintError(f"n must be an integer, got {value}")
                x = int(x)
            kwargs[key] = x
    missing = [k for k, v in kwargs.items() if v is None]
    if missing:
        raise SpecParseError(f"{name} requires {', '.join(missing)}")
    return cls(**kwargs)


def make_reference(q: float) -> Nonlinearity:
    """f_q: u^p with p = q/(q-1) when q > 1, e^u when q = 1."""
    if q < 1:
        raise ConstraintError(f"q must be >= 1, got {q}")
    if q == 1.0:
        return Exponential()
    return Power(q / (q - 1.0), 0.0)


# ---------------------------------------------------------------------------
# F and its inverse


def eval_F(f: Nonlinearity, u: float) -> float:
    if not f.in_domain(u):
        raise ConstraintError(f"u={u!r} outside the domain of {f.spec}")
    return f.F(u)


def eval_F_inv(f: Nonlinearity, w: float) -> float:
    if not w > 0:
        raise ConstraintError(f"F^-1 needs w > 0, got {w!r}")
    return f.log_F_inv(math.log(w))


def _invert_log_F(f, logw, max_doublings=1100):
    """Geometric bracketing followed by Newton on log F, d/du log F = -1/J."""
    if logw >= f.log_F_sup:
        raise BracketError(f"w=exp({logw!r}) is outside the range of F for {f.spec}")

    def g(u):
        return f.log_F(u) - logw

    u0 = 0.0 if f.in_domain(0.0) else f.u_lo + 1.0
    g0 = g(u0)
    if g0 == 0:
        return u0
    lo = hi = None
    if g0 > 0:
        lo, step = u0, 1.0
        for _ in range(max_doublings):
            u = u0 + step
            if g(u) <= 0:
                hi = u
                break
            lo, step = u, 2.0 * step
    else:
        hi, step = u0, 1.0
        for _ in range(max_doublings):
            u = u0 - step if math.isinf(f.u_lo) else f.u_lo + (hi - f.u_lo) / 2.0
            if u <= f.u_lo:
                break
            if g(u) >= 0:
                lo = u
                break
            hi, step = u, 2.0 * step
    if lo is None or hi is None:
        raise BracketError(f"could not bracket F^-1(exp({logw!r})) for {f.spec} "
                           f"after {max_doublings} doublings")

    u = math.sqrt(lo * hi) if lo > 0 and hi > 4 * lo else 0.5 * (lo + hi)
    for _ in range(400):
        gu = f.log_F(u) - logw
        if abs(gu) <= 2e-15 * max(1.0, abs(logw)):
            return u
        if gu > 0:
            lo = u
        else:
            hi = u
        nxt = u + gu * f.J(u)
        if not (lo < nxt < hi):
            nxt = math.sqrt(lo * hi) if lo > 0 and hi > 4 * lo else 0.5 * (lo + hi)
        if nxt == u or hi - lo <= 4 * math.ulp(max(abs(lo), abs(hi))):
            return nxt
        u = nxt
    return u


# ---------------------------------------------------------------------------
# q and the exponent report


def _aitken(g):
    out = []
    for j in range(len(g) - 2):
        d2 = g[j + 2] - 2 * g[j + 1] + g[j]
        out.append(g[j + 2] if d2 == 0 else g[j] - (g[j + 1] - g[j]) ** 2 / d2)
    return out


def _neville_at_zero(h, g):
    """Value at h=0 of the interpolating polynomial through (h_i, g_i)."""
    p = list(g)
    n = len(h)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i])
    return p[0]


def _q_nodes(f, J=14):
    base = max(f.u_c2_floor, 1.0)

    def good(u):
        try:
            d1 = f.dlog_f(u)
            return 0 < d1 < 1e250 and math.isfinite(f.log_f(u))
        except (OverflowError, ValueError, ZeroDivisionError):
            return False

    nodes = []
    for j in range(J + 1):
        u = base * 10.0 ** j
        if not good(u):
            break
        nodes.append(u)
    if len(nodes) >= 6:
        return nodes
    # super-exponential growth: largest usable u by bisection in log u
    lo = math.log(base)
    hi = math.log(base) + J * math.log(10.0)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if good(math.exp(mid)) else (lo, mid)
    return [float(u) for u in np.geomspace(base, math.exp(lo), J + 1)]


def estimate_q(f: Nonlinearity, *, tol=1e-6, full_output=False):
    """Numerical limit of F(u) f'(u) as u -> infinity.

    The sequence F f' is sampled on decades above ``max(u_c2_floor, 1)`` and
    accelerated by Aitken's delta-squared process.  Sequences that converge
    only logarithmically (powers times logs) defeat Aitken; for those the
    samples are extrapolated polynomially in 1/log(u).

    Returns the estimate, plus a diagnostics dict when ``full_output``.
    """
    nodes = _q_nodes(f)
    g = [f.phi(u) for u in nodes]
    if not all(math.isfinite(v) for v in g):
        raise LimitDetectionError(f"F f' not finite on the sampling grid for {f.spec}: {g}")
    info = {"nodes": nodes, "values": g, "method": None,
            "local_ratio": [f.q_local(u) for u in nodes[-3:]]}

    est = None
    acc = _aitken(g)
    for j in range(1, len(acc)):
        if abs(acc[j] - acc[j - 1]) < tol:
            est = acc[j]
            info["method"] = "aitken"
            break
    if est is None:
        est = _log_extrapolate(nodes, g, tol)
        info["method"] = "log-richardson"
    if est is None:
        raise LimitDetectionError(
            f"F f' shows no limit for {f.spec}; tail values {g[-4:]}, "
            "condition (f2) is likely violated")
    if est < 1.0 - 1e-6:
        raise LimitDetectionError(
            f"estimated q={est!r} < 1 for {f.spec}; q >= 1 always holds, "
            "so the model or the quadrature is broken")
    info["estimate"] = est
    return (est, info) if full_output else est


def _log_extrapolate(nodes, g, tol):
    pts = [(1.0 / math.log(u), v) for u, v in zip(nodes, g) if u >= 1e5]
    if len(pts) < 5:
        return None
    h = [p[0] for p in pts]
    v = [p[1] for p in pts]
    # estimates of increasing degree on the tail of the sequence
    ests = [_neville_at_zero(h[-m:], v[-m:]) for m in range(3, len(h) + 1)]
    for m in range(1, len(ests)):
        if abs(ests[m] - ests[m - 1]) < 0.1 * tol:
            return ests[m]
    return None


@dataclass(frozen=True)
class ExponentReport:
    N: int
    q: float
    p: float
    q_S: float
    q_JL: float
    p_S: float
    p_JL: float
    k: float
    regime: str
    jl_borderline: bool = False

    def to_dict(self):
        return {k: _json_num(v) for k, v in asdict(self).items()}


def _json_num(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def critical_exponents(N):
    """(q_S, q_JL, p_S, p_JL) for dimension N."""
    q_S = (N + 2) / 4.0
    q_JL = (N - 2.0 * math.sqrt(N - 1.0)) / 4.0
    p_S = (N + 2.0) / (N - 2.0) if N >= 3 else _INF
    p_JL = 1.0 + 4.0 / (N - 4.0 - 2.0 * math.sqrt(N - 1.0)) if N >= 11 else _INF
    return q_S, q_JL, p_S, p_JL


def classify(f: Nonlinearity, N: int, *, tol=1e-9) -> ExponentReport:
    if int(N) != N or N < 3:
        raise ConstraintError(f"N must be an integer >= 3, got {N}")
    q = f.q_analytic if f.q_analytic is not None else estimate_q(f)
    q_S, q_JL, p_S, p_JL = critical_exponents(N)
    p = q / (q - 1.0) if q > 1.0 else _INF
    at_jl = abs(q - q_JL) <= tol
    if abs(q - q_S) <= tol:
        regime = "Critical"
    elif q > q_S:
        regime = "OutOfScope"
    elif q > q_JL and not at_jl:
        regime = "Oscillatory"
    else:
        regime = "Stable"
    return ExponentReport(N=int(N), q=q, p=p, q_S=q_S, q_JL=q_JL, p_S=p_S,
                          p_JL=p_JL, k=2.0 * N - 4.0 * q, regime=regime,
                          jl_borderline=at_jl)


# ---------------------------------------------------------------------------
# growth margin u h(u) >= (1+p) H(u) for h(u) = f(u+M)


@dataclass(frozen=True)
class SuperlinearityReport:
    passed: bool
    worst_margin: float
    threshold: float
    u_worst: float


def check_superlinearity(f: Nonlinearity, N: int, u_floor: float | None = None,
                         M: float = 0.0, *, excess=1e-3, decades=6, per_decade=4):
    """Sample u f(u+M) / int_0^u f(t+M) dt against 1 + p_bar, p_bar > p_S.

    The ratio is computed as u / int_0^u exp(L(u-s+M) - L(u+M)) ds so that
    nothing overflows.
    """
    _, _, p_S, _ = critical_exponents(N)
    threshold = 1.0 + p_S * (1.0 + excess)
    if u_floor is None:
        u_floor = 10.0 * max(1.0, M)
    worst, u_worst = _INF, None
    for j in range(decades * per_decade + 1):
        u = u_floor * 10.0 ** (j / per_decade)
        x = u + M
        if M < f.u_lo or not math.isfinite(f.log_f(x)):
            break

        def integrand(s, x=x):
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                v = np.exp(f.delta_log_f(x, -np.asarray(s)))
            return np.nan_to_num(v, nan=0.0)

        H_scaled = 0.0
        a, span = 0.0, min(u, 1.0 / max(f.dlog_f(x), 1.0 / u))
        while a < u:
            b = min(u, a + span)
            H_scaled += _adaptive_piece(integrand, a, b, H_scaled)
            if float(integrand(np.array([b]))[0]) < 1e-18 * H_scaled:
                break
            a, span = b, 2.0 * span
        margin = u / H_scaled - threshold
        if margin < worst:
            worst, u_worst = margin, u
    if u_worst is None:
        raise QuadratureError(f"no usable sample above u_floor={u_floor} for {f.spec}")
    return SuperlinearityReport(passed=worst >= 0.0, worst_margin=worst,
                                threshold=threshold, u_worst=u_worst)
