"""Singular radial solutions u*(r) = F^{-1}[k^{-1} r^2 (1 + theta(r))].

With t = log r, x(t) = theta(r) and y = x', the radial equation becomes

    x' = y
    y' = -(N+2-4q) y - (2N-4q) x + q y^2/(1+x) + (Phi - q)(y+2x+2)^2/(1+x),

where Phi = F(u) f'(u) at u = F^{-1}[k^{-1} e^{2t} (1+x)].  The linear part
is stable forward in t for q < q_S, and the forcing Phi - q vanishes as
t -> -inf, so integrating forward from (0, 0) at a very negative t_start
tracks the solution that stays near the origin.  Once u* has come down to
``u_c2_floor`` the profile is handed to the ordinary radial integrator.
"""
from __future__ import annotations

import cmath
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintError, NumericalError, RegimeError
from .integrate import dopri_step, hermite, hermite_eval, integrate
from .nonlinearity import Nonlinearity, critical_exponents
from .radial_ode import H_MAX, H_MAX_COEF, H_MAX_EXP, RadialSolution, integrate_radial, radial_rhs

__all__ = [
    "SingularOptions",
    "SingularDiagnostics",
    "SingularSolution",
    "BoxExitError",
    "construct_singular",
    "eval_singular",
    "exact_singular_limit",
    "write_csv",
]


class BoxExitError(NumericalError):
    """(x, y) left the small ball the construction relies on."""

    def __init__(self, msg, t_exit):
        super().__init__(msg)
        self.t_exit = t_exit


@dataclass(frozen=True)
class SingularOptions:
    delta_q: float = 1e-8
    eps_box: float = 0.1
    t_start_max: float = -20.0  # never start later than this
    t_min: float = -200.0  # never start earlier than this
    tol: float = 1e-10
    r_max: float = 1e3
    stop_at_zero: bool = True
    overlap_width: float = 1.0
    jl_delta: float = 1e-2  # only reported in diagnostics
    switch_on_box_exit: bool = False  # hand over to the outer integrator instead of raising


@dataclass
class SingularDiagnostics:
    D: float
    lambda_plus: complex
    lambda_minus: complex
    mu_decay: float
    phi_gap_at_start: float
    t_start: float = math.nan
    t_switch: float = math.nan
    overlap_gap: float = math.nan
    start_reached_delta_q: bool = True
    carried_drift: float = 0.0
    box_exit_t: float | None = None

    def to_dict(self):
        def c(z):
            return [z.real, z.imag]
        return {"D": self.D, "lambda_plus": c(self.lambda_plus), "lambda_minus": c(self.lambda_minus),
                "mu_decay": self.mu_decay, "phi_gap_at_start": self.phi_gap_at_start,
                "t_start": self.t_start, "t_switch": self.t_switch, "overlap_gap": self.overlap_gap,
                "start_reached_delta_q": self.start_reached_delta_q,
                "carried_drift": self.carried_drift, "box_exit_t": self.box_exit_t}


@dataclass
class SingularSolution:
    f: Nonlinearity
    N: int
    q: float
    k: float
    t: np.ndarray
    state: np.ndarray  # columns x, y, u*, J(u*) on the inner grid
    dstate: np.ndarray  # their t-derivatives
    outer: RadialSolution | None
    r0_star: float | None
    diagnostics: SingularDiagnostics
    meta: dict = field(default_factory=dict)

    @property
    def x(self):
        return self.state[:, 0]

    @property
    def y(self):
        return self.state[:, 1]

    @property
    def theta_grid(self):
        return np.column_stack([self.t, self.x, self.y])

    @property
    def t_start(self):
        return float(self.t[0])

    @property
    def r_switch(self):
        return math.exp(self.t[-1])

    @property
    def r_end(self):
        return self.outer.r_end if self.outer is not None else self.r_switch

    def theta(self, r):
        """theta at radius r; in the outer region recovered from u*."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r)
        for i, ri in enumerate(r):
            if ri <= self.r_switch:
                out[i] = hermite_eval(self.t, self.x, self.y, math.log(ri))[0]
            else:
                u, _ = self.outer.eval(ri)
                if not self.f.in_domain(u):
                    out[i] = math.nan
                else:
                    out[i] = math.expm1(math.log(self.k) - 2 * math.log(ri) + self.f.log_F(u))
        return out

    def __call__(self, r):
        return eval_singular(self, r)[0]

    def _inner(self, t):
        """Hermite interpolation of the inner state at log radius t."""
        return [float(hermite_eval(self.t, self.state[:, j], self.dstate[:, j], t)[0]) for j in range(4)]

    def as_radial(self) -> RadialSolution:
        """The whole profile on its node set, as a RadialSolution without the origin."""
        r_in = np.exp(self.t)
        x, y, u_in, J = self.state.T
        du_in = -J * (2.0 + y / (1.0 + x)) / r_in
        if self.outer is not None:
            r = np.concatenate([r_in, self.outer.r[1:]])
            u = np.concatenate([u_in, self.outer.u[1:]])
            du = np.concatenate([du_in, self.outer.du[1:]])
        else:
            r, u, du = r_in, u_in, du_in
        return RadialSolution(equation="Original", N=self.N, f=self.f, center_value=math.inf,
                              r=r, u=u, du=du, q=self.q, first_zero=self.r0_star,
                              termination=self.outer.termination if self.outer else "ReachedRmax",
                              tol=self.outer.tol if self.outer else math.nan)


def _diagnostics(N, q, opts):
    b = N + 2 - 4 * q
    D = b * b - 4 * (2 * N - 4 * q)
    sq = cmath.sqrt(D)
    lp, lm = (b + sq) / 2, (b - sq) / 2
    if not (lp.real > 0 and lm.real > 0):
        raise RegimeError(f"linearization not forward-stable: eigenvalues {lp}, {lm}")
    q_jl = critical_exponents(N)[1]
    if abs(q - q_jl) <= 1e-9:
        mu = b / 2 - opts.jl_delta
    elif q < q_jl:
        mu = (b - math.sqrt(max(D, 0.0))) / 2
    else:
        mu = b / 2
    return SingularDiagnostics(D=D, lambda_plus=complex(lp), lambda_minus=complex(lm),
                               mu_decay=mu, phi_gap_at_start=math.nan)


def _find_t_start(phi_gap, opts):
    """Largest t <= t_start_max with phi_gap(t) <= delta_q, else t_min."""
    t = opts.t_start_max
    if phi_gap(t) <= opts.delta_q:
        return t, True
    step = 1.0
    hi = t
    while True:
        lo = max(hi - step, opts.t_min)
        if phi_gap(lo) <= opts.delta_q:
            break
        if lo <= opts.t_min:
            return opts.t_min, False
        hi, step = lo, 2 * step
    for _ in range(40):
        if hi - lo < 1e-3:
            break
        mid = 0.5 * (lo + hi)
        if phi_gap(mid) <= opts.delta_q:
            lo = mid
        else:
            hi = mid
    return lo, True


def construct_singular(f: Nonlinearity, N: int, q: float | None = None,
                       opts: SingularOptions | None = None) -> SingularSolution:
    """Build u* from the asymptotic fixed point and continue it to its first zero."""
    opts = opts or SingularOptions()
    if int(N) != N or N < 3:
        raise ConstraintError(f"N must be an integer >= 3, got {N}")
    if q is None:
        from .nonlinearity import classify
        q = classify(f, N).q
    q_s = (N + 2) / 4.0
    if q >= q_s - 1e-12:
        raise RegimeError(f"q={q} is not below q_S={q_s} for N={N}")
    k = 2 * N - 4 * q
    log_k = math.log(k)
    diag = _diagnostics(N, q, opts)
    log_F_floor = f.log_F(f.u_c2_floor) if f.in_domain(f.u_c2_floor) else f.log_F_sup

    def u_of(t, x):
        return f.log_F_inv(-log_k + 2 * t + math.log1p(x))

    def phi_gap(t):
        return abs(f.phi(u_of(t, 0.0)) - q)

    t_start, reached = _find_t_start(phi_gap, opts)
    diag.t_start = t_start
    diag.phi_gap_at_start = phi_gap(t_start)
    diag.start_reached_delta_q = reached

    b, c = N + 2 - 4 * q, 2 * N - 4 * q
    dlog_f = f.dlog_f
    closed = _closed_form_F(f)

    def xy_rhs(x, y, forcing):
        opx = 1.0 + x
        return -b * y - c * x + q * y * y / opx + forcing * (y + 2 * x + 2) ** 2 / opx

    if closed:
        # Phi straight from the closed-form inverse
        def rhs(t, s):
            x, y = s
            return (y, xy_rhs(x, y, f.phi(u_of(t, x)) - q))
    else:
        # u and J = F f ride along; dJ/du = L' J - 1 is stable as u decreases
        def rhs(t, s):
            x, y, u, J = s
            d1 = dlog_f(u)
            ut = -J * (2.0 + y / (1.0 + x))
            return (y, xy_rhs(x, y, d1 * J - q), ut, (d1 * J - 1.0) * ut)

    u_floor = f.u_c2_floor if f.in_domain(f.u_c2_floor) else None

    def below_floor(t, s):
        if closed:
            return 2 * t + math.log1p(s[0]) - log_k - log_F_floor >= 0.0
        return s[2] <= u_floor if u_floor is not None else False

    t_hi = 0.5 * (log_k + log_F_floor) + 5.0  # generous: x stays small
    t_hi = min(t_hi, math.log(opts.r_max))
    if t_hi <= t_start:
        raise ConstraintError("u_c2_floor is reached before t_start; lower t_start_max")
    state = {"final": None, "box": None}

    def on_step(ta, ya, ka, tb, yb, kb, step):
        if max(abs(yb[0]), abs(yb[1])) > opts.eps_box:
            state["box"] = tb
            if opts.switch_on_box_exit:
                # keep the last step inside the box and switch there
                state["final"] = (ta, ya, ka)
            return True
        if below_floor(tb, yb):
            lo, hi = ta, tb
            for _ in range(200):
                if hi - lo <= 1e-13 * max(1.0, abs(hi)):
                    break
                mid = 0.5 * (lo + hi)
                sm = [hermite(ta, tb, ya[i], yb[i], ka[i], kb[i], mid)[0] for i in range(len(ya))]
                if below_floor(mid, sm):
                    hi = mid
                else:
                    lo = mid
            ys_, ks_, _ = dopri_step(rhs, ta, list(ya), list(ka), lo - ta)
            state["final"] = (lo, ys_, ks_)
            return True
        return False

    y0 = (0.0, 0.0)
    if not closed:
        u0 = u_of(t_start, 0.0)
        y0 = (0.0, 0.0, u0, f.J(u0))
    h_max = min(H_MAX, H_MAX_COEF * opts.tol ** H_MAX_EXP)
    ts, ys, ks, status = integrate(rhs, t_start, y0, t_hi, rtol=opts.tol, atol=opts.tol,
                                   h_max=h_max, on_step=on_step)
    diag.box_exit_t = state["box"]
    if state["box"] is not None and not opts.switch_on_box_exit:
        raise BoxExitError(f"(x, y) left the box |.| <= {opts.eps_box} at t={state['box']:.6g}",
                           state["box"])
    if status == "step-failure":
        raise NumericalError(f"inner integration failed near t={ts[-1]:.6g}")
    if state["box"] is not None and opts.switch_on_box_exit:
        ts.pop(), ys.pop(), ks.pop()
    elif state["final"] is not None:
        ts[-1], ys[-1], ks[-1] = state["final"][0], tuple(state["final"][1]), tuple(state["final"][2])
    t_arr = np.array(ts)
    S = np.array(ys)
    dS = np.array(ks)
    if closed:
        uJ = np.array([_u_and_J(f, k, t, x) for t, x in zip(t_arr, S[:, 0])])
        ut = -uJ[:, 1] * (2.0 + S[:, 1] / (1.0 + S[:, 0]))
        Jt = (np.array([dlog_f(u) for u in uJ[:, 0]]) * uJ[:, 1] - 1.0) * ut
        S = np.column_stack([S, uJ])
        dS = np.column_stack([dS, ut, Jt])
    else:
        # consistency of the carried u with the x-representation
        drift = max(abs(math.expm1(log_k - 2 * t + math.log(J) - f.log_f(u)) - x)
                    for t, (x, _, u, J) in zip(t_arr, S))
        diag.carried_drift = drift
    t_sw = float(t_arr[-1])
    diag.t_switch = t_sw

    outer = None
    r0 = None
    if state["final"] is not None and t_sw < math.log(opts.r_max):
        r_sw = math.exp(t_sw)
        u_sw = S[-1, 2]
        du_sw = -S[-1, 3] * (2.0 + S[-1, 1] / (1.0 + S[-1, 0])) / r_sw
        orhs = radial_rhs(f, N)
        to, yo, r0, term = integrate_radial(orhs, f, t_sw, (u_sw, r_sw * du_sw), math.log(opts.r_max),
                                            opts.tol, stop_at_zero=opts.stop_at_zero)
        r_out = np.exp(to)
        r_out[0] = r_sw
        outer = RadialSolution(equation="Original", N=int(N), f=f, center_value=math.inf,
                               r=r_out, u=yo[:, 0], du=yo[:, 1] / r_out, q=q, first_zero=r0,
                               termination=term, tol=opts.tol)
        y_sw = S[-1] if not closed else S[-1, :2]
        diag.overlap_gap = _overlap_gap(f, rhs, closed, k, t_sw, y_sw, outer, opts)

    return SingularSolution(f=f, N=int(N), q=q, k=k, t=t_arr, state=S, dstate=dS,
                            outer=outer, r0_star=r0, diagnostics=diag)


def _closed_form_F(f):
    return type(f).J is not Nonlinearity.J and type(f).log_F_inv is not Nonlinearity.log_F_inv


def _u_and_J(f, k, t, x):
    u = f.log_F_inv(-math.log(k) + 2 * t + math.log1p(x))
    return u, f.J(u)


def _overlap_gap(f, rhs, closed, k, t_sw, y_sw, outer, opts):
    """Relative gap between the continued inner profile and the outer one."""
    t_end = min(t_sw + opts.overlap_width, math.log(outer.r_end))
    if t_end <= t_sw:
        return 0.0
    log_sup = f.log_F_sup

    def leaving(t, s):
        if s[0] <= -0.5:
            return True
        if closed:
            return -math.log(k) + 2 * t + math.log1p(s[0]) >= log_sup - 1e-6
        return not f.in_domain(s[2])

    ts, ys, _, _ = integrate(rhs, t_sw, tuple(y_sw), t_end, rtol=opts.tol, atol=opts.tol,
                             h_max=0.05, on_step=lambda ta, ya, ka, tb, yb, kb, st: leaving(tb, yb))
    gap = 0.0
    for t, s in zip(ts[1:-1], ys[1:-1]):
        if closed:
            try:
                u_in = f.log_F_inv(-math.log(k) + 2 * t + math.log1p(s[0]))
            except NumericalError:
                break
        else:
            u_in = s[2]
        u_out, _ = outer.eval(math.exp(t))
        gap = max(gap, abs(u_in - u_out) / max(1.0, abs(u_out)))
    return gap


def eval_singular(sol: SingularSolution, r):
    """(u*, du*/dr) at radius r (scalar or array) in [e^{t_start}, r_end]."""
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    lo, hi = math.exp(sol.t[0]), sol.r_end
    if np.any(r_arr < lo * (1 - 1e-13)) or np.any(r_arr > hi * (1 + 1e-13)):
        raise ConstraintError(f"radius outside [{lo:.6g}, {hi:.6g}]")
    u = np.empty_like(r_arr)
    du = np.empty_like(r_arr)
    for i, ri in enumerate(r_arr):
        if ri <= sol.r_switch or sol.outer is None:
            t = min(max(math.log(ri), sol.t[0]), sol.t[-1])
            x, y, u[i], J = sol._inner(t)
            du[i] = -J * (2.0 + y / (1.0 + x)) * math.exp(-t)
        else:
            u[i], du[i] = sol.outer.eval(min(ri, hi))
    if np.ndim(r) == 0:
        return float(u[0]), float(du[0])
    return u, du


def exact_singular_limit(f: Nonlinearity, N: int, q: float, s):
    """F^{-1}[k^{-1} s^2]: the singular solution of the limit equation."""
    k = 2 * N - 4 * q
    if k <= 0:
        raise RegimeError(f"k = 2N - 4q = {k} is not positive (q={q}, N={N})")
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s_arr <= 0):
        raise ConstraintError("s must be positive")
    out = np.array([f.log_F_inv(2 * math.log(si) - math.log(k)) for si in s_arr])
    return float(out[0]) if np.ndim(s) == 0 else out


def write_csv(sol: SingularSolution, dest=None, ratio=10 ** (1 / 32)):
    """``r,theta,u_star,du_star`` on a geometric grid from e^{t_start} to the end."""
    lo, hi = math.exp(sol.t[0]), sol.r_end
    n = int(math.floor(math.log(hi / lo) / math.log(ratio))) + 1
    r = lo * ratio ** np.arange(n)
    r = r[r <= hi]
    u, du = eval_singular(sol, r)
    th = sol.theta(r)
    buf = io.StringIO()
    buf.write("r,theta,u_star,du_star\n")
    for row in zip(r, th, u, du):
        buf.write(",".join(f"{float(v):.17g}" for v in row) + "\n")
    text = buf.getvalue()
    if dest is not None:
        with open(dest, "w") as fh:
            fh.write(text)
    return text
