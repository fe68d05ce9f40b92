"""Dormand-Prince 5(4) stepper for small autonomous-dimension systems.

Pure-Python floats on purpose: the systems here are two-dimensional and the
per-step overhead of numpy would dominate.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import IntegrationError

# Butcher tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def dopri_step(rhs, t, y, k1, h):
    """One step; returns (y_new, k_new, err_vector)."""
    ks = [k1]
    n = len(y)
    for s in range(1, 7):
        a = _A[s]
        ys = [y[i] + h * sum(a[j] * ks[j][i] for j in range(s)) for i in range(n)]
        ks.append(rhs(t + _C[s] * h, ys))
    y_new = ys  # the 7th stage is evaluated at the 5th-order solution (FSAL)
    err = [h * sum(_E[j] * ks[j][i] for j in range(7)) for i in range(n)]
    return y_new, ks[6], err


def integrate(rhs, t0, y0, t_end, *, rtol=1e-9, atol=1e-9, h0=None, h_max=math.inf,
              on_step=None, max_steps=2_000_000):
    """Adaptive integration from t0 to t_end (either direction).

    ``on_step(t0, y0, k0, t1, y1, k1, step)`` is called after every accepted
    step; returning a truthy value stops the integration, returning a tuple
    ``(t, y)`` with t inside the step truncates the step there and continues.  ``step`` is a
    callable ``step(h)`` integrating one fixed step of size h from (t0, y0),
    used for event refinement.

    Returns (ts, ys, ks, status) where status is 'done', 'stopped' or
    'step-failure'.
    """
    direction = 1.0 if t_end >= t0 else -1.0
    t, y = float(t0), [float(v) for v in y0]
    k = list(rhs(t, y))
    ts, ys, ks = [t], [tuple(y)], [tuple(k)]
    span = abs(t_end - t0)
    if span == 0:
        return ts, ys, ks, "done"
    if h0 is None:
        scale = max(abs(v) for v in y) * rtol + atol
        slope = max(abs(v) for v in k) or 1.0
        h0 = min(span, h_max, 0.01 * (scale / rtol) / slope, 1e-3 * max(1.0, span))
    h = abs(h0)
    n_steps = 0
    while direction * (t_end - t) > 0:
        if n_steps >= max_steps:
            raise IntegrationError(f"exceeded {max_steps} steps at t={t!r}")
        h = min(h, h_max, abs(t_end - t))
        if h <= 16 * math.ulp(max(abs(t), 1.0)):
            return ts, ys, ks, "step-failure"
        y_new, k_new, err = dopri_step(rhs, t, y, k, direction * h)
        en = 0.0
        ok = True
        for i, e in enumerate(err):
            sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
            v = e / sc
            if not math.isfinite(v) or not math.isfinite(y_new[i]) or not math.isfinite(k_new[i]):
                ok = False
                break
            en += v * v
        if not ok:
            h *= 0.25
            continue
        en = math.sqrt(en / len(err))
        if en > 1.0:
            h *= max(0.2, 0.9 * en ** -0.2)
            continue
        t_new = t + direction * h if abs(t_end - t) > h else t_end
        n_steps += 1
        ts.append(t_new)
        ys.append(tuple(y_new))
        ks.append(tuple(k_new))
        if on_step is not None:
            t_old, y_old, k_old = t, y, k

            def fixed(hh, t_old=t_old, y_old=y_old, k_old=k_old):
                return dopri_step(rhs, t_old, y_old, k_old, hh)[0]

            res = on_step(t_old, y_old, k_old, t_new, y_new, k_new, fixed)
            if isinstance(res, tuple):
                # cut the step short (e.g. at a kink of the right-hand side) and go on from there
                t_new, y_new = res[0], list(res[1])
                k_new = list(rhs(t_new, y_new))
                ts[-1], ys[-1], ks[-1] = t_new, tuple(y_new), tuple(k_new)
            elif res:
                return ts, ys, ks, "stopped"
        t, y, k = t_new, y_new, k_new
        h *= min(5.0, 0.9 * en ** -0.2) if en > 0 else 5.0
    return ts, ys, ks, "done"


def hermite(x0, x1, y0, y1, d0, d1, x):
    """Cubic Hermite value and derivative; works elementwise on arrays."""
    h = x1 - x0
    s = (x - x0) / h
    s2 = s * s
    s3 = s2 * s
    val = ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0
           + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1)
    der = ((6 * s2 - 6 * s) * (y0 - y1) / h + (3 * s2 - 4 * s + 1) * d0
           + (3 * s2 - 2 * s) * d1)
    return val, der


def hermite_eval(xs, ys, ds, x):
    """Evaluate the piecewise cubic Hermite interpolant of (xs, ys, ys')."""
    xs = np.asarray(xs)
    x = np.asarray(x, dtype=float)
    i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
    return hermite(xs[i], xs[i + 1], ys[i], ys[i + 1], ds[i], ds[i + 1], x)
