"""Dormand-Prince 5(4) integrator with a state-validity guard.

A step whose stages or end state fail ``is_valid`` (or whose right-hand side
raises :class:`~nilflow.errors.NotPositiveDefiniteError`) is retried at half
the step size. Output at requested times uses the method's 4th-order
continuous extension.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FlowBreakdownError, NotPositiveDefiniteError

# Butcher tableau
C_NODES = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4
# continuous extension: y(t + th) = y + h * K^T (P @ [th, th^2, th^3, th^4])
P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 10.0
BETA = 0.04  # PI controller
ALPHA = 0.2 - 0.75 * BETA
UNDERFLOW = 1e-14


@dataclass
class OdeResult:
    t: np.ndarray
    y: np.ndarray
    accepted: int = 0
    rejected: int = 0
    invalid: int = 0
    nfev: int = 0
    step_sizes: list = field(default_factory=list)


def _norm(x):
    return float(np.sqrt(np.mean(x * x)))


def _initial_step(fun, t0, y0, f0, direction, rtol, atol, max_step):
    sc = atol + rtol * np.abs(y0)
    d0, d1 = _norm(y0 / sc), _norm(f0 / sc)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    y1 = y0 + direction * h0 * f0
    f1 = fun(t0 + direction * h0, y1)
    d2 = _norm((f1 - f0) / sc) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, max_step)


def dopri5(fun, t_span, y0, rtol=1e-10, atol=1e-12, max_step=np.inf, t_eval=None,
           is_valid=None, first_step=None):
    """Integrate ``y' = fun(t, y)`` forward over ``t_span``.

    Parameters
    ----------
    fun : callable
        ``fun(t, y) -> ndarray``.
    t_span : (float, float)
        Start and end time, ``t1 > t0``.
    y0 : array_like
        Initial state.
    t_eval : array_like, optional
        Sorted output times inside ``t_span``. Without it every accepted step
        is returned.
    is_valid : callable, optional
        ``is_valid(y) -> bool``; invalid stage or end states shrink the step.

    Returns
    -------
    OdeResult
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("dopri5 integrates forward only: need t1 > t0")
    span = t1 - t0
    y = np.array(y0, dtype=float)
    shape = y.shape
    y = y.ravel()
    valid = is_valid or (lambda _y: True)
    nfev = [0]

    def f(t, yy):
        nfev[0] += 1
        return np.asarray(fun(t, yy.reshape(shape)), dtype=float).ravel()

    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        if t_eval.size and (t_eval[0] < t0 or t_eval[-1] > t1 or np.any(np.diff(t_eval) < 0)):
            raise ValueError("t_eval must be sorted and inside t_span")
        ts_out, ys_out = [], []
        k_eval = 0
        while k_eval < t_eval.size and t_eval[k_eval] == t0:
            ts_out.append(t0)
            ys_out.append(y.copy())
            k_eval += 1
    else:
        ts_out, ys_out = [t0], [y.copy()]

    res = OdeResult(t=None, y=None)
    f0 = f(t0, y)
    h = first_step if first_step is not None else _initial_step(f, t0, y, f0, 1.0, rtol, atol, max_step)
    t = t0
    err_old = 1e-4
    K = np.empty((7, y.size))
    K[0] = f0
    last_rejected = False

    while t < t1:
        h = min(h, max_step, t1 - t)
        if h < UNDERFLOW * span:
            raise FlowBreakdownError(f"step size underflow (h = {h:.3e})", t)
        ok = True
        try:
            for s in range(1, 7):
                ys = y + h * (np.asarray(A[s]) @ K[:s])
                if not valid(ys):
                    ok = False
                    break
                K[s] = f(t + C_NODES[s] * h, ys)
        except NotPositiveDefiniteError:
            ok = False
        if not ok:
            res.invalid += 1
            res.rejected += 1
            h *= 0.5
            last_rejected = True
            continue
        y_new = ys  # stage 7 is evaluated at the 5th-order solution (FSAL)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _norm(h * (E @ K) / sc)
        if not np.isfinite(err):
            res.rejected += 1
            h *= 0.5
            last_rejected = True
            continue
        if err <= 1.0:
            if not valid(y_new):
                res.invalid += 1
                res.rejected += 1
                h *= 0.5
                last_rejected = True
                continue
            t_new = t + h if t1 - (t + h) > UNDERFLOW * span else t1
            if t_eval is not None:
                while k_eval < t_eval.size and t_eval[k_eval] <= t_new:
                    theta = (t_eval[k_eval] - t) / h
                    if t_eval[k_eval] == t_new:
                        ys_out.append(y_new.copy())
                    else:
                        powers = theta ** np.arange(1, 5)
                        ys_out.append(y + h * (K.T @ (P @ powers)))
                    ts_out.append(t_eval[k_eval])
                    k_eval += 1
            else:
                ts_out.append(t_new)
                ys_out.append(y_new.copy())
            res.accepted += 1
            res.step_sizes.append(h)
            t, y = t_new, y_new
            K[0] = K[6]
            fac = err ** ALPHA / err_old ** BETA if err > 0 else 0.0
            fac = min(1 / FAC_MIN, max(1 / FAC_MAX, fac / SAFETY))
            h_next = h / fac
            if last_rejected:
                h_next = min(h_next, h)
            err_old = max(err, 1e-4)
            h = h_next
            last_rejected = False
        else:
            res.rejected += 1
            h = h / min(1 / FAC_MIN, err ** ALPHA / SAFETY)
            last_rejected = True

    res.t = np.array(ts_out)
    res.y = np.array(ys_out).reshape((len(ts_out),) + shape)
    res.nfev = nfev[0]
    return res
