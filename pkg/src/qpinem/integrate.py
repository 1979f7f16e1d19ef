"""Dormand-Prince 5(4) integrator with PI step-size control.

Works on real or complex ndarray states of any shape. Output times are hit
exactly by shortening the step that would overshoot them.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import IntegrationError, StiffnessError

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
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

_SAFETY = 0.9
_ALPHA = 0.7 / 5
_BETA = 0.4 / 5
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


def dopri5(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_out: Sequence[float],
    tol: float,
    h0: float | None = None,
    max_steps: int = 2_000_000,
    check: Callable[[float, np.ndarray], None] | None = None,
) -> list[np.ndarray]:
    """Integrate ``dy/dt = rhs(t, y)`` from ``t_out[0]`` and return ``y`` at every ``t_out``.

    ``tol`` is used as both absolute and relative per-step error bound.
    ``check(t, y)`` is called after every accepted step and may raise.
    """
    t_out = [float(t) for t in t_out]
    if any(b < a for a, b in zip(t_out, t_out[1:])):
        raise ValueError("output times must be non-decreasing")
    y = np.array(y0, copy=True)
    t = t_out[0]
    results = [y.copy()]
    if len(t_out) == 1:
        return results
    span = t_out[-1] - t_out[0]
    h = h0 if h0 is not None else (span * 1e-3 if span > 0 else 0.0)
    err_prev = 1e-4
    k1 = rhs(t, y)
    steps = 0
    for t_target in t_out[1:]:
        while t < t_target:
            if steps >= max_steps:
                raise IntegrationError(f"exceeded {max_steps} steps")
            h_min = 1e-14 * max(abs(t), span)
            if h < h_min:
                raise StiffnessError(f"step size underflow at t={t:g} (h={h:g})")
            last = t + h >= t_target
            h_try = t_target - t if last else h
            ks = [k1]
            for i in range(1, 7):
                yi = y.copy()
                for a, k in zip(_A[i], ks):
                    if a:
                        yi += (h_try * a) * k
                ks.append(rhs(t + _C[i] * h_try, yi))
            y_new = yi  # stage 7 argument equals the 5th-order solution (FSAL)
            err_vec = ks[0] * _E[0]
            for e, k in zip(_E[1:], ks[1:]):
                if e:
                    err_vec = err_vec + e * k
            err_vec = h_try * err_vec
            scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
            err = math.sqrt(float(np.mean((np.abs(err_vec) / scale) ** 2)))
            if not math.isfinite(err):
                h *= _MIN_FACTOR
                continue
            if err <= 1.0:
                steps += 1
                t = t_target if last else t + h_try
                y = y_new
                k1 = ks[6]
                if check is not None:
                    check(t, y)
                fac = _SAFETY * max(err, 1e-10) ** (-_ALPHA) * err_prev**_BETA
                fac = min(_MAX_FACTOR, max(_MIN_FACTOR, fac))
                if not last:
                    h = h_try * fac
                else:
                    h = max(h, h_try * fac) if h_try < h else h_try * fac
                err_prev = max(err, 1e-4)
            else:
                fac = max(_MIN_FACTOR, _SAFETY * err ** (-_ALPHA))
                h = h_try * fac
        results.append(y.copy())
    return results
