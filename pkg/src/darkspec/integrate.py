"""Adaptive Dormand-Prince RK5(4) for complex-valued ODE systems.

The propagator steps exactly onto every checkpoint time (no dense-output
interpolation), which makes stored grid values bit-reproducible, and
enforces a hard step-size cap so oscillating coefficients stay resolved.
State arrays may have any shape; batched systems simply stack along a
leading axis and share the step-size control.
"""

from __future__ import annotations

import numpy as np

# Dormand-Prince 5(4) tableau.
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                  187 / 2100, 1 / 40])
DP_E = DP_B5 - DP_B4

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_MIN_STEP = 1e-8


class IntegrationError(RuntimeError):
    """Integration failure; carries the time at which it occurred."""

    def __init__(self, t_fail: float, message: str):
        self.t_fail = t_fail
        super().__init__(f"{message} (at t = {t_fail:.6g} fs)")


def _error_norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    q = np.abs(err) / scale
    return float(np.sqrt(np.mean(q * q)))


def _initial_step(f, t0, y0, f0, rtol, atol, max_step):
    # Hairer-Norsett-Wanner heuristic, truncated to the hard cap.
    scale = atol + rtol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((np.abs(y0) / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((np.abs(f0) / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = float(np.sqrt(np.mean((np.abs(f1 - f0) / scale) ** 2))) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, max_step)


def integrate_to_checkpoints(f, y0: np.ndarray, t0: float, checkpoints,
                             rtol: float = 1e-9, atol: float = 1e-12,
                             max_step: float = np.inf, on_checkpoint=None,
                             first_step: float | None = None):
    """Propagate dy/dt = f(t, y) from t0 through an ascending checkpoint list.

    The solver lands exactly on each checkpoint, calls
    ``on_checkpoint(index, t, y)`` there if given, and returns the final
    state. When no callback is supplied the states at all checkpoints are
    returned as one stacked array instead.

    Raises IntegrationError on step-size underflow.
    """
    checkpoints = np.atleast_1d(np.asarray(checkpoints, dtype=float))
    if checkpoints.size and np.any(np.diff(checkpoints) < 0):
        raise ValueError("checkpoints must be ascending")
    if checkpoints.size and checkpoints[0] < t0 - 1e-12:
        raise ValueError("checkpoints must not precede t0")

    y = np.array(y0, dtype=complex, copy=True)
    t = float(t0)
    collect = None if on_checkpoint is not None else []

    k1 = f(t, y)
    h = first_step if first_step is not None else _initial_step(f, t, y, k1, rtol, atol, max_step)
    h = min(h, max_step)

    for idx, t_stop in enumerate(checkpoints):
        while t < t_stop - 1e-12 * max(1.0, abs(t_stop)):
            h = min(h, max_step, t_stop - t)
            if h < _MIN_STEP:
                raise IntegrationError(t, "step size underflow")
            ks = [k1]
            for i in range(1, 7):
                yi = y + h * sum(a * k for a, k in zip(DP_A[i], ks))
                ks.append(f(t + DP_C[i] * h, yi))
            y5 = y + h * sum(b * k for b, k in zip(DP_B5, ks) if b != 0.0)
            err = h * sum(e * k for e, k in zip(DP_E, ks) if e != 0.0)
            enorm = _error_norm(err, y, y5, rtol, atol)
            if enorm <= 1.0:
                t = t + h
                y = y5
                k1 = ks[6]  # FSAL
                factor = _MAX_FACTOR if enorm == 0.0 else min(
                    _MAX_FACTOR, _SAFETY * enorm ** -0.2)
                h *= max(_MIN_FACTOR, factor)
            else:
                h *= max(_MIN_FACTOR, _SAFETY * enorm ** -0.2)
        t = float(t_stop)
        if on_checkpoint is not None:
            on_checkpoint(idx, t, y)
        else:
            collect.append(y.copy())

    if on_checkpoint is not None:
        return y
    return np.stack(collect) if collect else np.empty((0,) + y.shape, dtype=complex)


def drive_adaptive(step, y: np.ndarray, t0: float, checkpoints,
                   rtol: float, atol: float, max_step: float = np.inf,
                   on_checkpoint=None, first_step: float | None = None):
    """Shared step-size controller for fused single-call steppers.

    `step(t, h, y, y_new) -> err_norm` must write the trial state into
    y_new and return the scaled error norm (<= 1 accepts). The driver
    lands exactly on every checkpoint; same accept/reject and step-size
    rules as integrate_to_checkpoints.
    """
    checkpoints = np.atleast_1d(np.asarray(checkpoints, dtype=float))
    if checkpoints.size and np.any(np.diff(checkpoints) < 0):
        raise ValueError("checkpoints must be ascending")
    y = np.array(y, dtype=complex, copy=True)
    y_new = np.empty_like(y)
    t = float(t0)
    span = float(checkpoints[-1] - t0) if checkpoints.size else 0.0
    h = first_step if first_step is not None else min(max_step, 1.0, max(span, 1e-3))
    collect = None if on_checkpoint is not None else []

    for idx, t_stop in enumerate(checkpoints):
        while t < t_stop - 1e-12 * max(1.0, abs(t_stop)):
            h = min(h, max_step, t_stop - t)
            if h < _MIN_STEP:
                raise IntegrationError(t, "step size underflow")
            enorm = step(t, h, y, y_new)
            if enorm <= 1.0:
                t = t + h
                y, y_new = y_new, y
                factor = _MAX_FACTOR if enorm == 0.0 else min(
                    _MAX_FACTOR, _SAFETY * enorm ** -0.2)
                h *= max(_MIN_FACTOR, factor)
            else:
                h *= max(_MIN_FACTOR, _SAFETY * enorm ** -0.2)
        t = float(t_stop)
        if on_checkpoint is not None:
            on_checkpoint(idx, t, y)
        else:
            collect.append(y.copy())

    if on_checkpoint is not None:
        return y
    return np.stack(collect) if collect else np.empty((0,) + y.shape, dtype=complex)


def step_cap(omega: float, max_coupling_mev: float, hbar: float) -> float:
    """Hard cap dt <= 2*pi / (20 * max(omega, coupling/hbar)).

    Guarantees oscillating coefficients are resolved by the integrator
    regardless of the error estimate.
    """
    rate = max(omega, max_coupling_mev / hbar)
    if rate <= 0.0:
        return np.inf
    return 2.0 * np.pi / (20.0 * rate)
