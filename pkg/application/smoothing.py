"""Derivative estimation for history-stack entries.

A quadratic is least-squares fitted to each signal over a window of samples
around the target instant, and again over the inner half of that window.
The two slopes are Richardson-combined so the cubic term of the signal drops
out of the estimate. The fit residual gives the standard error used as the
per-entry bound d_j.
"""
from __future__ import annotations
from typing import Optional, Tuple

import numpy as np

from domain.errors import PreconditionError

MIN_SAMPLES = 5


def _quadratic_fit(s: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, float, float, np.ndarray]:
    """(slope, slope variance factor, cubic leakage into the slope, residual)."""
    design = np.column_stack([np.ones_like(s), s, s * s])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 3:
        raise PreconditionError("smoothing window times are degenerate")
    leakage = float(np.linalg.lstsq(design, s ** 3, rcond=None)[0][1])
    factor = float(np.linalg.inv(design.T @ design)[1, 1])
    return coef[1], factor, leakage, y - design @ coef


def smooth_derivative(times: np.ndarray, values: np.ndarray,
                      at: Optional[float] = None) -> Tuple[np.ndarray, float]:
    """Slope of the local quadratic fits at ``at`` (the window centre by default).

    ``values`` is (n,) or (n, k). Returns the derivative with the shape of one
    sample and the root-sum-square of the per-component slope standard errors.
    Windows whose inner half holds fewer than MIN_SAMPLES samples use the
    single full-window fit.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    scalar = y.ndim == 1
    if scalar:
        y = y[:, None]
    if t.ndim != 1 or y.shape[0] != t.size:
        raise PreconditionError(f"times {t.shape} and values {np.shape(values)} do not match")
    if t.size < MIN_SAMPLES:
        raise PreconditionError(f"smoothing window needs at least {MIN_SAMPLES} samples, got {t.size}")
    centre = float(t[t.size // 2]) if at is None else float(at)
    if not t[0] < centre < t[-1]:
        raise PreconditionError(f"target time {centre} is not inside the window [{t[0]}, {t[-1]}]")

    s = t - centre
    slope, factor, leak_out, residual = _quadratic_fit(s, y)
    dof = t.size - 3
    variance = np.sum(residual * residual, axis=0) / dof
    slope_var = variance * factor

    inner = np.abs(s) <= 0.5 * np.abs(s).max() * (1.0 + 1e-9)
    if np.count_nonzero(inner) >= MIN_SAMPLES and np.ptp(s[inner]) > 0.0:
        inner_slope, inner_factor, leak_in, _ = _quadratic_fit(s[inner], y[inner])
        if abs(leak_out - leak_in) > 1e-12 * max(abs(leak_out), 1e-300):
            w_in = leak_out / (leak_out - leak_in)
            w_out = -leak_in / (leak_out - leak_in)
            slope = w_in * inner_slope + w_out * slope
            slope_var = variance * (w_in ** 2 * inner_factor + w_out ** 2 * factor)

    d_err = float(np.sqrt(np.sum(slope_var)))
    return (slope[0] if scalar else slope), d_err


def state_derivative(times: np.ndarray, zetas: np.ndarray) -> Tuple[np.ndarray, float]:
    """Smoothed zeta_dot at the window centre, with the heading unwrapped first."""
    z = np.array(zetas, dtype=float)
    z[:, 2] = np.unwrap(z[:, 2])
    return smooth_derivative(times, z)
