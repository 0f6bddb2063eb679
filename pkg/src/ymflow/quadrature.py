"""Quadrature on graded time meshes, including integrable endpoint singularities."""
from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_trapezoid


def cumulative(t: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid integral from t[0], first entry 0 (leading axis is time)."""
    return cumulative_trapezoid(f, t, axis=0, initial=0.0)


def weighted_cumulative(t: np.ndarray, f: np.ndarray, q: float) -> np.ndarray:
    """Cumulative integral of s^q f(s) from 0, for q > -1 and t[0] = 0.

    Uses the substitution u = s^(1+q), so that s^q ds = du / (1+q), followed by
    the trapezoid rule in u.  This removes the endpoint singularity when q < 0.
    """
    if q <= -1:
        raise ValueError("weight exponent must exceed -1")
    t = np.asarray(t, dtype=float)
    u = t ** (1.0 + q)
    return cumulative_trapezoid(f, u, axis=0, initial=0.0) / (1.0 + q)


def weighted_integral(t, f, q) -> float:
    return float(weighted_cumulative(t, f, q)[-1])


def richardson_error(t: np.ndarray, f: np.ndarray, q: float) -> float:
    """Error estimate |I_h - I_2h| / 3 of weighted_integral from every-other-node quadrature."""
    t = np.asarray(t)
    f = np.asarray(f)
    if t.size < 5:
        return float("nan")
    fine = weighted_integral(t, f, q)
    idx = np.arange(0, t.size, 2)
    if idx[-1] != t.size - 1:
        idx = np.append(idx, t.size - 1)
    coarse = weighted_integral(t[idx], f[idx], q)
    return abs(fine - coarse) / 3.0


def central_derivative(t: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Second-order derivative at interior nodes of a non-uniform mesh (leading axis)."""
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    h0 = t[1:-1] - t[:-2]
    h1 = t[2:] - t[1:-1]
    shape = (-1,) + (1,) * (f.ndim - 1)
    h0 = h0.reshape(shape)
    h1 = h1.reshape(shape)
    return (
        -h1 / (h0 * (h0 + h1)) * f[:-2]
        + (h1 - h0) / (h0 * h1) * f[1:-1]
        + h0 / (h1 * (h0 + h1)) * f[2:]
    )
