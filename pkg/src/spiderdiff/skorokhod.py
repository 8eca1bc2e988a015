"""Discrete Skorokhod reflection and the path functionals built on it.

The reflection map turns a signed driving path y (y_0 >= 0) into the
nonnegative reflected path x = y + ell, where the pusher is the running
max ell_k = max(0, max_{j<=k}(-y_j)).  This is exact for grid paths and
produces exact floating-point zeros whenever the pusher acts, which the
simulator relies on for vertex detection.
"""

import numpy as np


class DrivingPath:
    """Signed path on a strictly increasing grid, y_0 >= 0."""

    def __init__(self, times, y):
        self.times = np.asarray(times, dtype=float)
        self.y = np.asarray(y, dtype=float)
        if self.y.shape != self.times.shape:
            raise ValueError("times and y must have the same shape")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("time grid must be strictly increasing")
        if self.y[0] < 0:
            raise ValueError("driving path must start nonnegative")


def reflect(y):
    """Skorokhod map: returns (x, ell) with x = y + ell >= 0.

    y may be a DrivingPath, a 1-d array, or a 2-d array (paths in rows,
    reflected along the last axis).
    """
    if isinstance(y, DrivingPath):
        arr = y.y
    else:
        arr = np.asarray(y, dtype=float)
    if np.any(arr[..., 0] < 0):
        raise ValueError("driving path must start nonnegative")
    ell = np.maximum.accumulate(-arr, axis=-1)
    np.maximum(ell, 0.0, out=ell)
    x = arr + ell
    return x, ell


def modulus(times, values, theta):
    """sup |f(u) - f(s)| over grid pairs with |u - s| <= theta."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if not 0 < theta:
        raise ValueError("theta must be positive")
    n = len(times)
    best = 0.0
    j = 0
    # sliding window: for each left endpoint extend while within theta
    for i in range(n):
        if j < i + 1:
            j = i + 1
        while j < n and times[j] - times[i] <= theta:
            j += 1
        if j > i + 1:
            window = values[i:j]
            best = max(best, window.max() - window.min())
    return best


def occupation_below(times, x, eps):
    """Left-endpoint Riemann sum of 1_{x(u) < eps} du over the grid."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    times = np.asarray(times, dtype=float)
    x = np.asarray(x, dtype=float)
    dt = np.diff(times)
    return float(np.sum(dt * (x[:-1] < eps)))


def flat_off_zero_defect(path, delta):
    """Total local-time mass accrued on steps staying above delta.

    The discrete surrogate of "local time grows only at the vertex":
    sums the local-time increments of steps whose minimum radial part
    exceeds delta.  Zero for any path produced by reflect().
    """
    if delta <= path.zero_tol:
        raise ValueError("delta must exceed the path zero tolerance")
    dl = np.diff(path.l)
    step_min = np.minimum(path.x[:-1], path.x[1:])
    return float(np.sum(dl[step_min > delta]))
