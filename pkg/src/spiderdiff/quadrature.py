"""Adaptive Gauss-Legendre panel quadrature for vector-valued integrands.

The integrand maps an array of nodes (m,) to values of shape (m,) or
(m, P); the P trailing components are integrated simultaneously (used to
evaluate kernels on whole target grids in one pass).  Panels are split
until the local deviation between a parent estimate and the sum of its
children is below a width-proportional share of the tolerance.
"""

import math

import numpy as np

_gl_cache = {}


class QuadratureError(RuntimeError):
    def __init__(self, message, achieved):
        super().__init__(message)
        self.achieved = achieved


def _nodes(n):
    if n not in _gl_cache:
        _gl_cache[n] = np.polynomial.legendre.leggauss(n)
    return _gl_cache[n]


def _panel(f, a, b, n):
    z, w = _nodes(n)
    half = 0.5 * (b - a)
    u = a + half * (z + 1.0)
    vals = np.asarray(f(u), dtype=float)
    return half * np.tensordot(w, vals, axes=(0, 0))


def adaptive_gl_trig(f, T, a=0.0, tol=1e-8, n=16, max_depth=40):
    """Integrate f over (a, T) with the substitution u = T sin^2(theta).

    The Jacobian 2 T sin cos vanishes linearly at u = 0 and u = T, which
    regularizes the inverse-square-root endpoint singularities of
    first-passage and last-zero time integrals.
    """
    if T <= a:
        probe = np.asarray(f(np.array([max(T, 0.0)])), dtype=float)
        return np.zeros(probe.shape[1:]), 0.0

    def g(theta):
        s, c = np.sin(theta), np.cos(theta)
        u = T * s * s
        vals = np.asarray(f(u), dtype=float)
        jac = 2.0 * T * s * c
        return vals * jac.reshape((-1,) + (1,) * (vals.ndim - 1))

    theta0 = math.asin(math.sqrt(a / T)) if a > 0 else 0.0
    return adaptive_gl(g, theta0, 0.5 * math.pi, tol=tol, n=n,
                       max_depth=max_depth)


def adaptive_gl(f, a, b, tol=1e-8, n=16, max_depth=40):
    """Integrate f over (a, b); returns (value, error_estimate).

    tol is an absolute tolerance on the whole interval, distributed over
    panels by width.  Raises QuadratureError when the panel budget is
    exhausted before the tolerance is met.
    """
    if b <= a:
        z, _ = _nodes(n)
        probe = np.asarray(f(np.array([a])), dtype=float)
        return np.zeros(probe.shape[1:]), 0.0
    total = None
    err_total = 0.0
    stack = [(a, b, _panel(f, a, b, n), 0)]
    while stack:
        pa, pb, coarse, depth = stack.pop()
        mid = 0.5 * (pa + pb)
        left = _panel(f, pa, mid, n)
        right = _panel(f, mid, pb, n)
        fine = left + right
        dev = float(np.max(np.abs(fine - coarse)))
        budget = tol * (pb - pa) / (b - a)
        if dev <= budget or depth >= max_depth:
            total = fine if total is None else total + fine
            err_total += dev
        else:
            stack.append((pa, mid, left, depth + 1))
            stack.append((mid, pb, right, depth + 1))
    if err_total > tol:
        raise QuadratureError(
            "quadrature error estimate %g exceeds tolerance %g"
            % (err_total, tol), err_total)
    return total, err_total
