"""The two-branch face: local-time-dependent skew SDE on the real line.

A spider with I = 2 carries the same information as a signed process
y(t) = (2 i(t) - 3) x(t) (branch 2 = positive half-line) solving a skew
SDE whose skewness parameter beta(s, l) depends on the spinning measure
and the one-sided volatilities at 0.
"""

import math
from dataclasses import dataclass

import numpy as np

from .junction import CoefficientBounds, CoefficientSet, JunctionPoint, SpiderState
from .simulator import simulate_ensemble


@dataclass(frozen=True)
class SkewCoefficients:
    """Real-line data: sigma(t, y, l), b(t, y, l), alpha(t, l) in (0,1).

    sigma_plus / sigma_minus evaluate the one-sided limits at y = 0
    (supplied explicitly; no numerical limit-taking at a discontinuity).
    """

    sigma: object
    b: object
    alpha: object
    sigma_plus: object
    sigma_minus: object
    a_lower: float = 0.1
    sigma_lower: float = 0.1


def beta(s, l, sk):
    """Skewness parameter at (s, l); lies in (-1, 1) under the bounds."""
    a = float(np.asarray(sk.alpha(s, np.asarray(l, dtype=float))))
    sp = float(sk.sigma_plus(s, l))
    sm = float(sk.sigma_minus(s, l))
    if sp <= 0 or sm <= 0:
        raise ValueError("one-sided volatilities must be positive")
    denom = a * sp + (1.0 - a) * sm
    if denom <= 0:
        raise ValueError("degenerate denominator in beta")
    return (a * sp - (1.0 - a) * sm) / denom


def to_spider(sk):
    """Two-branch spider coefficients equivalent to the skew SDE.

    Branch 2 carries the positive half-line: sigma_2(s,x,l) = sigma(s,x,l),
    b_2 = b(s,x,l); branch 1 mirrors the negative half-line:
    sigma_1(s,x,l) = sigma(s,-x,l), b_1 = -b(s,-x,l).  The spinning
    weights tilt alpha by the one-sided volatilities.
    """
    sigma2 = lambda t, x, l: sk.sigma(t, x, l)
    sigma1 = lambda t, x, l: sk.sigma(t, -np.asarray(x, dtype=float), l)
    b2 = lambda t, x, l: sk.b(t, x, l)
    b1 = lambda t, x, l: -np.asarray(sk.b(t, -np.asarray(x, dtype=float), l),
                                     dtype=float)
    # constant skew data keeps the simulator's constant fast path
    sc = getattr(sk.sigma, "constant_value", None)
    bc = getattr(sk.b, "constant_value", None)
    if sc is not None:
        sigma1.constant_value = sigma2.constant_value = sc
    if bc is not None:
        b2.constant_value = bc
        b1.constant_value = -bc

    def alpha(t, l):
        l = np.asarray(l, dtype=float)
        a = np.asarray(sk.alpha(t, l), dtype=float)
        sp = np.asarray(sk.sigma_plus(t, l), dtype=float)
        sm = np.asarray(sk.sigma_minus(t, l), dtype=float)
        denom = a * sp + (1.0 - a) * sm
        a2 = a * sp / denom
        return np.stack([np.broadcast_to(1.0 - a2, l.shape),
                         np.broadcast_to(a2, l.shape)])

    bounds = CoefficientBounds(a_lower=sk.a_lower, sigma_lower=sk.sigma_lower)
    return CoefficientSet(I=2, sigma=(sigma1, sigma2), b=(b1, b2),
                          alpha=alpha, bounds=bounds)


def simulate_skew(sk, y0, cfg, N=1):
    """Simulate the skew SDE through the spider; returns (times, y, l, ens).

    y rows are the signed paths (2 * branch - 3) * x of the underlying
    two-branch ensemble, which is returned as well.
    """
    cs = to_spider(sk)
    branch0 = 2 if y0 > 0 else 1
    init = SpiderState(t=0.0, point=JunctionPoint(branch0, abs(float(y0))), l=0.0)
    ens = simulate_ensemble(cs, init, cfg, N)
    y = (2 * ens.branch - 3) * ens.x
    return ens.times, y, ens.l, ens


def constant_skew(alpha, sigma=1.0, b=0.0):
    """Constant-coefficient skew data (the classical skew BM for b = 0)."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    s = float(sigma)
    sig_fn = lambda t, y, l: s + 0.0 * np.asarray(y, dtype=float)
    b_fn = lambda t, y, l: float(b) + 0.0 * np.asarray(y, dtype=float)
    sig_fn.constant_value = s
    b_fn.constant_value = float(b)
    return SkewCoefficients(
        sigma=sig_fn, b=b_fn,
        alpha=lambda t, l: alpha + 0.0 * np.asarray(l, dtype=float),
        sigma_plus=lambda t, l: s, sigma_minus=lambda t, l: s,
        a_lower=min(alpha, 1 - alpha) * 0.9, sigma_lower=0.9 * s)


def skew_to_csv(times, y, l, fh):
    """One row per (path, time): path_id, t, y, l."""
    fh.write("path_id,t,y,l\n")
    for p in range(y.shape[0]):
        for k in range(y.shape[1]):
            fh.write("%d,%s,%s,%s\n" % (p, repr(float(times[k])),
                                        repr(float(y[p, k])),
                                        repr(float(l[p, k]))))
