"""Built-in coefficient families and terminal-data presets.

Families are loadable from JSON configs: "constant", "affine-in-l",
"trig-in-t", plus the "brownian-spider" preset (sigma = 1, b = 0) with a
constant or l-dependent spinning measure.  Arbitrary coefficients are
only available through the library API.
"""

import math

import numpy as np

from .junction import CoefficientBounds, CoefficientSet
from .pde import TerminalData

DEFAULT_A_LOWER = 0.2
DEFAULT_SIGMA_LOWER = 0.5


def _const(v):
    f = lambda t, x, l: v
    f.constant_value = float(v)
    return f


def constant_coefficients(I, sigma, b, alpha, a_lower=None, sigma_lower=None):
    """Branch-wise constant sigma/b and a fixed spinning vector."""
    sigma = [float(s) for s in sigma]
    b = [float(v) for v in b]
    alpha = np.asarray(alpha, dtype=float)
    if len(sigma) != I or len(b) != I or alpha.shape != (I,):
        raise ValueError("need I entries for sigma, b and alpha")
    if abs(alpha.sum() - 1.0) > 1e-12 or alpha.min() <= 0:
        raise ValueError("alpha must lie in the open simplex")
    if a_lower is None:
        a_lower = min(float(alpha.min()), 1.0 / I)
    if sigma_lower is None:
        sigma_lower = min(sigma)
    bounds = CoefficientBounds(a_lower=a_lower, sigma_lower=sigma_lower,
                               lip_b=max(max(abs(v) for v in b), 1.0),
                               lip_sigma=max(max(sigma), 1.0))
    alpha_fn = lambda t, l: alpha
    return CoefficientSet(I=I, sigma=tuple(_const(s) for s in sigma),
                          b=tuple(_const(v) for v in b), alpha=alpha_fn,
                          bounds=bounds)


def l_dependent_alpha(I):
    """alpha_1(t, l) = 0.3 + 0.3/(1 + l), the rest splitting the remainder."""
    def alpha(t, l):
        l = np.asarray(l, dtype=float)
        a1 = 0.3 + 0.3 / (1.0 + l)
        rest = (1.0 - a1) / (I - 1)
        return np.stack([a1] + [rest] * (I - 1))

    return alpha


def brownian_spider(I=2, alpha_mode="constant", alpha=None):
    """sigma = 1, b = 0; alpha constant (uniform by default) or l-dependent."""
    if alpha_mode == "constant":
        if alpha is None:
            alpha = [1.0 / I] * I
        return constant_coefficients(I, [1.0] * I, [0.0] * I, alpha)
    if alpha_mode != "l-dependent":
        raise ValueError("alpha_mode must be constant or l-dependent")
    bounds = CoefficientBounds(a_lower=min(0.3, 0.2 / (I - 1)), sigma_lower=0.5,
                               lip_b=1.0, lip_sigma=1.0)
    return CoefficientSet(I=I, sigma=(_const(1.0),) * I, b=(_const(0.0),) * I,
                          alpha=l_dependent_alpha(I), bounds=bounds)


def affine_in_l(I, sigma0, sigma1, b0, b1, alpha0, alpha1, l_cap=5.0,
                a_lower=None, sigma_lower=None):
    """Coefficients affine in l up to a saturation cap l_cap.

    sigma_i = sigma0_i + sigma1_i * min(l, l_cap) (likewise b); the
    spinning vector is alpha0 + alpha1 * min(l, l_cap), renormalized.
    Parameters must keep sigma positive and the weights positive on
    [0, l_cap]; validate_coefficients catches violations.
    """
    sigma0, sigma1 = list(map(float, sigma0)), list(map(float, sigma1))
    b0, b1 = list(map(float, b0)), list(map(float, b1))
    alpha0 = np.asarray(alpha0, dtype=float)
    alpha1 = np.asarray(alpha1, dtype=float)

    def make_sigma(i):
        return lambda t, x, l: sigma0[i] + sigma1[i] * np.minimum(l, l_cap)

    def make_b(i):
        return lambda t, x, l: b0[i] + b1[i] * np.minimum(l, l_cap)

    def alpha(t, l):
        l = np.asarray(l, dtype=float)
        raw = alpha0[:, None] + alpha1[:, None] * np.minimum(l, l_cap)[None]
        return raw / raw.sum(axis=0)

    lo = []
    for lv in (0.0, l_cap):
        raw = alpha0 + alpha1 * lv
        lo.append((raw / raw.sum()).min())
    lo_sig = min(s0 + s1 * lv for s0, s1 in zip(sigma0, sigma1)
                 for lv in (0.0, l_cap))
    if a_lower is None:
        a_lower = min(min(lo), 1.0 / I)
    if sigma_lower is None:
        sigma_lower = lo_sig
    bounds = CoefficientBounds(a_lower=a_lower, sigma_lower=sigma_lower,
                               lip_b=max(max(map(abs, b0 + b1)), 1.0),
                               lip_sigma=max(max(sigma0 + list(map(abs, sigma1))), 1.0))
    return CoefficientSet(I=I, sigma=tuple(make_sigma(i) for i in range(I)),
                          b=tuple(make_b(i) for i in range(I)),
                          alpha=alpha, bounds=bounds)


def trig_in_t(I, sigma0, sigma1, b0, b1, alpha0, alpha1, omega=2.0 * math.pi,
              a_lower=None, sigma_lower=None):
    """Time-periodic coefficients: base + amplitude * sin/cos(omega t)."""
    sigma0, sigma1 = list(map(float, sigma0)), list(map(float, sigma1))
    b0, b1 = list(map(float, b0)), list(map(float, b1))
    alpha0 = np.asarray(alpha0, dtype=float)
    alpha1 = np.asarray(alpha1, dtype=float)

    def make_sigma(i):
        return lambda t, x, l: (sigma0[i] + sigma1[i] * math.sin(omega * t)) * np.ones_like(np.asarray(x, dtype=float))

    def make_b(i):
        return lambda t, x, l: (b0[i] + b1[i] * math.cos(omega * t)) * np.ones_like(np.asarray(x, dtype=float))

    def alpha(t, l):
        raw = alpha0 + alpha1 * math.sin(omega * t)
        raw = raw / raw.sum()
        l = np.asarray(l, dtype=float)
        return raw[:, None] * np.ones_like(l)[None]

    if a_lower is None:
        worst = min(((alpha0 + s * alpha1) / (alpha0 + s * alpha1).sum()).min()
                    for s in (-1.0, 0.0, 1.0))
        a_lower = min(worst, 1.0 / I)
    if sigma_lower is None:
        sigma_lower = min(s0 - abs(s1) for s0, s1 in zip(sigma0, sigma1))
    bounds = CoefficientBounds(a_lower=a_lower, sigma_lower=sigma_lower,
                               lip_b=max(max(map(abs, b0 + b1)), 1.0),
                               lip_sigma=max(max(sigma0 + list(map(abs, sigma1))), 1.0))
    return CoefficientSet(I=I, sigma=tuple(make_sigma(i) for i in range(I)),
                          b=tuple(make_b(i) for i in range(I)),
                          alpha=alpha, bounds=bounds)


_FAMILIES = {"constant", "affine-in-l", "trig-in-t", "brownian-spider"}


def coefficients_from_config(cfg):
    """Build a CoefficientSet from a JSON-style dict with a "family" key."""
    cfg = dict(cfg)
    family = cfg.pop("family", None)
    if family not in _FAMILIES:
        raise ValueError("unknown coefficient family %r (known: %s)"
                         % (family, ", ".join(sorted(_FAMILIES))))
    if family == "constant":
        return constant_coefficients(**cfg)
    if family == "brownian-spider":
        return brownian_spider(**cfg)
    if family == "affine-in-l":
        return affine_in_l(**cfg)
    return trig_in_t(**cfg)


# ---------------------------------------------------------------------------
# terminal-data presets for the PDE solver


def terminal_constant(I, c=1.0):
    zero = lambda x, l: np.zeros(np.broadcast(np.asarray(x), np.asarray(l)).shape)
    cf = lambda x, l: np.full(np.broadcast(np.asarray(x), np.asarray(l)).shape, float(c))
    return TerminalData(I=I, g=(cf,) * I, gx=(zero,) * I, gl=(zero,) * I)


def terminal_x_minus_l(I):
    g = lambda x, l: np.asarray(x, dtype=float) - np.asarray(l, dtype=float) \
        + np.zeros(np.broadcast(np.asarray(x), np.asarray(l)).shape)
    one = lambda x, l: np.ones(np.broadcast(np.asarray(x), np.asarray(l)).shape)
    mone = lambda x, l: -np.ones(np.broadcast(np.asarray(x), np.asarray(l)).shape)
    return TerminalData(I=I, g=(g,) * I, gx=(one,) * I, gl=(mone,) * I)


def terminal_neumann_bump(I):
    """g_i(x, l) = exp(-x^2): l-independent with zero vertex slope."""
    g = lambda x, l: np.exp(-np.asarray(x, dtype=float) ** 2) \
        + np.zeros(np.broadcast(np.asarray(x), np.asarray(l)).shape)
    gx = lambda x, l: -2.0 * np.asarray(x, dtype=float) * np.exp(-np.asarray(x, dtype=float) ** 2) \
        + np.zeros(np.broadcast(np.asarray(x), np.asarray(l)).shape)
    zero = lambda x, l: np.zeros(np.broadcast(np.asarray(x), np.asarray(l)).shape)
    return TerminalData(I=I, g=(g,) * I, gx=(gx,) * I, gl=(zero,) * I)


def terminal_compatible_bump(cs, T, weights=None):
    """g_i(x, l) = w_i x e^{-x} + G(l) with G chosen for compatibility.

    G'(l) = -sum_i alpha_i(T, l) w_i makes the terminal data satisfy the
    vertex compatibility condition exactly; G is accumulated by
    quadrature of the spinning weights at the terminal time.
    """
    I = cs.I
    if weights is None:
        weights = [1.0, -1.0] + [0.0] * (I - 2)
    weights = np.asarray(weights, dtype=float)

    # tabulate G on a fine grid and interpolate (alpha may be arbitrary)
    l_tab = np.linspace(0.0, 50.0, 2001)
    rate = cs.alpha_matrix(T, l_tab).T @ weights   # sum_i alpha_i(T,l) w_i
    G_tab = np.concatenate([[0.0], -np.cumsum(
        0.5 * (rate[1:] + rate[:-1]) * np.diff(l_tab))])

    def G(l):
        return np.interp(np.asarray(l, dtype=float), l_tab, G_tab)

    def Gp(l):
        l = np.asarray(l, dtype=float)
        flat = np.atleast_1d(l).reshape(-1)
        out = -(cs.alpha_matrix(T, flat).T @ weights)
        return out.reshape(l.shape)

    def make(w):
        g = lambda x, l, w=w: w * np.asarray(x, dtype=float) * np.exp(-np.asarray(x, dtype=float)) + G(l)
        gx = lambda x, l, w=w: w * (1.0 - np.asarray(x, dtype=float)) * np.exp(-np.asarray(x, dtype=float)) \
            + np.zeros(np.broadcast(np.asarray(x), np.asarray(l)).shape)
        gl = lambda x, l: Gp(l) + np.zeros(np.broadcast(np.asarray(x), np.asarray(l)).shape)
        return g, gx, gl

    parts = [make(w) for w in weights]
    return TerminalData(I=I, g=tuple(p[0] for p in parts),
                        gx=tuple(p[1] for p in parts),
                        gl=tuple(p[2] for p in parts))


_TERMINALS = {"constant": terminal_constant, "x-minus-l": terminal_x_minus_l,
              "neumann-bump": terminal_neumann_bump}


def terminal_from_name(name, cs, T):
    if name == "compatible-bump":
        return terminal_compatible_bump(cs, T)
    if name in _TERMINALS:
        return _TERMINALS[name](cs.I)
    raise ValueError("unknown terminal preset %r" % (name,))
