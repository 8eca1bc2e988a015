"""Exact transition kernels of the Brownian spider (sigma = 1, b = 0).

Building block: the joint density g(x, ell, s) of (position, vertex
local time, last vertex visit) over a horizon t.  Two variants are
carried side by side:

* "printed": g = (2/sqrt(2 pi s^3)) exp(-ell^2/2s)
                 * (x/sqrt(2 pi (t-s)^3)) exp(-x^2/(2(t-s))),
* "local-time-weighted": the same expression times ell, which is the
  classical statement of the triple law.

The normalization check and the Monte Carlo cross-validation decide
which variant is the law; see the verification report.  Kernels keep the
no-vertex-visit contribution as an explicit atom at (ell = 0, j = source
branch) rather than folding it into a density.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .quadrature import adaptive_gl, adaptive_gl_trig

SQRT2PI = math.sqrt(2.0 * math.pi)

VARIANTS = ("printed", "local-time-weighted")
CONVENTIONS = ("printed", "elapsed")


def triple_density(x, ell, s, t, variant="printed"):
    """Joint density factor g(x, ell, s) over horizon t (see module doc)."""
    if variant not in VARIANTS:
        raise ValueError("unknown variant %r" % (variant,))
    x = np.asarray(x, dtype=float)
    ell = np.asarray(ell, dtype=float)
    s = np.asarray(s, dtype=float)
    x, ell, s = np.broadcast_arrays(x, ell, s)
    out = np.zeros(x.shape)
    m = (s > 0) & (s < t) & (x > 0) & (ell > 0)
    if np.any(m):
        sm, xm, lm = s[m], x[m], ell[m]
        rem = t - sm
        val = (2.0 / (SQRT2PI * sm ** 1.5) * np.exp(-lm * lm / (2.0 * sm))
               * xm / (SQRT2PI * rem ** 1.5) * np.exp(-xm * xm / (2.0 * rem)))
        if variant == "local-time-weighted":
            val = val * lm
        out[m] = val
    return out


def triple_density_mass(t, variant="printed", s_min=0.0, tol=1e-8,
                        x_cap=None, l_cap=None):
    """Mass of the triple density over (x, ell) x (s_min, t) by quadrature.

    The printed variant has divergent mass as s_min -> 0 (the s-integrand
    behaves like 1/s); the local-time-weighted variant integrates to 1.
    Callers probing the printed variant must pass s_min > 0.
    """
    if x_cap is None:
        x_cap = 12.0 * math.sqrt(t)
    if l_cap is None:
        l_cap = 12.0 * math.sqrt(t)

    def over_s(s):
        rem = t - s
        iy, _ = adaptive_gl(
            lambda x: (x[:, None] / (SQRT2PI * rem[None, :] ** 1.5)
                       * np.exp(-x[:, None] ** 2 / (2 * rem[None, :]))),
            0.0, x_cap, tol=tol)

        def l_factor(ell):
            base = (2.0 / (SQRT2PI * s[None, :] ** 1.5)
                    * np.exp(-ell[:, None] ** 2 / (2 * s[None, :])))
            if variant == "local-time-weighted":
                base = base * ell[:, None]
            return base

        il, _ = adaptive_gl(l_factor, 0.0, l_cap, tol=tol)
        return iy * il

    val, _ = adaptive_gl_trig(over_s, t, a=s_min, tol=max(tol, 1e-7))
    return float(val)


def first_passage_density(u, x):
    """Density of the first vertex hitting time from radial x > 0.

    The standard form x exp(-x^2/(2u)) / sqrt(2 pi u^3).  (An
    alternative convention omits the factor 1/2 in the exponent; the
    closed-form atom mass 2 Phi(x/sqrt(tau)) - 1 and the normalization
    checks single out the standard convention, which is used here.)
    """
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    m = u > 0
    um = u[m]
    out[m] = x * np.exp(-x * x / (2.0 * um)) / (SQRT2PI * um ** 1.5)
    return out


def _alpha_rows(alpha, j, t_args, lvals):
    """alpha_j evaluated at a list of times against an l-array: (m, P)."""
    out = np.empty((len(t_args), len(lvals)))
    for r, tv in enumerate(t_args):
        a = alpha(float(tv), lvals)
        out[r] = np.broadcast_to(a[j - 1], lvals.shape)
    return out


def _check_brownian(cs):
    for i in range(cs.I):
        for t, x, l in ((0.0, 0.5, 0.0), (0.3, 1.7, 2.1)):
            if abs(float(np.asarray(cs.sigma[i](t, np.asarray(x), np.asarray(l)))) - 1.0) > 1e-12:
                raise ValueError("kernels require sigma identically 1")
            if abs(float(np.asarray(cs.b[i](t, np.asarray(x), np.asarray(l))))) > 1e-12:
                raise ValueError("kernels require b identically 0")


@dataclass
class JunctionKernel:
    """Transition kernel from the vertex with accrued local time l.

    Continuous in (y, j, ell); no atom (the vertex is visited at once).
    time_convention selects the time argument of the spinning weights:
    "printed" evaluates alpha at the start time s, "elapsed" at the last
    vertex visit s + u inside the time integral.
    """

    cs: object
    s: float
    l: float
    t: float
    variant: str = "printed"
    time_convention: str = "printed"
    tol: float = 1e-8

    def __post_init__(self):
        if self.t <= self.s:
            raise ValueError("need t > s")
        if self.time_convention not in CONVENTIONS:
            raise ValueError("unknown time convention %r" % (self.time_convention,))
        _check_brownian(self.cs)
        self.tau = self.t - self.s

    @property
    def atom_mass(self):
        return 0.0

    def density(self, y, ell, j):
        """Continuous part q(y, j, ell); broadcasts over y and ell."""
        y = np.asarray(y, dtype=float)
        ell = np.asarray(ell, dtype=float)
        y, ell = np.broadcast_arrays(y, ell)
        shape = y.shape
        yf, lf = y.reshape(-1), ell.reshape(-1)
        lshift = self.l + lf

        def integrand(u):
            gv = triple_density(yf[None, :], lf[None, :], u[:, None],
                                self.tau, self.variant)
            if self.time_convention == "printed":
                t_args = [self.s] * len(u)
            else:
                t_args = self.s + u
            return gv * _alpha_rows(self.cs.alpha, j, t_args, lshift)

        val, _ = adaptive_gl_trig(integrand, self.tau, tol=self.tol)
        return val.reshape(shape)

    def cell_masses(self, y_edges, l_edges, j, n_nodes=8):
        """Integrated density over rectangles y_edges x l_edges: 2-d array.

        The density factorizes in (y, ell) at each time node, so every
        cell mass is an outer product of 1-d cell integrals under an
        adaptive time quadrature.
        """
        y_edges = np.asarray(y_edges, dtype=float)
        l_edges = np.asarray(l_edges, dtype=float)
        z, wz = np.polynomial.legendre.leggauss(n_nodes)
        ny, nl = len(y_edges) - 1, len(l_edges) - 1
        yh = 0.5 * np.diff(y_edges)
        lh = 0.5 * np.diff(l_edges)
        ynodes = (0.5 * (y_edges[:-1] + y_edges[1:])[:, None]
                  + yh[:, None] * z[None, :])
        lnodes = (0.5 * (l_edges[:-1] + l_edges[1:])[:, None]
                  + lh[:, None] * z[None, :])
        ywts = yh[:, None] * wz[None, :]
        lwts = lh[:, None] * wz[None, :]
        lflat = lnodes.reshape(-1)
        lshift = self.l + lflat
        tau = self.tau

        def over_u(u):
            rem = tau - u
            yfac = (ynodes.reshape(-1)[None, :] / (SQRT2PI * rem[:, None] ** 1.5)
                    * np.exp(-ynodes.reshape(-1)[None, :] ** 2
                             / (2.0 * rem[:, None])))
            iy = (yfac.reshape(len(u), ny, n_nodes)
                  * ywts[None]).sum(axis=2)
            lfac = (2.0 / (SQRT2PI * u[:, None] ** 1.5)
                    * np.exp(-lflat[None, :] ** 2 / (2.0 * u[:, None])))
            if self.variant == "local-time-weighted":
                lfac = lfac * lflat[None, :]
            if self.time_convention == "printed":
                t_args = [self.s] * len(u)
            else:
                t_args = self.s + u
            lfac = lfac * _alpha_rows(self.cs.alpha, j, t_args, lshift)
            il = (lfac.reshape(len(u), nl, n_nodes)
                  * lwts[None]).sum(axis=2)
            return (iy[:, :, None] * il[:, None, :]).reshape(len(u), ny * nl)

        val, _ = adaptive_gl_trig(over_u, tau, tol=self.tol)
        return val.reshape(ny, nl)

    def branch_masses(self, y_cap=None, l_cap=None):
        """Total mass per branch on a truncated domain (simplex if exact)."""
        if y_cap is None:
            y_cap = 10.0 * math.sqrt(self.tau)
        if l_cap is None:
            l_cap = 10.0 * math.sqrt(self.tau)
        edges_y = _geometric_edges(y_cap)
        edges_l = _geometric_edges(l_cap)
        return np.array([
            float(np.sum(self.cell_masses(edges_y, edges_l, j, n_nodes=12)))
            for j in range(1, self.cs.I + 1)])

    def total_mass(self, **kw):
        return float(np.sum(self.branch_masses(**kw)))


def _geometric_edges(cap, n=10, ratio=2.0):
    """Panel edges refined toward 0: cap / ratio^k."""
    e = [cap]
    for _ in range(n - 1):
        e.append(e[-1] / ratio)
    e.append(0.0)
    return np.array(sorted(e))


@dataclass
class GeneralKernel:
    """Transition kernel from radial x > 0 on branch i with local time l.

    Mixed measure: an atom at (j = i, ell = 0) carrying the no-visit
    probability with the killed heat kernel in y, plus a continuous part
    from first passage composed with the junction kernel.
    """

    cs: object
    s: float
    x: float
    i: int
    l: float
    t: float
    variant: str = "printed"
    tol: float = 1e-8

    def __post_init__(self):
        if self.t <= self.s:
            raise ValueError("need t > s")
        if self.x <= 0:
            raise ValueError("need x > 0 (use JunctionKernel from the vertex)")
        _check_brownian(self.cs)
        self.tau = self.t - self.s
        # substitution u = x^2 / w maps the first-passage integral to
        # int e^{-w/2} / sqrt(2 pi w) * h(x^2/w) dw on (x^2/tau, inf)
        self.w_lo = self.x * self.x / self.tau
        self.w_hi = self.w_lo + 90.0

    def atom_density(self, y):
        """Killed heat kernel on the source branch (density in y at ell=0)."""
        y = np.asarray(y, dtype=float)
        tau = self.tau
        out = (np.exp(-(y - self.x) ** 2 / (2 * tau))
               - np.exp(-(y + self.x) ** 2 / (2 * tau))) / (SQRT2PI * math.sqrt(tau))
        return np.where(y > 0, out, 0.0)

    @property
    def atom_mass(self):
        """Numeric integral of the atom density (closed form 2 Phi - 1)."""
        val, _ = adaptive_gl(self.atom_density, 0.0,
                             self.x + 10.0 * math.sqrt(self.tau), tol=1e-10)
        return float(val)

    @property
    def atom_mass_exact(self):
        return 2.0 * float(ndtr(self.x / math.sqrt(self.tau))) - 1.0

    def _inner(self, u, yf, lf, j):
        """Junction-kernel integrand after first passage at elapsed time u."""
        h = self.tau - u
        lshift = self.l + lf

        def integrand(v):
            gv = triple_density(yf[None, :], lf[None, :], v[:, None],
                                h, self.variant)
            t_args = self.s + u + v
            return gv * _alpha_rows(self.cs.alpha, j, t_args, lshift)

        val, _ = adaptive_gl_trig(integrand, h, tol=self.tol)
        return val

    def density(self, y, ell, j):
        """Continuous part q(y, j, ell); broadcasts over y and ell."""
        y = np.asarray(y, dtype=float)
        ell = np.asarray(ell, dtype=float)
        y, ell = np.broadcast_arrays(y, ell)
        shape = y.shape
        yf, lf = y.reshape(-1), ell.reshape(-1)

        def outer(w):
            rows = np.empty((len(w), yf.size))
            for r, wv in enumerate(w):
                u = self.x * self.x / wv
                rows[r] = (math.exp(-wv / 2.0) / (SQRT2PI * math.sqrt(wv))
                           * self._inner(u, yf, lf, j))
            return rows

        val, _ = adaptive_gl(outer, self.w_lo, self.w_hi, tol=self.tol, n=12)
        return val.reshape(shape)

    def _crosssection_mass(self, h, weight_alpha=None, l_cap=None, y_cap=None):
        """Mass of the junction kernel over horizon h by nested quadrature.

        The density factorizes in (y, ell), so the (y, ell) integral is a
        product of two 1-d integrals per time node.  weight_alpha = (j,
        elapsed time offset) weights the ell-integral by the spinning
        measure; None integrates the branch sum (= 1 by the simplex).
        """
        if h <= 0:
            return 0.0
        if y_cap is None:
            y_cap = 12.0 * math.sqrt(h)
        if l_cap is None:
            l_cap = 12.0 * math.sqrt(h)

        def over_v(v):
            # the density factorizes: y-factor and ell-factor integrate
            # independently for each time node v
            rem = h - v
            iy, _ = adaptive_gl(
                lambda y: (y[:, None] / (SQRT2PI * rem[None, :] ** 1.5)
                           * np.exp(-y[:, None] ** 2 / (2 * rem[None, :]))),
                0.0, y_cap, tol=self.tol)

            def l_factor(ell):
                base = (2.0 / (SQRT2PI * v[None, :] ** 1.5)
                        * np.exp(-ell[:, None] ** 2 / (2 * v[None, :])))
                if self.variant == "local-time-weighted":
                    base = base * ell[:, None]
                if weight_alpha is not None:
                    j, t_off = weight_alpha
                    a = _alpha_rows(self.cs.alpha, j, t_off + v,
                                    self.l + ell)
                    base = base * a.T
                return base

            il, _ = adaptive_gl(l_factor, 0.0, l_cap, tol=self.tol)
            return iy * il

        val, _ = adaptive_gl_trig(over_v, h, tol=self.tol)
        return float(val)

    def continuous_mass(self):
        """Total continuous mass: first-passage integral of section masses."""
        def outer(w):
            out = np.empty(len(w))
            for r, wv in enumerate(w):
                u = self.x * self.x / wv
                out[r] = (math.exp(-wv / 2.0) / (SQRT2PI * math.sqrt(wv))
                          * self._crosssection_mass(self.tau - u))
            return out

        val, _ = adaptive_gl(outer, self.w_lo, self.w_hi, tol=1e-7, n=12)
        return float(val)

    def total_mass(self):
        return self.atom_mass + self.continuous_mass()

    def branch_masses(self, n_outer=48):
        """Continuous mass per branch plus the atom on the source branch.

        Uses a fixed Gauss-Legendre rule in the substituted first-passage
        variable with the alpha-weighted cross-section mass per node; the
        elapsed-time argument inside the cross-section is approximated at
        the node's first-passage time (exact for time-independent alpha).
        """
        z, w = np.polynomial.legendre.leggauss(n_outer)
        half = 0.5 * (self.w_hi - self.w_lo)
        wn = self.w_lo + half * (z + 1.0)
        masses = np.zeros(self.cs.I)
        for j in range(1, self.cs.I + 1):
            acc = 0.0
            for wv, wt in zip(wn, w):
                u = self.x * self.x / wv
                acc += wt * half * (math.exp(-wv / 2.0) / (SQRT2PI * math.sqrt(wv))
                                    * self._crosssection_mass(
                                        self.tau - u,
                                        weight_alpha=(j, self.s + u)))
            masses[j - 1] = acc
        masses[self.i - 1] += self.atom_mass
        return masses


def kernel_from_junction(cs, s, l, t, variant="printed",
                         time_convention="printed", tol=1e-8):
    """Kernel from the vertex; see JunctionKernel."""
    return JunctionKernel(cs, s, l, t, variant, time_convention, tol)


def kernel_general(cs, s, x, i, l, t, variant="printed", tol=1e-8):
    """Kernel from a positive radial position; see GeneralKernel."""
    return GeneralKernel(cs, s, x, i, l, t, variant, tol)


def branch_marginal(kernel):
    """Per-branch total mass of a kernel (sums to the total mass)."""
    return kernel.branch_masses()
