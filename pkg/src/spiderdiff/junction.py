"""Star-graph domain types: points, states, paths, coefficients, test functions.

The state space is I half-lines glued at a single vertex.  A point is a
(branch, radial) pair; all branches meet at radial 0, where the label is
immaterial.  Branch labels are 1-based.
"""

from dataclasses import dataclass, field

import numpy as np

ZERO_TOL = 1e-12


@dataclass(frozen=True)
class JunctionPoint:
    """Point on the star graph: branch label in {1..I}, radial distance >= 0."""

    branch: int
    radial: float

    def __post_init__(self):
        if self.radial < 0:
            raise ValueError("radial must be >= 0, got %r" % (self.radial,))
        if self.branch < 1:
            raise ValueError("branch labels are 1-based, got %r" % (self.branch,))

    def at_vertex(self, tol=ZERO_TOL):
        return self.radial <= tol

    def __eq__(self, other):
        if not isinstance(other, JunctionPoint):
            return NotImplemented
        if self.at_vertex() and other.at_vertex():
            return True
        return self.branch == other.branch and self.radial == other.radial

    def __hash__(self):
        if self.at_vertex():
            return hash((0, 0.0))
        return hash((self.branch, self.radial))


def distance(p, q):
    """Tree metric: |x - y| on a common branch, x + y across branches."""
    if p.at_vertex():
        return q.radial
    if q.at_vertex():
        return p.radial
    if p.branch == q.branch:
        return abs(p.radial - q.radial)
    return p.radial + q.radial


@dataclass(frozen=True)
class SpiderState:
    """Time, position and accumulated vertex local time."""

    t: float
    point: JunctionPoint
    l: float

    def __post_init__(self):
        if self.l < 0:
            raise ValueError("local time must be >= 0")
        if self.t < 0:
            raise ValueError("time must be >= 0")


class SpiderPath:
    """Discrete path: arrays over a strictly increasing time grid.

    Stored as flat numpy arrays (times, x, branch, l) with the usual
    invariants: x >= 0, l nondecreasing, local time grows only across
    steps touching the vertex, labels change only across vertex visits.
    """

    def __init__(self, times, x, branch, l, zero_tol=ZERO_TOL):
        self.times = np.asarray(times, dtype=float)
        self.x = np.asarray(x, dtype=float)
        self.branch = np.asarray(branch, dtype=np.int64)
        self.l = np.asarray(l, dtype=float)
        self.zero_tol = zero_tol
        n = len(self.times)
        if not (len(self.x) == len(self.branch) == len(self.l) == n):
            raise ValueError("field lengths differ")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("time grid must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def state(self, k):
        return SpiderState(
            t=float(self.times[k]),
            point=JunctionPoint(int(self.branch[k]), float(self.x[k])),
            l=float(self.l[k]),
        )

    def check_invariants(self, delta=None):
        """Raise AssertionError if any discrete path invariant fails."""
        if delta is None:
            delta = self.zero_tol
        assert np.all(self.x >= -self.zero_tol), "negative radial part"
        dl = np.diff(self.l)
        assert np.all(dl >= -self.zero_tol), "local time decreases"
        # local time grows only on steps whose endpoints touch the vertex
        step_min = np.minimum(self.x[:-1], self.x[1:])
        bad = (dl > self.zero_tol) & (step_min > delta)
        assert not np.any(bad), "local time increases away from the vertex"
        # labels change only across steps containing a vertex visit
        switched = self.branch[:-1] != self.branch[1:]
        assert not np.any(switched & (step_min > delta)), (
            "label change away from the vertex"
        )


@dataclass(frozen=True)
class CoefficientBounds:
    """Declared bounds for the standing assumptions on the coefficients.

    a_lower: uniform lower bound on each spinning weight, in (0, 1/I].
    sigma_lower: uniform ellipticity bound for the volatilities.
    lip_b, lip_sigma, lip_alpha: declared sup/Lipschitz budgets in (t,x,l).
    """

    a_lower: float
    sigma_lower: float
    lip_b: float = 10.0
    lip_sigma: float = 10.0
    lip_alpha: float = 10.0

    def __post_init__(self):
        if not 0 < self.a_lower:
            raise ValueError("a_lower must be positive")
        if self.sigma_lower <= 0:
            raise ValueError("sigma_lower must be positive")
        if min(self.lip_b, self.lip_sigma, self.lip_alpha) <= 0:
            raise ValueError("Lipschitz budgets must be positive")


@dataclass(frozen=True)
class CoefficientSet:
    """Per-branch diffusion data plus the spinning measure.

    sigma[i], b[i] are callables (t, x, l) -> value; alpha is a callable
    (t, l) -> array of shape (I,) (entries may broadcast against l).
    All callables must be pure and accept numpy arrays for x and l.
    """

    I: int
    sigma: tuple
    b: tuple
    alpha: object
    bounds: CoefficientBounds

    def __post_init__(self):
        if self.I < 2:
            raise ValueError("need at least two branches")
        if len(self.sigma) != self.I or len(self.b) != self.I:
            raise ValueError("need one sigma and one b per branch")
        if self.bounds.a_lower > 1.0 / self.I:
            raise ValueError("a_lower cannot exceed 1/I")

    def alpha_matrix(self, t, l):
        """Spinning weights as an (I, n) array for an l-array of length n."""
        l = np.asarray(l, dtype=float)
        a = self.alpha(t, l)
        out = np.empty((self.I, l.size))
        for i in range(self.I):
            out[i] = np.broadcast_to(a[i], l.shape).reshape(l.size)
        return out


@dataclass
class Violation:
    condition: str
    witness: tuple
    detail: str


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    samples: int = 0

    @property
    def ok(self):
        return not self.violations


def validate_coefficients(cs, sample_budget, rng_seed, T=1.0, X_max=10.0,
                          L_max=10.0, tol=1e-9):
    """Check the standing assumptions by randomized sampling on a window.

    Samples (t, x, l) uniformly on [0,T]x[0,X_max]x[0,L_max] and checks:
    the spinning weights sum to one and stay above a_lower, volatilities
    stay above sigma_lower, and sampled difference quotients respect the
    declared Lipschitz budgets.  Evaluation failures are reported as
    violations, not raised.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(rng_seed)))
    rep = ValidationReport(samples=sample_budget)
    t = rng.uniform(0, T, sample_budget)
    x = rng.uniform(0, X_max, sample_budget)
    l = rng.uniform(0, L_max, sample_budget)
    bd = cs.bounds

    for k in range(sample_budget):
        w = (float(t[k]), float(x[k]), float(l[k]))
        try:
            a = np.asarray(cs.alpha(t[k], np.asarray(l[k]))).reshape(cs.I)
        except Exception as exc:  # report, do not abort the sweep
            rep.violations.append(Violation("eval", w, "alpha raised: %r" % exc))
            continue
        if abs(a.sum() - 1.0) > tol:
            rep.violations.append(
                Violation("(A) simplex", w, "sum(alpha) = %.12g" % a.sum()))
        if a.min() < bd.a_lower - tol:
            rep.violations.append(
                Violation("(A) lower bound", w, "min(alpha) = %.12g" % a.min()))
        for i in range(cs.I):
            try:
                s = float(np.asarray(cs.sigma[i](t[k], np.asarray(x[k]),
                                                 np.asarray(l[k]))))
            except Exception as exc:
                rep.violations.append(
                    Violation("eval", w, "sigma_%d raised: %r" % (i + 1, exc)))
                continue
            if s < bd.sigma_lower - tol:
                rep.violations.append(
                    Violation("(E)", w, "sigma_%d = %.12g" % (i + 1, s)))

    # Lipschitz spot checks on difference quotients, pairs of nearby points
    n_pairs = max(sample_budget // 2, 1)
    t2 = rng.uniform(0, T, n_pairs)
    x2 = rng.uniform(0, X_max, n_pairs)
    l2 = rng.uniform(0, L_max, n_pairs)
    h = rng.uniform(1e-4, 1e-2, n_pairs)
    for k in range(n_pairs):
        w = (float(t2[k]), float(x2[k]), float(l2[k]))
        for name, budget, fs in (
            ("(R) |b|", bd.lip_b, cs.b),
            ("(R) |sigma|", bd.lip_sigma, cs.sigma),
        ):
            for i, fn in enumerate(fs):
                try:
                    v0 = float(np.asarray(fn(t2[k], np.asarray(x2[k]),
                                             np.asarray(l2[k]))))
                    v1 = float(np.asarray(fn(t2[k], np.asarray(x2[k] + h[k]),
                                             np.asarray(l2[k]))))
                except Exception as exc:
                    rep.violations.append(
                        Violation("eval", w, "branch %d raised: %r" % (i + 1, exc)))
                    continue
                q = abs(v1 - v0) / h[k]
                if q > budget * (1 + 1e-6):
                    rep.violations.append(Violation(
                        name, w, "difference quotient %.6g exceeds %.6g" % (q, budget)))
    return rep


@dataclass(frozen=True)
class TestFunction:
    """Per-branch test function f_i(t, x) with its derivatives.

    f, dt, dx, dxx are tuples of callables (t, x) -> value, one per
    branch; junction continuity f_i(t, 0) = f_j(t, 0) is required for
    membership in the admissible class and checked separately.
    """

    I: int
    f: tuple
    dt: tuple
    dx: tuple
    dxx: tuple

    def __post_init__(self):
        for part in (self.f, self.dt, self.dx, self.dxx):
            if len(part) != self.I:
                raise ValueError("need one callable per branch")


def check_junction_continuity(tf, t_samples, tol=1e-9):
    """True plus max vertex gap if all branches agree at the vertex."""
    gap = 0.0
    for t in np.atleast_1d(t_samples):
        vals = [float(np.asarray(tf.f[i](t, np.asarray(0.0))))
                for i in range(tf.I)]
        gap = max(gap, max(vals) - min(vals))
    return gap <= tol, gap


def constant_function(I, c):
    zero = lambda t, x: np.zeros_like(np.asarray(x, dtype=float))
    cf = lambda t, x: np.full_like(np.asarray(x, dtype=float), c)
    return TestFunction(I, (cf,) * I, (zero,) * I, (zero,) * I, (zero,) * I)


def coordinate_function(I):
    """f_i(t, x) = x on every branch."""
    f = lambda t, x: np.asarray(x, dtype=float)
    zero = lambda t, x: np.zeros_like(np.asarray(x, dtype=float))
    one = lambda t, x: np.ones_like(np.asarray(x, dtype=float))
    return TestFunction(I, (f,) * I, (zero,) * I, (one,) * I, (zero,) * I)


def coordinate_squared(I):
    """f_i(t, x) = x^2 on every branch."""
    f = lambda t, x: np.asarray(x, dtype=float) ** 2
    zero = lambda t, x: np.zeros_like(np.asarray(x, dtype=float))
    dx = lambda t, x: 2.0 * np.asarray(x, dtype=float)
    two = lambda t, x: np.full_like(np.asarray(x, dtype=float), 2.0)
    return TestFunction(I, (f,) * I, (zero,) * I, (dx,) * I, (two,) * I)


def branch_bump(weights):
    """f_i(t, x) = w_i * x * exp(-x): smooth, bounded, branch-weighted.

    Continuous at the vertex (all branches vanish there) with branch
    slopes w_i at 0, so it exercises the vertex local-time term.
    """
    weights = tuple(float(w) for w in weights)
    I = len(weights)

    def make(w):
        f = lambda t, x, w=w: w * np.asarray(x, dtype=float) * np.exp(-np.asarray(x, dtype=float))
        dx = lambda t, x, w=w: w * (1.0 - np.asarray(x, dtype=float)) * np.exp(-np.asarray(x, dtype=float))
        dxx = lambda t, x, w=w: w * (np.asarray(x, dtype=float) - 2.0) * np.exp(-np.asarray(x, dtype=float))
        return f, dx, dxx

    fs, dxs, dxxs = zip(*(make(w) for w in weights))
    zero = lambda t, x: np.zeros_like(np.asarray(x, dtype=float))
    return TestFunction(I, fs, (zero,) * I, dxs, dxxs)
