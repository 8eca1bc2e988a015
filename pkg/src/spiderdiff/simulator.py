"""Path simulation by the frozen-coefficient concatenation scheme.

Two nested grids: a coarse freezing grid with n_freeze cells on [0, T]
whose knots freeze the (t, l) arguments of all coefficients, and n_fine
Euler substeps per cell.  Within a cell the signed driving increment is

    dy = b_i(t_j, x, l(t_j)) dt + sigma_i(t_j, x, l(t_j)) sqrt(dt) xi,

reflected incrementally (Skorokhod): dl = max(0, -(x + dy)), x += dy + dl.
The pusher produces exact zeros, and the branch label is redrawn from
alpha(t_j, l(t_j)) once per maximal run of zero touches (one excursion
start).  All randomness is counter-based: path k of an ensemble depends
only on (seed, k), never on N or on chunking.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from . import _fastpath
from .junction import SpiderPath, ZERO_TOL


class SimulationError(RuntimeError):
    """Raised when a coefficient evaluation fails mid-run."""


@dataclass(frozen=True)
class FreezingGrid:
    """Coarse grid with knots t_j = j T / n and its step map eta."""

    n: int
    T: float

    @property
    def knots(self):
        return np.linspace(0.0, self.T, self.n + 1)

    def eta(self, u):
        """Largest knot <= u (right-continuous step map)."""
        u = np.asarray(u, dtype=float)
        j = np.minimum(np.floor(u * self.n / self.T), self.n)
        return j * (self.T / self.n)


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme parameters; crossing mode is "grid-touch" or "bridge-corrected".

    record_every: store every k-th fine step (1 = full fine grid); the
    initial and terminal states are always stored.
    occupation_eps: thresholds for fine-grid occupation-time accumulators
    (computed on the full fine grid regardless of recording cadence).
    """

    n_freeze: int
    n_fine: int
    T: float
    crossing: str = "grid-touch"
    seed: int = 0
    record_every: int = 1
    occupation_eps: tuple = ()

    def __post_init__(self):
        if self.n_freeze < 1 or self.n_fine < 1:
            raise ValueError("grid counts must be >= 1")
        if self.T < 0:
            raise ValueError("horizon must be >= 0")
        if self.crossing not in ("grid-touch", "bridge-corrected"):
            raise ValueError("unknown crossing mode %r" % (self.crossing,))
        if self.n_steps % self.record_every:
            raise ValueError("record_every must divide n_freeze * n_fine")

    @property
    def n_steps(self):
        return self.n_freeze * self.n_fine

    @property
    def dt(self):
        return self.T / self.n_steps


@dataclass
class PathEnsemble:
    """Ensemble of paths on a shared recorded grid (one row per path)."""

    times: np.ndarray            # (K+1,)
    x: np.ndarray                # (N, K+1)
    branch: np.ndarray           # (N, K+1) int
    l: np.ndarray                # (N, K+1)
    seed: int
    path_indices: np.ndarray     # (N,) counter-stream index per path
    config: SchemeConfig
    occupation: dict = field(default_factory=dict)  # eps -> (N,) times

    @property
    def n_paths(self):
        return self.x.shape[0]

    def path(self, k):
        return SpiderPath(self.times, self.x[k], self.branch[k], self.l[k])

    def time_index(self, t):
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, self.config.T):
            raise ValueError("t = %g is not on the recorded grid" % t)
        return k


def _select_by_branch(values, br, I):
    """Pick values[i] for lanes with branch label i+1."""
    if I == 2:
        return np.where(br == 1, values[0], values[1])
    out = np.asarray(np.broadcast_to(values[0], br.shape)).copy()
    for i in range(1, I):
        m = br == i + 1
        vi = np.broadcast_to(values[i], br.shape)
        out[m] = vi[m]
    return out


def _redraw_labels(alpha_mat, idx, u):
    """Categorical draw per selected lane from the columns of alpha_mat."""
    cum = np.cumsum(alpha_mat[:, idx], axis=0)
    return 1 + np.sum(u[None, :] >= cum[:-1, :], axis=0)


def simulate_ensemble(cs, init, cfg, N, path_offset=0):
    """Simulate N paths of the spider diffusion; vectorized across paths.

    Returns a PathEnsemble.  Reproducibility: path k uses only the
    counter streams keyed by (cfg.seed, path_offset + k).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    x0 = float(init.point.radial)
    i0 = int(init.point.branch)
    l0 = float(init.l)
    idx_all = np.arange(path_offset, path_offset + N, dtype=np.uint64)

    if cfg.T == 0 or cfg.n_steps == 0:
        times = np.array([0.0])
        return PathEnsemble(times, np.full((N, 1), x0),
                            np.full((N, 1), i0, dtype=np.int64),
                            np.full((N, 1), l0), cfg.seed,
                            idx_all, cfg)

    n_steps = cfg.n_steps
    dt = cfg.dt
    sqdt = math.sqrt(dt)
    n_rec = n_steps // cfg.record_every
    times = np.linspace(0.0, cfg.T, n_rec + 1)

    keys_inc = rng.path_keys(cfg.seed, rng.STREAM_INCREMENT, idx_all)
    keys_lab = rng.path_keys(cfg.seed, rng.STREAM_LABEL, idx_all)
    keys_brg = rng.path_keys(cfg.seed, rng.STREAM_BRIDGE, idx_all)

    x = np.full(N, x0)
    br = np.full(N, i0, dtype=np.int64)
    l = np.full(N, l0)

    rec_x = np.empty((N, n_rec + 1))
    rec_br = np.empty((N, n_rec + 1), dtype=np.int64)
    rec_l = np.empty((N, n_rec + 1))
    rec_x[:, 0], rec_br[:, 0], rec_l[:, 0] = x, br, l

    eps_list = tuple(cfg.occupation_eps)
    occ = {eps: np.zeros(N) for eps in eps_list}

    bridge = cfg.crossing == "bridge-corrected"
    prev_zero = np.zeros(N, dtype=bool)

    # the initial state at the vertex starts a zero run: draw its label
    if x0 <= ZERO_TOL:
        a0 = cs.alpha_matrix(0.0, np.full(N, l0))
        u = rng.uniform_at_step(keys_lab, n_steps)  # step id outside loop range
        br = _redraw_labels(a0, slice(None), u)
        prev_zero[:] = True
        rec_br[:, 0] = br

    # constant sigma and b skip per-step evaluation and branch selection
    sig_const = [getattr(f, "constant_value", None) for f in cs.sigma]
    b_const = [getattr(f, "constant_value", None) for f in cs.b]
    all_const = (None not in sig_const) and (None not in b_const)
    uniform_const = (all_const and len(set(sig_const)) == 1
                     and len(set(b_const)) == 1)
    if all_const and not uniform_const:
        sig_tab = np.array(sig_const)
        b_tab = np.array(b_const)

    if all_const and not bridge and _fastpath.HAVE_NUMBA:
        sig_arr = np.array(sig_const, dtype=float)
        b_arr = np.array(b_const, dtype=float)
        eps_arr = np.array(eps_list, dtype=float)
        occ_arr = np.zeros((N, len(eps_list)))
        for j in range(cfg.n_freeze):
            t_j = j * cfg.T / cfg.n_freeze
            try:
                alpha_mat = cs.alpha_matrix(t_j, l)
            except Exception as exc:
                raise SimulationError(
                    "coefficient evaluation failed at coarse knot %g: %r"
                    % (t_j, exc))
            alpha_cum = np.ascontiguousarray(np.cumsum(alpha_mat, axis=0).T)
            _fastpath.advance_cell(
                x, l, br, prev_zero, keys_inc, keys_lab, alpha_cum,
                sig_arr, b_arr, j * cfg.n_fine, cfg.n_fine, dt, sqdt,
                occ_arr, eps_arr, rec_x, rec_br, rec_l, cfg.record_every)
        for e, eps in enumerate(eps_list):
            occ[eps] = occ_arr[:, e]
        ens = PathEnsemble(times, rec_x, rec_br, rec_l, cfg.seed,
                           idx_all, cfg)
        ens.occupation = occ
        return ens

    for j in range(cfg.n_freeze):
        t_j = j * cfg.T / cfg.n_freeze
        l_frozen = l.copy()
        try:
            alpha_mat = cs.alpha_matrix(t_j, l_frozen)
            if not all_const:
                sig_list = [cs.sigma[i](t_j, x, l_frozen) for i in range(cs.I)]
                b_list = [cs.b[i](t_j, x, l_frozen) for i in range(cs.I)]
        except Exception as exc:
            raise SimulationError(
                "coefficient evaluation failed at coarse knot %g: %r" % (t_j, exc))

        for m in range(cfg.n_fine):
            k = j * cfg.n_fine + m
            if uniform_const:
                sig = sig_const[0]
                drift = b_const[0]
            elif all_const:
                bi = br - 1
                sig = sig_tab[bi]
                drift = b_tab[bi]
            else:
                if m > 0:  # sigma and b depend on the current x: re-evaluate
                    try:
                        sig_list = [cs.sigma[i](t_j, x, l_frozen)
                                    for i in range(cs.I)]
                        b_list = [cs.b[i](t_j, x, l_frozen)
                                  for i in range(cs.I)]
                    except Exception as exc:
                        raise SimulationError(
                            "coefficient evaluation failed at step %d: %r"
                            % (k, exc))
                sig = _select_by_branch(sig_list, br, cs.I)
                drift = _select_by_branch(b_list, br, cs.I)

            for eps in eps_list:
                occ[eps] += dt * (x < eps)

            xn = rng.normal_at_step(keys_inc, k)
            xn *= sig * sqdt
            xn += x
            dd = drift * dt
            if isinstance(dd, np.ndarray) or dd != 0.0:
                xn += dd
            dl = np.minimum(xn, 0.0)
            np.negative(dl, out=dl)
            x_prev = x
            x = xn + dl
            np.maximum(x, 0.0, out=x)
            l += dl

            touched = x <= 0.0
            new_touch = touched & ~prev_zero
            if np.any(new_touch):
                idx = np.nonzero(new_touch)[0]
                u = rng.uniform_at_step(keys_lab[idx], k)
                br[idx] = _redraw_labels(alpha_mat, idx, u)
            if bridge:
                both_pos = (x_prev > 0.0) & (x > 0.0)
                if np.any(both_pos):
                    p = np.exp(-2.0 * x_prev * x / (sig * sig * dt))
                    u = rng.uniform_at_step(keys_brg, k)
                    fire = both_pos & (u < p)
                    if np.any(fire):
                        idx = np.nonzero(fire)[0]
                        u2 = rng.uniform_at_step(keys_lab[idx], k)
                        br[idx] = _redraw_labels(alpha_mat, idx, u2)
            prev_zero = touched

            if (k + 1) % cfg.record_every == 0:
                r = (k + 1) // cfg.record_every
                rec_x[:, r], rec_br[:, r], rec_l[:, r] = x, br, l

    ens = PathEnsemble(times, rec_x, rec_br, rec_l, cfg.seed, idx_all, cfg)
    ens.occupation = occ
    return ens


def simulate_path(cs, init, cfg, path_index=0):
    """Single path on the full fine grid; path_index selects the stream."""
    full = SchemeConfig(n_freeze=cfg.n_freeze, n_fine=cfg.n_fine, T=cfg.T,
                        crossing=cfg.crossing, seed=cfg.seed, record_every=1,
                        occupation_eps=cfg.occupation_eps)
    ens = simulate_ensemble(cs, init, full, 1, path_offset=path_index)
    return ens.path(0)


def marginal_statistics(ens, t):
    """Branch frequencies and moments of (x, l) at a recorded time."""
    k = ens.time_index(t)
    x = ens.x[:, k]
    l = ens.l[:, k]
    br = ens.branch[:, k]
    N = len(x)
    I = int(br.max())
    freq = {}
    for i in range(1, I + 1):
        p = float(np.mean(br == i))
        freq[i] = (p, math.sqrt(max(p * (1 - p), 0.0) / N))

    def mom(v):
        m = float(np.mean(v))
        s = float(np.std(v, ddof=1)) if N > 1 else 0.0
        return {"mean": m, "se_mean": s / math.sqrt(N), "var": s * s,
                "se_var": _se_of_variance(v)}

    cov = float(np.cov(x, l)[0, 1]) if N > 1 else 0.0
    return {"t": float(ens.times[k]), "n_paths": N, "branch_freq": freq,
            "x": mom(x), "l": mom(l), "cov_xl": cov}


def _se_of_variance(v):
    """Standard error of the sample variance from sample moments."""
    n = len(v)
    if n < 2:
        return 0.0
    c = v - v.mean()
    m2 = float(np.mean(c ** 2))
    m4 = float(np.mean(c ** 4))
    return math.sqrt(max(m4 - (n - 3) / (n - 1) * m2 * m2, 0.0) / n)


def ensemble_to_csv(ens, fh):
    """One row per (path, recorded time): path_id, t, x, branch, l."""
    fh.write("path_id,t,x,branch,l\n")
    for p in range(ens.n_paths):
        pid = int(ens.path_indices[p])
        for k in range(len(ens.times)):
            fh.write("%d,%s,%s,%d,%s\n" % (
                pid, repr(float(ens.times[k])), repr(float(ens.x[p, k])),
                int(ens.branch[p, k]), repr(float(ens.l[p, k]))))
