"""Statistical verification harness for the defining properties.

Builds the compensated test-function process V^f along simulated paths
and z-tests its increments for zero mean, estimates the occupation time
near the vertex (non-stickiness), and runs self-convergence refinement
studies of the freezing scheme.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .simulator import simulate_ensemble, SchemeConfig


def _eval_by_branch(fns, t, x, br, I):
    """Evaluate per-branch callables (t, x) on lanes selected by label."""
    if len(set(fns)) == 1:  # same function on every branch
        return np.asarray(np.broadcast_to(fns[0](t, x), x.shape), dtype=float)
    out = np.empty_like(x)
    for i in range(I):
        m = br == i + 1
        if np.any(m):
            out[m] = np.asarray(fns[i](t, x[m]), dtype=float)
    return out


def vf_on_grid(ens, cs, f, out_indices, alpha_override=None):
    """V^f at selected recorded indices for every path: (n_out, N).

    Left-endpoint quadrature of both the time integral and the
    local-time integral, coefficients at the true (not frozen) recorded
    arguments.  alpha_override substitutes a different spinning measure
    in the local-time term (negative controls).
    """
    alpha_fn = alpha_override if alpha_override is not None else cs.alpha
    times = ens.times
    N = ens.n_paths
    I = cs.I
    out_indices = sorted(out_indices)
    out = np.empty((len(out_indices), N))
    pos = 0
    acc = np.zeros(N)

    # contiguous per-time rows: column slices of the (N, K) layout are
    # strided gathers and dominate the runtime otherwise
    xs = np.ascontiguousarray(ens.x.T)
    brs = np.ascontiguousarray(ens.branch.T)
    ls = np.ascontiguousarray(ens.l.T)

    f0 = _eval_by_branch(f.f, times[0], xs[0], brs[0], I)

    for k in range(len(times)):
        if pos < len(out_indices) and k == out_indices[pos]:
            fk = _eval_by_branch(f.f, times[k], xs[k], brs[k], I)
            out[pos] = fk - f0 - acc
            pos += 1
            if pos == len(out_indices):
                break
        if k + 1 == len(times):
            break
        # accumulate the compensator over the step [t_k, t_{k+1})
        t_k = times[k]
        x_k = xs[k]
        br_k = brs[k]
        l_k = ls[k]
        dt_k = times[k + 1] - times[k]
        dl_k = ls[k + 1] - l_k

        gen = _eval_by_branch(f.dt, t_k, x_k, br_k, I)
        sig = np.empty(N)
        drift = np.empty(N)
        for i in range(I):
            m = br_k == i + 1
            if np.any(m):
                sig[m] = np.asarray(cs.sigma[i](t_k, x_k[m], l_k[m]), dtype=float)
                drift[m] = np.asarray(cs.b[i](t_k, x_k[m], l_k[m]), dtype=float)
        gen = gen + 0.5 * sig * sig * _eval_by_branch(f.dxx, t_k, x_k, br_k, I)
        gen = gen + drift * _eval_by_branch(f.dx, t_k, x_k, br_k, I)
        acc += gen * dt_k

        moving = dl_k != 0.0
        if np.any(moving):
            idx = np.nonzero(moving)[0]
            a = np.asarray(alpha_fn(t_k, l_k[idx]))
            vertex = np.zeros(len(idx))
            z = np.zeros(len(idx))
            for i in range(I):
                slope = np.asarray(f.dx[i](t_k, z), dtype=float)
                vertex += np.broadcast_to(a[i], idx.shape) * slope
            acc[idx] += vertex * dl_k[idx]
    return out


def vf_along_path(path, cs, f):
    """V^f along a single path on its full grid (one value per node)."""
    from .simulator import PathEnsemble

    ens = PathEnsemble(path.times, path.x[None, :], path.branch[None, :],
                       path.l[None, :], 0, np.array([0], dtype=np.uint64),
                       None)
    vals = vf_on_grid(ens, cs, f, list(range(len(path.times))))
    return vals[:, 0]


@dataclass
class MartingaleReport:
    rows: list = field(default_factory=list)   # dicts per (pair, weight)
    z_level: float = 3.0
    z_adjusted: float = 3.0
    n_tests: int = 0

    @property
    def ok(self):
        return all(r["ok"] for r in self.rows)


def default_weights():
    return {
        "1": lambda ens, k: np.ones(ens.n_paths),
        "x_s": lambda ens, k: ens.x[:, k],
        "sin_l_s": lambda ens, k: np.sin(ens.l[:, k]),
    }


def martingale_test(ens, cs, f, pairs, weights=None, z_level=3.0,
                    bonferroni=True, alpha_override=None, f_id=""):
    """z-tests of E[phi_s (V^f(u) - V^f(s))] = 0 for (s, u) pairs.

    weights maps names to callables (ens, time_index) -> (N,) values
    measurable at time s; defaults to {1, x(s), sin(l(s))}.
    """
    if weights is None:
        weights = default_weights()
    idx_pairs = [(ens.time_index(s), ens.time_index(u)) for s, u in pairs]
    needed = sorted({i for p in idx_pairs for i in p})
    V = vf_on_grid(ens, cs, f, needed, alpha_override=alpha_override)
    lookup = {k: r for r, k in enumerate(needed)}
    N = ens.n_paths

    n_tests = len(idx_pairs) * len(weights)
    if bonferroni and n_tests > 1:
        base = 2.0 * (1.0 - _phi(z_level))
        z_adj = float(ndtri(1.0 - base / n_tests / 2.0))
    else:
        z_adj = z_level

    rep = MartingaleReport(z_level=z_level, z_adjusted=z_adj, n_tests=n_tests)
    for (ks, ku), (s, u) in zip(idx_pairs, pairs):
        dV = V[lookup[ku]] - V[lookup[ks]]
        for name, wfn in weights.items():
            phi = np.asarray(wfn(ens, ks), dtype=float)
            vals = phi * dV
            mean = float(np.mean(vals))
            se = float(np.std(vals, ddof=1) / math.sqrt(N))
            zstat = mean / se if se > 0 else 0.0
            rep.rows.append({
                "f": f_id, "s": float(s), "u": float(u), "weight": name,
                "mean": mean, "se": se, "z": zstat,
                "ok": bool(abs(mean) <= z_adj * se or se == 0.0)})
    return rep


def _phi(z):
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def non_stickiness_curve(ens, eps_list):
    """Mean occupation time below each threshold plus a through-origin fit.

    Uses the simulator's fine-grid occupation accumulators when present
    (exact for the scheme); falls back to a left-endpoint Riemann sum on
    the recorded grid otherwise.  Thresholds whose estimate saturates
    near T are excluded from the fit.
    """
    T = float(ens.times[-1])
    N = ens.n_paths
    rows = []
    for eps in eps_list:
        if eps in ens.occupation:
            occ = ens.occupation[eps]
        else:
            dt = np.diff(ens.times)
            occ = np.sum(dt[None, :] * (ens.x[:, :-1] < eps), axis=1)
        mean = float(np.mean(occ))
        se = float(np.std(occ, ddof=1) / math.sqrt(N))
        rows.append({"eps": float(eps), "estimate": mean, "se": se,
                     "ratio": mean / eps, "saturated": bool(mean > 0.95 * T)})
    fit = [r for r in rows if not r["saturated"]]
    e = np.array([r["eps"] for r in fit])
    m = np.array([r["estimate"] for r in fit])
    slope = float(np.sum(e * m) / np.sum(e * e)) if len(fit) else float("nan")
    if len(fit):
        ss_res = float(np.sum((m - slope * e) ** 2))
        ss_tot = float(np.sum(m * m))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")
    else:
        r2 = float("nan")
    return {"rows": rows, "slope": slope, "r_squared": r2,
            "max_ratio": max((r["ratio"] for r in fit), default=float("nan"))}


def _spider_distances(x1, l1, b1, x2, l2, b2):
    """Pairwise graph-plus-local-time distances between two samples."""
    same = b1[:, None] == b2[None, :]
    dx = np.where(same, np.abs(x1[:, None] - x2[None, :]),
                  x1[:, None] + x2[None, :])
    return dx + np.abs(l1[:, None] - l2[None, :])


def energy_distance(sample1, sample2):
    """Energy distance between (x, l, branch) samples (tuples of arrays)."""
    x1, l1, b1 = sample1
    x2, l2, b2 = sample2
    dxy = np.mean(_spider_distances(x1, l1, b1, x2, l2, b2))
    dxx = np.mean(_spider_distances(x1, l1, b1, x1, l1, b1))
    dyy = np.mean(_spider_distances(x2, l2, b2, x2, l2, b2))
    return float(2.0 * dxy - dxx - dyy)


def self_convergence(cs, init, base_cfg, doublings, N=4000, subsample=1500):
    """Refinement ladder: distances between terminal laws at n and 2n.

    Returns one row per doubling with the energy distance between the
    (x_T, l_T, branch) marginals and the max per-branch frequency gap,
    plus rough MC error bars from a 4-way split.
    """
    if doublings < 2:
        raise ValueError("need at least two doublings")
    levels = []
    for k in range(doublings + 1):
        cfg = SchemeConfig(n_freeze=base_cfg.n_freeze * 2 ** k,
                           n_fine=base_cfg.n_fine, T=base_cfg.T,
                           crossing=base_cfg.crossing, seed=base_cfg.seed,
                           record_every=base_cfg.n_freeze * 2 ** k * base_cfg.n_fine)
        ens = simulate_ensemble(cs, init, cfg, N)
        levels.append((ens.x[:, -1], ens.l[:, -1], ens.branch[:, -1]))

    rows = []
    for k in range(doublings):
        s1 = tuple(a[:subsample] for a in levels[k])
        s2 = tuple(a[:subsample] for a in levels[k + 1])
        ed = energy_distance(s1, s2)
        # crude error bar: energy distance over 4 disjoint quarters
        q = subsample // 4
        parts = [energy_distance(tuple(a[j * q:(j + 1) * q] for a in levels[k]),
                                 tuple(a[j * q:(j + 1) * q] for a in levels[k + 1]))
                 for j in range(4)]
        gap = 0.0
        I = cs.I
        for i in range(1, I + 1):
            gap = max(gap, abs(float(np.mean(levels[k][2] == i))
                               - float(np.mean(levels[k + 1][2] == i))))
        rows.append({"n_freeze": base_cfg.n_freeze * 2 ** k,
                     "energy_distance": ed,
                     "se": float(np.std(parts, ddof=1) / 2.0),
                     "branch_gap": gap})
    return rows
