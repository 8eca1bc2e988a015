"""Command-line entry point for reproducible runs.

Subcommands: simulate, kernel, pde, skew, verify, compare-fk.  Options
come from an optional JSON config (--config) overridden by flags;
unknown config keys are rejected.  Every run writes its artifacts plus a
manifest.json listing them; artifacts are byte-deterministic for a fixed
(config, seed), so timing goes to run.log, which is not an artifact.

Exit codes: 0 success, 1 configuration/validation error, 2 numerical
failure, 3 acceptance-check failure (verify and compare-fk only).
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .junction import JunctionPoint, SpiderState
from .kernels import kernel_from_junction, kernel_general
from .pde import PdeGrid, feynman_kac_compare, solve_backward
from .presets import brownian_spider, coefficients_from_config, terminal_from_name
from .quadrature import QuadratureError
from .simulator import SchemeConfig, SimulationError, ensemble_to_csv, \
    marginal_statistics, simulate_ensemble
from .skew import constant_skew, simulate_skew, skew_to_csv, beta as skew_beta
from .skorokhod import reflect
from .verify import martingale_test, non_stickiness_curve
from .junction import coordinate_squared, branch_bump


class ConfigError(ValueError):
    pass


_SCHEMAS = {
    "simulate": {
        "preset": "brownian-spider", "I": 2, "alpha_mode": "constant",
        "alpha": None, "coefficients": None, "x0": 0.0, "branch0": 1,
        "l0": 0.0, "T": 1.0, "n_freeze": 16, "n_fine": 16,
        "record_every": None, "crossing": "grid-touch", "paths": 100,
        "seed": 0, "out": None, "workers": None,
    },
    "kernel": {
        "I": 2, "alpha_mode": "l-dependent", "alpha": None, "s": 0.0,
        "t": 1.0, "l": 0.0, "x": 0.0, "branch": 1,
        "variant": "local-time-weighted", "convention": "printed",
        "y_max": 3.0, "l_max": 3.0, "ny": 30, "nl": 30,
        "seed": 0, "out": None, "workers": None,
    },
    "pde": {
        "preset": "brownian-spider", "I": 2, "alpha_mode": "l-dependent",
        "alpha": None, "terminal": "compatible-bump", "X_max": 6.0,
        "L_max": 4.0, "T": 1.0, "M_x": 120, "M_l": 60, "M_t": 60,
        "seed": 0, "out": None, "workers": None,
    },
    "skew": {
        "alpha": 0.5, "sigma": 1.0, "b": 0.0, "y0": 0.0, "T": 1.0,
        "n_freeze": 16, "n_fine": 16, "record_every": None, "paths": 100,
        "seed": 0, "out": None, "workers": None,
    },
    "verify": {
        "suite": "martingale", "I": 2, "alpha_mode": "constant",
        "alpha": None, "T": 1.0, "n_freeze": 16, "n_fine": 16,
        "paths": 2000, "record_every": None,
        "eps": [0.01, 0.02, 0.04, 0.08],
        "seed": 0, "out": None, "workers": None,
    },
    "compare-fk": {
        "preset": "brownian-spider", "I": 2, "alpha_mode": "l-dependent",
        "alpha": None, "terminal": "compatible-bump", "X_max": 6.0,
        "L_max": 4.0, "T": 1.0, "M_x": 100, "M_l": 50, "M_t": 50,
        "x0": 0.0, "branch0": 1, "l0": 0.0, "n_freeze": 32, "n_fine": 32,
        "paths": 5000, "seed": 0, "out": None, "workers": None,
    },
}


def _load_config(command, args):
    cfg = dict(_SCHEMAS[command])
    if args.config:
        with open(args.config) as fh:
            try:
                user = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError("malformed config %s: %s" % (args.config, exc))
        unknown = set(user) - set(cfg)
        if unknown:
            raise ConfigError("unknown config keys for %s: %s"
                              % (command, ", ".join(sorted(unknown))))
        cfg.update(user)
    for key, val in vars(args).items():
        if key in ("config", "command"):
            continue
        if val is not None and key in cfg:
            cfg[key] = val
    if isinstance(cfg.get("alpha"), str):
        cfg["alpha"] = [float(v) for v in cfg["alpha"].split(",")]
    if cfg["out"] is None:
        cfg["out"] = os.environ.get("SPIDERDIFF_OUT", "spiderdiff-out")
    if cfg["workers"] is None:
        cfg["workers"] = int(os.environ.get("SPIDERDIFF_WORKERS", "1"))
    return cfg


def _coefficients(cfg):
    if cfg.get("coefficients"):
        return coefficients_from_config(cfg["coefficients"])
    return brownian_spider(I=cfg["I"], alpha_mode=cfg["alpha_mode"],
                           alpha=cfg["alpha"])


def _json_bytes(obj):
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def _finish(out_dir, command, cfg, artifacts, t0):
    manifest = {"command": command, "config": cfg, "seed": cfg["seed"],
                "version": __version__, "artifacts": sorted(artifacts)}
    with open(os.path.join(out_dir, "manifest.json"), "wb") as fh:
        fh.write(_json_bytes(manifest))
    with open(os.path.join(out_dir, "run.log"), "w") as fh:
        fh.write("wall_time_s=%.3f\n" % (time.time() - t0))


def _scheme(cfg):
    rec = cfg.get("record_every")
    if rec is None:
        rec = cfg["n_fine"]   # record the coarse knots by default
    return SchemeConfig(n_freeze=cfg["n_freeze"], n_fine=cfg["n_fine"],
                        T=cfg["T"], crossing=cfg.get("crossing", "grid-touch"),
                        seed=cfg["seed"], record_every=rec)


def _cmd_simulate(cfg, out_dir):
    cs = _coefficients(cfg)
    init = SpiderState(0.0, JunctionPoint(cfg["branch0"], cfg["x0"]), cfg["l0"])
    ens = simulate_ensemble(cs, init, _scheme(cfg), cfg["paths"])
    with open(os.path.join(out_dir, "paths.csv"), "w") as fh:
        ensemble_to_csv(ens, fh)
    summary = marginal_statistics(ens, cfg["T"])
    with open(os.path.join(out_dir, "summary.json"), "wb") as fh:
        fh.write(_json_bytes(summary))
    return ["paths.csv", "summary.json"], 0


def _cmd_kernel(cfg, out_dir):
    cs = brownian_spider(I=cfg["I"], alpha_mode=cfg["alpha_mode"],
                         alpha=cfg["alpha"])
    if cfg["x"] > 0:
        ker = kernel_general(cs, cfg["s"], cfg["x"], cfg["branch"], cfg["l"],
                             cfg["t"], variant=cfg["variant"])
    else:
        ker = kernel_from_junction(cs, cfg["s"], cfg["l"], cfg["t"],
                                   variant=cfg["variant"],
                                   time_convention=cfg["convention"])
    ys = np.linspace(cfg["y_max"] / cfg["ny"], cfg["y_max"], cfg["ny"])
    ells = np.linspace(cfg["l_max"] / cfg["nl"], cfg["l_max"], cfg["nl"])
    with open(os.path.join(out_dir, "kernel.csv"), "w") as fh:
        fh.write("y,branch,ell,density\n")
        for j in range(1, cs.I + 1):
            q = ker.density(ys[:, None], ells[None, :], j)
            for a, yv in enumerate(ys):
                for c, lv in enumerate(ells):
                    fh.write("%s,%d,%s,%s\n" % (repr(float(yv)), j,
                                                repr(float(lv)),
                                                repr(float(q[a, c]))))
    masses = ker.branch_masses()   # includes the atom for interior sources
    meta = {"branch_masses": [float(v) for v in masses],
            "atom_mass": float(ker.atom_mass),
            "total_mass": float(np.sum(masses)),
            "variant": cfg["variant"], "convention": cfg["convention"]}
    with open(os.path.join(out_dir, "masses.json"), "wb") as fh:
        fh.write(_json_bytes(meta))
    return ["kernel.csv", "masses.json"], 0


def _cmd_pde(cfg, out_dir):
    cs = _coefficients(cfg)
    grid = PdeGrid(X_max=cfg["X_max"], L_max=cfg["L_max"], T=cfg["T"],
                   M_x=cfg["M_x"], M_l=cfg["M_l"], M_t=cfg["M_t"])
    g = terminal_from_name(cfg["terminal"], cs, cfg["T"])
    sol = solve_backward(cs, g, grid)
    with open(os.path.join(out_dir, "solution_t0.csv"), "w") as fh:
        fh.write("branch,x,l,u\n")
        for i in range(cs.I):
            for a, xv in enumerate(grid.x_nodes):
                for c, lv in enumerate(grid.l_nodes):
                    fh.write("%d,%s,%s,%s\n" % (i + 1, repr(float(xv)),
                                                repr(float(lv)),
                                                repr(float(sol.u[i, 0, a, c]))))
    report = {"compat_residual": sol.compat_residual,
              "warnings": sol.warnings,
              "trace_t0_l0": float(sol.u0[0, 0])}
    with open(os.path.join(out_dir, "report.json"), "wb") as fh:
        fh.write(_json_bytes(report))
    return ["solution_t0.csv", "report.json"], 0


def _cmd_skew(cfg, out_dir):
    sk = constant_skew(cfg["alpha"], cfg["sigma"], cfg["b"])
    times, y, l, _ = simulate_skew(sk, cfg["y0"], _scheme(cfg), cfg["paths"])
    with open(os.path.join(out_dir, "skew_paths.csv"), "w") as fh:
        skew_to_csv(times, y, l, fh)
    yT = y[:, -1]
    summary = {"p_positive": float(np.mean(yT > 0)),
               "mean_yT": float(np.mean(yT)), "var_yT": float(np.var(yT)),
               "beta": skew_beta(0.0, 0.0, sk)}
    with open(os.path.join(out_dir, "summary.json"), "wb") as fh:
        fh.write(_json_bytes(summary))
    return ["skew_paths.csv", "summary.json"], 0


def _cmd_verify(cfg, out_dir):
    cs = _coefficients(cfg)
    init = SpiderState(0.0, JunctionPoint(1, 0.0), 0.0)
    suite = cfg["suite"]
    ok = True
    if suite == "skorokhod":
        rng_keys = np.random.Generator(np.random.Philox(key=np.uint64(cfg["seed"])))
        y = np.cumsum(rng_keys.standard_normal((cfg["paths"], 256)), axis=1) * 0.0625
        y[:, 0] = np.abs(y[:, 0])
        x, ell = reflect(y)
        report = {"suite": suite,
                  "min_x": float(np.min(x)),
                  "max_monotone_defect": float(np.max(np.maximum(
                      -np.diff(ell, axis=1), 0.0))),
                  "paths": int(cfg["paths"])}
        ok = report["min_x"] >= 0 and report["max_monotone_defect"] == 0
    elif suite == "non-stickiness":
        sc = _scheme(cfg)
        sc = SchemeConfig(n_freeze=sc.n_freeze, n_fine=sc.n_fine, T=sc.T,
                          crossing=sc.crossing, seed=sc.seed,
                          record_every=sc.record_every,
                          occupation_eps=tuple(cfg["eps"]))
        ens = simulate_ensemble(cs, init, sc, cfg["paths"])
        report = non_stickiness_curve(ens, cfg["eps"])
        report["suite"] = suite
        ok = report["r_squared"] > 0.98
    elif suite == "martingale":
        ens = simulate_ensemble(cs, init, _scheme(cfg), cfg["paths"])
        T = cfg["T"]
        pairs = [(0.25 * T, 0.5 * T), (0.25 * T, 0.75 * T), (0.5 * T, 0.75 * T)]
        rows = []
        for f_id, f in (("x^2", coordinate_squared(cs.I)),
                        ("bump", branch_bump([1.0, -1.0] + [0.0] * (cs.I - 2)))):
            rep = martingale_test(ens, cs, f, pairs, f_id=f_id)
            rows.extend(rep.rows)
            ok = ok and rep.ok
        report = {"suite": suite, "rows": rows}
    else:
        raise ConfigError("unknown verify suite %r" % (suite,))
    report["ok"] = bool(ok)
    with open(os.path.join(out_dir, "report.json"), "wb") as fh:
        fh.write(_json_bytes(report))
    return ["report.json"], 0 if ok else 3


def _cmd_compare_fk(cfg, out_dir):
    cs = _coefficients(cfg)
    grid = PdeGrid(X_max=cfg["X_max"], L_max=cfg["L_max"], T=cfg["T"],
                   M_x=cfg["M_x"], M_l=cfg["M_l"], M_t=cfg["M_t"])
    g = terminal_from_name(cfg["terminal"], cs, cfg["T"])
    sol = solve_backward(cs, g, grid)
    init = SpiderState(0.0, JunctionPoint(cfg["branch0"], cfg["x0"]), cfg["l0"])
    report = feynman_kac_compare(sol, cs, g, init, _scheme(cfg), cfg["paths"])
    with open(os.path.join(out_dir, "report.json"), "wb") as fh:
        fh.write(_json_bytes(report))
    return ["report.json"], 0 if report["ok"] else 3


_RUNNERS = {"simulate": _cmd_simulate, "kernel": _cmd_kernel,
            "pde": _cmd_pde, "skew": _cmd_skew, "verify": _cmd_verify,
            "compare-fk": _cmd_compare_fk}


def _build_parser():
    p = argparse.ArgumentParser(prog="spiderdiff")
    sub = p.add_subparsers(dest="command", required=True)
    for name, schema in _SCHEMAS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None)
        for key, default in schema.items():
            flag = "--" + key.replace("_", "-")
            if isinstance(default, bool):
                sp.add_argument(flag, type=int, default=None)
            elif isinstance(default, int):
                sp.add_argument(flag, type=int, default=None)
            elif isinstance(default, float):
                sp.add_argument(flag, type=float, default=None)
            elif isinstance(default, list):
                sp.add_argument(flag, type=float, nargs="+", default=None)
            else:
                sp.add_argument(flag, default=None)
    return p


def run(argv):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    t0 = time.time()
    try:
        cfg = _load_config(args.command, args)
        out_dir = cfg["out"]
        os.makedirs(out_dir, exist_ok=True)
        artifacts, code = _RUNNERS[args.command](cfg, out_dir)
        _finish(out_dir, args.command, cfg, artifacts + ["manifest.json"], t0)
        return code
    except (ConfigError, ValueError) as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return 1
    except (SimulationError, QuadratureError, RuntimeError,
            np.linalg.LinAlgError) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 2


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
