"""Self-convergence study of the frozen-coefficient scheme.

Runs a refinement ladder on an l-dependent spinning preset and reports
the energy distance between terminal laws at consecutive freezing-grid
resolutions, plus the largest branch-frequency gap.  Distances should
shrink as the coarse grid refines.

Usage: python scripts/convergence_study.py [--doublings 3] [--paths 4000]
"""

import argparse

from spiderdiff import (JunctionPoint, SchemeConfig, SpiderState,
                        self_convergence)
from spiderdiff.presets import brownian_spider


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--doublings", type=int, default=3)
    ap.add_argument("--paths", type=int, default=4000)
    ap.add_argument("--n-freeze", type=int, default=4)
    ap.add_argument("--n-fine", type=int, default=32)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cs = brownian_spider(3, "l-dependent")
    init = SpiderState(t=0.0, point=JunctionPoint(1, 0.0), l=0.0)
    base = SchemeConfig(n_freeze=args.n_freeze, n_fine=args.n_fine,
                        T=args.T, seed=args.seed)
    rows = self_convergence(cs, init, base, args.doublings, N=args.paths,
                            subsample=min(args.paths, 1500))

    print("%10s  %16s  %10s  %10s" % ("n_freeze", "energy_distance",
                                      "se", "branch_gap"))
    for r in rows:
        print("%10d  %16.6f  %10.6f  %10.4f"
              % (r["n_freeze"], r["energy_distance"], r["se"],
                 r["branch_gap"]))


if __name__ == "__main__":
    main()
