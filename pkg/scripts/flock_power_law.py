#!/usr/bin/env python3
"""Flock outdegree sweep: optimised convergence rate against k on one fixed
1200-vertex position set (thickness 0.2), with a log-log power-law fit.

Example:
    python scripts/flock_power_law.py --out flock.csv
"""

import argparse
import sys

from dyninf.cli import main as cli_main


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--n", type=int, default=1200)
    parser.add_argument("--thickness", type=float, default=0.2)
    parser.add_argument("--k", default="5,7,15,25,50")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--budget", type=int, default=2000)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    return cli_main([
        "optimize", "--flock", str(args.n), "--thickness", str(args.thickness),
        "--k", args.k, "--fit", "powerlaw", "--seed", str(args.seed),
        "--budget", str(args.budget), "--out", args.out,
    ])


if __name__ == "__main__":
    sys.exit(main())
