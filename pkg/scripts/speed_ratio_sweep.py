#!/usr/bin/env python3
"""Speed-ratio comparison sweep (library front-end for `dyninf compare`).

Runs the community-seeded optimiser, the k-means-seeded optimiser, and the
direct reference over replicated graphs at each size, emitting one CSV row
per (graph, method).  Defaults mirror the desk-scale protocol: 10 graphs per
size, sizes 100..1000, outdegree 10 fixed or 3..10 variable.

Example:
    python scripts/speed_ratio_sweep.py --family knnr --k 3..10 \
        --sizes 100..300 --per-size 5 --out ratios.csv
"""

import argparse
import json
import sys

from dyninf.cli import main as cli_main


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--family", choices=["knnr", "er"], default="knnr")
    parser.add_argument("--sizes", default="100..1000")
    parser.add_argument("--k", default="10")
    parser.add_argument("--per-size", type=int, default=10)
    parser.add_argument("--methods", default="cdi,kmeans,direct")
    parser.add_argument("--weight", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--budget", type=int, default=2000)
    parser.add_argument("--direct-budget", type=int, default=8000)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    print(f"config: {json.dumps(vars(args), sort_keys=True)}", file=sys.stderr)
    return cli_main([
        "compare", "--family", args.family, "--sizes", args.sizes,
        "--k", args.k, "--per-size", str(args.per_size),
        "--methods", args.methods, "--weight", str(args.weight),
        "--seed", str(args.seed), "--budget", str(args.budget),
        "--direct-budget", str(args.direct_budget), "--out", args.out,
    ])


if __name__ == "__main__":
    sys.exit(main())
