"""Command-line pipelines: graph generation, community detection,
perturbation optimisation, consensus simulation, method comparison sweeps,
scan matching, and spectral bisection.

Every output records the resolved configuration (JSON, sorted keys) in its
header; replaying a run with ``--config`` on that JSON reproduces the file
byte for byte.  CSV/JSON only, no rendered plots.  Vertex ids in files are
1-based.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import baselines, consensus, experiments, matching
from .cdi import cdi as run_cdi, result_to_dict
from .generators import generate_er_outdegree, generate_flock, generate_knnr, generate_knnr_variable
from .graphs import GraphError, laplacian, load_graph, save_graph
from .optimizer import OptimizationError, cdi_perturbation_opt, direct_baseline_opt
from .spectra import SpectralError


class CliError(RuntimeError):
    pass


def _config_json(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True)


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise CliError(f"missing required option(s): {', '.join(missing)}")


def _write_csv(path, cfg, header, rows):
    lines = [f"# config: {_config_json(cfg)}", header]
    lines.extend(rows)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_json(path, cfg, payload):
    payload = dict(payload)
    payload["config"] = cfg
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_sizes(text):
    # "100..1000" (step 100), "100..1000:50", or "100,200,300"
    if ".." in text:
        span, _, step = text.partition(":")
        lo, hi = span.split("..")
        step = int(step) if step else 100
        return list(range(int(lo), int(hi) + 1, step))
    return [int(t) for t in text.split(",")]


def _parse_k(text):
    # "10" -> fixed k; "3..10" -> variable range
    if ".." in text:
        lo, hi = text.split("..")
        return None, int(lo), int(hi)
    return int(text), None, None


def _load_with_positions(path, positions):
    return load_graph(path, positions_path=positions)


def cmd_generate(args, cfg):
    _require(args, "family", "n", "out")
    fam = args.family
    if fam == "knnr":
        g = generate_knnr(args.n, args.k, dims=args.dims, box=args.box,
                          seed=args.seed, weight=args.weight)
    elif fam == "knnr-variable":
        g = generate_knnr_variable(args.n, args.kmin, args.kmax, dims=args.dims,
                                   box=args.box, seed=args.seed, weight=args.weight)
    elif fam == "er":
        g = generate_er_outdegree(args.n, k=args.k, seed=args.seed, weight=args.weight)
    elif fam == "er-variable":
        g = generate_er_outdegree(args.n, kmin=args.kmin, kmax=args.kmax,
                                  seed=args.seed, weight=args.weight)
    elif fam == "flock":
        g = generate_flock(args.n, args.k, args.thickness, seed=args.seed,
                           weight=args.weight)
    else:
        raise CliError(f"unknown family {fam!r}")
    save_graph(g, args.out, positions_path=args.positions_out)
    print(f"wrote {g.n} vertices, {g.m} edges to {args.out}")
    return 0


def cmd_cdi(args, cfg):
    _require(args, "infile", "out")
    g = _load_with_positions(args.infile, args.positions)
    result = run_cdi(g, args.vectors, matrix_kind=args.matrix, solver=args.solver)
    payload = result_to_dict(result)
    _write_json(args.out, cfg, payload)
    if args.basis_out:
        from .spectra import export_basis_csv, left_eigs
        m = laplacian(g) if args.matrix == "laplacian" else g
        basis = left_eigs(m, count=max(result.coords.source_indices) + 1,
                          kind=args.matrix, solver=args.solver)
        export_basis_csv(basis, args.basis_out)
    print(f"{len(result.communities)} communities, "
          f"{len(result.unassigned)} unassigned -> {args.out}")
    return 0


def _optimize_single(args, cfg):
    g = _load_with_positions(args.infile, None)
    lap = laplacian(g)
    detection = run_cdi(g, args.vectors, solver=args.solver)
    v1 = detection.coords.e[:, 0]
    if args.method == "direct":
        res = direct_baseline_opt(lap, multistart=args.multistart, seed=args.seed,
                                  max_evals=args.budget)
    else:
        res = cdi_perturbation_opt(
            lap, detection.member_lists(), v1,
            detected_leaders=[c.leader for c in detection.communities],
            max_evals=args.budget, solver=args.solver)
    payload = {
        "lambda1": res.lambda1,
        "c": [float(x) for x in res.c.c],
        "activeCommunities": list(res.active_communities),
        "evaluations": res.evaluations,
        "converged": res.converged,
    }
    _write_json(args.out, cfg, payload)
    print(f"lambda1={res.lambda1:.6g} evaluations={res.evaluations} -> {args.out}")
    return 0


def _optimize_flock(args, cfg):
    _require(args, "k")
    ks = [int(t) for t in str(args.k).split(",")]
    rows, fit = experiments.flock_lambda_sweep(
        args.flock, ks, args.thickness, seed=args.seed, y=args.vectors,
        max_evals=args.budget)
    csv_rows = [f"{r['k']},{r['lambda1']:.17g},{r['communities']}" for r in rows]
    if args.fit == "powerlaw":
        a, b, r2 = fit
        csv_rows.append(f"# fit: a={a:.17g} b={b:.17g} r2={r2:.17g}")
        print(f"power-law fit: lambda1 = {a:.4g} * k^{b:.4g} (R^2 = {r2:.4g})")
    _write_csv(args.out, cfg, "k,lambda1,communities", csv_rows)
    return 0


def cmd_optimize(args, cfg):
    _require(args, "out")
    if args.flock is not None:
        return _optimize_flock(args, cfg)
    if not args.infile:
        raise CliError("optimize needs --in FILE or --flock N")
    return _optimize_single(args, cfg)


def cmd_simulate(args, cfg):
    _require(args, "infile", "out")
    g = _load_with_positions(args.infile, None)
    if args.alloc:
        with open(args.alloc) as fh:
            c = np.asarray(json.load(fh)["c"], dtype=float)
    else:
        c = np.full(g.n, 1.0 / g.n)
    pvec = consensus.PerturbationVector(c)
    traj = consensus.simulate(g, pvec, args.u, args.x0, args.dt, args.t_end)
    consensus.export_trajectory_csv(traj, args.out)
    final_err = float(np.abs(traj.states[-1] - traj.target).max())
    print(f"simulated to t={traj.times[-1]:g}, final max|x-u|={final_err:.3e}")
    return 0


def cmd_compare(args, cfg):
    _require(args, "family", "out")
    k, kmin, kmax = _parse_k(args.k)
    sizes = _parse_sizes(args.sizes)
    methods = args.methods.split(",")
    rows = experiments.speed_ratio_sweep(
        args.family, sizes, per_size=args.per_size, k=k, kmin=kmin, kmax=kmax,
        methods=methods, y=args.vectors, seed=args.seed, weight=args.weight,
        max_evals=args.budget, direct_evals=args.direct_budget,
        multistart=args.multistart)
    csv_rows = [
        f"{r['n']},{r['k']},{r['method']},{r['lambda1']:.17g},{r['ratio']:.17g},{r['seed']}"
        for r in rows
    ]
    _write_csv(args.out, cfg, "n,k,method,lambda1,ratio,seed", csv_rows)
    print(f"wrote {len(csv_rows)} rows to {args.out}")
    return 0


def _scan_positions_path(path):
    stem, _, _ = str(path).rpartition(".")
    return (stem or str(path)) + ".xyz"


def cmd_match(args, cfg):
    _require(args, "scans", "out")
    reduced = {}
    for path in args.scans:
        g = load_graph(path, positions_path=_scan_positions_path(path))
        reduced[path] = experiments.scan_communities(
            g, y=args.vectors, entry_threshold=args.entry_threshold,
            scan_id=path, solver=args.solver)
    if len(args.scans) == 2 and args.out.endswith(".json"):
        report = matching.mean_matching_communities(
            reduced[args.scans[0]], reduced[args.scans[1]])
        _write_json(args.out, cfg, matching.report_to_dict(report))
        print(f"meanMatches={report.mean_matches:g} -> {args.out}")
    else:
        rows, cols, mat = matching.match_matrix(reduced)
        matching.save_matrix_csv(rows, cols, mat, args.out,
                                 header_comment=f"config: {_config_json(cfg)}")
        print(f"wrote {len(rows)}x{len(cols)} match matrix to {args.out}")
    return 0


def cmd_bisect(args, cfg):
    _require(args, "infile", "out")
    g = _load_with_positions(args.infile, None)
    part = baselines.spectral_bisection(g, target_communities=args.communities,
                                        threshold=args.threshold, solver=args.solver)
    payload = {
        "method": part.method,
        "communities": [[v + 1 for v in comm] for comm in part.communities],
    }
    _write_json(args.out, cfg, payload)
    print(f"{len(part.communities)} communities -> {args.out}")
    return 0


def _add_common(p):
    p.add_argument("--config", default=None,
                   help="JSON file of defaults for this subcommand")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyninf",
        description="Influence-community detection, consensus perturbation "
                    "optimisation, and community-based graph matching.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic graph edge list")
    _add_common(p)
    p.add_argument("--family",
                   choices=["knnr", "knnr-variable", "er", "er-variable", "flock"])
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--kmin", type=int, default=None)
    p.add_argument("--kmax", type=int, default=None)
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--box", type=float, nargs="+", default=None)
    p.add_argument("--thickness", type=float, default=None)
    p.add_argument("--weight", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.add_argument("--positions-out", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("cdi", help="detect communities of dynamical influence")
    _add_common(p)
    p.add_argument("--in", dest="infile", default=None)
    p.add_argument("--positions", default=None)
    p.add_argument("--vectors", type=int, default=3)
    p.add_argument("--matrix", choices=["laplacian", "adjacency"], default="laplacian")
    p.add_argument("--solver", choices=["auto", "dense", "iterative"], default="auto")
    p.add_argument("--basis-out", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_cdi)

    p = sub.add_parser("optimize", help="optimise a consensus perturbation")
    _add_common(p)
    p.add_argument("--in", dest="infile", default=None)
    p.add_argument("--flock", type=int, default=None,
                   help="flock sweep mode: vertex count")
    p.add_argument("--thickness", type=float, default=0.2)
    p.add_argument("--k", default=None, help="comma list of outdegrees (flock mode)")
    p.add_argument("--fit", choices=["powerlaw", "none"], default="none")
    p.add_argument("--vectors", type=int, default=3)
    p.add_argument("--method", choices=["cdi", "direct"], default="cdi")
    p.add_argument("--multistart", type=int, default=3)
    p.add_argument("--budget", type=int, default=2000)
    p.add_argument("--solver", choices=["auto", "dense", "iterative"], default="auto")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="integrate the consensus dynamics")
    _add_common(p)
    p.add_argument("--in", dest="infile", default=None)
    p.add_argument("--alloc", default=None,
                   help="optimisation result JSON supplying the allocation")
    p.add_argument("--u", type=float, default=1.0)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="speed-ratio sweep across graph sizes")
    _add_common(p)
    p.add_argument("--family", choices=["knnr", "er"], default=None)
    p.add_argument("--sizes", default="100..1000")
    p.add_argument("--k", default="10", help="fixed '10' or variable '3..10'")
    p.add_argument("--per-size", type=int, default=10)
    p.add_argument("--methods", default="cdi,kmeans,direct")
    p.add_argument("--vectors", type=int, default=3)
    p.add_argument("--weight", type=float, default=1.0)
    p.add_argument("--budget", type=int, default=2000)
    p.add_argument("--direct-budget", type=int, default=20000)
    p.add_argument("--multistart", type=int, default=3)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("match", help="community-overlap similarity of scans")
    _add_common(p)
    p.add_argument("--scans", nargs="+", default=None,
                   help="edge-list paths; positions expected at <stem>.xyz")
    p.add_argument("--vectors", type=int, default=3)
    p.add_argument("--entry-threshold", type=float, default=0.01)
    p.add_argument("--solver", choices=["auto", "dense", "iterative"],
                   default="iterative")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("bisect", help="recursive spectral bisection")
    _add_common(p)
    p.add_argument("--in", dest="infile", default=None)
    p.add_argument("--communities", type=int, default=8)
    p.add_argument("--threshold", type=float, default=0.01)
    p.add_argument("--solver", choices=["auto", "dense", "iterative"], default="auto")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bisect)

    return parser


def _apply_config_file(parser, argv):
    """Inject values from a --config JSON as subcommand defaults.

    Explicit flags still win because defaults only fill unset options.
    """
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    with open(argv[at + 1]) as fh:
        loaded = json.load(fh)
    command = argv[0] if argv and not argv[0].startswith("-") else loaded.get("command")
    for action in parser._subparsers._group_actions:
        subparser = action.choices.get(command)
        if subparser is not None:
            subparser.set_defaults(**{k: v for k, v in loaded.items() if k != "command"})
    if argv and not argv[0].startswith("-"):
        return argv
    return [command] + argv


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        cfg = {k: v for k, v in vars(args).items()
               if k not in ("func", "config") and not callable(v)}
        cfg["command"] = args.command
        return args.func(args, cfg)
    except (GraphError, SpectralError, OptimizationError, CliError,
            baselines.BisectionError, matching.MatchingError,
            consensus.SimulationError, ValueError, OSError) as exc:
        print(f"dyninf: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
