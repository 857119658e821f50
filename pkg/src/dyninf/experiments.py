"""Reproducible experiment pipelines behind the CLI and the scripts.

Sweeps derive one integer seed per work item (root seed + item index) so a
worker pool can run items in any order while outputs stay byte-identical;
rows are always emitted in configuration order.  The worker count comes
from the DYNINF_WORKERS environment variable (default 1).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .baselines import spectral_kmeans
from .cdi import cdi
from .consensus import rightmost_rate
from .generators import generate_er_outdegree, generate_flock, generate_knnr, generate_knnr_variable
from .graphs import Graph, laplacian
from .matching import reduce_scan
from .optimizer import cdi_perturbation_opt, direct_baseline_opt

WORKERS_ENV = "DYNINF_WORKERS"


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def item_seed(root_seed: int, index: int) -> int:
    """Per-item seed derivation for sweeps: root seed plus item index."""
    return int(root_seed) + int(index)


def fit_power_law(points):
    """Least-squares log-log fit y = a * x^b.

    Returns (a, b, r_squared) where r_squared is the coefficient of
    determination of the fit in log-log space (1.0 for constant data).
    Rejects nonpositive coordinates and fewer than three points.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 3:
        raise ValueError("power-law fit needs at least 3 points")
    if any(x <= 0 or y <= 0 for x, y in pts):
        raise ValueError("power-law fit needs positive coordinates")
    lx = np.log([x for x, _ in pts])
    ly = np.log([y for _, y in pts])
    b, log_a = np.polyfit(lx, ly, 1)
    resid = ly - (log_a + b * lx)
    ss_res = float((resid**2).sum())
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(np.exp(log_a)), float(b), float(r2)


def generate_family(family, n, seed, k=None, kmin=None, kmax=None,
                    dims=2, box=None, thickness=None, weight=1.0) -> Graph:
    """Dispatch to a generator by family name."""
    if family == "knnr":
        if kmin is not None:
            return generate_knnr_variable(n, kmin, kmax, dims=dims, box=box,
                                          seed=seed, weight=weight)
        return generate_knnr(n, k, dims=dims, box=box, seed=seed, weight=weight)
    if family == "er":
        if kmin is not None:
            return generate_er_outdegree(n, kmin=kmin, kmax=kmax, seed=seed,
                                         weight=weight)
        return generate_er_outdegree(n, k=k, seed=seed, weight=weight)
    if family == "flock":
        return generate_flock(n, k, thickness, seed=seed, weight=weight)
    raise ValueError(f"unknown family {family!r}")


def _compare_item(task: dict) -> list[dict]:
    n = task["n"]
    seed = task["seed"]
    g = generate_family(task["family"], n, seed, k=task.get("k"),
                        kmin=task.get("kmin"), kmax=task.get("kmax"),
                        weight=task.get("weight", 1.0))
    lap = laplacian(g)
    y = task.get("y", 3)
    budget = task.get("max_evals", 2000)
    kdesc = task.get("k") if task.get("k") is not None else f"{task['kmin']}-{task['kmax']}"

    detection = cdi(g, y)
    v1 = detection.coords.e[:, 0]
    results = {}
    methods = task["methods"]
    if "cdi" in methods:
        results["cdi"] = cdi_perturbation_opt(
            lap, detection.member_lists(), v1,
            detected_leaders=[c.leader for c in detection.communities],
            max_evals=budget)
    if "kmeans" in methods:
        part = spectral_kmeans(g, k=max(1, len(detection.communities)), seed=seed)
        results["kmeans"] = cdi_perturbation_opt(lap, part.member_lists(), v1,
                                                 max_evals=budget)
    reference = direct_baseline_opt(lap, multistart=task.get("multistart", 3),
                                    seed=seed, max_evals=task.get("direct_evals", 20000))
    results["direct"] = reference

    rows = []
    for method in methods:
        res = results[method]
        rows.append({
            "n": n,
            "k": kdesc,
            "method": method,
            "lambda1": res.lambda1,
            "ratio": res.lambda1 / reference.lambda1,
            "seed": seed,
        })
    return rows


def speed_ratio_sweep(family, sizes, per_size=10, k=None, kmin=None, kmax=None,
                      methods=("cdi", "kmeans", "direct"), y=3, seed=0,
                      weight=1.0, max_evals=2000, direct_evals=20000,
                      multistart=3, workers=None) -> list[dict]:
    """Speed-ratio comparison over graph sizes, per-size replicated.

    Returns one row dict per (graph, method), ordered by configuration.
    """
    tasks = []
    index = 0
    for n in sizes:
        for _ in range(per_size):
            tasks.append({
                "family": family, "n": n, "seed": item_seed(seed, index),
                "k": k, "kmin": kmin, "kmax": kmax, "methods": list(methods),
                "y": y, "weight": weight, "max_evals": max_evals,
                "direct_evals": direct_evals, "multistart": multistart,
            })
            index += 1
    workers = worker_count() if workers is None else max(1, workers)
    if workers == 1:
        batches = [_compare_item(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_compare_item, tasks))
    return [row for batch in batches for row in batch]


def _flock_item(task: dict) -> dict:
    g = generate_flock(task["n"], task["k"], task["thickness"], seed=task["seed"])
    lap = laplacian(g)
    detection = cdi(g, task.get("y", 3))
    v1 = detection.coords.e[:, 0]
    res = cdi_perturbation_opt(
        lap, detection.member_lists(), v1,
        detected_leaders=[c.leader for c in detection.communities],
        max_evals=task.get("max_evals", 2000))
    return {"k": task["k"], "lambda1": res.lambda1,
            "communities": len(detection.communities), "seed": task["seed"]}


def flock_lambda_sweep(n, ks, thickness, seed=0, y=3, max_evals=2000,
                       workers=None) -> tuple[list[dict], tuple[float, float, float]]:
    """Optimised rate against outdegree on one fixed flock position set.

    All items share one seed so the positions are identical and only the
    neighbour count changes.  Returns (rows, (a, b, r2)) with the power-law
    fit of lambda1 against k.
    """
    tasks = [{"n": n, "k": k, "thickness": thickness, "seed": seed,
              "y": y, "max_evals": max_evals} for k in ks]
    workers = worker_count() if workers is None else max(1, workers)
    if workers == 1:
        rows = [_flock_item(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_flock_item, tasks))
    fit = fit_power_law([(row["k"], row["lambda1"]) for row in rows])
    return rows, fit


# ---------------------------------------------------------------------------
# Synthetic scan pool for matching experiments.
#
# Subjects share one spatial point grid (the analogue of a fixed voxel
# space) so that unweighted edge sets overlap heavily across subjects,
# while identity lives in a subject-specific smooth strength field that
# shapes edge weights and hence the influence communities.  A rescan
# re-jitters every position by up to 1 mm and drops a fraction of active
# vertices; one engineered subject loses far more, thinning its rescan
# graph the way a faulty scan would.
# ---------------------------------------------------------------------------


def _strength_field(points, rng, bumps=4, sigma=7.0, amp=2.5):
    centers = rng.random((bumps, 3)) * (points.max(axis=0) - points.min(axis=0))
    centers += points.min(axis=0)
    theta = np.zeros(points.shape[0])
    for c in centers:
        d2 = ((points - c) ** 2).sum(axis=1)
        theta += np.exp(-d2 / (2.0 * sigma**2))
    return np.exp(amp * theta)


def _knn_subset_graph(positions, active, k, theta) -> Graph:
    """k-NN graph restricted to the active vertex set, weights theta_u*theta_v.

    Inactive vertices keep their index but carry no edges, mirroring
    zero-outdegree voxels in a fixed grid.
    """
    n = positions.shape[0]
    active = np.asarray(sorted(active))
    sub = positions[active]
    diffs = sub[:, None, :] - sub[None, :, :]
    dists = np.sqrt((diffs**2).sum(axis=-1))
    np.fill_diagonal(dists, np.inf)
    local_idx = np.arange(active.size)
    edges = []
    for a in range(active.size):
        order = np.lexsort((local_idx, dists[a]))[:k]
        u = int(active[a])
        for b in order:
            v = int(active[b])
            edges.append((u, v, float(theta[u] * theta[v])))
    return Graph.from_edges(n, edges, directed=True, positions=positions)


def make_subject_pool(n_subjects=10, n=2000, k=8, box_mm=40.0, seed=0,
                      inactive_frac=0.08, dropout_frac=0.05,
                      heavy_subject=0, heavy_dropout_frac=0.40,
                      jitter_mm=0.5, bumps=5, sigma=4.0, amp=3.0):
    """Scan/rescan graph pairs for a pool of synthetic subjects.

    Returns (scan1 list, scan2 list) of Graphs, index-aligned by subject.
    Subject ``heavy_subject`` suffers ``heavy_dropout_frac`` vertex dropout
    in its rescan instead of the usual ``dropout_frac``.
    """
    root = np.random.default_rng(seed)
    grid = root.random((n, 3)) * box_mm
    scans1, scans2 = [], []
    for s in range(n_subjects):
        sub_rng = np.random.default_rng(item_seed(seed, 1000 + s))
        theta = _strength_field(grid, sub_rng, bumps=bumps, sigma=sigma, amp=amp)
        active = set(range(n))
        inactive = sub_rng.choice(n, size=int(round(inactive_frac * n)), replace=False)
        active -= set(int(i) for i in inactive)

        jitter1 = (sub_rng.random((n, 3)) - 0.5) * 2 * jitter_mm
        scans1.append(_knn_subset_graph(grid + jitter1, active, k, theta))

        drop = heavy_dropout_frac if s == heavy_subject else dropout_frac
        alist = sorted(active)
        lost = sub_rng.choice(len(alist), size=int(round(drop * len(alist))),
                              replace=False)
        active2 = set(alist) - {alist[i] for i in lost}
        jitter2 = (sub_rng.random((n, 3)) - 0.5) * 2 * jitter_mm
        scans2.append(_knn_subset_graph(grid + jitter2, active2, k, theta))
    return scans1, scans2


def scan_communities(g: Graph, y=3, entry_threshold=0.01, scan_id="scan",
                     solver="iterative"):
    """Adjacency-kind community detection and reduction for one scan."""
    detection = cdi(g, y, matrix_kind="adjacency", solver=solver)
    return reduce_scan(detection, g.positions, scan_id=scan_id,
                       entry_threshold=entry_threshold)


def uniform_leader_rate(lap, leaders) -> float:
    """Rate of the uniform allocation over a leader set (a plain reference)."""
    c = np.zeros(lap.n)
    c[list(leaders)] = 1.0 / len(leaders)
    return rightmost_rate(lap, c)
