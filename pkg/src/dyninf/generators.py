"""Seeded synthetic graph generators: k-nearest-neighbour geometric graphs,
fixed/variable-outdegree random digraphs, and the flat-prism flock model.

Randomness comes from numpy's PCG64 (``np.random.default_rng``); uniform
reals use the 53-bit mantissa path.  Stream order per generator: vertex
positions first, then per-vertex degree draws, then target choices, so two
generators that share a seed also share positions.
"""

from __future__ import annotations

import numpy as np

from .graphs import Graph, GraphError


def _positions(rng, n, dims, box):
    if box is None:
        box = (1.0,) * dims
    box = np.broadcast_to(np.asarray(box, dtype=float), (dims,))
    if (box <= 0).any():
        raise GraphError("box side lengths must be positive")
    return rng.random((n, dims)) * box


def _knn_edges(positions, k_per_vertex, weight):
    """Directed edges to each vertex's k nearest neighbours (Euclidean).

    Distance ties are broken by lower vertex index, keeping the output
    deterministic for a fixed position set.
    """
    n = positions.shape[0]
    diffs = positions[:, None, :] - positions[None, :, :]
    dists = np.sqrt((diffs**2).sum(axis=-1))
    np.fill_diagonal(dists, np.inf)
    idx = np.arange(n)
    edges = []
    for i in range(n):
        order = np.lexsort((idx, dists[i]))
        for j in order[: k_per_vertex[i]]:
            edges.append((i, int(j), weight))
    return edges


def generate_knnr(n, k, dims=2, box=None, seed=0, weight=1.0) -> Graph:
    """k-nearest-neighbour graph: n vertices uniform in a box, each with
    directed unit-weight edges to its k nearest neighbours."""
    if not 1 <= k <= n - 1:
        raise GraphError(f"k must satisfy 1 <= k <= n-1, got k={k}, n={n}")
    if dims not in (2, 3):
        raise GraphError("dims must be 2 or 3")
    rng = np.random.default_rng(seed)
    pos = _positions(rng, n, dims, box)
    edges = _knn_edges(pos, np.full(n, k, dtype=int), weight)
    return Graph.from_edges(n, edges, directed=True, positions=pos)


def generate_knnr_variable(n, kmin, kmax, dims=2, box=None, seed=0, weight=1.0) -> Graph:
    """k-NNR with per-vertex outdegree drawn uniformly from [kmin, kmax]."""
    if not 1 <= kmin <= kmax <= n - 1:
        raise GraphError(f"need 1 <= kmin <= kmax <= n-1, got [{kmin}, {kmax}], n={n}")
    if dims not in (2, 3):
        raise GraphError("dims must be 2 or 3")
    rng = np.random.default_rng(seed)
    pos = _positions(rng, n, dims, box)
    ks = rng.integers(kmin, kmax + 1, size=n)
    edges = _knn_edges(pos, ks, weight)
    return Graph.from_edges(n, edges, directed=True, positions=pos)


def generate_er_outdegree(n, k=None, kmin=None, kmax=None, seed=0, weight=1.0) -> Graph:
    """Random digraph with fixed or uniformly sampled outdegree.

    Each vertex picks its outdegree count of distinct targets uniformly at
    random (excluding itself).  Pass either ``k`` or both ``kmin``/``kmax``.
    """
    if k is not None:
        if kmin is not None or kmax is not None:
            raise GraphError("pass either k or (kmin, kmax), not both")
        kmin = kmax = k
    if kmin is None or kmax is None:
        raise GraphError("pass either k or (kmin, kmax)")
    if not 1 <= kmin <= kmax <= n - 1:
        raise GraphError(f"need 1 <= kmin <= kmax <= n-1, got [{kmin}, {kmax}], n={n}")
    rng = np.random.default_rng(seed)
    if kmin == kmax:
        ks = np.full(n, kmin, dtype=int)
    else:
        ks = rng.integers(kmin, kmax + 1, size=n)
    edges = []
    for i in range(n):
        picks = rng.choice(n - 1, size=ks[i], replace=False)
        for t in picks:
            j = int(t) + (1 if t >= i else 0)
            edges.append((i, j, weight))
    return Graph.from_edges(n, edges, directed=True)


def generate_flock(n, k, thickness, seed=0, weight=1.0) -> Graph:
    """Flock model: n vertices uniform in a (1, 1, thickness) prism with
    k-nearest-neighbour edges.

    ``thickness`` is the smallest-to-largest dimension ratio; the two planar
    sides are kept equal.  Positions depend only on (n, thickness, seed), so
    re-running with a different k keeps every vertex in place.
    """
    if not 0 < thickness <= 1:
        raise GraphError(f"thickness must be in (0, 1], got {thickness}")
    if n < k + 1:
        raise GraphError(f"need n >= k+1, got n={n}, k={k}")
    return generate_knnr(n, k, dims=3, box=(1.0, 1.0, thickness), seed=seed, weight=weight)
