"""Comparison methods: spectral k-means clustering, recursive spectral
bisection, two aligned-graph distances, and the consensus speed ratio.

The edit distance here is the aligned-vertex simplification of graph edit
distance: an unweighted symmetric difference of the ordered edge sets.  The
full edit-cost search with vertex mapping is NP-hard and unnecessary when
both graphs share one vertex indexing (a fixed spatial grid), which is the
only regime these comparisons run in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.cluster import KMeans

from .graphs import Graph
from .optimizer import OptimizationResult
from .spectra import left_eigs


class BisectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class PartitionResult:
    communities: tuple[tuple[int, ...], ...]
    method: str

    def member_lists(self) -> list[list[int]]:
        return [list(c) for c in self.communities]


def spectral_kmeans(g: Graph, k: int, seed=0, n_init=100) -> PartitionResult:
    """Spectral clustering via the normalised-affinity eigenvector embedding.

    Directed adjacencies are symmetrised as (A + A^T) / 2; the top-k
    eigenvectors of D^{-1/2} W D^{-1/2} are row-normalised and clustered by
    seeded k-means++ (at most ``n_init`` restarts).
    """
    if not 1 <= k <= g.n:
        raise ValueError(f"k must be in 1..{g.n}, got {k}")
    w = ((g.adjacency + g.adjacency.T) / 2.0).toarray()
    deg = w.sum(axis=1)
    dinv = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    m = (dinv[:, None] * w) * dinv[None, :]
    vals, vecs = scipy.linalg.eigh(m)
    x = vecs[:, np.argsort(vals)[::-1][:k]]
    norms = np.linalg.norm(x, axis=1)
    x = x / np.where(norms > 0, norms, 1.0)[:, None]
    labels = KMeans(n_clusters=k, init="k-means++", n_init=n_init,
                    random_state=seed).fit(x).labels_
    groups: dict[int, list[int]] = {}
    for v, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(v)
    communities = sorted(groups.values(), key=lambda c: c[0])
    return PartitionResult(
        communities=tuple(tuple(c) for c in communities), method="spectral_kmeans"
    )


def _bisection_basis(sub_adj, solver):
    """Adjacency left eigenvectors reordered by descending real part.

    Magnitude ordering would rank a strong negative (alternation) mode
    second on bipartite-leaning graphs; the division analogous to the
    Fiedler vector comes from the most-positive subdominant eigenvalues.
    """
    n = sub_adj.shape[0]
    basis = left_eigs(sub_adj, count=n, kind="adjacency", solver=solver)
    order = np.lexsort((np.abs(basis.eigenvalues.imag), -basis.eigenvalues.real))
    return basis.vectors[order]


def _side_clears(vectors, side, threshold):
    # A division counts when some member carries an eigenvector entry above
    # the threshold, in any of the vectors seen for this subgraph (the same
    # magnitude rule the matching reduction applies).
    return bool(np.abs(vectors[:, side]).max(initial=0.0) > threshold)


def spectral_bisection(g: Graph, target_communities=8, threshold=0.01,
                       solver="auto") -> PartitionResult:
    """Recursive sign-split on the second adjacency eigenvector.

    Splits log2(target) times; at the final level, eigenvectors past the
    second are tried until both sides carry an entry above ``threshold`` in
    magnitude.  At earlier levels later eigenvectors are tried only when a
    split comes out one-sided.  Raises BisectionError when no eigenvector
    yields an admissible division.
    """
    levels = int(round(np.log2(target_communities)))
    if 2**levels != target_communities or levels < 1:
        raise ValueError("target_communities must be a power of two, at least 2")
    if g.n < target_communities:
        raise ValueError(f"need at least {target_communities} vertices, got {g.n}")
    adj = g.adjacency
    groups = [np.arange(g.n)]
    for level in range(1, levels + 1):
        final = level == levels
        new_groups = []
        for members in groups:
            if members.size < 2:
                raise BisectionError(
                    f"community of size {members.size} cannot be split at level {level}"
                )
            sub = adj[np.ix_(members, members)]
            vectors = _bisection_basis(sub, solver)
            chosen = None
            for vec_index in range(1, members.size):
                w = vectors[vec_index]
                pos = np.flatnonzero(w > 0)
                neg = np.flatnonzero(w <= 0)
                if pos.size == 0 or neg.size == 0:
                    continue
                if final and not (
                    _side_clears(vectors[: vec_index + 1], pos, threshold)
                    and _side_clears(vectors[: vec_index + 1], neg, threshold)
                ):
                    continue
                chosen = (pos, neg)
                break
            if chosen is None:
                raise BisectionError(
                    f"no eigenvector divides a {members.size}-vertex community "
                    f"{'above the threshold ' if final else ''}at level {level}"
                )
            new_groups.append(members[chosen[0]])
            new_groups.append(members[chosen[1]])
        groups = new_groups
    communities = sorted((sorted(int(v) for v in grp) for grp in groups),
                         key=lambda c: c[0])
    return PartitionResult(
        communities=tuple(tuple(c) for c in communities), method="spectral_bisection"
    )


def _check_aligned(g1: Graph, g2: Graph):
    if g1.n != g2.n:
        raise ValueError(f"vertex counts differ: {g1.n} vs {g2.n}")


def frobenius_distance(g1: Graph, g2: Graph) -> float:
    """sqrt(sum_ij (A1_ij - A2_ij)^2) over a common vertex indexing."""
    _check_aligned(g1, g2)
    d = g1.adjacency - g2.adjacency
    return float(np.sqrt(d.multiply(d).sum()))


def edge_edit_distance(g1: Graph, g2: Graph) -> float:
    """Count of ordered vertex pairs whose edge presence differs."""
    _check_aligned(g1, g2)
    b1 = (g1.adjacency != 0).astype(np.int8)
    b2 = (g2.adjacency != 0).astype(np.int8)
    return float((b1 - b2).count_nonzero())


def consensus_speed_ratio(candidate: OptimizationResult,
                          reference: OptimizationResult) -> float:
    """candidate rate / reference rate; rejects an unreachable reference."""
    if reference.lambda1 == 0:
        raise ValueError("reference rate is zero (unreachable reference system)")
    return candidate.lambda1 / reference.lambda1
