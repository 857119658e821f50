"""Communities of dynamical influence: leader detection, community
assignment over ascending-influence paths, and overlap resolution.

Each vertex gets a coordinate row in the eigenvector system (see
``spectra.InfluenceCoordinates``); its influence magnitude ``s`` is the row
norm.  A leader is a vertex none of whose out-neighbours sits further from
the origin; a vertex belongs to a leader's community when some directed
path to the leader ascends strictly in ``s`` at every hop.  A vertex landing
in several communities is kept where its scalar projection onto the leader
is largest, and communities are finally ranked by their largest
first-eigenvector entry.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .graphs import Graph, laplacian
from .spectra import InfluenceCoordinates, influence_coordinates


@dataclass(frozen=True)
class Community:
    leader: int
    members: tuple[int, ...]
    rank: int

    def __post_init__(self):
        if self.leader not in self.members:
            raise ValueError("leader must be a member of its own community")


@dataclass(frozen=True)
class CDIResult:
    communities: tuple[Community, ...]
    coords: InfluenceCoordinates
    unassigned: tuple[int, ...]
    leader_fallback: bool
    matrix_kind: str

    def member_lists(self) -> list[list[int]]:
        return [list(c.members) for c in self.communities]


# Influence magnitudes from one decomposition carry O(eps) noise; two values
# this close count as equal so symmetric graphs degrade to ties, not to
# noise-ordered artefacts.
_S_EQ_RTOL = 1e-9


def _s_tolerance(s) -> float:
    return _S_EQ_RTOL * max(float(np.max(s, initial=0.0)), 1e-300)


def _strict_leaders(g: Graph, coords: InfluenceCoordinates) -> list[int]:
    s = coords.s
    tol = _s_tolerance(s)
    leaders = []
    for j in range(g.n):
        out = g.out_neighbors(j)
        if out.size == 0 or (s[j] > s[out] + tol).all():
            leaders.append(j)
    return leaders


def find_leaders(g: Graph, coords: InfluenceCoordinates) -> list[int]:
    """Vertices whose every out-neighbour has strictly smaller s.

    Vertices with no out-edges qualify.  On perfectly symmetric graphs the
    strict condition can fail everywhere; then each weakly-connected
    component elects its argmax of s (lowest index on ties) so the result
    is never empty and disconnected symmetric pieces keep separate leaders.
    """
    leaders = _strict_leaders(g, coords)
    if leaders:
        return leaders
    import scipy.sparse.csgraph as csgraph

    _, labels = csgraph.connected_components(g.adjacency, directed=True,
                                             connection="weak")
    tol = _s_tolerance(coords.s)
    fallback = []
    for comp in range(labels.max() + 1):
        members = np.flatnonzero(labels == comp)
        top = coords.s[members].max()
        fallback.append(int(members[coords.s[members] >= top - tol][0]))
    return sorted(fallback)


def assign_communities(g, coords, leaders, strict=True) -> list[list[int]]:
    """Raw communities: all vertices with a directed path to each leader along
    edges whose s strictly increases source -> destination (overlaps allowed).

    ``strict=False`` relaxes the ascent to non-strict; used only in the
    degenerate fallback where uniform s would otherwise strand every vertex.
    """
    if not leaders:
        raise ValueError("leaders must be nonempty")
    s = coords.s
    tol = _s_tolerance(s)
    a_csc = g.adjacency.tocsc()
    raw = []
    for beta in leaders:
        seen = {beta}
        stack = [beta]
        while stack:
            v = stack.pop()
            lo, hi = a_csc.indptr[v], a_csc.indptr[v + 1]
            for u in a_csc.indices[lo:hi]:
                ascends = s[u] < s[v] - tol if strict else s[u] <= s[v] + tol
                if ascends and u not in seen:
                    seen.add(int(u))
                    stack.append(int(u))
        raw.append(sorted(seen))
    return raw


def resolve_overlaps(raw, coords, leaders) -> tuple[list[list[int]], list[int]]:
    """Keep each multiply-assigned vertex only where its scalar projection on
    the leader, z = (e_beta . e_j) / s_beta, is largest; ties go to the
    community with the larger leader first-eigenvector entry, then lower
    leader index.  Returns (pruned member lists, leader order unchanged).
    """
    e, s = coords.e, coords.s
    v1 = e[:, 0]
    membership: dict[int, list[int]] = {}
    for h, members in enumerate(raw):
        for j in members:
            membership.setdefault(j, []).append(h)
    pruned = [list(members) for members in raw]
    for j, hs in membership.items():
        if len(hs) == 1:
            continue
        scores = []
        for h in hs:
            beta = leaders[h]
            z = float(e[beta] @ e[j] / s[beta]) if s[beta] > 0 else -math.inf
            scores.append(z)
        zmax = max(scores)
        best = None
        for h, z in zip(hs, scores):
            if not math.isclose(z, zmax, rel_tol=1e-9, abs_tol=1e-12):
                continue
            if best is None or v1[leaders[h]] > v1[leaders[best]]:
                best = h
        for h in hs:
            if h != best:
                pruned[h].remove(j)
    return pruned, list(leaders)


def _rank_communities(member_lists, leaders, v1) -> list[Community]:
    keyed = []
    for members, beta in zip(member_lists, leaders):
        if not members:
            continue
        keyed.append((-max(v1[m] for m in members), beta, members))
    keyed.sort(key=lambda t: (t[0], t[1]))
    return [
        Community(leader=beta, members=tuple(members), rank=i + 1)
        for i, (_, beta, members) in enumerate(keyed)
    ]


def cdi(g: Graph, y: int, matrix_kind="laplacian", solver="auto") -> CDIResult:
    """Full community detection pipeline on a graph.

    Computes y-column influence coordinates from the Laplacian (or adjacency)
    left eigenvectors, finds leaders, grows communities over ascending paths,
    resolves overlaps, and ranks communities by largest v1 entry descending.
    Vertices reachable by no ascending path are reported unassigned.
    """
    if matrix_kind == "laplacian":
        coords = influence_coordinates(laplacian(g), y, solver=solver)
    else:
        coords = influence_coordinates(g, y, kind=matrix_kind, solver=solver)
    strict = bool(_strict_leaders(g, coords))
    leaders = find_leaders(g, coords)
    raw = assign_communities(g, coords, leaders, strict=strict)
    pruned, leaders = resolve_overlaps(raw, coords, leaders)
    communities = _rank_communities(pruned, leaders, coords.e[:, 0])
    assigned = {m for c in communities for m in c.members}
    unassigned = tuple(v for v in range(g.n) if v not in assigned)
    return CDIResult(
        communities=tuple(communities),
        coords=coords,
        unassigned=unassigned,
        leader_fallback=not strict,
        matrix_kind=matrix_kind,
    )


def result_to_dict(result: CDIResult) -> dict:
    """JSON-ready form; vertex ids are 1-based like the on-disk formats."""
    return {
        "y": result.coords.y,
        "matrix": result.matrix_kind,
        "leader_fallback": result.leader_fallback,
        "communities": [
            {
                "rank": c.rank,
                "leader": c.leader + 1,
                "members": [m + 1 for m in c.members],
            }
            for c in result.communities
        ],
        "unassigned": [v + 1 for v in result.unassigned],
    }


def save_result(result: CDIResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(result_to_dict(result), fh, indent=2, sort_keys=True)
        fh.write("\n")
