import numpy as np
import pytest

from dyninf import Graph, generate_knnr


def graphs_equal(g1: Graph, g2: Graph) -> bool:
    if g1.n != g2.n or g1.directed != g2.directed:
        return False
    if g1.edges() != g2.edges():
        return False
    if (g1.positions is None) != (g2.positions is None):
        return False
    if g1.positions is not None and not np.array_equal(g1.positions, g2.positions):
        return False
    return True


def random_strongly_connected(n, extra_edges, seed):
    """Random digraph made strongly connected by a hidden Hamiltonian cycle."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    edges = {(int(perm[i]), int(perm[(i + 1) % n])) for i in range(n)}
    while len(edges) < min(n + extra_edges, n * (n - 1)):
        u, v = rng.integers(0, n, size=2)
        if u != v:
            edges.add((int(u), int(v)))
    return Graph.from_edges(
        n, [(u, v, float(rng.uniform(0.5, 2.0))) for u, v in sorted(edges)]
    )


def ascending_witness_path(g: Graph, s, start, leader, strict=True):
    """Independent path search: DFS over ascending-s hops from start to leader.

    Returns the path as a vertex list or None.  Used to verify community
    membership without trusting the library's traversal.
    """
    stack = [(start, (start,))]
    seen = {start}
    while stack:
        v, path = stack.pop()
        if v == leader:
            return list(path)
        for t in g.out_neighbors(v):
            t = int(t)
            ok = s[v] < s[t] if strict else s[v] <= s[t]
            if ok and t not in seen:
                seen.add(t)
                stack.append((t, path + (t,)))
    return None


@pytest.fixture
def knnr100():
    return generate_knnr(100, 10, seed=3)
