import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyninf import (
    Graph,
    consensus_speed_ratio,
    edge_edit_distance,
    frobenius_distance,
    spectral_bisection,
    spectral_kmeans,
)
from dyninf.baselines import BisectionError
from dyninf.optimizer import OptimizationResult
from dyninf.consensus import PerturbationVector


def undirected_path(n):
    edges = []
    for i in range(n - 1):
        edges += [(i, i + 1, 1.0), (i + 1, i, 1.0)]
    return Graph.from_edges(n, edges, directed=False)


def two_triangles():
    tri = [(0, 1), (1, 2), (2, 0)]
    edges = []
    for a, b in tri:
        edges += [(a, b, 1.0), (b, a, 1.0), (a + 3, b + 3, 1.0), (b + 3, a + 3, 1.0)]
    return Graph.from_edges(6, edges, directed=False)


def result_with(lambda1):
    return OptimizationResult(
        c=PerturbationVector(np.array([1.0])), lambda1=lambda1,
        active_communities=(), evaluations=0, converged=True,
    )


class TestSpectralKmeans:
    def test_k1_single_community(self):
        g = undirected_path(6)
        part = spectral_kmeans(g, 1, seed=0)
        assert part.communities == (tuple(range(6)),)

    def test_disconnected_pairs_recovered(self):
        g = Graph.from_edges(
            4, [(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)]
        )
        part = spectral_kmeans(g, 2, seed=0)
        assert sorted(map(tuple, part.communities)) == [(0, 1), (2, 3)]

    def test_deterministic_with_seed(self):
        from dyninf import generate_knnr

        g = generate_knnr(60, 6, seed=2)
        a = spectral_kmeans(g, 4, seed=11)
        b = spectral_kmeans(g, 4, seed=11)
        assert a.communities == b.communities

    def test_partitions_vertex_set(self):
        from dyninf import generate_knnr_variable

        g = generate_knnr_variable(50, 3, 10, seed=1)
        part = spectral_kmeans(g, 5, seed=0)
        flat = sorted(v for c in part.communities for v in c)
        assert flat == list(range(50))

    def test_rejects_bad_k(self):
        with pytest.raises(ValueError):
            spectral_kmeans(undirected_path(4), 5, seed=0)


def oracle_sign_split(adj_dense, members, vec_index):
    """Independent recursion step: numpy eigendecomposition, descending
    real-part ordering, orientation by the largest-|entry| component,
    split by > 0."""
    sub = adj_dense[np.ix_(members, members)]
    w, v = np.linalg.eig(sub.T)
    order = np.argsort(-w.real)
    vec = np.real(v[:, order[vec_index]])
    pivot = vec[np.argmax(np.abs(vec))]
    if pivot < 0:
        vec = -vec
    return members[vec > 0], members[vec <= 0]


class TestSpectralBisection:
    def test_path8_three_levels_matches_oracle(self):
        g = undirected_path(8)
        part = spectral_bisection(g, target_communities=8, threshold=0.01)
        assert len(part.communities) == 8
        # oracle: recursive numpy-based sign splits
        dense = g.adjacency.toarray()
        groups = [np.arange(8)]
        for _ in range(3):
            nxt = []
            for members in groups:
                pos, neg = oracle_sign_split(dense, members, 1)
                nxt += [pos, neg]
            groups = nxt
        expected = sorted(tuple(sorted(int(v) for v in grp)) for grp in groups)
        assert sorted(part.communities) == expected
        # every block is contiguous on the path
        for block in part.communities:
            assert list(block) == list(range(block[0], block[-1] + 1))

    def test_disconnected_components_separated(self):
        part = spectral_bisection(two_triangles(), target_communities=2,
                                  threshold=0.01)
        assert sorted(map(tuple, part.communities)) == [(0, 1, 2), (3, 4, 5)]

    def test_too_few_vertices_rejected(self):
        with pytest.raises(ValueError):
            spectral_bisection(undirected_path(6), target_communities=8)

    def test_unreachable_threshold_flagged(self):
        with pytest.raises(BisectionError):
            spectral_bisection(undirected_path(8), target_communities=8,
                               threshold=2.0)

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError):
            spectral_bisection(undirected_path(8), target_communities=6)


class TestDistances:
    def test_identical_graphs_zero(self):
        g = undirected_path(5)
        assert frobenius_distance(g, g) == 0.0
        assert edge_edit_distance(g, g) == 0.0

    def test_single_weight_difference(self):
        g1 = Graph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
        g2 = Graph.from_edges(3, [(0, 1, 3.0), (1, 2, 1.0)])
        assert frobenius_distance(g1, g2) == pytest.approx(2.0)
        assert edge_edit_distance(g1, g2) == 0.0  # presence unchanged

    def test_edit_distance_counts_presence(self):
        g1 = Graph.from_edges(3, [(0, 1, 1.0)])
        g2 = Graph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
        assert edge_edit_distance(g1, g2) == 1.0

    def test_empty_vs_complete(self):
        empty = Graph.from_edges(3, [])
        complete = Graph.from_edges(
            3, [(i, j, 1.0) for i in range(3) for j in range(3) if i != j]
        )
        assert edge_edit_distance(empty, complete) == 6.0

    def test_size_mismatch_rejected(self):
        with pytest.raises(ValueError):
            frobenius_distance(undirected_path(3), undirected_path(4))
        with pytest.raises(ValueError):
            edge_edit_distance(undirected_path(3), undirected_path(4))

    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=30, deadline=None)
    def test_metric_axioms_on_random_pairs(self, seed):
        rng = np.random.default_rng(seed)

        def rand_graph():
            edges = [(i, j, float(rng.uniform(0.1, 3.0)))
                     for i in range(5) for j in range(5)
                     if i != j and rng.random() < 0.5]
            return Graph.from_edges(5, edges)

        g1, g2 = rand_graph(), rand_graph()
        assert frobenius_distance(g1, g2) == pytest.approx(frobenius_distance(g2, g1))
        assert edge_edit_distance(g1, g2) == edge_edit_distance(g2, g1)
        assert frobenius_distance(g1, g2) >= 0
        assert frobenius_distance(g1, g1) == 0


class TestSpeedRatio:
    def test_identical_results(self):
        assert consensus_speed_ratio(result_with(0.4), result_with(0.4)) == 1.0

    def test_double(self):
        assert consensus_speed_ratio(result_with(0.5), result_with(0.25)) == 2.0

    def test_zero_reference_rejected(self):
        with pytest.raises(ValueError):
            consensus_speed_ratio(result_with(0.5), result_with(0.0))
