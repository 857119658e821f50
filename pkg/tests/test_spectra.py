import numpy as np
import pytest

from dyninf import (
    Graph,
    generate_knnr,
    influence_coordinates,
    laplacian,
    left_eigs,
    select_input_vectors,
)
from dyninf.spectra import (
    DUPLICATE_COLUMN_TOL,
    InsufficientVectorsError,
    export_basis_csv,
)

from conftest import random_strongly_connected


def chain3():
    return Graph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])


def cycle(n):
    return Graph.from_edges(n, [(i, (i + 1) % n, 1.0) for i in range(n)])


class TestLeftEigs:
    def test_chain_null_vector_on_sink(self):
        basis = left_eigs(laplacian(chain3()), count=1)
        assert basis.eigenvalues[0] == pytest.approx(0, abs=1e-10)
        v = basis.vectors[0]
        assert v @ laplacian(chain3()).dense() == pytest.approx(np.zeros(3), abs=1e-10)
        assert v / np.linalg.norm(v) == pytest.approx([0, 0, 1], abs=1e-10)

    def test_balanced_cycle_uniform(self):
        basis = left_eigs(laplacian(cycle(3)), count=1)
        assert basis.eigenvalues[0] == pytest.approx(0, abs=1e-10)
        expected = np.ones(3) / np.sqrt(3)
        assert basis.vectors[0] / np.linalg.norm(basis.vectors[0]) == pytest.approx(
            expected, abs=1e-10
        )

    def test_path2_adjacency_analytic(self):
        g = Graph.from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)], directed=False)
        basis = left_eigs(g, count=2)
        assert basis.eigenvalues[0].real == pytest.approx(1.0, abs=1e-12)
        assert basis.eigenvalues[1].real == pytest.approx(-1.0, abs=1e-12)
        v = basis.vectors[0]
        assert v / np.linalg.norm(v) == pytest.approx([1, 1] / np.sqrt(2), abs=1e-12)

    def test_laplacian_ordering_ascending(self):
        g = random_strongly_connected(30, 90, seed=1)
        basis = left_eigs(laplacian(g), count=30)
        re = basis.eigenvalues.real
        assert (np.diff(re) >= -1e-9).all()
        assert re[0] == pytest.approx(0, abs=1e-9)

    def test_adjacency_ordering_descending_magnitude(self):
        g = random_strongly_connected(30, 90, seed=2)
        basis = left_eigs(g, count=30)
        mag = np.abs(basis.eigenvalues)
        assert (np.diff(mag) <= 1e-9).all()

    @pytest.mark.parametrize("seed", range(6))
    def test_residual_invariant(self, seed):
        g = random_strongly_connected(40, 160, seed=seed)
        lap = laplacian(g)
        basis = left_eigs(lap, count=10)
        assert basis.residuals.max() <= 1e-8

    @pytest.mark.parametrize("seed", range(4))
    def test_first_vector_positive_when_strongly_connected(self, seed):
        g = random_strongly_connected(50, 150, seed=seed)
        basis = left_eigs(laplacian(g), count=1)
        assert (basis.vectors[0] > 0).all()

    @pytest.mark.parametrize("kind", ["laplacian", "adjacency"])
    @pytest.mark.parametrize("seed", [0, 5, 9])
    def test_iterative_matches_dense(self, kind, seed):
        # Full dense decomposition is the oracle: every iterative pair must
        # appear in it, and the dominant pair must be the same one.
        g = random_strongly_connected(80, 400, seed=seed)
        m = laplacian(g) if kind == "laplacian" else g
        dense = left_eigs(m, count=80, solver="dense")
        iterative = left_eigs(m, count=4, solver="iterative")
        for lam, vec in zip(iterative.eigenvalues, iterative.vectors):
            gaps = np.abs(dense.eigenvalues - lam)
            j = int(np.argmin(gaps))
            assert gaps[j] <= 1e-6
            dv = dense.vectors[j]
            assert min(np.abs(vec - dv).max(), np.abs(vec + dv).max()) <= 1e-6
        # the dominant pair must agree including its position
        assert abs(iterative.eigenvalues[0] - dense.eigenvalues[0]) <= 1e-6

    def test_count_validation(self):
        with pytest.raises(ValueError):
            left_eigs(laplacian(chain3()), count=0)
        with pytest.raises(ValueError):
            left_eigs(laplacian(chain3()), count=4)


class TestSelectInputVectors:
    def test_single_column_is_nonnegative_first_vector(self):
        g = random_strongly_connected(20, 60, seed=3)
        coords = influence_coordinates(laplacian(g), 1)
        assert coords.e.shape == (20, 1)
        assert (coords.e[:, 0] >= 0).all()
        assert coords.s == pytest.approx(coords.e[:, 0])

    def test_conjugate_pair_skipped(self):
        # Directed 4-cycle: Laplacian spectrum {0, 1-1j, 1+1j, 2}; the pair
        # shares a real part, so y=3 must take vectors 1, 2 and 4.
        basis = left_eigs(laplacian(cycle(4)), count=4)
        assert basis.eigenvalues[1] == pytest.approx(1 + 1j, abs=1e-9)
        assert basis.eigenvalues[2] == pytest.approx(1 - 1j, abs=1e-9)
        two = select_input_vectors(basis, 2)
        assert two.source_indices == (0, 1)
        three = select_input_vectors(basis, 3)
        assert three.source_indices == (0, 1, 3)

    def test_insufficient_distinct_vectors(self):
        basis = left_eigs(laplacian(cycle(4)), count=4)
        with pytest.raises(InsufficientVectorsError):
            select_input_vectors(basis, 4)

    def test_knnr_three_columns_distinct(self, knnr100):
        coords = influence_coordinates(laplacian(knnr100), 3)
        assert coords.e.shape == (100, 3)
        for i in range(3):
            for j in range(i + 1, 3):
                a, b = coords.e[:, i], coords.e[:, j]
                assert (
                    min(np.abs(a - b).max(), np.abs(a + b).max())
                    > DUPLICATE_COLUMN_TOL
                )

    def test_s_is_row_norm(self, knnr100):
        coords = influence_coordinates(laplacian(knnr100), 3)
        assert coords.s == pytest.approx(np.linalg.norm(coords.e, axis=1))
        assert (coords.s >= 0).all()

    def test_retries_until_enough_columns(self):
        # y=3 needs a 4th eigenpair on the 4-cycle; the wrapper must extend.
        coords = influence_coordinates(laplacian(cycle(4)), 3)
        assert coords.y == 3
        assert coords.source_indices == (0, 1, 3)


class TestExport:
    def test_basis_csv_round_shape(self, tmp_path):
        g = random_strongly_connected(10, 30, seed=4)
        basis = left_eigs(laplacian(g), count=3)
        path = tmp_path / "basis.csv"
        export_basis_csv(basis, path)
        lines = path.read_text().strip().split("\n")
        assert len(lines) == 11
        header = lines[0].split(",")
        assert len(header) == 3
        assert complex(header[0]) == pytest.approx(basis.eigenvalues[0])
        row1 = [float(x) for x in lines[1].split(",")]
        assert row1 == pytest.approx([basis.vectors[i][0] for i in range(3)])
