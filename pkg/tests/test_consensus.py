import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyninf import (
    Graph,
    PerturbationVector,
    convergence_rate,
    laplacian,
    reachable_from_support,
    rightmost_rate,
    simulate,
)
from dyninf.consensus import export_trajectory_csv

from conftest import random_strongly_connected


def chain3():
    return Graph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])


def mutual_pair():
    return Graph.from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)])


def isolated_pair():
    return Graph.from_edges(2, [])


class TestPerturbationVector:
    def test_must_sum_to_one(self):
        with pytest.raises(ValueError):
            PerturbationVector(np.zeros(3))
        with pytest.raises(ValueError):
            PerturbationVector(np.array([0.6, 0.6]))

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            PerturbationVector(np.array([1.5, -0.5]))

    def test_uniform(self):
        p = PerturbationVector.uniform(4)
        assert p.c.sum() == pytest.approx(1.0)


class TestConvergenceRate:
    def test_single_vertex(self):
        g = Graph.from_edges(1, [])
        assert convergence_rate(laplacian(g), PerturbationVector(np.array([1.0]))) == 1.0

    def test_isolated_pair_unreachable(self):
        rate = convergence_rate(laplacian(isolated_pair()),
                                PerturbationVector(np.array([1.0, 0.0])))
        assert rate == 0.0

    def test_mutual_pair_analytic(self):
        rate = convergence_rate(laplacian(mutual_pair()),
                                PerturbationVector(np.array([0.5, 0.5])))
        assert rate == pytest.approx(0.5, abs=1e-9)

    @pytest.mark.parametrize("solver", ["dense", "iterative"])
    def test_solvers_agree(self, solver):
        g = random_strongly_connected(40, 120, seed=7)
        c = np.random.default_rng(1).dirichlet(np.ones(40))
        ref = rightmost_rate(laplacian(g), c, solver="dense")
        assert rightmost_rate(laplacian(g), c, solver=solver) == pytest.approx(
            ref, abs=1e-7
        )

    def test_relabelling_invariance(self):
        g = random_strongly_connected(25, 70, seed=3)
        rng = np.random.default_rng(5)
        c = rng.dirichlet(np.ones(25))
        perm = rng.permutation(25)
        cp = np.empty(25)
        cp[perm] = c
        a = rightmost_rate(laplacian(g), c)
        b = rightmost_rate(laplacian(g.permuted(perm)), cp)
        assert a == pytest.approx(b, rel=1e-7)

    @given(st.integers(min_value=0, max_value=10**6),
           st.floats(min_value=0.05, max_value=0.95))
    @settings(max_examples=25, deadline=None)
    def test_monotone_budget(self, seed, alpha):
        # scaling the allocation down never speeds consensus
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 12))
        g = random_strongly_connected(n, 3 * n, seed=seed % 4096)
        c = rng.dirichlet(np.ones(n))
        full = rightmost_rate(laplacian(g), c)
        scaled = rightmost_rate(laplacian(g), alpha * c)
        assert scaled <= full + 1e-8


class TestReachability:
    def test_chain_sink_support_reaches_all(self):
        assert reachable_from_support(chain3(), np.array([0.0, 0.0, 1.0]))

    def test_chain_source_support_fails(self):
        assert not reachable_from_support(chain3(), np.array([1.0, 0.0, 0.0]))

    def test_strongly_connected_any_support(self):
        g = random_strongly_connected(20, 40, seed=2)
        c = np.zeros(20)
        c[7] = 1.0
        assert reachable_from_support(g, c)

    def test_empty_support(self):
        assert not reachable_from_support(chain3(), np.zeros(3))

    def test_simulation_confirms_reachability_semantics(self):
        # support on the sink steers everyone; support on the source leaves
        # the sink's state untouched
        g = chain3()
        ok = simulate(g, PerturbationVector(np.array([0, 0, 1.0])), u=1.0,
                      x0=0.0, dt=0.05, t_end=60.0)
        assert np.abs(ok.states[-1] - 1.0).max() < 1e-3
        stuck = simulate(g, PerturbationVector(np.array([1.0, 0, 0])), u=1.0,
                         x0=0.0, dt=0.05, t_end=60.0)
        assert stuck.states[-1][2] == pytest.approx(0.0, abs=1e-12)


class TestSimulate:
    def test_scalar_closed_form(self):
        g = Graph.from_edges(1, [])
        traj = simulate(g, PerturbationVector(np.array([1.0])), u=5.0, x0=0.0,
                        dt=0.01, t_end=1.0)
        # x(t) = 5 (1 - exp(-t))
        assert traj.times[-1] == pytest.approx(1.0)
        assert traj.states[-1][0] == pytest.approx(5 * (1 - np.exp(-1)), abs=1e-6)

    def test_mutual_pair_symmetric(self):
        traj = simulate(mutual_pair(), PerturbationVector(np.array([0.5, 0.5])),
                        u=1.0, x0=np.zeros(2), dt=0.01, t_end=4.0)
        assert np.abs(traj.states[:, 0] - traj.states[:, 1]).max() < 1e-9
        expected = 1 - np.exp(-0.5 * traj.times)
        assert traj.states[:, 0] == pytest.approx(expected, abs=1e-6)

    def test_times_strictly_increasing(self):
        traj = simulate(chain3(), PerturbationVector.uniform(3), u=1.0, x0=0.0,
                        dt=0.1, t_end=2.0)
        assert (np.diff(traj.times) > 0).all()

    def test_validates_dt(self):
        with pytest.raises(ValueError):
            simulate(chain3(), PerturbationVector.uniform(3), 1.0, 0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            simulate(chain3(), PerturbationVector.uniform(3), 1.0, 0.0, 0.5, 0.2)

    @pytest.mark.parametrize("seed", [0, 1])
    def test_log_error_slope_matches_rate(self, seed):
        g = random_strongly_connected(12, 36, seed=seed)
        rng = np.random.default_rng(seed)
        c = rng.dirichlet(np.ones(12))
        lap = laplacian(g)
        rate = rightmost_rate(lap, c)
        t_end = 14.0 / rate
        traj = simulate(g, PerturbationVector(c), u=1.0,
                        x0=rng.standard_normal(12), dt=t_end / 400, t_end=t_end)
        err = np.abs(traj.states - 1.0).max(axis=1)
        start = err[0]
        lo = np.searchsorted(-err, -start * 1e-3)
        hi = np.searchsorted(-err, -start * 1e-4)
        window = slice(lo, hi + 1)
        slope = np.polyfit(traj.times[window], np.log(err[window]), 1)[0]
        assert slope == pytest.approx(-rate, rel=0.1)


class TestExport:
    def test_header_and_rows(self, tmp_path):
        traj = simulate(chain3(), PerturbationVector.uniform(3), u=1.0, x0=0.0,
                        dt=0.5, t_end=1.0)
        path = tmp_path / "traj.csv"
        export_trajectory_csv(traj, path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "t,x0,x1,x2"
        assert len(lines) == 1 + len(traj.times)
        assert float(lines[1].split(",")[0]) == 0.0
