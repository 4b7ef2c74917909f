import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import szegraph.metrics as M
from conftest import connected_graph, connected_graphs
from szegraph.graph import Graph
from szegraph.metrics import (
    DisconnectedGraphError,
    MetricsReport,
    SolverError,
    combinatorial_gap,
    commute_time,
    effective_resistance,
    is_bipartite,
    is_connected,
    local_prediction,
    luxburg_bound_check,
    rel_dev,
    rel_dev_aggregate,
    resistance_matrix,
    resistances,
    sample_pairs,
    spectral_gap,
)
from szegraph.synth import GroundTruthSpec, make_gt


def path(n, w=1.0):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)], [w] * (n - 1))


def cycle(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def two_cliques(s=5):
    w = np.kron(np.eye(2), np.ones((s, s)))
    np.fill_diagonal(w, 0)
    return Graph(w)


def laplacian_resistance(g, i, j):
    # independent oracle: explicit grounded solve with numpy
    n = g.n
    lap = np.diag(g.weights.sum(1)) - g.weights
    keep = [v for v in range(n) if v != j]
    b = np.zeros(n)
    b[i] = 1.0
    x = np.linalg.solve(lap[np.ix_(keep, keep)], b[keep])
    return x[keep.index(i)]


class TestResistance:
    def test_single_edge(self):
        assert effective_resistance(Graph.complete(2), 0, 1) == pytest.approx(1.0)

    def test_series(self):
        assert effective_resistance(path(4), 0, 3) == pytest.approx(3.0)

    def test_weighted_series(self):
        # conductance 0.5 per edge: resistance 2 each
        assert effective_resistance(path(3, 0.5), 0, 2) == pytest.approx(4.0)

    @pytest.mark.parametrize("n", range(5, 21))
    @pytest.mark.parametrize("method", ["pinv", "solve", "cg"])
    def test_complete_graph(self, n, method):
        g = Graph.complete(n)
        assert effective_resistance(g, 0, n - 1, method) == pytest.approx(2 / n, abs=1e-10)

    def test_same_vertex_is_zero_with_warning(self):
        with pytest.warns(UserWarning, match="itself"):
            assert effective_resistance(Graph.complete(3), 1, 1) == 0.0

    def test_disconnected(self):
        with pytest.raises(DisconnectedGraphError):
            effective_resistance(two_cliques(), 0, 9)
        with pytest.raises(DisconnectedGraphError):
            resistances(two_cliques(), [(0, 1)], "cg")

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            resistances(Graph.complete(3), [(0, 1)], "magic")

    def test_cg_failure_is_reported(self, monkeypatch):
        monkeypatch.setattr(M, "cg", lambda *a, **k: (np.zeros(a[1].size), 7))
        with pytest.raises(SolverError, match="did not converge"):
            resistances(Graph.complete(4), [(0, 1)], "cg")

    @given(connected_graphs(max_n=12))
    def test_matches_independent_solve(self, g):
        i, j = 0, g.n - 1
        assert resistances(g, [(i, j)], "pinv")[0] == pytest.approx(laplacian_resistance(g, i, j), rel=1e-8)

    @given(connected_graphs(min_n=3, max_n=40))
    def test_solver_paths_agree(self, g):
        pairs = sample_pairs(g.n)
        ref = resistances(g, pairs, "pinv")
        assert np.max(np.abs(resistances(g, pairs, "cg") - ref)) <= 1e-8
        assert np.max(np.abs(resistances(g, pairs, "solve") - ref)) <= 1e-8

    def test_batched_direct_solve(self, monkeypatch):
        g = connected_graph(np.random.default_rng(4), 80, 0.1, weighted=True)
        pairs = sample_pairs(80)
        ref = resistances(g, pairs, "pinv")
        monkeypatch.setattr(M, "DIRECT_BATCH_LIMIT", 0)
        assert np.max(np.abs(resistances(g, pairs, "solve") - ref)) <= 1e-10

    @given(connected_graphs(min_n=3, max_n=12), st.data())
    def test_is_a_metric(self, g, data):
        r = resistance_matrix(g)
        assert np.allclose(r, r.T)
        assert np.all(r[~np.eye(g.n, dtype=bool)] > 0)
        a, b, c = (data.draw(st.integers(0, g.n - 1)) for _ in range(3))
        assert r[a, c] <= r[a, b] + r[b, c] + 1e-10

    @given(connected_graphs(min_n=3, max_n=12), st.data(), st.floats(0.05, 1.0))
    def test_rayleigh_monotonicity(self, g, data, extra):
        i = data.draw(st.integers(0, g.n - 1))
        j = data.draw(st.integers(0, g.n - 1).filter(lambda v: v != i))
        w = g.weights.copy()
        w[i, j] = w[j, i] = min(1.0, w[i, j] + extra)
        assert np.all(resistance_matrix(Graph(w)) <= resistance_matrix(g) + 1e-10)


class TestCommuteAndPrediction:
    def test_single_edge(self):
        assert commute_time(Graph.complete(2), 0, 1) == pytest.approx(2.0)

    def test_k4(self):
        assert commute_time(Graph.complete(4), 0, 1) == pytest.approx(6.0)

    def test_disconnected(self):
        with pytest.raises(DisconnectedGraphError):
            commute_time(two_cliques(), 0, 5)

    def test_prediction(self):
        assert local_prediction(Graph.complete(4), 0, 1) == pytest.approx(2 / 3)
        assert local_prediction(path(3), 0, 1) == pytest.approx(1.5)
        with pytest.raises(ValueError, match="isolated"):
            local_prediction(Graph.from_edges(3, [(0, 1)]), 0, 2)


class TestRelDev:
    @pytest.mark.parametrize("n", range(3, 21))
    def test_complete_graph(self, n):
        assert rel_dev(Graph.complete(n), 0, 1) == pytest.approx(1 / (n - 1), abs=1e-10)

    def test_exact_prediction(self):
        # path endpoints: R = 2 = 1/1 + 1/1
        assert rel_dev(path(3), 0, 2) == pytest.approx(0.0, abs=1e-12)

    def test_single_edge(self):
        assert rel_dev(Graph.complete(2), 0, 1) == pytest.approx(1.0)

    @given(connected_graphs(min_n=3, max_n=12), st.floats(0.05, 1.0))
    def test_scale_invariant(self, g, c):
        pairs = sample_pairs(g.n)
        scaled = Graph(g.weights * c)
        assert np.allclose(M.rel_devs(g, pairs), M.rel_devs(scaled, pairs), rtol=1e-7, atol=1e-10)


class TestSpectra:
    @pytest.mark.parametrize("n", [3, 10, 25])
    def test_complete_graph(self, n):
        assert spectral_gap(Graph.complete(n)) == pytest.approx(n / (n - 1), abs=1e-10)

    def test_cycle4(self):
        assert spectral_gap(cycle(4)) == pytest.approx(1.0, abs=1e-10)

    def test_disconnected(self):
        with pytest.raises(DisconnectedGraphError):
            spectral_gap(two_cliques())

    def test_combinatorial_gap_of_complete_graph(self):
        assert combinatorial_gap(Graph.complete(8)) == pytest.approx(8.0)

    def test_iterative_path_matches_dense(self, monkeypatch):
        g = connected_graph(np.random.default_rng(9), 120, 0.08, weighted=True)
        dense = spectral_gap(g)
        monkeypatch.setattr(M, "DENSE_EIG_LIMIT", 10)
        assert spectral_gap(g) == pytest.approx(dense, abs=1e-8)


class TestBound:
    def test_complete_graph(self):
        res = luxburg_bound_check(Graph.complete(10))
        assert res.holds and not res.bipartite

    def test_ground_truth(self):
        g, _ = make_gt(GroundTruthSpec(), seed=0)
        res = luxburg_bound_check(g)
        assert res.holds and res.max_slack_violation <= 0

    def test_bipartite_warns(self):
        with pytest.warns(UserWarning, match="bipartite"):
            res = luxburg_bound_check(cycle(6))
        assert res.bipartite

    @given(connected_graphs(min_n=3, max_n=16))
    def test_fuzz(self, g):
        if is_bipartite(g):
            return
        assert luxburg_bound_check(g).holds


def test_bipartite_detection():
    assert is_bipartite(cycle(4)) and is_bipartite(path(5))
    assert not is_bipartite(cycle(5)) and not is_bipartite(Graph.complete(3))
    # second component holds the odd cycle
    w = np.zeros((7, 7))
    w[0, 1] = w[1, 0] = 1
    for a, b in [(2, 3), (3, 4), (4, 2)]:
        w[a, b] = w[b, a] = 1
    assert not is_bipartite(Graph(w))


def test_connectivity():
    assert is_connected(path(5)) and not is_connected(two_cliques())


class TestSampling:
    def test_full_enumeration(self):
        pairs = sample_pairs(30)
        assert len(pairs) == 435 and np.all(pairs[:, 0] < pairs[:, 1])

    @pytest.mark.parametrize("n", [501, 777, 1200])
    def test_sampled(self, n):
        pairs = sample_pairs(n, seed=3)
        assert len(pairs) == 10 * n
        assert len({tuple(p) for p in pairs.tolist()}) == 10 * n
        assert np.all(pairs[:, 0] < pairs[:, 1]) and pairs.min() >= 0 and pairs.max() < n
        assert np.array_equal(pairs, sample_pairs(n, seed=3))
        assert not np.array_equal(pairs, sample_pairs(n, seed=4))


class TestReport:
    def test_complete_graph(self):
        rep = rel_dev_aggregate(Graph.complete(12))
        assert rep.reldev_mean == pytest.approx(1 / 11)
        assert rep.n_pairs_sampled == 66
        assert rep.bound_rhs == pytest.approx(2 / (12 / 11 * 11))
        assert rep.volume == 132 and rep.d_min == 11

    def test_serialization(self):
        rep = rel_dev_aggregate(path(6))
        assert MetricsReport.from_json(rep.to_json()) == rep
        assert json.loads(rep.to_json())["n_pairs_sampled"] == 15
        assert len(rep.to_csv_row().split(",")) == len(MetricsReport.csv_header().split(","))

    def test_ordering_invariant(self):
        with pytest.raises(ValueError):
            MetricsReport(0.5, 0.6, 0.7, 1, 1, 1, 1, 1, 1, 0)

    @given(connected_graphs(min_n=3, max_n=12))
    def test_min_mean_max(self, g):
        rep = rel_dev_aggregate(g)
        assert 0 <= rep.reldev_min <= rep.reldev_mean + 1e-12 <= rep.reldev_max + 2e-12

    def test_rejects_self_pairs(self):
        with pytest.raises(ValueError):
            rel_dev_aggregate(Graph.complete(4), pairs=[(1, 1)])
