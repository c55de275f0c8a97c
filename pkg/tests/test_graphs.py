import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swconsensus.graphs import (
    GraphError,
    Topology,
    TopologySet,
    build_laplacian,
    check_connected_reachability,
    spectral_analysis,
    validate_topology_set,
)


def topo(weights, label=""):
    w = np.asarray(weights, dtype=float)
    return Topology(node_count=w.shape[0], weights=w, label=label)


COMPLETE3 = topo(np.ones((3, 3)) - np.eye(3), "complete")
CYCLE3 = topo([[0, 0, 1], [1, 0, 0], [0, 1, 0]], "cycle")
EMPTY3 = topo(np.zeros((3, 3)), "empty")


class TestTopologyValidation:
    def test_negative_weight_rejected(self):
        with pytest.raises(GraphError):
            topo([[0, -1], [0, 0]])

    def test_self_loop_rejected(self):
        with pytest.raises(GraphError):
            topo([[1, 0], [0, 0]])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(GraphError):
            Topology(node_count=3, weights=np.zeros((2, 2)))

    def test_nonfinite_rejected(self):
        with pytest.raises(GraphError):
            topo([[0, np.inf], [0, 0]])


class TestLaplacian:
    def test_empty_graph_zero_matrix(self):
        lap = build_laplacian(EMPTY3)
        assert np.array_equal(lap.matrix, np.zeros((3, 3)))

    def test_complete_graph(self):
        lap = build_laplacian(COMPLETE3)
        expected = np.array([[2, -1, -1], [-1, 2, -1], [-1, -1, 2]], dtype=float)
        assert np.array_equal(lap.matrix, expected)

    def test_directed_cycle(self):
        lap = build_laplacian(CYCLE3).matrix
        assert np.allclose(np.diag(lap), 1.0)
        for row in lap:
            assert sorted(row) == [-1.0, 0.0, 1.0]

    def test_row_sums_zero(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            w = rng.uniform(0, 3, size=(4, 4))
            np.fill_diagonal(w, 0.0)
            lap = build_laplacian(topo(w)).matrix
            assert np.abs(lap.sum(axis=1)).max() < 1e-12


class TestSpectralAnalysis:
    def test_zero_laplacian(self):
        spec = spectral_analysis(build_laplacian(EMPTY3))
        assert spec.zero_multiplicity == 3
        assert not spec.is_connected
        assert spec.min_nonzero_real == np.inf

    def test_complete_graph(self):
        spec = spectral_analysis(build_laplacian(COMPLETE3))
        assert spec.zero_multiplicity == 1
        assert spec.is_connected
        assert np.allclose(np.sort(spec.eigenvalues.real), [0.0, 3.0, 3.0], atol=1e-9)
        assert abs(spec.min_nonzero_real - 3.0) < 1e-9

    def test_directed_cycle_complex_pair(self):
        # characteristic polynomial lambda (lambda^2 - 3 lambda + 3)
        spec = spectral_analysis(build_laplacian(CYCLE3))
        assert spec.is_connected
        assert abs(spec.min_nonzero_real - 1.5) < 1e-9
        ims = np.sort(spec.eigenvalues.imag)
        assert np.allclose(ims, [-np.sqrt(3) / 2, 0.0, np.sqrt(3) / 2], atol=1e-9)

    def test_eigenvalues_sorted_by_real_part(self):
        spec = spectral_analysis(build_laplacian(COMPLETE3))
        assert np.all(np.diff(spec.eigenvalues.real) >= -1e-12)

    def test_bad_zero_tol_rejected(self):
        with pytest.raises(ValueError):
            spectral_analysis(build_laplacian(COMPLETE3), zero_tol=0.0)


class TestReachability:
    def test_single_node(self):
        assert check_connected_reachability(topo([[0.0]]))

    def test_two_isolated_nodes(self):
        assert not check_connected_reachability(topo(np.zeros((2, 2))))

    def test_chain(self):
        # node 1 -> 2 -> 3, root is node 1
        w = np.zeros((3, 3))
        w[1, 0] = 1.0
        w[2, 1] = 1.0
        assert check_connected_reachability(topo(w))

    def test_chain_reversed_edge_blocks(self):
        w = np.zeros((3, 3))
        w[1, 0] = 1.0
        w[1, 2] = 1.0  # both endpoints feed node 2; no root reaches everyone
        assert not check_connected_reachability(topo(w))


@settings(max_examples=150, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=6),
    bits=st.integers(min_value=0, max_value=2**30 - 1),
)
def test_oracle_agreement_random_binary(n, bits):
    w = np.zeros((n, n))
    b = 0
    for k in range(n):
        for j in range(n):
            if k != j:
                w[k, j] = float((bits >> b) & 1)
                b += 1
    t = topo(w)
    spec = spectral_analysis(build_laplacian(t))
    assert spec.is_connected == check_connected_reachability(t)


class TestTopologySet:
    def test_mu_within_bound_valid(self):
        ts = TopologySet((COMPLETE3,), mu=2.0)
        assert validate_topology_set(ts)["valid"]

    def test_mu_above_bound_invalid(self):
        ts = TopologySet((COMPLETE3,), mu=3.5)
        assert not validate_topology_set(ts)["valid"]

    def test_empty_set_vacuously_valid(self):
        ts = TopologySet((EMPTY3,), mu=1.0)
        assert validate_topology_set(ts)["valid"]

    def test_partition_indices(self):
        ts = TopologySet((COMPLETE3, EMPTY3, CYCLE3), mu=1.0)
        assert ts.connected_indices == (0, 2)
        assert ts.disconnected_indices == (1,)

    def test_mixed_node_counts_rejected(self):
        with pytest.raises(GraphError):
            TopologySet((COMPLETE3, topo(np.zeros((2, 2)))), mu=1.0)

    def test_nonpositive_mu_rejected(self):
        with pytest.raises(GraphError):
            TopologySet((COMPLETE3,), mu=0.0)
