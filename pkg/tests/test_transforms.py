import numpy as np
import pytest

from swconsensus.graphs import Topology, build_laplacian, spectral_analysis
from swconsensus.riccati import build_gain, solve_riccati
from swconsensus.transforms import (
    TransformError,
    build_transform,
    evaluate_V,
    from_transformed,
    jump_map,
    lyapunov_weight,
    to_transformed,
    upsilon_bar,
    v_extremal_eigs,
)


def transform_of(weights):
    lap = build_laplacian(Topology(weights.shape[0], weights))
    return build_transform(lap), lap


def chain2():
    w = np.zeros((2, 2))
    w[1, 0] = 1.0
    return transform_of(w)


def cycle3():
    w = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=float)
    return transform_of(w)


def empty3():
    return transform_of(np.zeros((3, 3)))


class TestBuildTransform:
    def test_two_agent_chain_hand_case(self):
        tr, _ = chain2()
        assert np.allclose(np.abs(tr.J), [[1.0]])
        assert np.allclose(tr.T @ tr.T_inv, np.eye(2), atol=1e-12)
        assert tr.L_nc.shape == (0, 0)
        assert np.allclose(tr.L_c, [[1.0]])

    def test_two_agent_chain_transformed_laplacian(self):
        tr, lap = chain2()
        Lt = tr.T_inv @ lap.matrix @ tr.T
        assert np.allclose(Lt, [[0.0, 0.0], [0.0, 1.0]], atol=1e-10)

    def test_connected_topology_has_no_nc_block(self):
        tr, _ = cycle3()
        assert tr.L_nc.shape == (0, 0)
        assert tr.L_c.shape == (2, 2)

    def test_empty_graph_all_nc(self):
        tr, _ = empty3()
        assert tr.L_c.shape == (0, 0)
        assert np.allclose(tr.L_22, np.zeros((2, 2)))

    def test_zero_first_column(self):
        for tr, lap in (chain2(), cycle3(), empty3()):
            Lt = tr.T_inv @ lap.matrix @ tr.T
            assert np.abs(Lt[:, 0]).max() < 1e-8

    def test_eigenvalue_multiset_preserved(self):
        for tr, lap in (chain2(), cycle3(), empty3()):
            Lt = tr.T_inv @ lap.matrix @ tr.T
            e1 = np.sort_complex(np.linalg.eigvals(lap.matrix))
            e2 = np.sort_complex(np.linalg.eigvals(Lt))
            assert np.abs(e1 - e2).max() < 1e-8

    def test_mixed_spectrum_decoupled(self):
        # two connected pairs with no cross links: zero multiplicity 2
        w = np.zeros((4, 4))
        w[1, 0] = 1.0
        w[0, 1] = 1.0
        w[3, 2] = 1.0
        w[2, 3] = 1.0
        tr, lap = transform_of(w)
        assert tr.L_nc.shape == (1, 1)
        assert tr.L_c.shape == (2, 2)
        off1 = tr.L_22[: 1, 1:]
        off2 = tr.L_22[1:, :1]
        assert np.abs(off1).max() < 1e-10 and np.abs(off2).max() < 1e-10

    def test_single_node_rejected(self):
        lap = build_laplacian(Topology(1, np.zeros((1, 1))))
        with pytest.raises(TransformError):
            build_transform(lap)


@pytest.fixture(scope="module")
def gain2():
    return build_gain(solve_riccati(2, 1.0, 1.0), 3.0)


class TestCoordinateChange:
    def test_consensus_state_maps_to_zero(self, gain2):
        tr, _ = cycle3()
        w = np.tile([1.3, -0.2], 3)
        _, zeta = to_transformed(tr, gain2, w)
        assert np.abs(zeta).max() < 1e-12

    def test_zero_maps_to_zero(self, gain2):
        tr, _ = cycle3()
        z1, zeta = to_transformed(tr, gain2, np.zeros(6))
        assert np.abs(z1).max() == 0.0 and np.abs(zeta).max() == 0.0

    def test_round_trip(self, gain2):
        tr, _ = cycle3()
        rng = np.random.default_rng(1)
        w = rng.normal(size=6)
        z1, zeta = to_transformed(tr, gain2, w)
        back = from_transformed(tr, gain2, zeta, z1)
        assert np.abs(back - w).max() < 1e-10


class TestJumpMap:
    def test_identity_jump(self, gain2):
        tr, _ = cycle3()
        rng = np.random.default_rng(2)
        zeta = rng.normal(size=4)
        assert np.abs(jump_map(tr, tr, gain2, zeta) - zeta).max() < 1e-12

    def test_zero_maps_to_zero(self, gain2):
        tr_a, _ = cycle3()
        tr_b, _ = empty3()
        assert np.abs(jump_map(tr_a, tr_b, gain2, np.zeros(4))).max() == 0.0

    def test_two_path_consistency(self, gain2):
        tr_a, _ = cycle3()
        tr_b, _ = empty3()
        rng = np.random.default_rng(3)
        for _ in range(50):
            zeta = rng.normal(size=4)
            z1 = rng.normal(size=2)
            direct = jump_map(tr_a, tr_b, gain2, zeta)
            w = from_transformed(tr_a, gain2, zeta, z1)
            _, via_state = to_transformed(tr_b, gain2, w)
            assert np.abs(direct - via_state).max() < 1e-10


class TestLyapunovForm:
    def test_zero_state(self):
        sol = solve_riccati(2, 1.0, 1.0)
        assert evaluate_V(sol, 2.0, np.zeros(4)) == 0.0

    def test_two_agents_scalar_identity_weight(self):
        sol = solve_riccati(1, 0.5, 1.0)  # P = [1]
        for zeta in (np.array([0.7]), np.array([-2.0])):
            assert evaluate_V(sol, 7.0, zeta, n_agents=2) == pytest.approx(zeta[0] ** 2)

    def test_rayleigh_sandwich(self):
        sol = solve_riccati(2, 1.0, 1.0)
        lam_lo, lam_hi = v_extremal_eigs(4, sol, 3.0)
        rng = np.random.default_rng(4)
        for _ in range(50):
            zeta = rng.normal(size=6)
            v = evaluate_V(sol, 3.0, zeta, n_agents=4)
            norm2 = float(zeta @ zeta)
            assert lam_lo * norm2 - 1e-9 <= v <= lam_hi * norm2 + 1e-9

    def test_weight_structure(self):
        sol = solve_riccati(2, 1.0, 1.0)
        Q = lyapunov_weight(3, sol, 5.0)
        Pinv = np.linalg.inv(sol.P)
        assert np.allclose(Q[:2, :2], Pinv)
        assert np.allclose(Q[2:, 2:], 5.0 * Pinv)

    def test_upsilon_bar_identity_pair(self):
        tr, _ = cycle3()
        assert upsilon_bar((tr,), 2) == pytest.approx(1.0, abs=1e-10)

    def test_upsilon_bar_at_least_one_for_orthogonal(self):
        tr_a, _ = cycle3()
        tr_b, _ = empty3()
        assert upsilon_bar((tr_a, tr_b), 2) >= 1.0 - 1e-10
