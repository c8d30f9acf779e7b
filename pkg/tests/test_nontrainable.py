import numpy as np
import pytest

from graphpool.core import SelectOutput, pool
from graphpool.graph import Graph, erdos_renyi, grid2d, laplacian, ring, sensor
from graphpool.nontrainable import (
    DegenerateSignalError,
    GraclusPool,
    LaPool,
    NdpPool,
    NmfPool,
    local_maxima,
    nmf_factorize,
)


def path3():
    return Graph(np.arange(3, dtype=float)[:, None], np.array([[0, 1], [1, 2]]), np.ones(2))


def two_disjoint_edges():
    return Graph(np.zeros((4, 1)), np.array([[0, 1], [2, 3]]), np.ones(2))


def star(leaves, center_feature=(1.0, 0.0), leaf_feature=(0.0, 1.0)):
    x = np.array([center_feature] + [leaf_feature] * leaves, dtype=float)
    ei = np.array([[0, i] for i in range(1, leaves + 1)])
    return Graph(x, ei, np.ones(leaves))


class TestGraclusSelect:
    def test_single_node(self):
        g = Graph(np.zeros((1, 1)), np.empty((0, 2), dtype=int), np.empty(0))
        sel = GraclusPool().select(g)
        assert sel.k == 1
        assert np.allclose(sel.matrix(), [[1.0]])

    def test_two_disjoint_edges_merged(self):
        sel = GraclusPool().select(two_disjoint_edges())
        assert sel.k == 2
        m = np.abs(sel.matrix()) > 0
        assert np.array_equal(m[:, 0], [True, True, False, False])
        assert np.array_equal(m[:, 1], [False, False, True, True])

    def test_path3_greedy_trace(self):
        # visit 0 first: merges (0,1); node 2 is left a singleton
        sel = GraclusPool().select(path3())
        assert sel.k == 2
        m = np.abs(sel.matrix()) > 0
        assert np.array_equal(m[:, 0], [True, True, False])
        assert np.array_equal(m[:, 1], [False, False, True])

    def test_matched_pairs_adjacent_everywhere(self):
        g = sensor(24, 4)
        sel = GraclusPool().select(g)
        adj = g.adjacency()
        m = np.abs(sel.matrix()) > 0
        assert np.all(m.sum(axis=1) == 1)  # partition
        for col in range(sel.k):
            members = np.nonzero(m[:, col])[0]
            assert members.size in (1, 2)
            if members.size == 2:
                assert adj[members[0], members[1]] > 0

    def test_seeded_order_still_valid_matching(self):
        g = grid2d(4, 4)
        sel = GraclusPool(order_seed=11).select(g)
        m = np.abs(sel.matrix()) > 0
        assert np.all(m.sum(axis=1) == 1)
        assert np.ceil(g.n / 2) <= sel.k <= g.n

    def test_mean_reduce_equals_gated_matrix_product(self):
        g = grid2d(3, 3)
        op = GraclusPool()
        sel = op.select(g)
        x = op.reduce(g, sel)
        assert np.allclose(x, sel.matrix().T @ g.node_features)
        sizes = (np.abs(sel.matrix()) > 0).sum(axis=0)
        m = np.abs(sel.matrix()) > 0
        for col in range(sel.k):
            members = np.nonzero(m[:, col])[0]
            assert np.allclose(x[col], g.node_features[members].mean(axis=0))
            assert sizes[col] == members.size


class TestGraclusConnect:
    def test_plain_contraction_path3(self):
        g = path3()
        op = GraclusPool(connect_mode="contract")
        pooled = pool(g, op)
        assert np.allclose(pooled.a_pooled, [[0.0, 1.0], [1.0, 0.0]])

    def test_plain_contraction_identity_selection(self):
        g = grid2d(3, 3)
        op = GraclusPool(connect_mode="contract")
        sel = SelectOutput.from_assignment(g.n, np.arange(g.n), g.n)
        assert np.allclose(op.connect(g, sel), g.adjacency())

    def test_normalized_contraction_path3(self):
        # crossing edge (1,2) has normalized weight 1/sqrt(2); the pair
        # cluster scales it by 1/sqrt(2) again
        pooled = pool(path3(), GraclusPool())
        assert np.allclose(pooled.a_pooled, [[0.0, 0.5], [0.5, 0.0]])

    def test_no_crossing_edges_gives_empty_connection(self):
        for mode in ("normalized", "contract"):
            pooled = pool(two_disjoint_edges(), GraclusPool(connect_mode=mode))
            assert np.allclose(pooled.a_pooled, 0.0)

    def test_symmetric_zero_diagonal(self):
        pooled = pool(sensor(20, 9), GraclusPool())
        a = pooled.a_pooled
        assert np.allclose(a, a.T)
        assert np.allclose(np.diag(a), 0.0)

    def test_invalid_mode(self):
        with pytest.raises(ValueError):
            GraclusPool(connect_mode="metis")


class TestNdp:
    def test_path2_keeps_one_node(self):
        g = Graph(np.zeros((2, 1)), np.array([[0, 1]]), np.ones(1))
        sel = NdpPool().select(g)
        assert sel.k == 1
        assert list(sel.nodes) == [0]  # sign fix makes the first entry positive

    def test_ring4_keeps_alternating(self):
        g = ring(4)
        sel = NdpPool().select(g)
        assert sel.k == 2
        kept = set(sel.nodes)
        assert kept in ({0, 2}, {1, 3})

    def test_ring4_connect_parallel_paths(self):
        # two parallel 2-hop unit paths between the kept pair: each path
        # has conductance 1/2, in parallel they sum to 1
        pooled = pool(ring(4), NdpPool())
        assert np.allclose(pooled.a_pooled, [[0.0, 1.0], [1.0, 0.0]], atol=1e-9)

    def test_path3_keep_endpoints_series_resistance(self):
        g = path3()
        op = NdpPool()
        sel = SelectOutput.from_kept_nodes(3, [0, 2])
        assert np.allclose(op.connect(g, sel), [[0.0, 0.5], [0.5, 0.0]], atol=1e-12)

    def test_keep_all_returns_adjacency(self):
        g = grid2d(3, 3)
        sel = SelectOutput.from_kept_nodes(g.n, np.arange(g.n))
        assert np.allclose(NdpPool().connect(g, sel), g.adjacency(), atol=1e-9)

    def test_reduce_is_subsampling(self):
        g = sensor(16, 2)
        op = NdpPool()
        sel = op.select(g)
        x = op.reduce(g, sel)
        assert np.array_equal(x, g.node_features[sel.nodes])
        assert np.array_equal(x, sel.matrix().T @ g.node_features)

    def test_keep_size_bounds_connected(self):
        for seed in range(8):
            g = sensor(20, seed)
            sel = NdpPool().select(g)
            assert 1 <= sel.k <= g.n - 1

    def test_per_component_selection(self):
        g = two_disjoint_edges()
        sel = NdpPool().select(g)
        assert sel.k == 2
        kept = set(int(i) for i in sel.nodes)
        assert len(kept & {0, 1}) == 1
        assert len(kept & {2, 3}) == 1

    def test_connect_weights_nonnegative(self):
        g = sensor(24, 6)
        pooled = pool(g, NdpPool())
        assert pooled.a_pooled.min() >= 0.0

    def test_grid_checkerboard(self):
        sel = NdpPool().select(grid2d(8, 8))
        assert sel.k == 32


class TestNmf:
    def test_rank1_all_ones_exact(self):
        a = np.ones((4, 4))
        w, h, objectives, converged = nmf_factorize(a, 1, 500, 1e-8)
        assert np.abs(a - w @ h).max() <= 1e-6
        assert converged

    def test_rank1_select_column_constant(self):
        g = Graph(np.zeros((4, 1)), np.array([[i, j] for i in range(4) for j in range(i + 1, 4)]),
                  np.ones(6))
        sel = NmfPool(rank=1).select(g)
        col = sel.matrix()[:, 0]
        assert col.min() > 0
        assert col.std() / col.mean() <= 1e-3

    def test_two_triangles_block_structure(self):
        ei = np.array([[0, 1], [0, 2], [1, 2], [3, 4], [3, 5], [4, 5]])
        g = Graph(np.zeros((6, 1)), ei, np.ones(6))
        sel = NmfPool(rank=2).select(g)
        best = np.argmax(sel.matrix(), axis=1)
        assert best[0] == best[1] == best[2]
        assert best[3] == best[4] == best[5]
        assert best[0] != best[3]

    def test_objective_non_increasing_on_random_graphs(self):
        for seed in range(20):
            g = erdos_renyi(12, 0.4, seed=seed)
            for init in ("nndsvda", "random"):
                _, _, objectives, _ = nmf_factorize(g.adjacency(), 4, 60, 0.0, seed=seed, init=init)
                assert np.all(np.diff(objectives) <= 1e-9)

    def test_recovers_synthetic_low_rank(self):
        rng = np.random.default_rng(0)
        b = rng.random((10, 3))
        a = b @ b.T  # symmetric nonnegative, rank 3
        _, _, objectives, _ = nmf_factorize(a, 3, 5000, 0.0, seed=0)
        assert objectives[-1] / np.linalg.norm(a) <= 1e-3

    def test_convergence_flag_when_capped(self):
        g = erdos_renyi(16, 0.4, seed=1)
        sel = NmfPool(rank=8, max_iters=1, tol=0.0).select(g)
        assert sel.info["converged"] is False

    def test_scores_nonnegative(self):
        g = grid2d(4, 4)
        sel = NmfPool().select(g)
        assert sel.matrix().min() >= 0.0
        assert sel.k == 8


class TestLaPool:
    def test_star_center_is_sole_leader(self):
        g = star(3)
        sel = LaPool().select(g)
        assert sel.k == 1
        assert list(sel.info["leaders"]) == [0]
        assert np.allclose(sel.matrix().sum(axis=1), 1.0)

    def test_constant_features_degenerate(self):
        g = Graph(np.ones((5, 2)), np.array([[i, i + 1] for i in range(4)]), np.ones(4))
        with pytest.raises(DegenerateSignalError):
            LaPool().select(g)

    def test_rows_on_simplex(self):
        g = sensor(20, 3)
        sel = LaPool().select(g)
        s = sel.matrix()
        assert np.allclose(s.sum(axis=1), 1.0)
        assert s.min() >= 0.0

    def test_local_maxima_strict_and_shift_invariant(self):
        ei = np.array([[0, 1], [1, 2]])
        values = np.array([1.0, 1.0, 0.5])
        assert list(local_maxima(values, ei)) == []  # tie kills both
        assert list(local_maxima(values + 100.0, ei)) == []
        values = np.array([2.0, 1.0, 0.5])
        assert list(local_maxima(values, ei)) == [0]
        assert list(local_maxima(values - 7.0, ei)) == [0]

    def test_isolated_node_is_vacuous_leader(self):
        assert list(local_maxima(np.array([0.0]), np.empty((0, 2), dtype=int))) == [0]

    def test_zero_norm_feature_row_gets_uniform_assignment(self):
        # center (0,0): cosine to every leader is defined as 0, and the
        # sparsemax of a constant row is uniform
        x = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        ei = np.array([[0, 1], [0, 2], [0, 3]])
        g = Graph(x, ei, np.array([1.0, 1.0, 2.0]))
        sel = LaPool().select(g)
        leaders = sel.info["leaders"]
        zero_row = sel.matrix()[0]
        assert np.allclose(zero_row, 1.0 / len(leaders))

    def test_beta_validation(self):
        with pytest.raises(ValueError):
            LaPool(beta=0.0)

    def test_adaptive_k(self):
        g = sensor(30, 8)
        sel = LaPool().select(g)
        assert 1 <= sel.k < g.n


class TestModifiedReducePath:
    def test_all_reduce_outputs_equal_gated_matrix_product(self):
        g = sensor(14, 7)
        for op in (GraclusPool(), NdpPool(), NmfPool(rank=7), LaPool()):
            sel = op.select(g)
            assert np.allclose(op.reduce(g, sel), sel.matrix().T @ g.node_features)
