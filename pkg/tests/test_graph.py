import time

import numpy as np
import pytest

from graphpool.graph import (
    Graph,
    LaplacianKind,
    ParseError,
    component_labels,
    erdos_renyi,
    grid2d,
    laplacian,
    load_graph,
    num_components,
    ring,
    save_graph,
    sensor,
)


def path_graph(n, weights=None):
    ei = np.array([[i, i + 1] for i in range(n - 1)])
    w = np.ones(n - 1) if weights is None else np.asarray(weights, float)
    x = np.arange(n, dtype=float)[:, None]
    return Graph(x, ei, w)


def bfs_component_count(g):
    # independent oracle for the Laplacian zero-eigenvalue invariant
    adj = [[] for _ in range(g.n)]
    for i, j in g.edge_index:
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * g.n
    count = 0
    for s in range(g.n):
        if seen[s]:
            continue
        count += 1
        stack = [s]
        seen[s] = True
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
    return count


class TestGraphInvariants:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            Graph(np.zeros((2, 1)), np.array([[0, 0]]), np.array([1.0]))

    def test_rejects_nonpositive_weight(self):
        with pytest.raises(ValueError):
            Graph(np.zeros((2, 1)), np.array([[0, 1]]), np.array([0.0]))

    def test_rejects_out_of_range_index(self):
        with pytest.raises(ValueError):
            Graph(np.zeros((2, 1)), np.array([[0, 2]]), np.array([1.0]))

    def test_rejects_duplicate_edge(self):
        with pytest.raises(ValueError):
            Graph(np.zeros((3, 1)), np.array([[0, 1], [0, 1]]), np.array([1.0, 1.0]))

    def test_feature_row_count(self):
        with pytest.raises(ValueError):
            Graph(np.zeros((2, 1)), np.array([[0, 1]]), np.array([1.0]), coords=np.zeros((3, 2)))

    def test_immutable_arrays(self):
        g = grid2d(2, 2)
        with pytest.raises(ValueError):
            g.node_features[0, 0] = 5.0

    def test_degrees_weighted(self):
        g = path_graph(3, [2.0, 3.0])
        assert np.allclose(g.degrees(), [2.0, 5.0, 3.0])

    def test_adjacency_sparse_matches_dense(self):
        g = erdos_renyi(30, 0.2, seed=5)
        assert np.allclose(g.adjacency_sparse().toarray(), g.adjacency())


class TestGrid2d:
    def test_8x8_matches_benchmark_statistics(self):
        g = grid2d(8, 8)
        assert g.n == 64
        assert g.num_edges == 112
        assert 2 * g.num_edges / g.n == pytest.approx(3.5)

    def test_smallest_path(self):
        g = grid2d(1, 2)
        assert g.n == 2 and g.num_edges == 1

    def test_2x2_square_enumerated_by_hand(self):
        g = grid2d(2, 2)
        assert g.n == 4
        expected = {(0, 1), (0, 2), (1, 3), (2, 3)}
        assert {tuple(e) for e in g.edge_index} == expected

    def test_coordinate_spacing(self):
        g = grid2d(8, 8)
        # spacing 1/max(rows, cols), starting at the origin
        assert g.coords.min() == 0.0
        assert g.coords.max() == pytest.approx(7 / 8)
        d = g.coords[1] - g.coords[0]
        assert np.allclose(np.linalg.norm(d), 1 / 8)

    def test_features_are_coords(self):
        g = grid2d(3, 5)
        assert np.array_equal(g.node_features, g.coords)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            grid2d(0, 3)


class TestRing:
    def test_64(self):
        g = ring(64)
        assert g.n == 64 and g.num_edges == 64
        assert np.allclose(g.degrees(), 2.0)

    def test_triangle(self):
        g = ring(3)
        assert g.num_edges == 3
        assert np.allclose(g.degrees(), 2.0)

    def test_too_small(self):
        with pytest.raises(ValueError):
            ring(2)

    def test_unit_circle_coords(self):
        g = ring(10)
        assert np.allclose(np.linalg.norm(g.coords, axis=1), 1.0)

    def test_ring4_spectrum_closed_form(self):
        # eigenvalues of the cycle Laplacian: 2 - 2 cos(2 pi k / n)
        g = ring(4)
        vals = np.linalg.eigvalsh(laplacian(g))
        assert np.allclose(sorted(vals), [0.0, 2.0, 2.0, 4.0], atol=1e-9)


class TestSensor:
    def test_edge_count_band(self):
        for seed in range(5):
            g = sensor(64, seed)
            assert 248 <= g.num_edges <= 379.4
            assert num_components(g) == 1

    def test_two_nodes(self):
        g = sensor(2, 0)
        assert g.num_edges == 1

    def test_deterministic(self):
        g1, g2 = sensor(64, 7), sensor(64, 7)
        assert np.array_equal(g1.edge_index, g2.edge_index)
        assert np.array_equal(g1.edge_weights, g2.edge_weights)
        assert np.array_equal(g1.node_features, g2.node_features)


class TestErdosRenyi:
    def test_p_zero_empty(self):
        assert erdos_renyi(20, 0.0, seed=1).num_edges == 0

    def test_p_one_complete(self):
        assert erdos_renyi(4, 1.0, seed=1).num_edges == 6

    def test_edge_count_within_3_sigma(self):
        n, p = 1000, 0.1
        g = erdos_renyi(n, p, seed=3)
        pairs = n * (n - 1) / 2
        mean, sigma = pairs * p, np.sqrt(pairs * p * (1 - p))
        assert abs(g.num_edges - mean) <= 3 * sigma

    def test_deterministic(self):
        g1, g2 = erdos_renyi(50, 0.2, seed=9), erdos_renyi(50, 0.2, seed=9)
        assert np.array_equal(g1.edge_index, g2.edge_index)
        assert np.array_equal(g1.node_features, g2.node_features)


class TestLaplacian:
    def test_path2(self):
        g = path_graph(2)
        assert np.allclose(laplacian(g), [[1, -1], [-1, 1]])

    def test_triangle_is_2i_minus_a(self):
        g = ring(3)
        assert np.allclose(laplacian(g), 2 * np.eye(3) - g.adjacency())

    def test_combinatorial_rows_sum_to_zero(self):
        g = sensor(32, 2)
        assert np.allclose(laplacian(g).sum(axis=1), 0.0, atol=1e-12)

    def test_sym_normalized_spectrum_bounded(self):
        g = erdos_renyi(40, 0.15, seed=4)
        vals = np.linalg.eigvalsh(laplacian(g, LaplacianKind.SYM_NORMALIZED))
        assert vals.min() >= -1e-9
        assert vals.max() <= 2 + 1e-9

    def test_isolated_node_convention(self):
        g = Graph(np.zeros((3, 1)), np.array([[0, 1]]), np.array([1.0]))
        lap = laplacian(g, LaplacianKind.SYM_NORMALIZED)
        assert lap[2, 2] == 0.0
        assert np.allclose(lap[2], 0.0)

    def test_psd_on_generated_graphs(self):
        for g in (grid2d(5, 5), ring(17), sensor(48, 1), erdos_renyi(60, 0.1, seed=2)):
            assert np.linalg.eigvalsh(laplacian(g)).min() >= -1e-9

    def test_zero_eigenvalues_count_components(self):
        for seed in range(20):
            g = erdos_renyi(30, 0.05, seed=seed)
            vals = np.linalg.eigvalsh(laplacian(g))
            zeros = int((np.abs(vals) < 1e-8).sum())
            assert zeros == bfs_component_count(g)
            assert zeros == int(component_labels(g).max()) + 1


class TestFileFormat:
    def test_round_trip_grid(self, tmp_path):
        g = grid2d(8, 8)
        path = tmp_path / "grid.g"
        save_graph(g, path)
        h = load_graph(path)
        assert np.array_equal(g.node_features, h.node_features)
        assert np.array_equal(g.edge_index, h.edge_index)
        assert np.array_equal(g.edge_weights, h.edge_weights)
        assert np.array_equal(g.coords, h.coords)

    def test_round_trip_bit_exact_weights(self, tmp_path):
        rng = np.random.default_rng(0)
        g = Graph(rng.standard_normal((5, 3)), np.array([[0, 1], [2, 4]]),
                  rng.random(2) + 0.5)
        path = tmp_path / "g.g"
        save_graph(g, path)
        h = load_graph(path)
        assert np.array_equal(g.edge_weights, h.edge_weights)
        assert np.array_equal(g.node_features, h.node_features)
        assert h.coords is None

    def test_save_twice_identical_bytes(self, tmp_path):
        g = sensor(64, 7)
        p1, p2 = tmp_path / "a.g", tmp_path / "b.g"
        save_graph(g, p1)
        save_graph(g, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_edge_index_out_of_range(self, tmp_path):
        path = tmp_path / "bad.g"
        path.write_text("2 1 0\n0.0\n0.0\n-\n0 5 1.0\n")
        with pytest.raises(ParseError) as err:
            load_graph(path)
        assert err.value.lineno == 5

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "bad.g"
        path.write_text("2 1\n")
        with pytest.raises(ParseError) as err:
            load_graph(path)
        assert err.value.lineno == 1

    def test_large_graph_loads_quickly(self, tmp_path):
        g = erdos_renyi(2642, 0.002, seed=0, num_features=2)
        path = tmp_path / "big.g"
        save_graph(g, path)
        started = time.monotonic()
        h = load_graph(path)
        assert time.monotonic() - started < 1.0
        assert h.n == 2642
