import numpy as np
import pytest

from graphpool.graph import erdos_renyi, grid2d
from graphpool.kernels import available_backends

BACKENDS = available_backends()


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return BACKENDS[request.param]


def csr_of(g):
    indptr, indices, weights = g.csr
    return indptr, indices, np.ascontiguousarray(weights)


class TestGreedyMatching:
    def test_path3_trace(self, backend):
        # path 0-1-2, unit weights: node 0 pairs with 1, node 2 stays single
        indptr = np.array([0, 1, 3, 4], dtype=np.int64)
        indices = np.array([1, 0, 2, 1], dtype=np.int64)
        scores = np.array([1.5, 1.5, 1.0, 1.0])
        order = np.arange(3, dtype=np.int64)
        match = backend.greedy_matching(indptr, indices, scores, order)
        assert list(match) == [1, 0, 2]

    def test_tie_breaks_to_lower_index(self, backend):
        # star: center 0 with leaves 1..3, equal scores
        indptr = np.array([0, 3, 4, 5, 6], dtype=np.int64)
        indices = np.array([1, 2, 3, 0, 0, 0], dtype=np.int64)
        scores = np.ones(6)
        match = backend.greedy_matching(indptr, indices, scores, np.arange(4, dtype=np.int64))
        assert match[0] == 1 and match[1] == 0
        assert match[2] == 2 and match[3] == 3

    def test_isolated_node(self, backend):
        indptr = np.array([0, 0], dtype=np.int64)
        match = backend.greedy_matching(indptr, np.empty(0, dtype=np.int64), np.empty(0),
                                        np.arange(1, dtype=np.int64))
        assert list(match) == [0]

    def test_partner_symmetry(self, backend):
        g = erdos_renyi(60, 0.1, seed=2)
        indptr, indices, scores = csr_of(g)
        match = backend.greedy_matching(indptr, indices, scores, np.arange(g.n, dtype=np.int64))
        for u, v in enumerate(match):
            assert match[v] == u


class TestSimplexProjectionKernel:
    def test_matches_reference_rows(self, backend):
        rng = np.random.default_rng(3)
        z = np.ascontiguousarray(rng.standard_normal((40, 7)) * 2)
        out = backend.project_rows_to_simplex(z)
        assert np.allclose(out.sum(axis=1), 1.0)
        assert out.min() >= 0.0


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
class TestBackendAgreement:
    def test_matching_identical(self):
        for seed in range(5):
            g = erdos_renyi(80, 0.08, seed=seed)
            indptr, indices, scores = csr_of(g)
            order = np.arange(g.n, dtype=np.int64)
            results = [b.greedy_matching(indptr, indices, scores, order)
                       for b in BACKENDS.values()]
            assert np.array_equal(results[0], results[1])

    def test_matching_identical_shuffled_order(self):
        g = grid2d(9, 9)
        indptr, indices, scores = csr_of(g)
        order = np.random.default_rng(0).permutation(g.n).astype(np.int64)
        results = [b.greedy_matching(indptr, indices, scores, order) for b in BACKENDS.values()]
        assert np.array_equal(results[0], results[1])

    def test_projection_identical(self):
        rng = np.random.default_rng(1)
        z = np.ascontiguousarray(rng.standard_normal((100, 9)))
        results = [b.project_rows_to_simplex(z) for b in BACKENDS.values()]
        assert np.abs(results[0] - results[1]).max() <= 1e-12
