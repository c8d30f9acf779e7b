"""Non-trainable pooling operators: greedy edge-matching contraction
(Graclus), spectral node decimation with Kron reduction (NDP),
nonnegative matrix factorization of the adjacency (NMF), and
Laplacian-leader selection with sparsemax assignments (LaPool).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels, linalg
from .core import (
    KPolicy,
    OperatorDescriptor,
    PoolingOperator,
    SelectOutput,
    contracted_adjacency,
    zero_diagonal,
)
from .graph import Graph, LaplacianKind, component_labels, laplacian


class DegenerateSignalError(RuntimeError):
    """Raised when leader selection sees a signal with no strict local maxima."""


class GraclusPool(PoolingOperator):
    """Greedy heavy-edge matching: each visited node pairs with the
    unmatched neighbor maximizing A_ij/D_ii + A_ij/D_jj; leftovers stay
    singletons. Matched pairs contract into supernodes whose membership
    scores are 1/|cluster|, so S^T X is the cluster mean.

    Nodes are visited in ascending index order by default, which makes
    the matching deterministic; pass a seed to shuffle the visiting
    order instead.

    ``connect_mode`` picks the coarse edge weights: ``"normalized"``
    (default) contracts the degree-normalized adjacency with
    1/sqrt(|cluster|)-scaled memberships, the weighting used by the
    benchmark tables; ``"contract"`` sums the raw inter-cluster weights.
    """

    id = "graclus"

    def __init__(self, order_seed: int | None = None, connect_mode: str = "normalized"):
        if connect_mode not in ("normalized", "contract"):
            raise ValueError("connect_mode must be 'normalized' or 'contract'")
        self.order_seed = order_seed
        self.connect_mode = connect_mode

    def descriptor(self) -> OperatorDescriptor:
        return OperatorDescriptor(
            trainable=False, dense=False, fixed=False, hierarchical=True, k_policy=KPolicy.auto()
        )

    def select(self, g: Graph) -> SelectOutput:
        if g.n < 1:
            raise ValueError("graph must have at least one node")
        indptr, indices, weights = g.csr
        deg = g.degrees()
        inv = np.zeros_like(deg)
        inv[deg > 0] = 1.0 / deg[deg > 0]
        src = np.repeat(np.arange(g.n), np.diff(indptr))
        scores = weights * (inv[src] + inv[indices])
        if self.order_seed is None:
            order = np.arange(g.n, dtype=np.int64)
        else:
            order = np.random.default_rng(self.order_seed).permutation(g.n).astype(np.int64)
        match = kernels.greedy_matching(indptr, indices, np.ascontiguousarray(scores), order)
        assign = np.full(g.n, -1, dtype=np.int64)
        k = 0
        for u in order:
            if assign[u] == -1:
                assign[u] = k
                assign[match[u]] = k
                k += 1
        sizes = np.bincount(assign, minlength=k).astype(np.float64)
        return SelectOutput.from_assignment(
            g.n, assign, k, gates=1.0 / sizes[assign], info={"match": match}
        )

    def reduce(self, g: Graph, sel: SelectOutput) -> np.ndarray:
        # memberships are 1/|cluster|: this is the per-cluster mean
        return sel.matrix().T @ g.node_features

    def connect(self, g: Graph, sel: SelectOutput) -> np.ndarray:
        indicator = (sel.matrix() > 0).astype(np.float64)
        if self.connect_mode == "contract":
            return zero_diagonal(indicator.T @ g.adjacency() @ indicator)
        deg = g.degrees()
        dm = np.zeros_like(deg)
        dm[deg > 0] = 1.0 / np.sqrt(deg[deg > 0])
        a_norm = dm[:, None] * g.adjacency() * dm[None, :]
        scaled = indicator / np.sqrt(indicator.sum(axis=0))
        return zero_diagonal(scaled.T @ a_norm @ scaled)


class NdpPool(PoolingOperator):
    """Node decimation: keep the nodes where the top-eigenvalue
    eigenvector of the combinatorial Laplacian is positive, subsample
    the features, and rewire the kept nodes by Kron reduction.

    Disconnected graphs are handled per component; the per-component
    keep sets are concatenated. The eigenvector sign is fixed by
    :func:`linalg.fix_signs`, so selection is deterministic.
    """

    id = "ndp"

    def descriptor(self) -> OperatorDescriptor:
        return OperatorDescriptor(
            trainable=False, dense=False, fixed=False, hierarchical=True, k_policy=KPolicy.auto()
        )

    def select(self, g: Graph) -> SelectOutput:
        labels = component_labels(g)
        lap = laplacian(g, LaplacianKind.COMBINATORIAL)
        kept: list[int] = []
        for c in range(labels.max() + 1):
            nodes = np.nonzero(labels == c)[0]
            sub = lap[np.ix_(nodes, nodes)]
            pairs = linalg.eigh_range(sub, largest=1)
            u = pairs.vectors[:, 0]
            pos = nodes[u > 0]
            if pos.size == 0:
                pos = nodes[[int(np.argmax(u))]]
            kept.extend(int(i) for i in pos)
        return SelectOutput.from_kept_nodes(g.n, np.sort(np.array(kept, dtype=np.int64)))

    def reduce(self, g: Graph, sel: SelectOutput) -> np.ndarray:
        return g.node_features[sel.nodes]

    def connect(self, g: Graph, sel: SelectOutput) -> np.ndarray:
        lap = laplacian(g, LaplacianKind.COMBINATORIAL)
        red = linalg.kron_reduction(lap, sel.nodes)
        return np.maximum(zero_diagonal(-red), 0.0)


@dataclass
class NmfConfig:
    """Settings for the multiplicative-update factorization A ~ W H."""

    rank: int | None = None  # default: ceil(ratio * N)
    ratio: float = 0.5
    max_iters: int = 500
    tol: float = 1e-5
    seed: int = 0
    init: str = "nndsvda"  # or "random"

    def resolve_rank(self, n: int) -> int:
        if self.rank is not None:
            if self.rank < 1:
                raise ValueError("rank must be positive")
            return self.rank
        return max(1, math.ceil(self.ratio * n))


def _nndsvda_init(a: np.ndarray, rank: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic SVD-based nonnegative init; zeros are backfilled
    with the matrix mean so multiplicative updates can move them."""
    u, s, vt = np.linalg.svd(a)
    n = a.shape[0]
    w = np.zeros((n, rank))
    h = np.zeros((rank, n))
    w[:, 0] = np.sqrt(s[0]) * np.abs(u[:, 0])
    h[0] = np.sqrt(s[0]) * np.abs(vt[0])
    for j in range(1, min(rank, n)):
        x, y = u[:, j], vt[j]
        xp, xn = np.maximum(x, 0), np.maximum(-x, 0)
        yp, yn = np.maximum(y, 0), np.maximum(-y, 0)
        mp = np.linalg.norm(xp) * np.linalg.norm(yp)
        mn = np.linalg.norm(xn) * np.linalg.norm(yn)
        if mp >= mn and mp > 0:
            w[:, j] = np.sqrt(s[j] * mp) * xp / np.linalg.norm(xp)
            h[j] = np.sqrt(s[j] * mp) * yp / np.linalg.norm(yp)
        elif mn > 0:
            w[:, j] = np.sqrt(s[j] * mn) * xn / np.linalg.norm(xn)
            h[j] = np.sqrt(s[j] * mn) * yn / np.linalg.norm(yn)
    mean = a.mean()
    if mean > 0:
        w[w == 0] = mean
        h[h == 0] = mean
    return w, h


def nmf_factorize(a: np.ndarray, rank: int, max_iters: int, tol: float, seed: int = 0,
                  init: str = "nndsvda"):
    """Frobenius-objective multiplicative updates.

    Returns (w, h, objectives, converged); the objective sequence is
    non-increasing. Stops early when the relative objective improvement
    drops below ``tol``. The default init is the deterministic
    SVD-based one; ``init="random"`` draws seeded half-normal factors.
    """
    eps = 1e-12
    n = a.shape[0]
    if init == "nndsvda":
        w, h = _nndsvda_init(a, rank)
    elif init == "random":
        rng = np.random.default_rng(seed)
        scale = math.sqrt(max(a.mean(), 0.0) / rank) if a.size else 0.0
        w = np.abs(rng.standard_normal((n, rank))) * scale
        h = np.abs(rng.standard_normal((rank, n))) * scale
    else:
        raise ValueError("init must be 'nndsvda' or 'random'")
    objectives = [float(np.linalg.norm(a - w @ h))]
    converged = False
    for _ in range(max_iters):
        h *= (w.T @ a) / (w.T @ w @ h + eps)
        w *= (a @ h.T) / (w @ (h @ h.T) + eps)
        objectives.append(float(np.linalg.norm(a - w @ h)))
        prev, cur = objectives[-2], objectives[-1]
        if abs(prev - cur) <= tol * max(prev, eps):
            converged = True
            break
    return w, h, np.array(objectives), converged


class NmfPool(PoolingOperator):
    """Factorize the adjacency A ~ W H and use S = H^T as soft
    memberships. With the default settings the rank is half the number
    of nodes, rounded up.

    The default SVD-based init makes pooling fully deterministic;
    ``init="random"`` uses seeded half-normal factors instead. If the
    iteration cap is hit before the tolerance, the best factors so far
    are used and ``sel.info['converged']`` is False.
    """

    id = "nmf"

    def __init__(self, rank: int | None = None, ratio: float = 0.5, max_iters: int = 500,
                 tol: float = 1e-5, seed: int = 0, init: str = "nndsvda"):
        self.cfg = NmfConfig(rank, ratio, max_iters, tol, seed, init)

    def descriptor(self) -> OperatorDescriptor:
        k_policy = KPolicy.fixed(self.cfg.rank) if self.cfg.rank is not None else KPolicy.ratio(self.cfg.ratio)
        return OperatorDescriptor(
            trainable=False, dense=True, fixed=False, hierarchical=True, k_policy=k_policy
        )

    def select(self, g: Graph) -> SelectOutput:
        rank = self.cfg.resolve_rank(g.n)
        a = g.adjacency()
        _, h, objectives, converged = nmf_factorize(
            a, rank, self.cfg.max_iters, self.cfg.tol, self.cfg.seed, self.cfg.init
        )
        return SelectOutput.from_matrix(
            h.T, info={"converged": converged, "objective": float(objectives[-1])}
        )

    def reduce(self, g: Graph, sel: SelectOutput) -> np.ndarray:
        return sel.matrix().T @ g.node_features

    def connect(self, g: Graph, sel: SelectOutput) -> np.ndarray:
        return contracted_adjacency(g, sel)


def local_maxima(values: np.ndarray, edge_index: np.ndarray) -> np.ndarray:
    """Indices whose value strictly exceeds every neighbor's value.

    Uses strict comparisons only, so the result is invariant under
    adding a constant to all values. Isolated nodes qualify vacuously.
    """
    values = np.asarray(values, dtype=np.float64)
    is_max = np.ones(values.shape[0], dtype=bool)
    for i, j in edge_index:
        if values[i] <= values[j]:
            is_max[i] = False
        if values[j] <= values[i]:
            is_max[j] = False
    return np.nonzero(is_max)[0]


class LaPool(PoolingOperator):
    """Leader-based soft clustering. Node saliency is the row-wise norm
    of L X (how much a node's features differ from its neighborhood);
    strict local maxima of the saliency become leaders, and every node
    distributes membership over leaders via sparsemax of scaled cosine
    similarities. K equals the number of leaders, so the output size
    adapts to the graph.

    Constant features give identically zero saliency and therefore no
    leaders; that raises :class:`DegenerateSignalError`.
    """

    id = "lapool"

    def __init__(self, beta: float = 1.0, norm_order: float = 2):
        if not (beta > 0 and math.isfinite(beta)):
            raise ValueError("beta must be positive and finite")
        self.beta = beta
        self.norm_order = norm_order

    def descriptor(self) -> OperatorDescriptor:
        return OperatorDescriptor(
            trainable=False, dense=True, fixed=False, hierarchical=True, k_policy=KPolicy.auto()
        )

    def select(self, g: Graph) -> SelectOutput:
        x = g.node_features
        if x.shape[1] == 0:
            raise ValueError("LaPool needs node features")
        lap = laplacian(g, LaplacianKind.COMBINATORIAL)
        saliency = np.linalg.norm(lap @ x, ord=self.norm_order, axis=1)
        leaders = local_maxima(saliency, g.edge_index)
        if leaders.size == 0:
            raise DegenerateSignalError("degenerate signal: no strict local maxima")
        norms = np.linalg.norm(x, axis=1)
        denom = np.outer(norms, norms[leaders])
        with np.errstate(invalid="ignore", divide="ignore"):
            cos = np.where(denom > 0, (x @ x[leaders].T) / denom, 0.0)
        s = linalg.sparsemax_rows(self.beta * cos)
        return SelectOutput.from_matrix(s, info={"leaders": leaders})

    def reduce(self, g: Graph, sel: SelectOutput) -> np.ndarray:
        return sel.matrix().T @ g.node_features

    def connect(self, g: Graph, sel: SelectOutput) -> np.ndarray:
        return contracted_adjacency(g, sel)
