"""Trainable pooling operators and their optimization machinery.

MinCut and DiffPool learn a dense soft clustering through a small
perceptron / propagation layer plus auxiliary regularization losses;
Top-K and SAGPool learn a per-node score and keep the highest-ranked
ceil(ratio*N) nodes, gating the kept features so gradients can flow.
Training is plain Adam on hand-written reverse-mode gradients (see
``autodiff``), with early stopping on the training loss. A finite-
difference gradient checker validates every analytic gradient path.
"""

from __future__ import annotations

import copy
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .core import KPolicy, OperatorDescriptor, PoolingOperator, SelectOutput, zero_diagonal
from .graph import Graph

# above this node count the propagation matrix is kept sparse
_DENSE_LIMIT = 2048


class TrainingDivergedError(RuntimeError):
    pass


def normalized_propagation(a):
    """D^{-1/2} (A + I) D^{-1/2} for a dense or scipy-sparse adjacency."""
    if isinstance(a, np.ndarray):
        ah = a + np.eye(a.shape[0])
        dm = 1.0 / np.sqrt(ah.sum(axis=1))
        return dm[:, None] * ah * dm[None, :]
    import scipy.sparse as sp

    ah = (a + sp.identity(a.shape[0], format="csr")).tocsr()
    dm = 1.0 / np.sqrt(np.asarray(ah.sum(axis=1)).ravel())
    scale = sp.diags(dm)
    return scale @ ah @ scale


def propagate(a, x, w) -> np.ndarray:
    """One rectified propagation step: relu(D^{-1/2}(A+I)D^{-1/2} X W)."""
    p = normalized_propagation(a)
    return np.maximum(p @ np.asarray(x) @ np.asarray(w), 0.0)


@dataclass
class ForwardResult:
    """Differentiable outputs of one pooling forward pass."""

    sel: SelectOutput
    x: ad.Tensor  # pooled features
    a: ad.Tensor  # pooled adjacency, zero diagonal
    aux: dict = field(default_factory=dict)
    s: ad.Tensor | None = None  # dense selection matrix (clustering operators)
    gates: ad.Tensor | None = None  # per-node gate scores (ranking operators)


def _zero_diag_t(m: ad.Tensor, n: int) -> ad.Tensor:
    return ad.mul(m, 1.0 - np.eye(n))


def _row_softmax_np(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _ratio_k(ratio: float, n: int) -> int:
    return min(n, max(1, math.ceil(ratio * n)))


def _top_indices(scores: np.ndarray, k: int) -> np.ndarray:
    # stable sort so ties resolve to the lower node index
    return np.sort(np.argsort(-scores, kind="stable")[:k])


class TrainableOperator(PoolingOperator):
    """Shared parameter handling: parameters are created lazily for the
    feature width of the first graph seen, deterministically from the
    seed. ``train`` mutates ``params`` in place; inference methods only
    read them."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.params: dict[str, np.ndarray] | None = None
        self._feature_dim: int | None = None

    def _init_params(self, f: int, rng) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def ensure_params(self, f: int) -> None:
        if self.params is None:
            self._feature_dim = f
            self.params = self._init_params(f, np.random.default_rng(self.seed))
        elif self._feature_dim != f:
            raise ValueError(
                f"{self.id}: parameters were built for {self._feature_dim} features, got {f}"
            )

    def forward(self, g: Graph, pt: dict[str, ad.Tensor]) -> ForwardResult:
        raise NotImplementedError

    def _forward_current(self, g: Graph) -> ForwardResult:
        self.ensure_params(g.num_features)
        pt = {k: ad.Tensor(v) for k, v in self.params.items()}
        return self.forward(g, pt)

    def reduce(self, g: Graph, sel: SelectOutput) -> np.ndarray:
        return self._forward_current(g).x.value

    def connect(self, g: Graph, sel: SelectOutput) -> np.ndarray:
        return self._forward_current(g).a.value


class MinCutPool(TrainableOperator):
    """Dense fixed-K clustering: S = row-softmax(MLP(X)). Auxiliary
    losses: the normalized-cut relaxation -tr(S^T A S)/tr(S^T D S) and
    the orthogonality penalty ||S^T S / ||S^T S||_F - I/sqrt(K)||_F."""

    id = "mincut"

    def __init__(self, k: int = 2, hidden: int = 16, seed: int = 0):
        super().__init__(seed)
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.hidden = hidden

    def descriptor(self) -> OperatorDescriptor:
        return OperatorDescriptor(
            trainable=True, dense=True, fixed=True, hierarchical=self.k != 1,
            k_policy=KPolicy.fixed(self.k),
        )

    def _init_params(self, f: int, rng) -> dict[str, np.ndarray]:
        return {
            "w1": rng.standard_normal((f, self.hidden)) / math.sqrt(f),
            "b1": np.zeros(self.hidden),
            "w2": rng.standard_normal((self.hidden, self.k)) / math.sqrt(self.hidden),
            "b2": np.zeros(self.k),
        }

    def _logits_np(self, x: np.ndarray) -> np.ndarray:
        p = self.params
        return np.maximum(x @ p["w1"] + p["b1"], 0.0) @ p["w2"] + p["b2"]

    def select(self, g: Graph) -> SelectOutput:
        self.ensure_params(g.num_features)
        return SelectOutput.from_matrix(_row_softmax_np(self._logits_np(g.node_features)))

    def forward(self, g: Graph, pt: dict[str, ad.Tensor]) -> ForwardResult:
        x = ad.Tensor(g.node_features)
        a = ad.Tensor(g.adjacency())
        d = ad.Tensor(np.diag(g.degrees()))
        hiddens = ad.relu(ad.add(ad.matmul(x, pt["w1"]), pt["b1"]))
        s = ad.softmax_rows(ad.add(ad.matmul(hiddens, pt["w2"]), pt["b2"]))
        sas = ad.matmul(ad.matmul(s.T, a), s)
        sds = ad.matmul(ad.matmul(s.T, d), s)
        cut = ad.mul(ad.div(ad.trace(sas), ad.trace(sds)), -1.0)
        sts = ad.matmul(s.T, s)
        ortho = ad.frobenius(ad.sub(ad.div(sts, ad.frobenius(sts)), np.eye(self.k) / math.sqrt(self.k)))
        return ForwardResult(
            sel=SelectOutput.from_matrix(s.value),
            x=ad.matmul(s.T, x),
            a=_zero_diag_t(sas, self.k),
            aux={"cut": cut, "ortho": ortho},
            s=s,
        )


class DiffPool(TrainableOperator):
    """Dense fixed-K clustering with propagation both in the selection
    and the reduction. Auxiliary losses: link prediction
    ||A - S S^T||_F / N^2 and the mean row entropy of S."""

    id = "diffpool"

    def __init__(self, k: int = 2, out_features: int | None = None, seed: int = 0):
        super().__init__(seed)
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.out_features = out_features

    def descriptor(self) -> OperatorDescriptor:
        return OperatorDescriptor(
            trainable=True, dense=True, fixed=True, hierarchical=self.k != 1,
            k_policy=KPolicy.fixed(self.k),
        )

    def _init_params(self, f: int, rng) -> dict[str, np.ndarray]:
        f_out = self.out_features or f
        return {
            "w_sel": rng.standard_normal((f, self.k)) / math.sqrt(f),
            "w_red": rng.standard_normal((f, f_out)) / math.sqrt(f),
        }

    def select(self, g: Graph) -> SelectOutput:
        self.ensure_params(g.num_features)
        a = g.adjacency() if g.n <= _DENSE_LIMIT else g.adjacency_sparse()
        return SelectOutput.from_matrix(
            _row_softmax_np(propagate(a, g.node_features, self.params["w_sel"]))
        )

    def forward(self, g: Graph, pt: dict[str, ad.Tensor]) -> ForwardResult:
        x = ad.Tensor(g.node_features)
        a = ad.Tensor(g.adjacency())
        p_hat = ad.Tensor(normalized_propagation(g.adjacency()))
        px = ad.matmul(p_hat, x)
        s = ad.softmax_rows(ad.relu(ad.matmul(px, pt["w_sel"])))
        z = ad.relu(ad.matmul(px, pt["w_red"]))
        sas = ad.matmul(ad.matmul(s.T, a), s)
        link = ad.mul(ad.frobenius(ad.sub(a, ad.matmul(s, s.T))), 1.0 / g.n**2)
        entropy = ad.mul(ad.tmean(ad.tsum(ad.mul(s, ad.log(ad.add(s, 1e-12))), axis=1)), -1.0)
        return ForwardResult(
            sel=SelectOutput.from_matrix(s.value),
            x=ad.matmul(s.T, z),
            a=_zero_diag_t(sas, self.k),
            aux={"link": link, "entropy": entropy},
            s=s,
        )


def _gate_fn(name: str):
    if name == "tanh":
        return ad.tanh
    if name == "sigmoid":
        return ad.sigmoid
    raise ValueError("gate must be 'tanh' or 'sigmoid'")


class TopKPool(TrainableOperator):
    """Score-and-keep pooling: y = X p / ||p||, keep the ceil(ratio*N)
    highest-scoring nodes (ties to the lower index), gate the kept
    features by sigma(y), and induce the subgraph on the kept nodes.
    Ranking is non-differentiable, so gradients flow only through the
    gate values of the kept nodes."""

    id = "topk"

    def __init__(self, ratio: float = 0.5, gate: str = "tanh", seed: int = 0):
        super().__init__(seed)
        if not 0 < ratio <= 1:
            raise ValueError("ratio must be in (0, 1]")
        self.ratio = ratio
        self.gate = gate
        _gate_fn(gate)

    def descriptor(self) -> OperatorDescriptor:
        return OperatorDescriptor(
            trainable=True, dense=False, fixed=False, hierarchical=True,
            k_policy=KPolicy.ratio(self.ratio),
        )

    def _init_params(self, f: int, rng) -> dict[str, np.ndarray]:
        return {"p": rng.standard_normal((f, 1)) / math.sqrt(f)}

    def _scores_t(self, g: Graph, pt) -> ad.Tensor:
        p = pt["p"]
        norm = ad.sqrt(ad.tsum(ad.mul(p, p)))
        return ad.div(ad.matmul(ad.Tensor(g.node_features), p), norm)

    def select(self, g: Graph) -> SelectOutput:
        self.ensure_params(g.num_features)
        pt = {k: ad.Tensor(v) for k, v in self.params.items()}
        y = self._scores_t(g, pt)
        kept = _top_indices(y.value[:, 0], _ratio_k(self.ratio, g.n))
        gates = np.tanh(y.value[:, 0]) if self.gate == "tanh" else 1.0 / (1.0 + np.exp(-y.value[:, 0]))
        return SelectOutput.from_kept_nodes(g.n, kept, gates=gates[kept])

    def forward(self, g: Graph, pt: dict[str, ad.Tensor]) -> ForwardResult:
        y = self._scores_t(g, pt)
        kept = _top_indices(y.value[:, 0], _ratio_k(self.ratio, g.n))
        gates = _gate_fn(self.gate)(y)
        gated = ad.mul(ad.Tensor(g.node_features), gates)
        a = g.adjacency()
        return ForwardResult(
            sel=SelectOutput.from_kept_nodes(g.n, kept, gates=gates.value[kept, 0]),
            x=ad.gather_rows(gated, kept),
            a=ad.Tensor(a[np.ix_(kept, kept)]),
            aux={},
            gates=gates,
        )


class SagPool(TopKPool):
    """Top-K ranking with a structure-aware score: y is one propagation
    step of the features reduced to a scalar per node."""

    id = "sagpool"

    def _init_params(self, f: int, rng) -> dict[str, np.ndarray]:
        return {"w": rng.standard_normal((f, 1)) / math.sqrt(f)}

    def _scores_t(self, g: Graph, pt) -> ad.Tensor:
        a = g.adjacency() if g.n <= _DENSE_LIMIT else g.adjacency_sparse()
        p_hat = normalized_propagation(a)
        if not isinstance(p_hat, np.ndarray):
            # large-graph path used only for probing the selection size
            xw = g.node_features @ pt["w"].value
            return ad.Tensor(np.maximum(p_hat @ xw, 0.0))
        return ad.relu(ad.matmul(ad.Tensor(p_hat @ g.node_features), pt["w"]))


@dataclass
class TrainConfig:
    """Adam settings and early-stopping policy for operator training."""

    learning_rate: float = 0.01
    max_epochs: int = 5000
    patience: int = 50
    tol: float = 1e-6
    seed: int = 0
    loss: str = "spectral"  # or "reconstruction"
    aux_weight: float = 1.0
    max_seconds: float | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")


@dataclass
class TrainResult:
    curve: np.ndarray  # training loss per epoch, before each update
    best_loss: float
    epochs_run: int
    timed_out: bool = False


def build_objective(name: str, g: Graph):
    from . import evaluation

    if name == "spectral":
        return evaluation.spectral_objective(g)
    if name == "reconstruction":
        return evaluation.reconstruction_objective(g)
    raise ValueError(f"unknown loss {name!r}")


def _total_loss(op: TrainableOperator, g: Graph, params: dict, task, aux_weight: float):
    pt = {k: ad.Tensor(v) for k, v in params.items()}
    fw = op.forward(g, pt)
    loss = task(fw) if task is not None else ad.Tensor(0.0)
    for aux in fw.aux.values():
        loss = ad.add(loss, ad.mul(aux, aux_weight))
    return loss, pt


def train(op: TrainableOperator, g: Graph, cfg: TrainConfig, objective=None) -> TrainResult:
    """Adam descent on the configured loss plus the operator's auxiliary
    losses. Stops after ``patience`` epochs without an improvement
    larger than ``tol``, restores the best parameters seen, and is
    bit-deterministic for a fixed seed."""
    op.ensure_params(g.num_features)
    task = objective if objective is not None else build_objective(cfg.loss, g)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    m = {k: np.zeros_like(v) for k, v in op.params.items()}
    v = {k: np.zeros_like(p) for k, p in op.params.items()}
    best = math.inf
    best_params = copy.deepcopy(op.params)
    since_improved = 0
    curve: list[float] = []
    timed_out = False
    started = time.monotonic()
    for epoch in range(cfg.max_epochs):
        loss_t, pt = _total_loss(op, g, op.params, task, cfg.aux_weight)
        loss = float(loss_t.value)
        if not math.isfinite(loss):
            raise TrainingDivergedError(
                f"{op.id}: loss became non-finite at epoch {epoch}; learning rate too high?"
            )
        curve.append(loss)
        if loss < best - cfg.tol:
            best = loss
            best_params = copy.deepcopy(op.params)
            since_improved = 0
        else:
            since_improved += 1
        if since_improved >= cfg.patience:
            break
        loss_t.backward()
        t = epoch + 1
        for name, p in op.params.items():
            grad = pt[name].grad
            if grad is None:
                continue
            m[name] = beta1 * m[name] + (1 - beta1) * grad
            v[name] = beta2 * v[name] + (1 - beta2) * grad**2
            m_hat = m[name] / (1 - beta1**t)
            v_hat = v[name] / (1 - beta2**t)
            p -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        if cfg.max_seconds is not None and time.monotonic() - started > cfg.max_seconds:
            timed_out = True
            break
    op.params = best_params
    return TrainResult(np.array(curve), best, len(curve), timed_out)


def gradient_check(op: TrainableOperator, g: Graph, loss: str | None = "spectral",
                   objective=None, include_aux: bool = True, n_samples: int = 200,
                   h: float = 1e-5, seed: int = 0) -> float:
    """Max relative error between the tape gradient and central finite
    differences over up to ``n_samples`` randomly chosen parameters.

    ``loss=None`` with ``include_aux=True`` checks the auxiliary losses
    alone."""
    op.ensure_params(g.num_features)
    task = objective
    if task is None and loss is not None:
        task = build_objective(loss, g)
    aux_w = 1.0 if include_aux else 0.0

    loss_t, pt = _total_loss(op, g, op.params, task, aux_w)
    loss_t.backward()
    # a parameter the loss never touches has no tape entry: gradient 0
    analytic = {
        k: (pt[k].grad if pt[k].grad is not None else np.zeros_like(op.params[k]))
        for k in op.params
    }

    coords = [(name, idx) for name, p in op.params.items() for idx in range(p.size)]
    rng = np.random.default_rng(seed)
    if len(coords) > n_samples:
        coords = [coords[i] for i in rng.choice(len(coords), n_samples, replace=False)]

    def value_at(params):
        lt, _ = _total_loss(op, g, params, task, aux_w)
        return float(lt.value)

    # coordinates where both gradients are below this absolute floor are
    # equal for all practical purposes; dividing their roundoff noise by
    # a tiny denominator would report a spurious relative error
    grad_scale = max((np.abs(v).max(initial=0.0) for v in analytic.values()), default=0.0)
    atol = 1e-7 * max(1.0, grad_scale)
    worst = 0.0
    for name, idx in coords:
        bumped = {k: p.copy() for k, p in op.params.items()}
        bumped[name].flat[idx] += h
        up = value_at(bumped)
        bumped[name].flat[idx] -= 2 * h
        down = value_at(bumped)
        fd = (up - down) / (2 * h)
        an = float(analytic[name].flat[idx])
        diff = abs(an - fd)
        if diff <= atol:
            continue
        worst = max(worst, diff / max(abs(an) + abs(fd), 1e-12))
    return worst
