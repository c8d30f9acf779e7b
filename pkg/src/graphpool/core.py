"""Select/reduce/connect framework: the selection-output container, the
pooled-graph container, operator descriptors, the three-step pooling
composition, and the operator registry with its taxonomy flags.

Every pooling operator factors into three functions: *select* scores
how much each input node contributes to each of K supernodes, *reduce*
aggregates node features per supernode, and *connect* weights the edges
between supernodes. Both reduce and connect receive the whole input
graph, since some operators use the full topology rather than the
selection alone.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .graph import Graph


class SelectKind(Enum):
    DENSE = "dense"
    SPARSE_INDEX = "sparse_index"


@dataclass(frozen=True)
class SelectOutput:
    """Membership scores of input nodes in K supernodes.

    Dense form stores the full nonnegative (N, K) score matrix. The
    sparse-index form stores one entry per selected node: ``nodes[t]``
    contributes to supernode ``cols[t]`` with score ``gates[t]`` (1 when
    gates are absent). A node may feed zero, one, or several supernodes.
    """

    kind: SelectKind
    n: int
    k: int
    scores: np.ndarray | None = None  # dense (N, K)
    nodes: np.ndarray | None = None  # sparse: selected node ids
    cols: np.ndarray | None = None  # sparse: supernode per selected node
    gates: np.ndarray | None = None  # sparse: optional score per selected node
    info: dict = field(default_factory=dict, compare=False)

    @staticmethod
    def from_matrix(scores: np.ndarray, info: dict | None = None) -> "SelectOutput":
        scores = np.asarray(scores, dtype=np.float64)
        if scores.ndim != 2:
            raise ValueError("selection matrix must be 2-D")
        if scores.size and scores.min() < 0:
            raise ValueError("membership scores must be nonnegative")
        return SelectOutput(
            SelectKind.DENSE, scores.shape[0], scores.shape[1], scores=scores, info=info or {}
        )

    @staticmethod
    def from_kept_nodes(n: int, kept, gates=None, info: dict | None = None) -> "SelectOutput":
        kept = np.asarray(kept, dtype=np.int64).reshape(-1)
        if kept.size == 0:
            raise ValueError("kept set must be non-empty")
        g = None if gates is None else np.asarray(gates, dtype=np.float64).reshape(-1)
        return SelectOutput(
            SelectKind.SPARSE_INDEX,
            n,
            kept.size,
            nodes=kept,
            cols=np.arange(kept.size, dtype=np.int64),
            gates=g,
            info=info or {},
        )

    @staticmethod
    def from_assignment(n: int, assign, k: int, gates=None, info: dict | None = None) -> "SelectOutput":
        assign = np.asarray(assign, dtype=np.int64).reshape(-1)
        if assign.shape[0] != n:
            raise ValueError("assignment must cover every node")
        g = None if gates is None else np.asarray(gates, dtype=np.float64).reshape(-1)
        return SelectOutput(
            SelectKind.SPARSE_INDEX,
            n,
            k,
            nodes=np.arange(n, dtype=np.int64),
            cols=assign,
            gates=g,
            info=info or {},
        )

    def matrix(self) -> np.ndarray:
        """Dense (N, K) expansion; sparse entries carry their gate value or 1."""
        if self.kind is SelectKind.DENSE:
            return self.scores
        s = np.zeros((self.n, self.k))
        vals = 1.0 if self.gates is None else self.gates
        s[self.nodes, self.cols] = vals
        return s

    def padded(self, k_bar: int) -> np.ndarray:
        """Embed into a fixed width k_bar >= K; columns beyond K are zero."""
        if k_bar < self.k:
            raise ValueError("k_bar must be at least K")
        out = np.zeros((self.n, k_bar))
        out[:, : self.k] = self.matrix()
        return out


def selection_density(sel: SelectOutput, n: int | None = None) -> float:
    """Mean over supernodes of (supernode cardinality / N).

    Cardinality counts nonzero memberships; the value is 1/N for pure
    node subsampling and 1.0 when every node feeds every supernode.
    """
    n = sel.n if n is None else n
    if n < 1 or sel.k < 1:
        raise ValueError("need at least one node and one supernode")
    sizes = (np.abs(sel.matrix()) > 0).sum(axis=0)
    return float(sizes.mean() / n)


def storage_count(sel: SelectOutput) -> int:
    """Number of scalars a backend must store for this selection:
    N*K for dense scores, one per selected node for sparse indices."""
    if sel.kind is SelectKind.DENSE:
        return int(sel.scores.size)
    return int(sel.nodes.size)


@dataclass(frozen=True)
class PooledGraph:
    """Output of a pooling operator plus provenance.

    ``a_pooled`` is symmetric with zero diagonal (operators here drop
    self-loops); absent edges are encoded as weight 0.
    """

    x_pooled: np.ndarray
    a_pooled: np.ndarray
    sel: SelectOutput
    operator_id: str

    def __post_init__(self):
        a = np.asarray(self.a_pooled, dtype=np.float64)
        if a.shape != (self.sel.k, self.sel.k):
            raise ValueError("pooled adjacency must be K x K")
        if np.abs(a - a.T).max(initial=0.0) > 1e-8 * max(1.0, np.abs(a).max(initial=0.0)):
            raise ValueError("pooled adjacency must be symmetric")

    @property
    def k(self) -> int:
        return self.sel.k

    def to_graph(self, weight_tol: float = 1e-12) -> Graph:
        """Materialize as a Graph, dropping weights at or below ``weight_tol``."""
        a = self.a_pooled
        iu, ju = np.triu_indices(self.k, k=1)
        keep = a[iu, ju] > weight_tol
        ei = np.stack([iu[keep], ju[keep]], axis=1)
        return Graph(self.x_pooled, ei, a[iu, ju][keep], None, name=f"pooled_{self.operator_id}")


class KPolicyKind(Enum):
    FIXED = "fixed"
    RATIO = "ratio"
    AUTO = "auto"


@dataclass(frozen=True)
class KPolicy:
    """How an operator determines its output size K."""

    kind: KPolicyKind
    value: float | None = None

    @staticmethod
    def fixed(k: int) -> "KPolicy":
        return KPolicy(KPolicyKind.FIXED, int(k))

    @staticmethod
    def ratio(r: float) -> "KPolicy":
        return KPolicy(KPolicyKind.RATIO, float(r))

    @staticmethod
    def auto() -> "KPolicy":
        return KPolicy(KPolicyKind.AUTO)

    def resolve(self, n: int) -> int | None:
        """Concrete K for a graph of n nodes; None when data-dependent."""
        if self.kind is KPolicyKind.FIXED:
            return int(self.value)
        if self.kind is KPolicyKind.RATIO:
            return max(1, math.ceil(self.value * n))
        return None


@dataclass(frozen=True)
class OperatorDescriptor:
    """Taxonomy flags: trainable vs not, dense vs sparse supernodes,
    fixed vs adaptive K, hierarchical vs global output."""

    trainable: bool
    dense: bool
    fixed: bool
    hierarchical: bool
    k_policy: KPolicy

    def __post_init__(self):
        is_global = self.fixed and self.k_policy.kind is KPolicyKind.FIXED and self.k_policy.value == 1
        if is_global == self.hierarchical:
            raise ValueError("global pooling means exactly: fixed with K = 1")


class PoolingOperator:
    """Base interface: select, reduce, connect, and a taxonomy descriptor."""

    id: str = "?"

    def descriptor(self) -> OperatorDescriptor:
        raise NotImplementedError

    def select(self, g: Graph) -> SelectOutput:
        raise NotImplementedError

    def reduce(self, g: Graph, sel: SelectOutput) -> np.ndarray:
        raise NotImplementedError

    def connect(self, g: Graph, sel: SelectOutput) -> np.ndarray:
        raise NotImplementedError


def zero_diagonal(a: np.ndarray) -> np.ndarray:
    out = np.array(a, copy=True)
    np.fill_diagonal(out, 0.0)
    return out


def contracted_adjacency(g: Graph, sel: SelectOutput) -> np.ndarray:
    """S^T A S with the diagonal (self-loop mass) zeroed."""
    s = sel.matrix()
    return zero_diagonal(s.T @ g.adjacency() @ s)


def pool(g: Graph, op: PoolingOperator) -> PooledGraph:
    """Run the select -> reduce -> connect composition of ``op`` on ``g``.

    Fixed-size operators applied to graphs with fewer than K nodes
    proceed and upscale the graph; a warning is emitted.
    """
    desc = op.descriptor()
    fixed_k = desc.k_policy.resolve(g.n)
    if desc.fixed and fixed_k is not None and fixed_k > g.n:
        warnings.warn(f"{op.id}: K={fixed_k} exceeds N={g.n}; graph will be upscaled")
    sel = op.select(g)
    x = op.reduce(g, sel)
    a = op.connect(g, sel)
    return PooledGraph(x_pooled=x, a_pooled=a, sel=sel, operator_id=op.id)


class IdentityPool(PoolingOperator):
    """S = I: pooling that reproduces the input graph. Used as a
    reference point by the evaluation metrics."""

    id = "identity"

    def descriptor(self) -> OperatorDescriptor:
        return OperatorDescriptor(False, False, False, True, KPolicy.ratio(1.0))

    def select(self, g: Graph) -> SelectOutput:
        return SelectOutput.from_kept_nodes(g.n, np.arange(g.n))

    def reduce(self, g: Graph, sel: SelectOutput) -> np.ndarray:
        return sel.matrix().T @ g.node_features

    def connect(self, g: Graph, sel: SelectOutput) -> np.ndarray:
        s = sel.matrix()
        return zero_diagonal(s.T @ g.adjacency() @ s)


#: Operator ids exposed on the command line, mapping to factories that
#: accept the operator's hyperparameters as keyword arguments.
OPERATOR_IDS = ("diffpool", "mincut", "nmf", "lapool", "topk", "sagpool", "ndp", "graclus")


def _registry() -> dict:
    from . import nontrainable, trainable

    return {
        "diffpool": trainable.DiffPool,
        "mincut": trainable.MinCutPool,
        "nmf": nontrainable.NmfPool,
        "lapool": nontrainable.LaPool,
        "topk": trainable.TopKPool,
        "sagpool": trainable.SagPool,
        "ndp": nontrainable.NdpPool,
        "graclus": nontrainable.GraclusPool,
    }


def make_operator(op_id: str, **hyperparams) -> PoolingOperator:
    """Instantiate a registered operator by id."""
    reg = _registry()
    if op_id not in reg:
        raise KeyError(f"unknown operator {op_id!r}; known: {', '.join(OPERATOR_IDS)}")
    return reg[op_id](**hyperparams)


def taxonomy(op_id: str) -> OperatorDescriptor:
    """Descriptor of a registered operator with default hyperparameters."""
    return make_operator(op_id).descriptor()
