"""Graph coarsening through select/reduce/connect pooling operators.

Eight operators are provided behind one interface (greedy matching,
spectral decimation, adjacency factorization, leader clustering, and
four trainable selectors), together with the evaluation experiments:
attribute preservation, structure preservation, and storage scaling.
"""

from .core import (
    IdentityPool,
    KPolicy,
    OPERATOR_IDS,
    OperatorDescriptor,
    PooledGraph,
    PoolingOperator,
    SelectKind,
    SelectOutput,
    make_operator,
    pool,
    selection_density,
    storage_count,
    taxonomy,
)
from .graph import (
    Graph,
    LaplacianKind,
    ParseError,
    erdos_renyi,
    grid2d,
    laplacian,
    load_graph,
    ring,
    save_graph,
    sensor,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .linalg import EigenPairs, eigh_range, kron_reduction, pseudo_inverse, sparsemax
from .nontrainable import DegenerateSignalError, GraclusPool, LaPool, NdpPool, NmfPool
from .trainable import (
    DiffPool,
    MinCutPool,
    SagPool,
    TopKPool,
    TrainConfig,
    TrainingDivergedError,
    gradient_check,
    propagate,
    train,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
