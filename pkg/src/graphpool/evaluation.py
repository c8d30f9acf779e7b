"""Evaluation criteria for pooling operators, as runnable experiments.

Three experiment families are provided:

* attribute preservation: pool, lift back with the transposed
  pseudo-inverse of the selection, and measure the MSE against the
  original features, with the mean squared distance between adjacent
  nodes as the reference floor below which points are recoverable;
* structure preservation: compare Laplacian quadratic forms of a fixed
  spectral signal before and after pooling, plus edge density / median
  edge weight and normalized-Laplacian spectra of the coarsened graph;
* storage scaling: count the scalars a selection stores as the graph
  grows, and fit the log-log slope.

Each (graph, operator) run yields an :class:`ExperimentReport`; failed
runs are marked rather than aborting a sweep. Runs are deterministic
given the graph and training seeds.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .core import PooledGraph, PoolingOperator, make_operator, pool, storage_count, selection_density
from .graph import Graph, LaplacianKind, erdos_renyi, laplacian
from .linalg import eigh_range, pseudo_inverse
from .trainable import TrainableOperator, TrainConfig, train

#: weights at or below this are treated as absent edges in the metrics
WEIGHT_TOL = 1e-9

_NUM_SIGNAL_EIGVECS = 10


def adjacent_mse(g: Graph) -> float:
    """Mean squared feature distance between adjacent nodes, per feature.

    Reconstructions with an MSE above this value cannot, on average, be
    matched back to the original nodes. Returns 0 for edgeless graphs.
    Invariant under node permutation and global feature translation.
    """
    if g.num_edges == 0:
        return 0.0
    x = g.node_features
    diff = x[g.edge_index[:, 0]] - x[g.edge_index[:, 1]]
    return float((diff**2).sum() / (g.num_edges * g.num_features))


def spectral_signal(g: Graph, num_eigvecs: int = _NUM_SIGNAL_EIGVECS) -> np.ndarray:
    """Benchmark signal: the lowest-frequency Laplacian eigenvectors
    concatenated with the node coordinates, every column unit-norm."""
    lap = laplacian(g, LaplacianKind.COMBINATORIAL)
    pairs = eigh_range(lap, smallest=min(num_eigvecs, g.n))
    cols = [pairs.vectors]
    if g.coords is not None:
        cols.append(g.coords)
    sig = np.concatenate(cols, axis=1)
    norms = np.linalg.norm(sig, axis=0)
    norms[norms == 0] = 1.0
    return sig / norms


def _quad_forms(x: np.ndarray, lap: np.ndarray) -> np.ndarray:
    return np.einsum("if,ij,jf->f", x, lap, x)


def quadratic_loss(g: Graph, pooled: PooledGraph) -> float:
    """Mean absolute gap between per-column Laplacian quadratic forms of
    the spectral signal on ``g`` and of its reduction on the pooled
    graph. The pooled graph must have been produced by pooling ``g``
    carrying the spectral signal as its features."""
    sig = spectral_signal(g)
    if pooled.x_pooled.shape[1] != sig.shape[1]:
        raise ValueError("pooled features do not match the spectral signal width")
    lap = laplacian(g, LaplacianKind.COMBINATORIAL)
    a = pooled.a_pooled
    lap_pooled = np.diag(a.sum(axis=1)) - a
    gaps = np.abs(_quad_forms(sig, lap) - _quad_forms(pooled.x_pooled, lap_pooled))
    return float(gaps.mean())


def spectral_objective(g: Graph):
    """Differentiable version of :func:`quadratic_loss` for training;
    expects forward passes over ``g`` carrying the spectral signal."""
    sig = spectral_signal(g)
    lap = laplacian(g, LaplacianKind.COMBINATORIAL)
    q_ref = _quad_forms(sig, lap)

    def objective(fw):
        a = fw.a
        lap_t = ad.sub(ad.diag_embed(ad.tsum(a, axis=1)), a)
        q = ad.diag_part(ad.matmul(ad.matmul(fw.x.T, lap_t), fw.x))
        return ad.tmean(ad.absolute(ad.sub(q, q_ref)))

    return objective


def lift_features(g: Graph, sel, x_pooled: np.ndarray) -> np.ndarray:
    """Lift pooled features back to all N nodes.

    Covered nodes (nonzero membership somewhere) receive the transposed
    pseudo-inverse lift U X' with U = pinv(S)^T; gate values, when the
    selection carries them, are part of S and hence of the lift. Nodes
    no supernode covers are then filled by iterated weighted averaging
    of already-valued neighbors over the original adjacency, standing in
    for the decoder-side propagation of the full autoencoder. Uncovered
    nodes unreachable from any covered node stay zero.
    """
    m = sel.matrix()
    x_up = pseudo_inverse(m).T @ x_pooled
    have = np.abs(m).sum(axis=1) > 0
    if have.all():
        return x_up
    a = g.adjacency()
    while not have.all():
        reach = a @ have.astype(float)
        frontier = (~have) & (reach > 0)
        if not frontier.any():
            break
        x_up[frontier] = (a[np.ix_(frontier, have)] @ x_up[have]) / reach[frontier, None]
        have[frontier] = True
    return x_up


def reconstruction_objective(g: Graph):
    """Differentiable pool-then-lift MSE against the input features.

    Dense selections use a ridge-stabilized least-squares lift; gated
    sparse selections invert the gate on the kept rows. The neighbor
    fill of :func:`lift_features` is not differentiable and only enters
    the reported metric, so here uncovered nodes contribute a constant.
    """
    x_ref = g.node_features

    def objective(fw):
        if fw.s is not None:
            s = fw.s
            k = s.value.shape[1]
            gram = ad.matmul(s.T, s)
            ridge = ad.mul(ad.trace(gram), 1e-6 / k)
            lift = ad.matmul(s, ad.inv(ad.add(gram, ad.mul(ad.Tensor(np.eye(k)), ridge))))
            x_up = ad.matmul(lift, fw.x)
        else:
            kept = fw.sel.nodes
            g_kept = ad.gather_rows(fw.gates, kept)
            scale = ad.div(g_kept, ad.add(ad.mul(g_kept, g_kept), 1e-9))
            x_up = ad.scatter_rows(ad.mul(fw.x, scale), kept, g.n)
        diff = ad.sub(x_up, x_ref)
        return ad.tmean(ad.mul(diff, diff))

    return objective


def reconstruct_mse(g: Graph, op: PoolingOperator, train_cfg: TrainConfig | None = None) -> float:
    """Pool, lift, and measure mean squared error per feature entry.

    Trainable operators are first fitted to this loss; non-trainable
    operators run once.
    """
    if isinstance(op, TrainableOperator):
        cfg = train_cfg or ae_train_config()
        train(op, g, cfg)
    sel = op.select(g)
    x_pooled = op.reduce(g, sel)
    x_up = lift_features(g, sel, x_pooled)
    return float(((x_up - g.node_features) ** 2).mean())


def structure_stats(a_pooled: np.ndarray, weight_tol: float = WEIGHT_TOL) -> tuple[float, float]:
    """(edge density, median edge weight) of a pooled adjacency.

    Density counts nonzero off-diagonal entries (both directions) over
    K^2; the median is over the distinct-edge weight multiset. Weights
    at or below ``weight_tol`` count as absent.
    """
    a = np.asarray(a_pooled)
    k = a.shape[0]
    off = ~np.eye(k, dtype=bool)
    density = float((np.abs(a[off]) > weight_tol).sum() / k**2)
    iu, ju = np.triu_indices(k, k=1)
    weights = a[iu, ju]
    weights = weights[np.abs(weights) > weight_tol]
    median = float(np.median(weights)) if weights.size else 0.0
    return density, median


@dataclass(frozen=True)
class SpectrumAlignment:
    """Normalized-Laplacian spectra before and after pooling, with the
    eigenvalue indices rescaled to [0, 1] so differently sized graphs
    overlay on a common axis."""

    values_before: np.ndarray
    values_after: np.ndarray
    positions_before: np.ndarray
    positions_after: np.ndarray


def _rescaled_positions(count: int) -> np.ndarray:
    if count <= 1:
        return np.zeros(count)
    return np.arange(count) / (count - 1)


def spectrum_alignment(g: Graph, pooled: PooledGraph, weight_tol: float = WEIGHT_TOL) -> SpectrumAlignment:
    before = np.linalg.eigvalsh(laplacian(g, LaplacianKind.SYM_NORMALIZED))
    pooled_graph = pooled.to_graph(weight_tol)
    after = np.linalg.eigvalsh(laplacian(pooled_graph, LaplacianKind.SYM_NORMALIZED))
    return SpectrumAlignment(before, after, _rescaled_positions(before.size), _rescaled_positions(after.size))


def spectral_train_config(seed: int = 0, **overrides) -> TrainConfig:
    base = dict(learning_rate=0.01, max_epochs=5000, patience=50, tol=1e-6,
                seed=seed, loss="spectral")
    base.update(overrides)
    return TrainConfig(**base)


def ae_train_config(seed: int = 0, **overrides) -> TrainConfig:
    base = dict(learning_rate=0.0005, max_epochs=2000, patience=100, tol=1e-6,
                seed=seed, loss="reconstruction")
    base.update(overrides)
    return TrainConfig(**base)


def configure_operator(op_id: str, n: int, seed: int = 0, op_args: dict | None = None) -> PoolingOperator:
    """Instantiate an operator sized for a graph of ``n`` nodes: fixed
    operators get K = floor(N/2), ratio operators 0.5, leader-based
    selection stays adaptive. ``op_args`` overrides any hyperparameter."""
    op_args = dict(op_args or {})
    defaults: dict = {}
    if op_id in ("mincut", "diffpool"):
        defaults = {"k": max(1, n // 2), "seed": seed}
    elif op_id in ("topk", "sagpool"):
        defaults = {"ratio": 0.5, "seed": seed}
    elif op_id == "nmf":
        defaults = {"rank": max(1, n // 2), "seed": seed}
    defaults.update(op_args)
    return make_operator(op_id, **defaults)


@dataclass
class ExperimentReport:
    """One (graph, operator) run. Fields not produced by the experiment
    kind stay None and serialize as empty CSV cells."""

    graph_name: str
    operator_id: str
    status: str = "ok"
    k: int | None = None
    mse: float | None = None
    adjacent_mse: float | None = None
    quad_loss: float | None = None
    edge_density: float | None = None
    median_weight: float | None = None
    density_of_selection: float | None = None
    storage: int | None = None
    eig_before: np.ndarray | None = None
    eig_after: np.ndarray | None = None
    wall_time_ms: int = 0
    seed: int = 0
    loss_curve: np.ndarray | None = None  # trainable runs only; not serialized


CSV_COLUMNS = (
    "graph,operator,status,k,mse,adjacent_mse,quad_loss,edge_density,"
    "median_weight,density_of_selection,storage,eig_before,eig_after,wall_time_ms,seed"
).split(",")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, np.ndarray):
        return ";".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def report_rows(reports) -> list[list[str]]:
    rows = [list(CSV_COLUMNS)]
    for r in reports:
        rows.append([
            r.graph_name, r.operator_id, r.status, _cell(r.k), _cell(r.mse),
            _cell(r.adjacent_mse), _cell(r.quad_loss), _cell(r.edge_density),
            _cell(r.median_weight), _cell(r.density_of_selection), _cell(r.storage),
            _cell(r.eig_before), _cell(r.eig_after), _cell(r.wall_time_ms), _cell(r.seed),
        ])
    return rows


def write_reports_csv(path, reports) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(report_rows(reports))


_RUN_TIMEOUT_SECONDS = 600.0


def run_ae(g: Graph, op_id: str, seed: int = 0, train_cfg: TrainConfig | None = None,
           op_args: dict | None = None) -> ExperimentReport:
    """Attribute-preservation run: pool, lift, report the MSE against
    the reference floor."""
    report = ExperimentReport(g.name, op_id, seed=seed, adjacent_mse=adjacent_mse(g))
    started = time.monotonic()
    try:
        op = configure_operator(op_id, g.n, seed, op_args)
        cfg = train_cfg or ae_train_config(seed, max_seconds=_RUN_TIMEOUT_SECONDS)
        report.mse = reconstruct_mse(g, op, cfg)
        sel = op.select(g)
        report.k = sel.k
        report.storage = storage_count(sel)
        report.density_of_selection = selection_density(sel)
    except Exception as exc:  # failed-run marker, sweep continues
        report.status = f"failed: {exc}"
    report.wall_time_ms = int(1000 * (time.monotonic() - started))
    return report


def run_spectral(g: Graph, op_id: str, seed: int = 0, train_cfg: TrainConfig | None = None,
                 op_args: dict | None = None) -> ExperimentReport:
    """Structure-preservation run: quadratic-form gap, density/median of
    the coarsened graph, and spectra overlays."""
    report = ExperimentReport(g.name, op_id, seed=seed)
    started = time.monotonic()
    try:
        op = configure_operator(op_id, g.n, seed, op_args)
        g_sig = g.with_features(spectral_signal(g))
        if isinstance(op, TrainableOperator):
            cfg = train_cfg or spectral_train_config(seed, max_seconds=_RUN_TIMEOUT_SECONDS)
            result = train(op, g_sig, cfg)
            if result.timed_out:
                raise TimeoutError("training exceeded the per-run time budget")
            report.loss_curve = result.curve
        pooled = pool(g_sig, op)
        report.k = pooled.k
        report.quad_loss = quadratic_loss(g, pooled)
        report.edge_density, report.median_weight = structure_stats(pooled.a_pooled)
        spectra = spectrum_alignment(g, pooled)
        report.eig_before = spectra.values_before
        report.eig_after = spectra.values_after
        report.storage = storage_count(pooled.sel)
        report.density_of_selection = selection_density(pooled.sel)
    except Exception as exc:
        report.status = f"failed: {exc}"
    report.wall_time_ms = int(1000 * (time.monotonic() - started))
    return report


@dataclass(frozen=True)
class StorageProbe:
    operator_id: str
    sizes: np.ndarray
    counts: np.ndarray
    slope: float | None  # fitted log-log slope; None with fewer than 2 sizes


def storage_probe(op_id: str, sizes, p: float = 0.1, seed: int = 0,
                  num_features: int = 8, op_args: dict | None = None) -> StorageProbe:
    """Exact count of stored selection scalars on random graphs of
    increasing size, and the growth exponent fitted in log-log space."""
    sizes = [int(n) for n in sizes]
    counts = []
    for n in sizes:
        g = erdos_renyi(n, p, seed, num_features=num_features)
        op = configure_operator(op_id, n, seed, op_args)
        counts.append(storage_count(op.select(g)))
        del g, op
    slope = None
    if len(sizes) >= 2:
        slope = float(np.polyfit(np.log(sizes), np.log(counts), 1)[0])
    return StorageProbe(op_id, np.array(sizes), np.array(counts), slope)
