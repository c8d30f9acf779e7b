"""Command-line front end.

Subcommands: ``gen`` (write benchmark graphs), ``pool`` (apply one
operator to a graph file), ``eval`` (experiment sweeps producing CSV
and SVG), ``train`` (fit a trainable operator, emit the loss curve),
and ``gradcheck`` (finite-difference gradient verification).

Every command prints its fully resolved run specification, including
the defaulted seed, as the first output line; re-running that spec
reproduces the outputs byte-for-byte except for wall-clock columns.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import evaluation, plotsvg
from .core import OPERATOR_IDS, pool
from .graph import Graph, erdos_renyi, grid2d, load_graph, ring, save_graph, sensor
from .trainable import TrainableOperator, gradient_check, train


def _echo_runspec(spec: dict) -> None:
    print("runspec " + json.dumps(spec, sort_keys=True))


def _parse_op_args(pairs) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise SystemExit(f"--op-arg expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        try:
            val = int(raw)
        except ValueError:
            try:
                val = float(raw)
            except ValueError:
                val = raw
        out[key] = val
    return out


def _resolve_graph(spec: str, seed: int) -> Graph:
    """A graph source: generator spec (grid2d[:RxC], ring[:N], sensor[:N],
    er:N:P) or a path to a graph file."""
    name, _, arg = spec.partition(":")
    if name == "grid2d":
        rows, _, cols = arg.partition("x")
        r = int(rows) if rows else 8
        c = int(cols) if cols else r
        return grid2d(r, c)
    if name == "ring":
        return ring(int(arg) if arg else 64)
    if name == "sensor":
        return sensor(int(arg) if arg else 64, seed)
    if name == "er":
        n, _, p = arg.partition(":")
        return erdos_renyi(int(n), float(p) if p else 0.1, seed)
    path = Path(spec)
    if not path.exists():
        raise SystemExit(f"graph source {spec!r}: not a known generator and file does not exist")
    g = load_graph(path)
    return Graph(g.node_features, g.edge_index, g.edge_weights, g.coords, name=path.stem)


def _cmd_gen(args) -> int:
    spec = {"command": "gen", "generator": args.generator, "seed": args.seed, "out": args.out}
    if args.generator == "grid2d":
        spec.update(rows=args.rows, cols=args.cols)
        g = grid2d(args.rows, args.cols)
    elif args.generator == "ring":
        spec.update(n=args.n)
        g = ring(args.n)
    elif args.generator == "sensor":
        spec.update(n=args.n)
        g = sensor(args.n, args.seed)
    else:
        spec.update(n=args.n, p=args.p)
        g = erdos_renyi(args.n, args.p, args.seed)
    _echo_runspec(spec)
    save_graph(g, args.out)
    print(f"wrote {args.out}: n={g.n} edges={g.num_edges}")
    return 0


def _cmd_pool(args) -> int:
    op_args = _parse_op_args(args.op_arg)
    if args.k is not None:
        op_args["k"] = args.k
    if args.ratio is not None:
        op_args["ratio"] = args.ratio
    spec = {"command": "pool", "op": args.op, "graph": args.graph, "seed": args.seed,
            "op_args": op_args, "out": args.out}
    _echo_runspec(spec)
    g = _resolve_graph(args.graph, args.seed)
    op = evaluation.configure_operator(args.op, g.n, args.seed, op_args)
    pooled = pool(g, op)
    density, median = evaluation.structure_stats(pooled.a_pooled)
    storage = evaluation.storage_count(pooled.sel)
    sel_density = evaluation.selection_density(pooled.sel)
    print(f"k={pooled.k} selection_density={sel_density:.6g} edge_density={density:.6g} "
          f"median_weight={median:.6g} storage={storage}")
    if args.out:
        save_graph(pooled.to_graph(evaluation.WEIGHT_TOL), args.out)
        print(f"wrote {args.out}")
    return 0


def _train_overrides(args) -> dict:
    out = {}
    if args.lr is not None:
        out["learning_rate"] = args.lr
    if args.epochs is not None:
        out["max_epochs"] = args.epochs
    if args.patience is not None:
        out["patience"] = args.patience
    if args.tol is not None:
        out["tol"] = args.tol
    if getattr(args, "aux_weight", None) is not None:
        out["aux_weight"] = args.aux_weight
    return out


def _cmd_eval(args) -> int:
    ops = [o.strip() for o in args.ops.split(",") if o.strip()]
    unknown = [o for o in ops if o not in OPERATOR_IDS]
    if unknown:
        raise SystemExit(f"unknown operators: {unknown}; known: {', '.join(OPERATOR_IDS)}")
    op_args = _parse_op_args(args.op_arg)
    overrides = _train_overrides(args)
    spec = {"command": "eval", "mode": args.mode, "graphs": args.graphs, "ops": ops,
            "seed": args.seed, "out": args.out, "op_args": op_args,
            "train": overrides, "workers": args.workers}
    if args.mode == "storage":
        spec["sizes"] = args.sizes
        spec["p"] = args.p
    _echo_runspec(spec)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.mode == "storage":
        sizes = [int(s) for s in args.sizes.split(",")]
        probes = [evaluation.storage_probe(op, sizes, p=args.p, seed=args.seed, op_args=op_args)
                  for op in ops]
        rows = [["operator", "n", "storage"]]
        for probe in probes:
            for n, count in zip(probe.sizes, probe.counts):
                rows.append([probe.operator_id, str(int(n)), str(int(count))])
        csv_path = out_dir / "storage_report.csv"
        with open(csv_path, "w", newline="") as fh:
            import csv as _csv

            _csv.writer(fh).writerows(rows)
        for probe in probes:
            slope = "n/a" if probe.slope is None else f"{probe.slope:.3f}"
            print(f"{probe.operator_id}: log-log slope {slope}")
        series = [{"x": np.log10(p.sizes), "y": np.log10(p.counts), "label": p.operator_id,
                   "color": c}
                  for p, c in zip(probes, ("#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"))]
        plotsvg.plot_series(out_dir / "storage_scaling.svg", series,
                            title="selection storage vs graph size",
                            xlabel="log10 N", ylabel="log10 stored scalars")
        print(f"wrote {csv_path}")
        return 0

    graphs = [_resolve_graph(s.strip(), args.seed) for s in args.graphs.split(",") if s.strip()]
    if args.mode == "spectral":
        def one(g, op):
            cfg = evaluation.spectral_train_config(args.seed, max_seconds=600.0, **overrides)
            return evaluation.run_spectral(g, op, seed=args.seed, train_cfg=cfg, op_args=op_args)
    else:
        def one(g, op):
            cfg = evaluation.ae_train_config(args.seed, max_seconds=600.0, **overrides)
            return evaluation.run_ae(g, op, seed=args.seed, train_cfg=cfg, op_args=op_args)

    jobs = [(g, op) for g in graphs for op in ops]
    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool_exec:
            reports = list(pool_exec.map(lambda job: one(*job), jobs))
    else:
        reports = [one(*job) for job in jobs]

    csv_path = out_dir / f"{args.mode}_report.csv"
    evaluation.write_reports_csv(csv_path, reports)
    for rep in reports:
        if rep.status == "ok" and args.mode == "spectral":
            print(f"{rep.graph_name} {rep.operator_id}: ok k={rep.k} quad_loss={rep.quad_loss:.6g}")
        elif rep.status == "ok":
            above = rep.mse > rep.adjacent_mse
            print(f"{rep.graph_name} {rep.operator_id}: ok k={rep.k} mse={rep.mse:.6g} "
                  f"floor={rep.adjacent_mse:.6g} above_floor={str(above).lower()}")
        else:
            print(f"{rep.graph_name} {rep.operator_id}: {rep.status}")
        if rep.eig_before is not None and rep.eig_after is not None:
            align = evaluation.SpectrumAlignment(
                rep.eig_before, rep.eig_after,
                evaluation._rescaled_positions(rep.eig_before.size),
                evaluation._rescaled_positions(rep.eig_after.size),
            )
            plotsvg.plot_spectra(out_dir / f"spectra_{rep.graph_name}_{rep.operator_id}.svg",
                                 align, f"{rep.graph_name} / {rep.operator_id}")
        if rep.loss_curve is not None:
            curve_path = out_dir / f"losscurve_{rep.graph_name}_{rep.operator_id}.csv"
            with open(curve_path, "w") as fh:
                fh.write("epoch,loss\n")
                for epoch, loss in enumerate(rep.loss_curve):
                    fh.write(f"{epoch},{repr(float(loss))}\n")
            plotsvg.plot_loss_curve(out_dir / f"losscurve_{rep.graph_name}_{rep.operator_id}.svg",
                                    rep.loss_curve, f"{rep.graph_name} / {rep.operator_id}")
    print(f"wrote {csv_path}")
    return 0


def _cmd_train(args) -> int:
    op_args = _parse_op_args(args.op_arg)
    overrides = _train_overrides(args)
    loss = {"ae": "reconstruction", "spectral": "spectral"}[args.loss]
    spec = {"command": "train", "op": args.op, "graph": args.graph, "loss": args.loss,
            "seed": args.seed, "op_args": op_args, "train": overrides, "out": args.out}
    _echo_runspec(spec)
    g = _resolve_graph(args.graph, args.seed)
    op = evaluation.configure_operator(args.op, g.n, args.seed, op_args)
    if not isinstance(op, TrainableOperator):
        raise SystemExit(f"{args.op} is not trainable")
    if loss == "spectral":
        g = g.with_features(evaluation.spectral_signal(g))
        cfg = evaluation.spectral_train_config(args.seed, **overrides)
    else:
        cfg = evaluation.ae_train_config(args.seed, **overrides)
    result = train(op, g, cfg)
    print(f"epochs={result.epochs_run} best_loss={result.best_loss:.8g}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("epoch,loss\n")
            for epoch, loss_val in enumerate(result.curve):
                fh.write(f"{epoch},{repr(float(loss_val))}\n")
        print(f"wrote {args.out}")
    return 0


def _cmd_gradcheck(args) -> int:
    op_args = _parse_op_args(args.op_arg)
    spec = {"command": "gradcheck", "op": args.op, "graph": args.graph, "loss": args.loss,
            "seed": args.seed, "op_args": op_args}
    _echo_runspec(spec)
    g = _resolve_graph(args.graph, args.seed)
    op = evaluation.configure_operator(args.op, g.n, args.seed, op_args)
    if not isinstance(op, TrainableOperator):
        raise SystemExit(f"{args.op} is not trainable")
    if args.loss == "aux":
        err = gradient_check(op, g, loss=None, include_aux=True, seed=args.seed)
    else:
        loss = {"ae": "reconstruction", "spectral": "spectral"}[args.loss]
        if loss == "spectral":
            g = g.with_features(evaluation.spectral_signal(g))
        err = gradient_check(op, g, loss=loss, seed=args.seed)
    print(f"max_rel_err={err:.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphpool",
                                     description="graph coarsening operators and evaluations")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a benchmark graph file")
    gen_sub = p_gen.add_subparsers(dest="generator", required=True)
    g_grid = gen_sub.add_parser("grid2d")
    g_grid.add_argument("--rows", type=int, default=8)
    g_grid.add_argument("--cols", type=int, default=8)
    g_ring = gen_sub.add_parser("ring")
    g_ring.add_argument("--n", type=int, default=64)
    g_sensor = gen_sub.add_parser("sensor")
    g_sensor.add_argument("--n", type=int, default=64)
    g_er = gen_sub.add_parser("erdos_renyi")
    g_er.add_argument("--n", type=int, required=True)
    g_er.add_argument("--p", type=float, default=0.1)
    for sp in (g_grid, g_ring, g_sensor, g_er):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("-o", "--out", required=True)
        sp.set_defaults(func=_cmd_gen)

    p_pool = sub.add_parser("pool", help="apply one pooling operator to a graph")
    p_pool.add_argument("graph", help="graph file or generator spec")
    p_pool.add_argument("--op", required=True, choices=OPERATOR_IDS)
    p_pool.add_argument("--k", type=int)
    p_pool.add_argument("--ratio", type=float)
    p_pool.add_argument("--op-arg", action="append", metavar="KEY=VALUE")
    p_pool.add_argument("--seed", type=int, default=0)
    p_pool.add_argument("--out")
    p_pool.set_defaults(func=_cmd_pool)

    p_eval = sub.add_parser("eval", help="run an experiment sweep")
    p_eval.add_argument("mode", choices=("ae", "spectral", "storage"))
    p_eval.add_argument("--graphs", "--graph", dest="graphs", default="grid2d,ring",
                        help="comma-separated generator specs or files")
    p_eval.add_argument("--ops", default=",".join(OPERATOR_IDS))
    p_eval.add_argument("--sizes", default="1000,2000,4000,8000")
    p_eval.add_argument("--p", type=float, default=0.1)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--out", default="graphpool_out")
    p_eval.add_argument("--workers", type=int, default=1)
    p_eval.add_argument("--lr", type=float)
    p_eval.add_argument("--epochs", type=int)
    p_eval.add_argument("--patience", type=int)
    p_eval.add_argument("--tol", type=float)
    p_eval.add_argument("--aux-weight", type=float)
    p_eval.add_argument("--op-arg", action="append", metavar="KEY=VALUE")
    p_eval.set_defaults(func=_cmd_eval)

    p_train = sub.add_parser("train", help="train one operator, emit the loss curve")
    p_train.add_argument("--op", required=True, choices=OPERATOR_IDS)
    p_train.add_argument("--graph", required=True)
    p_train.add_argument("--loss", choices=("spectral", "ae"), default="spectral")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--lr", type=float)
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--patience", type=int)
    p_train.add_argument("--tol", type=float)
    p_train.add_argument("--aux-weight", type=float)
    p_train.add_argument("--op-arg", action="append", metavar="KEY=VALUE")
    p_train.add_argument("--out")
    p_train.set_defaults(func=_cmd_train)

    p_gc = sub.add_parser("gradcheck", help="verify gradients against finite differences")
    p_gc.add_argument("--op", required=True, choices=OPERATOR_IDS)
    p_gc.add_argument("--graph", required=True)
    p_gc.add_argument("--loss", choices=("spectral", "ae", "aux"), default="spectral")
    p_gc.add_argument("--seed", type=int, default=0)
    p_gc.add_argument("--op-arg", action="append", metavar="KEY=VALUE")
    p_gc.set_defaults(func=_cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
