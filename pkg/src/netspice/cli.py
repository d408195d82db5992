"""Command line interface.

Subcommands: generate (synthetic network + series), estimate (series ->
network JSON + diagnostics), evaluate (estimate vs truth -> scores CSV),
experiment (Monte-Carlo study -> tables + figures), replay (recompute one
run and check it against the stored table).  Failures exit nonzero with a
single JSON error line on stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .datagen import GroundTruthNetwork, generate_network, simulate, true_predictor_taps
from .harness import (ExperimentConfig, estimate_network, replay_run,
                      resolve_workers, run_experiment, write_report)
from .metrics import node_nmse, topology_score
from .netmodel import NetworkEstimate, TimeSeries
from .spice import SolverConfig


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netspice",
        description="Sparse dynamic network identification from time series")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate",
                       help="draw a random stable network and simulate it")
    p.add_argument("--J", type=int, default=8, help="number of nodes")
    p.add_argument("--K", type=int, default=3, help="lag depth / FIR length")
    p.add_argument("--rho", type=float, default=0.25, help="edge density")
    p.add_argument("--mode", default="fir",
                   choices=("fir", "fir_noise", "rational"))
    p.add_argument("--min-order", type=int, default=1)
    p.add_argument("--max-order", type=int, default=5)
    p.add_argument("--samples", type=int, required=True,
                   help="number of time samples to keep")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("estimate", help="identify a network from a series CSV")
    p.add_argument("--input", required=True, help="time series CSV")
    p.add_argument("--K", type=int, required=True, help="lag depth")
    p.add_argument("--delta", type=float, default=0.1,
                   help="tap magnitude threshold")
    p.add_argument("--output", required=True, help="network JSON path")
    p.add_argument("--diagnostics", default=None,
                   help="diagnostics JSON path (default: <output stem>"
                        ".diagnostics.json)")

    p = sub.add_parser("evaluate",
                       help="score an estimated network against the truth")
    p.add_argument("--estimated", required=True, help="network JSON")
    p.add_argument("--truth", required=True, help="ground-truth JSON")
    p.add_argument("--output", required=True, help="scores CSV path")

    p = sub.add_parser("experiment", help="run a Monte-Carlo study")
    p.add_argument("--config", default=None, help="ExperimentConfig JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=None,
                   help=f"parallel runs (default: ${'{'}NETSPICE_WORKERS{'}'} or 1)")
    p.add_argument("--mode", default=None,
                   choices=("fir", "fir_noise", "rational"))
    p.add_argument("--monte-carlo", type=int, default=None)
    p.add_argument("--master-seed", type=int, default=None)
    p.add_argument("--no-figures", action="store_true",
                   help="skip figure rendering")

    p = sub.add_parser("replay",
                       help="recompute one run and compare to the stored table")
    p.add_argument("--results", required=True,
                   help="experiment output directory")
    p.add_argument("--run", type=int, required=True, help="run id")
    return parser


def _cmd_generate(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    net = generate_network(args.J, args.rho, args.mode, args.K, args.seed,
                           order_range=(args.min_order, args.max_order))
    w = simulate(net, args.samples, np.random.default_rng(
        np.random.SeedSequence(entropy=args.seed, spawn_key=(1,))))
    truth_path = os.path.join(args.out_dir, "truth.json")
    series_path = os.path.join(args.out_dir, "series.csv")
    net.save_json(truth_path)
    w.save_csv(series_path)
    print(f"wrote {truth_path} and {series_path}")
    return 0


def _cmd_estimate(args) -> int:
    w = TimeSeries.load_csv(args.input)
    network, estimates = estimate_network(w, args.K, args.delta,
                                          SolverConfig())
    network.save_json(args.output)
    diag_path = args.diagnostics
    if diag_path is None:
        stem, _ = os.path.splitext(args.output)
        diag_path = stem + ".diagnostics.json"
    diag = {
        "nodes": [
            {
                "node": i + 1,
                "kkt_residual": float(e.kkt_residual),
                "iterations": int(e.iterations),
                "sigma2": float(e.sigma2),
                "converged": bool(e.converged),
            }
            for i, e in enumerate(estimates)
        ]
    }
    with open(diag_path, "w", encoding="utf-8") as fh:
        json.dump(diag, fh, indent=2)
        fh.write("\n")
    n_edges = int(np.count_nonzero(network.adjacency))
    print(f"wrote {args.output} ({n_edges} edges) and {diag_path}")
    return 0


def _node_taps_from_network(network: NetworkEstimate) -> list:
    """Per-node tap vectors (thresholded values) from the serialized form."""
    J, K = network.n_nodes, network.K
    out = []
    for i in range(J):
        theta = np.zeros(J * K)
        for j in range(J):
            block = network.self_taps[i] if j == i else network.edge_taps[i, j]
            theta[j * K: (j + 1) * K] = block
        out.append(theta)
    return out


def _cmd_evaluate(args) -> int:
    network = NetworkEstimate.load_json(args.estimated)
    truth = GroundTruthNetwork.load_json(args.truth)
    if truth.n_nodes != network.n_nodes:
        raise ValueError("estimated and truth node counts differ")
    score = topology_score(network.adjacency, truth.adjacency)
    est_taps = _node_taps_from_network(network)
    true_taps = true_predictor_taps(truth, network.K)
    values, excluded = node_nmse(est_taps, true_taps)
    rows = [
        ("tpr", score.tpr), ("fpr", score.fpr), ("dis", score.dis),
        ("nmse", float(np.mean(values)) if values.size else float("nan")),
        ("n_true_edges", score.n_true_edges),
        ("nodes_excluded_from_nmse", excluded),
    ]
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write("metric,value\n")
        for name, value in rows:
            fh.write(f"{name},{value!r}\n")
    print(f"wrote {args.output}: tpr={score.tpr:.3f} fpr={score.fpr:.3f} "
          f"dis={score.dis:.3f}")
    return 0


def _cmd_experiment(args) -> int:
    config = (ExperimentConfig.load_json(args.config) if args.config
              else ExperimentConfig())
    overrides = {}
    if args.mode is not None:
        overrides["mode"] = args.mode
    if args.monte_carlo is not None:
        overrides["monte_carlo"] = args.monte_carlo
    if args.master_seed is not None:
        overrides["master_seed"] = args.master_seed
    if overrides:
        d = config.to_dict()
        d.update(overrides)
        config = ExperimentConfig.from_dict(d)
    table = run_experiment(config, workers=args.workers)
    files = write_report(table, args.out_dir, figures=not args.no_figures)
    for ratio in config.n_ratios:
        print(f"n_ratio={ratio:g}: tpr={table.mean_metric('tpr', ratio):.3f} "
              f"fpr={table.mean_metric('fpr', ratio):.3f} "
              f"dis={table.mean_metric('dis', ratio):.3f} "
              f"nmse={table.mean_metric('nmse', ratio):.4f}")
    print(f"wrote {', '.join(files)} in {args.out_dir}")
    return 0


def _stored_run_lines(table_path: str, run_id: int) -> list[str]:
    with open(table_path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    return [ln for ln in lines[1:]
            if ln.startswith(f"run,{run_id},")]


def _strip_wall_time(line: str) -> str:
    return line.rsplit(",", 1)[0]


def _cmd_replay(args) -> int:
    config = ExperimentConfig.load_json(
        os.path.join(args.results, "config.json"))
    rows = replay_run(config, args.run)
    table_path = os.path.join(args.results, "table.csv")
    from .harness import ResultTable
    fresh = ResultTable(config=config, rows=rows).row_lines()
    stored = _stored_run_lines(table_path, args.run)
    for line in fresh:
        print(line)
    if len(stored) != len(fresh):
        raise RuntimeError(
            f"stored table has {len(stored)} rows for run {args.run}, "
            f"replay produced {len(fresh)}")
    for a, b in zip(stored, fresh):
        if _strip_wall_time(a) != _strip_wall_time(b):
            raise RuntimeError(
                f"replay mismatch for run {args.run}:\n stored: {a}\n "
                f"replayed: {b}")
    print(f"replay of run {args.run} matches the stored table "
          f"({len(fresh)} rows)")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "estimate": _cmd_estimate,
    "evaluate": _cmd_evaluate,
    "experiment": _cmd_experiment,
    "replay": _cmd_replay,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - single reporting point
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
