"""Monte-Carlo experiment harness.

Reproduces the two benchmark studies: FIR networks (exact finite ground
truth) and rational networks (truncated ground truth), sweeping the record
length over multiples of the unknown count J*K and scoring topology recovery
and tap accuracy over repeated random runs.

Determinism contract: every run's randomness derives from
SeedSequence(master_seed, spawn_key=(run_id, stage)), so results are a pure
function of (config, run_id) no matter how runs are scheduled across
workers.  The NETSPICE_WORKERS environment variable sets the default worker
count; tables come out identical at any setting (wall_time excepted).
"""
from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .datagen import (GroundTruthNetwork, generate_network, simulate,
                      true_predictor_taps)
from .metrics import nmse, topology_score
from .netmodel import (NetworkEstimate, NodeEstimate, TimeSeries,
                       assemble_network, build_regression_problem)
from .spice import SolverConfig, solve_node

__all__ = [
    "ExperimentConfig",
    "RunRow",
    "TapSnapshot",
    "ResultTable",
    "estimate_network",
    "sweep_threshold",
    "run_experiment",
    "replay_run",
    "write_report",
    "resolve_workers",
]

WORKERS_ENV = "NETSPICE_WORKERS"

_MODES = ("fir", "fir_noise", "rational")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one Monte-Carlo study.

    n_ratios scale the record length: N = round(ratio * J * K) samples per
    run.  monte_carlo is the number of independent runs; master_seed the
    root entropy.
    """

    J: int = 8
    K: int = 3
    rho: float = 0.25
    mode: str = "fir"
    order_range: tuple[int, int] = (1, 5)
    n_ratios: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0, 8.0)
    monte_carlo: int = 50
    delta: float = 0.1
    master_seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.J < 2:
            raise ValueError("J must be >= 2")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not 0.0 < self.rho <= 1.0:
            raise ValueError("rho must be in (0, 1]")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        lo, hi = self.order_range
        if not 1 <= lo <= hi:
            raise ValueError("order_range must satisfy 1 <= lo <= hi")
        if not self.n_ratios:
            raise ValueError("n_ratios must be nonempty")
        if any(r <= 0 for r in self.n_ratios):
            raise ValueError("n_ratios must be positive")
        if list(self.n_ratios) != sorted(self.n_ratios):
            raise ValueError("n_ratios must be ascending")
        if self.monte_carlo < 1:
            raise ValueError("monte_carlo must be >= 1")
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        n_min = int(round(self.n_ratios[0] * self.J * self.K))
        if n_min <= self.K + 1:
            raise ValueError(
                f"smallest record length {n_min} leaves no regression rows")
        object.__setattr__(self, "order_range", tuple(self.order_range))
        object.__setattr__(self, "n_ratios", tuple(self.n_ratios))

    def record_length(self, ratio: float) -> int:
        return int(round(ratio * self.J * self.K))

    def to_dict(self) -> dict:
        return {
            "J": self.J,
            "K": self.K,
            "rho": self.rho,
            "mode": self.mode,
            "order_range": list(self.order_range),
            "n_ratios": list(self.n_ratios),
            "monte_carlo": self.monte_carlo,
            "delta": self.delta,
            "master_seed": self.master_seed,
            "solver": self.solver.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "order_range" in d:
            d["order_range"] = tuple(d["order_range"])
        if "n_ratios" in d:
            d["n_ratios"] = tuple(d["n_ratios"])
        if "solver" in d:
            d["solver"] = SolverConfig.from_dict(d["solver"])
        return cls(**d)

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load_json(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def run_rng(master_seed: int, run_id: int, stage: int) -> np.random.Generator:
    """Deterministic per-(run, stage) generator; stage 0 = network, 1 = noise."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(run_id, stage))
    return np.random.default_rng(ss)


def estimate_network(w: TimeSeries, K: int, delta: float,
                     config: SolverConfig | None = None):
    """Identify the whole network: one sparse solve per node.

    Nodes are independent; a node whose solve raises is flagged (zero
    estimate, converged=False) rather than aborting the network.  Returns
    (NetworkEstimate, [NodeEstimate]).
    """
    cfg = config or SolverConfig()
    estimates = []
    for node in range(w.n_nodes):
        problem = build_regression_problem(w, node, K)
        try:
            est = solve_node(problem, cfg)
        except Exception:
            est = NodeEstimate(theta=np.zeros(w.n_nodes * K),
                               p=np.zeros(w.n_nodes * K), sigma2=0.0,
                               kkt_residual=np.inf, iterations=0,
                               converged=False)
        estimates.append(est)
    network = assemble_network(estimates, delta, K)
    return network, estimates


def sweep_threshold(node_estimates: list[NodeEstimate], truth: np.ndarray,
                    deltas) -> list:
    """Re-threshold stored solves at each delta and score the topology.

    No re-solving: the estimator itself is tuning-free, delta only carves
    the reported graph out of the fixed tap estimates.
    """
    J = len(node_estimates)
    if J < 2:
        raise ValueError("need at least 2 nodes")
    M = node_estimates[0].theta.shape[0]
    K = M // J
    scores = []
    for delta in deltas:
        network = assemble_network(node_estimates, delta, K)
        scores.append(topology_score(network.adjacency, truth))
    return scores


@dataclass(frozen=True)
class RunRow:
    """One (run, record length) result."""

    run_id: int
    mode: str
    n_ratio: float
    N: int
    tpr: float
    fpr: float
    dis: float
    nmse: float
    mean_kkt_residual: float
    failed_nodes: int
    wall_time: float


@dataclass(eq=False)
class TapSnapshot:
    """Tap vectors of one run kept aside for the report figure."""

    run_id: int
    n_ratio: float
    K: int
    true_theta: list
    est_theta: list
    true_adjacency: np.ndarray
    est_adjacency: np.ndarray


_COLUMNS = ("row_type", "run_id", "mode", "n_ratio", "N", "tpr", "fpr", "dis",
            "nmse", "mean_kkt_residual", "failed_nodes", "wall_time")
_AGG_METRICS = ("tpr", "fpr", "dis", "nmse", "mean_kkt_residual")
_LONG_METRICS = ("tpr", "fpr", "dis", "nmse", "mean_kkt_residual")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(eq=False)
class ResultTable:
    """All rows of one experiment plus per-ratio aggregates."""

    config: ExperimentConfig
    rows: list[RunRow]
    snapshot: TapSnapshot | None = None

    def aggregates(self) -> list[dict]:
        """Mean and standard deviation of each metric per n_ratio."""
        out = []
        for ratio in self.config.n_ratios:
            group = [r for r in self.rows if r.n_ratio == ratio]
            if not group:
                continue
            for kind, fn in (("mean", np.mean), ("std", np.std)):
                entry = {"row_type": kind, "n_ratio": ratio,
                         "N": group[0].N,
                         "failed_nodes": int(sum(r.failed_nodes for r in group)),
                         "wall_time": float(fn([r.wall_time for r in group]))}
                for m in _AGG_METRICS:
                    entry[m] = float(fn([getattr(r, m) for r in group]))
                out.append(entry)
        return out

    def mean_metric(self, metric: str, ratio: float) -> float:
        vals = [getattr(r, metric) for r in self.rows if r.n_ratio == ratio]
        if not vals:
            raise KeyError(f"no rows at n_ratio {ratio}")
        return float(np.mean(vals))

    def std_metric(self, metric: str, ratio: float) -> float:
        vals = [getattr(r, metric) for r in self.rows if r.n_ratio == ratio]
        if not vals:
            raise KeyError(f"no rows at n_ratio {ratio}")
        return float(np.std(vals))

    def row_lines(self) -> list[str]:
        lines = []
        for r in self.rows:
            lines.append(",".join([
                "run", str(r.run_id), r.mode, _fmt(float(r.n_ratio)),
                str(r.N), _fmt(r.tpr), _fmt(r.fpr), _fmt(r.dis), _fmt(r.nmse),
                _fmt(r.mean_kkt_residual), str(r.failed_nodes),
                _fmt(r.wall_time)]))
        return lines

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(_COLUMNS) + "\n")
            for line in self.row_lines():
                fh.write(line + "\n")
            for agg in self.aggregates():
                fh.write(",".join([
                    agg["row_type"], "", self.config.mode,
                    _fmt(float(agg["n_ratio"])), str(agg["N"]),
                    _fmt(agg["tpr"]), _fmt(agg["fpr"]), _fmt(agg["dis"]),
                    _fmt(agg["nmse"]), _fmt(agg["mean_kkt_residual"]),
                    str(agg["failed_nodes"]), _fmt(agg["wall_time"])]) + "\n")

    def to_long_csv(self, path) -> None:
        """Long format for plotting: run_id,mode,n_ratio,N,metric,value."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("run_id,mode,n_ratio,N,metric,value\n")
            for r in self.rows:
                for m in _LONG_METRICS:
                    fh.write(",".join([
                        str(r.run_id), r.mode, _fmt(float(r.n_ratio)),
                        str(r.N), m, _fmt(float(getattr(r, m)))]) + "\n")


def _run_single(config: ExperimentConfig, run_id: int):
    """Execute one Monte-Carlo run; pure function of (config, run_id)."""
    net = generate_network(config.J, config.rho, config.mode, config.K,
                           run_rng(config.master_seed, run_id, 0),
                           order_range=config.order_range)
    n_max = config.record_length(config.n_ratios[-1])
    w = simulate(net, n_max, run_rng(config.master_seed, run_id, 1))
    theta_true = true_predictor_taps(net, config.K)
    snap_ratio = 1.0 if 1.0 in config.n_ratios else config.n_ratios[0]
    rows = []
    snapshot = None
    for ratio in config.n_ratios:
        N = config.record_length(ratio)
        sub = TimeSeries(w.data[:, :N])
        tic = time.perf_counter()
        network, estimates = estimate_network(sub, config.K, config.delta,
                                              config.solver)
        wall = time.perf_counter() - tic
        score = topology_score(network.adjacency, net.adjacency)
        err = nmse([e.theta for e in estimates], theta_true)
        finite = [e.kkt_residual for e in estimates
                  if np.isfinite(e.kkt_residual)]
        rows.append(RunRow(
            run_id=run_id, mode=config.mode, n_ratio=float(ratio), N=N,
            tpr=score.tpr, fpr=score.fpr, dis=score.dis, nmse=err,
            mean_kkt_residual=float(np.mean(finite)) if finite else 0.0,
            failed_nodes=sum(not e.converged for e in estimates),
            wall_time=wall))
        if run_id == 0 and ratio == snap_ratio:
            snapshot = TapSnapshot(
                run_id=run_id, n_ratio=float(ratio), K=config.K,
                true_theta=[t.copy() for t in theta_true],
                est_theta=[e.theta.copy() for e in estimates],
                true_adjacency=net.adjacency.copy(),
                est_adjacency=network.adjacency.copy())
    return rows, snapshot


def resolve_workers(workers: int | None = None) -> int:
    """Explicit argument, else NETSPICE_WORKERS, else 1."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV, "").strip()
        workers = int(env) if env else 1
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


def run_experiment(config: ExperimentConfig,
                   workers: int | None = None) -> ResultTable:
    """Run all Monte-Carlo runs and collect the result table.

    Runs execute in parallel processes when workers > 1; rows are keyed and
    ordered by run_id, so the table does not depend on the worker count.
    """
    workers = resolve_workers(workers)
    results = {}
    if workers == 1:
        for run_id in range(config.monte_carlo):
            results[run_id] = _run_single(config, run_id)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {run_id: pool.submit(_run_single, config, run_id)
                       for run_id in range(config.monte_carlo)}
            for run_id, fut in futures.items():
                results[run_id] = fut.result()
    rows = []
    snapshot = None
    for run_id in range(config.monte_carlo):
        run_rows, snap = results[run_id]
        rows.extend(run_rows)
        if snap is not None:
            snapshot = snap
    return ResultTable(config=config, rows=rows, snapshot=snapshot)


def replay_run(config: ExperimentConfig, run_id: int) -> list[RunRow]:
    """Recompute one run's rows from the config alone."""
    if not 0 <= run_id < config.monte_carlo:
        raise ValueError(
            f"run_id must be in 0..{config.monte_carlo - 1}, got {run_id}")
    return _run_single(config, run_id)[0]


def write_report(table: ResultTable, out_dir, figures: bool = True) -> list[str]:
    """Write config, tables, and report figures; returns the file list."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def _path(name):
        written.append(name)
        return os.path.join(out_dir, name)

    table.config.save_json(_path("config.json"))
    table.to_csv(_path("table.csv"))
    table.to_long_csv(_path("long.csv"))
    if figures:
        from . import plots
        plots.performance_figure(table, _path("performance.png"))
        plots.nmse_figure(table, _path("nmse.png"))
        if table.snapshot is not None:
            plots.taps_figure(table.snapshot, _path("taps.png"))
    return written
