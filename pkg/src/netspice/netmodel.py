"""Data model for networked time series and per-node regression problems.

A network of J nodes evolves in discrete time; each node signal may depend on
lagged versions of the others through causal linear filters.  Identification
works node by node: the one-step predictor of node i is linear in the last K
samples of every node, so it is a sparse linear regression with J*K unknown
tap coefficients.  This module builds those regressions, thresholds estimated
taps, and assembles per-node results into a network-level estimate with file
round trips (CSV for series, JSON for estimates).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TimeSeries",
    "RegressionProblem",
    "NodeEstimate",
    "NetworkEstimate",
    "build_lag_matrix",
    "build_regression_problem",
    "threshold_taps",
    "assemble_network",
]


@dataclass(eq=False)
class TimeSeries:
    """Multivariate time series, one row per node.

    Parameters
    ----------
    data : ndarray, shape (J, T)
        Finite samples; J >= 2 nodes, T >= 1 time steps.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"data must be 2-d (J, T), got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError(f"need at least 2 nodes, got {arr.shape[0]}")
        if arr.shape[1] < 1:
            raise ValueError("need at least one time sample")
        if not np.all(np.isfinite(arr)):
            raise ValueError("time series contains non-finite values")
        self.data = arr

    @property
    def n_nodes(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    def save_csv(self, path) -> None:
        """Write as CSV: header node_1,...,node_J, one row per time step."""
        header = ",".join(f"node_{j + 1}" for j in range(self.n_nodes))
        np.savetxt(path, self.data.T, delimiter=",", header=header,
                   comments="", fmt="%.17g")

    @classmethod
    def load_csv(cls, path) -> "TimeSeries":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
        names = header.split(",")
        expected = [f"node_{j + 1}" for j in range(len(names))]
        if names != expected:
            raise ValueError(f"bad header {names!r}, expected {expected!r}")
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if raw.shape[1] != len(names):
            raise ValueError("column count does not match header")
        return cls(raw.T)


def build_lag_matrix(series: np.ndarray, t0: int, n_rows: int, K: int) -> np.ndarray:
    """Lag (Hankel-style) matrix of one scalar series.

    Entry (n, k), 0-based, is series[t0 + n - 1 - k]: row n holds the K most
    recent past samples, newest first, relative to the predicted time t0 + n.

    Parameters
    ----------
    series : ndarray, shape (T,)
    t0 : int
        Index of the first predicted sample (0-based); t0 >= K so every row
        is fully inside the record.
    n_rows : int
        Number of rows N >= 1; the last predicted index t0 + N - 1 must be
        < T.
    K : int
        Lag depth >= 1.

    Returns
    -------
    ndarray, shape (n_rows, K)
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1:
        raise ValueError("series must be 1-d")
    T = series.shape[0]
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if n_rows < 1:
        raise ValueError(f"n_rows must be >= 1, got {n_rows}")
    if t0 < K:
        raise ValueError(f"t0 must be >= K (got t0={t0}, K={K})")
    if t0 + n_rows > T:
        raise ValueError(
            f"window [t0, t0+n_rows) = [{t0}, {t0 + n_rows}) exceeds T={T}")
    cols = [series[t0 - 1 - k: t0 - 1 - k + n_rows] for k in range(K)]
    return np.stack(cols, axis=1)


@dataclass(eq=False)
class RegressionProblem:
    """One node's prediction regression y ~ A theta.

    A stacks J lag blocks of K columns each, ordered by source node; y is the
    predicted node's samples at times t0..t0+N-1.  Column j*K + k carries lag
    k+1 of node j, so A only contains samples strictly before the predicted
    time (causality).
    """

    A: np.ndarray
    y: np.ndarray
    node: int = 0
    K: int = 1
    t0: int | None = None

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.A.ndim != 2 or self.y.ndim != 1:
            raise ValueError("A must be 2-d and y 1-d")
        if self.A.shape[0] != self.y.shape[0]:
            raise ValueError(
                f"row mismatch: A has {self.A.shape[0]}, y has {self.y.shape[0]}")
        if self.A.shape[0] < 1:
            raise ValueError("need at least one row")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.y))):
            raise ValueError("regression data contains non-finite values")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.A.shape[1] % self.K != 0:
            raise ValueError(
                f"column count {self.A.shape[1]} not a multiple of K={self.K}")
        if self.t0 is None:
            self.t0 = self.K
        if self.t0 < self.K:
            raise ValueError(f"t0 must be >= K (got t0={self.t0}, K={self.K})")

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_cols(self) -> int:
        return self.A.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.A.shape[1] // self.K


def build_regression_problem(w: TimeSeries, node: int, K: int,
                             t0: int | None = None,
                             n_rows: int | None = None) -> RegressionProblem:
    """Build node `node`'s regression from the full record.

    Defaults give the maximal window: t0 = K, n_rows = T - K.  Requires
    T > K + 1 so the system has at least one row and a nontrivial target.
    """
    if not 0 <= node < w.n_nodes:
        raise ValueError(f"node {node} out of range 0..{w.n_nodes - 1}")
    T = w.n_samples
    if T <= K + 1:
        raise ValueError(f"need T > K + 1 samples (T={T}, K={K})")
    if t0 is None:
        t0 = K
    if n_rows is None:
        n_rows = T - t0
    if t0 + n_rows > T:
        raise ValueError(f"window [{t0}, {t0 + n_rows}) exceeds T={T}")
    blocks = [build_lag_matrix(w.data[j], t0, n_rows, K)
              for j in range(w.n_nodes)]
    A = np.hstack(blocks)
    y = w.data[node, t0: t0 + n_rows]
    return RegressionProblem(A=A, y=y, node=node, K=K, t0=t0)


def threshold_taps(theta: np.ndarray, delta: float) -> np.ndarray:
    """Zero out entries with |theta_m| < delta; entries at the boundary stay.

    Idempotent: re-applying the same delta changes nothing.
    """
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    theta = np.asarray(theta, dtype=float)
    out = theta.copy()
    out[np.abs(theta) < delta] = 0.0
    return out


@dataclass(eq=False)
class NodeEstimate:
    """Solver output for one node.

    theta holds the J*K unthresholded tap estimates, p the matched power
    vector, sigma2 the noise power at the fixed point.  kkt_residual and
    iterations are solver diagnostics; converged means the residual met the
    configured tolerance.  objective_trace records the merit value per sweep.
    """

    theta: np.ndarray
    p: np.ndarray
    sigma2: float
    kkt_residual: float
    iterations: int
    converged: bool = True
    objective_trace: np.ndarray = field(
        default_factory=lambda: np.empty(0))

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        self.objective_trace = np.asarray(self.objective_trace, dtype=float)
        if self.theta.shape != self.p.shape:
            raise ValueError("theta and p must have the same shape")
        if self.sigma2 < 0:
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2}")
        if np.any(self.p < 0):
            raise ValueError("p must be nonnegative")


@dataclass(eq=False)
class NetworkEstimate:
    """Thresholded network-level estimate.

    adjacency[i, j] is True when an edge from node j into node i survived
    thresholding; the diagonal is always False (self-loops model noise
    coloring, not topology).  edge_taps[i, j] holds that edge's K surviving
    taps (zero block where there is no edge); self_taps[i] holds node i's own
    lag taps.
    """

    adjacency: np.ndarray
    edge_taps: np.ndarray
    self_taps: np.ndarray
    delta: float

    def __post_init__(self):
        self.adjacency = np.asarray(self.adjacency, dtype=bool)
        self.edge_taps = np.asarray(self.edge_taps, dtype=float)
        self.self_taps = np.asarray(self.self_taps, dtype=float)
        J = self.adjacency.shape[0]
        if self.adjacency.shape != (J, J):
            raise ValueError("adjacency must be square")
        if self.edge_taps.shape[:2] != (J, J) or self.edge_taps.ndim != 3:
            raise ValueError("edge_taps must have shape (J, J, K)")
        K = self.edge_taps.shape[2]
        if self.self_taps.shape != (J, K):
            raise ValueError("self_taps must have shape (J, K)")
        if self.delta <= 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if np.any(np.diag(self.adjacency)):
            raise ValueError("adjacency diagonal must be False")
        # Edge presence must match surviving taps off the diagonal.
        present = np.any(np.abs(self.edge_taps) >= self.delta, axis=2)
        np.fill_diagonal(present, False)
        if not np.array_equal(present, self.adjacency):
            raise ValueError("adjacency inconsistent with edge_taps at delta")

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def K(self) -> int:
        return self.edge_taps.shape[2]

    def to_dict(self) -> dict:
        """JSON form; node ids are 1-based to match the node_j CSV headers."""
        edges = []
        J = self.n_nodes
        for i in range(J):
            for j in range(J):
                if self.adjacency[i, j]:
                    edges.append({
                        "from": j + 1,
                        "to": i + 1,
                        "taps": [float(v) for v in self.edge_taps[i, j]],
                    })
        return {
            "J": J,
            "K": self.K,
            "delta": float(self.delta),
            "edges": edges,
            "self_taps": [[float(v) for v in row] for row in self.self_taps],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkEstimate":
        J, K = int(d["J"]), int(d["K"])
        adjacency = np.zeros((J, J), dtype=bool)
        edge_taps = np.zeros((J, J, K))
        for e in d["edges"]:
            i, j = int(e["to"]) - 1, int(e["from"]) - 1
            adjacency[i, j] = True
            edge_taps[i, j] = np.asarray(e["taps"], dtype=float)
        self_taps = np.asarray(d["self_taps"], dtype=float)
        return cls(adjacency=adjacency, edge_taps=edge_taps,
                   self_taps=self_taps, delta=float(d["delta"]))

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load_json(cls, path) -> "NetworkEstimate":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def assemble_network(node_estimates: list[NodeEstimate], delta: float,
                     K: int) -> NetworkEstimate:
    """Threshold per-node tap vectors and collect them into a network.

    node_estimates[i] is node i's solve; each theta must have length J*K with
    J = len(node_estimates).  The edge rule is per-tap thresholding followed
    by a block OR: an edge j -> i exists when any of the K taps of block j
    survives.  Diagonal blocks go to self_taps, never to adjacency.
    """
    J = len(node_estimates)
    if J < 2:
        raise ValueError("need at least 2 nodes")
    adjacency = np.zeros((J, J), dtype=bool)
    edge_taps = np.zeros((J, J, K))
    self_taps = np.zeros((J, K))
    for i, est in enumerate(node_estimates):
        theta = np.asarray(est.theta, dtype=float)
        if theta.shape != (J * K,):
            raise ValueError(
                f"node {i}: theta has shape {theta.shape}, expected ({J * K},)")
        kept = threshold_taps(theta, delta).reshape(J, K)
        for j in range(J):
            if j == i:
                self_taps[i] = kept[j]
            elif np.any(kept[j] != 0.0):
                adjacency[i, j] = True
                edge_taps[i, j] = kept[j]
    return NetworkEstimate(adjacency=adjacency, edge_taps=edge_taps,
                           self_taps=self_taps, delta=delta)
