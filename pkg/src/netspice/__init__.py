"""Identification of sparse linear dynamic networks from time series.

The estimator is tuning-free: each node's tap vector solves a square-root
LASSO whose weights come out of a covariance-matching argument, so topology
and edge dynamics follow from the data alone plus a reporting threshold.
"""

__version__ = "0.1.0"

from .datagen import (GroundTruthNetwork, TransferFunction, generate_network,
                      network_stable, random_fir, random_rational,
                      random_topology, simulate, true_predictor_taps)
from .harness import (ExperimentConfig, ResultTable, estimate_network,
                      replay_run, run_experiment, sweep_threshold,
                      write_report)
from .metrics import TopologyScore, nmse, node_nmse, topology_score
from .netmodel import (NetworkEstimate, NodeEstimate, RegressionProblem,
                       TimeSeries, assemble_network, build_lag_matrix,
                       build_regression_problem, threshold_taps)
from .spice import (KKTUndefinedError, SolverConfig, SqrtLassoProblem,
                    kkt_residual, solve_l0_oracle, solve_node, spice_objective,
                    spice_sweep, sqrt_lasso_objective)

__all__ = [
    "__version__",
    "TimeSeries", "RegressionProblem", "NodeEstimate", "NetworkEstimate",
    "build_lag_matrix", "build_regression_problem", "threshold_taps",
    "assemble_network",
    "SolverConfig", "SqrtLassoProblem", "KKTUndefinedError", "solve_node",
    "spice_sweep", "spice_objective", "kkt_residual", "sqrt_lasso_objective",
    "solve_l0_oracle",
    "TransferFunction", "GroundTruthNetwork", "random_topology", "random_fir",
    "random_rational", "network_stable", "simulate", "true_predictor_taps",
    "generate_network",
    "TopologyScore", "topology_score", "nmse", "node_nmse",
    "ExperimentConfig", "ResultTable", "estimate_network", "sweep_threshold",
    "run_experiment", "replay_run", "write_report",
]
