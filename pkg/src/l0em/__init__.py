"""L0-penalized regression via an EM fixed-point solver.

Solves min 0.5*||y - X theta||^2 + (lam/2) * sum_j |theta_j|^p for p in
[0, 2] (p = 0 counts nonzero coefficients) by alternating a coefficient
snapshot with a reweighted ridge solve.  Includes penalty selection by
cross-validation, stability, or closed-form information criteria, nodewise
Gaussian graphical-model estimation, and a replicated simulation harness.
"""

from .exceptions import NotFittedError, NumericError
from .estimators import GraphicalL0, L0Regressor, L0RegressorCV
from .graph import (
    GraphMetrics,
    NetworkEstimate,
    graph_metrics,
    nodewise_network,
    symmetrize,
    symmetrized_weights,
    write_edge_csv,
)
from .linalg import ridge_init, weighted_ridge_solve
from .metrics import SupportMetrics, coherence, mse, support_metrics
from .selection import (
    CvReport,
    LambdaGrid,
    SelectionResult,
    cv_mse,
    lambda_ic,
    lambda_stability,
    make_grid,
    select_lambda,
)
from .simulate import (
    DEFAULT_TRUE_BETA,
    ExperimentSpec,
    ExperimentStats,
    gen_ar1,
    gen_band_network,
    gen_response,
    run_experiment,
    write_stats_csv,
    write_stats_json,
)
from .solver import (
    FitResult,
    SolverOptions,
    check_certificate,
    eventual_contraction,
    fit_l0em,
    fit_lpem,
    lambda_max,
    objective,
    reg_path,
    stationarity_bound,
    stationarity_residual,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TRUE_BETA",
    "CvReport",
    "ExperimentSpec",
    "ExperimentStats",
    "FitResult",
    "GraphMetrics",
    "GraphicalL0",
    "L0Regressor",
    "L0RegressorCV",
    "LambdaGrid",
    "NetworkEstimate",
    "NotFittedError",
    "NumericError",
    "SelectionResult",
    "SolverOptions",
    "SupportMetrics",
    "check_certificate",
    "coherence",
    "cv_mse",
    "eventual_contraction",
    "fit_l0em",
    "fit_lpem",
    "gen_ar1",
    "gen_band_network",
    "gen_response",
    "graph_metrics",
    "lambda_ic",
    "lambda_max",
    "lambda_stability",
    "make_grid",
    "mse",
    "nodewise_network",
    "objective",
    "reg_path",
    "ridge_init",
    "run_experiment",
    "select_lambda",
    "stationarity_bound",
    "stationarity_residual",
    "support_metrics",
    "symmetrize",
    "symmetrized_weights",
    "weighted_ridge_solve",
    "write_edge_csv",
    "write_stats_csv",
    "write_stats_json",
    "__version__",
]
