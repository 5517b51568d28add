"""
mest - weighted-L1 penalized robust M-estimation.

This package provides:
- A convex loss family (LAD, quantile, Huber, Lq, least squares)
- SCAD penalty and LLA / lasso weights
- A certified splitting solver for the penalized objective
- BIC tuning over a lambda grid
- A seeded Monte Carlo harness for variable-selection studies

Quick start:
    from mest import Dataset, LossSpec, select_lambda

    result = select_lambda(Dataset(X, y), LossSpec.lad())
    print(result.lambda_star, result.fit.support)

CLI usage:
    mest simulate --n 200 --reps 100 --format markdown
"""

__version__ = "0.1.0"

from .config import Config, GridConfig, OutputConfig, SimulationConfig, SolverConfig
from .exceptions import (
    ConfigurationError,
    DegenerateFit,
    FailureBudgetExceeded,
    MaxIterExceeded,
    MEstError,
    MomentConditionError,
    NonFiniteEncountered,
    ScenarioError,
    SolverError,
    SpecError,
    TuningError,
)
from .losses import (
    LossKind,
    LossSpec,
    MomentPair,
    SubgradientInterval,
    gamma_sigma2,
    loss_prox,
    loss_subgradient,
    loss_value,
)
from .metrics import (
    MetricsSummary,
    ReplicateRecord,
    aggregate,
    estimation_error,
    prediction_error,
    selection_counts,
)
from .penalties import (
    PenaltyWeights,
    ScadParams,
    lasso_weights,
    lla_weights,
    scad_derivative,
    scad_value,
)
from .simgen import (
    ErrorDist,
    ErrorKind,
    ScenarioConfig,
    ar1_covariance,
    dimension_for,
    gen_dataset,
    gen_design,
    gen_errors,
)
from .solver import (
    Dataset,
    FitResult,
    SolveOptions,
    fit_oracle,
    fit_penalized,
    fit_unpenalized,
    joint_kkt_residual,
    kkt_residual,
    objective,
)
from .tuning import LambdaGrid, PenaltyMethod, TuningResult, bic_score, default_grid, select_lambda

__all__ = [
    # Config
    "Config",
    "GridConfig",
    "OutputConfig",
    "SimulationConfig",
    "SolverConfig",
    # Exceptions
    "ConfigurationError",
    "DegenerateFit",
    "FailureBudgetExceeded",
    "MaxIterExceeded",
    "MEstError",
    "MomentConditionError",
    "NonFiniteEncountered",
    "ScenarioError",
    "SolverError",
    "SpecError",
    "TuningError",
    # Losses
    "LossKind",
    "LossSpec",
    "MomentPair",
    "SubgradientInterval",
    "gamma_sigma2",
    "loss_prox",
    "loss_subgradient",
    "loss_value",
    # Metrics
    "MetricsSummary",
    "ReplicateRecord",
    "aggregate",
    "estimation_error",
    "prediction_error",
    "selection_counts",
    # Penalties
    "PenaltyWeights",
    "ScadParams",
    "lasso_weights",
    "lla_weights",
    "scad_derivative",
    "scad_value",
    # Simulation
    "ErrorDist",
    "ErrorKind",
    "ScenarioConfig",
    "ar1_covariance",
    "dimension_for",
    "gen_dataset",
    "gen_design",
    "gen_errors",
    # Solver
    "Dataset",
    "FitResult",
    "SolveOptions",
    "fit_oracle",
    "fit_penalized",
    "fit_unpenalized",
    "joint_kkt_residual",
    "kkt_residual",
    "objective",
    # Tuning
    "LambdaGrid",
    "PenaltyMethod",
    "TuningResult",
    "bic_score",
    "default_grid",
    "select_lambda",
]
