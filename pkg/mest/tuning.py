"""
BIC selection of the tuning parameter lambda.

    BIC(lambda) = ln((1/n) sum rho(y_i - x_i^T beta_hat)) + df * ln(n) / n

with df the number of nonzero coefficients. For LLA the unpenalized pilot
is fitted once, then every lambda uses weights p'_lambda(|pilot_j|).
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple
import logging
import math

import numpy as np
from joblib import Parallel, delayed

from .exceptions import DegenerateFit, MEstError, SpecError, TuningError
from .losses import LossSpec, loss_score, loss_value
from .penalties import DEFAULT_SCAD_A, ScadParams, lasso_weights, lla_weights
from .solver import Dataset, FitResult, SolveOptions, fit_penalized, fit_unpenalized

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 50
DEFAULT_MIN_RATIO = 1e-3
DEGENERATE_LOSS = 1e-12
FALLBACK_GRID = (1.0, 1e-3)


class PenaltyMethod(Enum):
    LLA = "lla"
    LASSO = "lasso"


@dataclass(frozen=True)
class LambdaGrid:
    """Strictly descending positive lambda values."""

    values: np.ndarray
    min_ratio: float = DEFAULT_MIN_RATIO

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size == 0:
            raise SpecError("lambda grid cannot be empty")
        if np.any(values <= 0.0) or not np.all(np.isfinite(values)):
            raise SpecError("lambda grid values must be positive and finite")
        if np.any(np.diff(values) >= 0.0):
            raise SpecError("lambda grid must be strictly descending")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n_points(self) -> int:
        return self.values.size

    @classmethod
    def log_spaced(
        cls,
        lambda_max: float,
        n_points: int = DEFAULT_GRID_POINTS,
        min_ratio: float = DEFAULT_MIN_RATIO,
    ) -> "LambdaGrid":
        if n_points < 1:
            raise SpecError("grid needs at least one point")
        if not 0.0 < min_ratio < 1.0:
            raise SpecError(f"min_ratio must be in (0, 1), got {min_ratio}")
        if n_points == 1:
            return cls(np.array([lambda_max]), min_ratio)
        values = np.geomspace(lambda_max, lambda_max * min_ratio, n_points)
        return cls(values, min_ratio)


@dataclass(frozen=True)
class PathPoint:
    lam: float
    bic: float
    df: int


@dataclass
class TuningResult:
    """Selected lambda, its fit and the BIC path (descending lambda).

    pilot_fits counts unpenalized pilot fits made during selection.
    """

    lambda_star: float
    fit: FitResult
    bic_path: List[PathPoint] = field(default_factory=list)
    pilot: Optional[FitResult] = None
    pilot_fits: int = 0
    failed: List[float] = field(default_factory=list)


def bic_score(
    data: Dataset, loss: LossSpec, beta: np.ndarray, zero_tol: float = 1e-6
) -> Tuple[float, int]:
    """BIC of a coefficient vector.

    Returns:
        (bic, df)

    Raises:
        DegenerateFit: If the mean loss is <= 1e-12
    """
    beta = np.asarray(beta, dtype=float)
    mean_loss = float(np.mean(loss_value(loss, data.y - data.X @ beta)))
    df = int(np.sum(np.abs(beta) > zero_tol))
    if mean_loss <= DEGENERATE_LOSS:
        raise DegenerateFit(f"mean loss {mean_loss:.3g} too small for BIC")
    return math.log(mean_loss) + df * math.log(data.n) / data.n, df


def default_grid(
    data: Dataset,
    loss: LossSpec,
    pilot: Optional[np.ndarray] = None,
    n_points: int = DEFAULT_GRID_POINTS,
    min_ratio: float = DEFAULT_MIN_RATIO,
) -> LambdaGrid:
    """Log-spaced grid from lambda_max down to min_ratio * lambda_max.

    lambda_max = max_j (1/n)|sum_i phi0(y_i) x_ij| with phi0 the midpoint
    subgradient; at lambda >= lambda_max the all-zero LAD fit is stationary.
    With a pilot the top is raised to max|pilot_j| so the largest lambda
    gives every coefficient the full SCAD weight lambda.
    """
    lambda_max = float(np.max(np.abs(data.X.T @ loss_score(loss, data.y)))) / data.n
    if pilot is not None and lambda_max > 0.0:
        lambda_max = max(lambda_max, float(np.max(np.abs(pilot))))
    if not np.any(data.y) or not lambda_max > 0.0:
        logger.debug("degenerate response; using fallback lambda grid")
        hi, lo = FALLBACK_GRID
        return LambdaGrid.log_spaced(hi, n_points, lo / hi)
    return LambdaGrid.log_spaced(lambda_max, n_points, min_ratio)


def _fit_one(
    data: Dataset,
    loss: LossSpec,
    method: PenaltyMethod,
    lam: float,
    pilot: Optional[np.ndarray],
    opts: SolveOptions,
    scad_a: float,
):
    """Fit and score one lambda; returns (lam, fit, bic, df) or (lam, None, error)."""
    try:
        if method == PenaltyMethod.LLA:
            weights = lla_weights(ScadParams(lam, scad_a), pilot)
        else:
            weights = lasso_weights(lam, data.p)
        fit = fit_penalized(data, loss, weights, opts).raise_for_status()
        bic, df = bic_score(data, loss, fit.beta, opts.zero_tol)
        return lam, fit, bic, df
    except MEstError as e:
        return lam, None, str(e), None


def select_lambda(
    data: Dataset,
    loss: LossSpec,
    method: PenaltyMethod = PenaltyMethod.LLA,
    grid: Optional[LambdaGrid] = None,
    opts: Optional[SolveOptions] = None,
    scad_a: float = DEFAULT_SCAD_A,
    n_jobs: int = 1,
    pilot: Optional[FitResult] = None,
) -> TuningResult:
    """Pick lambda by BIC.

    Args:
        data: Regression instance
        loss: Loss used for fitting and in the BIC
        method: LLA (SCAD tangent weights at the pilot) or LASSO
        grid: Lambda grid (default_grid if omitted)
        opts: Solver options
        scad_a: SCAD shape parameter
        n_jobs: Parallel per-lambda fits (joblib)
        pilot: Precomputed pilot fit (LLA only); fitted once here otherwise

    Returns:
        TuningResult; ties in BIC go to the larger lambda

    Raises:
        TuningError: If every lambda failed
    """
    if isinstance(method, str):
        method = PenaltyMethod(method)
    opts = opts or SolveOptions()

    pilot_fits = 0
    pilot_beta = None
    if method == PenaltyMethod.LLA:
        if pilot is None:
            pilot = fit_unpenalized(data, loss, opts)
            pilot_fits = 1
            if not pilot.converged:
                logger.warning(f"pilot fit not certified (kkt={pilot.kkt_residual:.2e})")
        pilot_beta = pilot.beta

    if grid is None:
        grid = default_grid(data, loss, pilot=pilot_beta)

    if n_jobs == 1:
        outcomes = [
            _fit_one(data, loss, method, lam, pilot_beta, opts, scad_a) for lam in grid.values
        ]
    else:
        outcomes = Parallel(n_jobs=n_jobs)(
            delayed(_fit_one)(data, loss, method, lam, pilot_beta, opts, scad_a)
            for lam in grid.values
        )

    path: List[PathPoint] = []
    fits = {}
    failed: List[float] = []
    for lam, fit, bic_or_error, df in sorted(outcomes, key=lambda o: -o[0]):
        if fit is None:
            logger.warning(f"lambda={lam:.4g} excluded: {bic_or_error}")
            failed.append(float(lam))
            continue
        logger.debug(f"lambda={lam:.4g} bic={bic_or_error:.6f} df={df}")
        path.append(PathPoint(lam=float(lam), bic=float(bic_or_error), df=df))
        fits[float(lam)] = fit

    if not path:
        raise TuningError(f"all {grid.n_points} lambda values failed")

    # descending order: strict < keeps the larger lambda on ties
    best = path[0]
    for point in path[1:]:
        if point.bic < best.bic:
            best = point

    return TuningResult(
        lambda_star=best.lam,
        fit=fits[best.lam],
        bic_path=path,
        pilot=pilot,
        pilot_fits=pilot_fits,
        failed=failed,
    )
