"""
Asymptotic-normality diagnostic for the LLA estimator.

On each replicate the LLA estimate is restricted to the true support and
standardized:

    T = sqrt(n) u^T (beta_hat_1 - beta0_1) / s_n
    s_n^2 = sigma^2 gamma^(-power) u^T D11^(-1) u,   D11 = X_1^T X_1 / n

The T values are compared with N(0, 1) by a one-sample KS test.
power = 1 is the formula as usually stated; power = 2 is the sandwich
variance of an M-estimator.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from ..exceptions import FailureBudgetExceeded, MEstError, ScenarioError, SpecError
from ..losses import LossSpec, gamma_sigma2
from ..simgen import ScenarioConfig, gen_dataset
from ..solver import SolveOptions, fit_unpenalized
from ..tuning import (
    DEFAULT_GRID_POINTS,
    DEFAULT_MIN_RATIO,
    PenaltyMethod,
    default_grid,
    select_lambda,
)
from .runner import FAILURE_BUDGET

logger = logging.getLogger(__name__)

KS_CRITICAL_1PCT = 1.63


def sn_squared(
    d11: np.ndarray, u: Sequence[float], gamma: float, sigma2: float, gamma_power: int = 1
) -> float:
    """sigma^2 gamma^(-power) u^T D11^(-1) u."""
    d11 = np.atleast_2d(np.asarray(d11, dtype=float))
    u = np.asarray(u, dtype=float).reshape(-1)
    if d11.shape != (u.size, u.size):
        raise SpecError(f"D11 shape {d11.shape} does not match u of length {u.size}")
    if not gamma > 0:
        raise SpecError(f"gamma must be positive, got {gamma}")
    if gamma_power not in (1, 2):
        raise SpecError("gamma_power must be 1 or 2")
    return float(sigma2 * gamma ** (-gamma_power) * (u @ np.linalg.solve(d11, u)))


@dataclass
class NormalityResult:
    """Outcome of the diagnostic.

    samples holds the standardized statistics of the replicates whose
    support was exactly recovered; support_mismatches counts the others.
    """

    ks_stat: float
    pvalue: float
    critical_value: float
    samples: np.ndarray
    gamma: float
    sigma2: float
    gamma_power: int
    replicates: int
    support_mismatches: int = 0
    failures: int = 0
    u: List[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """KS statistic below the 1% critical value."""
        return self.ks_stat < self.critical_value

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"KS={self.ks_stat:.4f} critical(1%)={self.critical_value:.4f} "
            f"p={self.pvalue:.4f} [{status}] gamma_power={self.gamma_power} "
            f"gamma={self.gamma:.5f} sigma2={self.sigma2:.5f} "
            f"samples={self.samples.size}/{self.replicates} "
            f"support_mismatches={self.support_mismatches} failures={self.failures}"
        )


def _replicate_statistic(
    config: ScenarioConfig,
    loss: LossSpec,
    u: np.ndarray,
    index: int,
    gamma: float,
    sigma2: float,
    gamma_power: int,
    opts: SolveOptions,
    grid_points: int,
    min_ratio: float,
) -> Tuple[str, Optional[float]]:
    """('ok', T), ('mismatch', None) or ('failed', None) for replicate `index`."""
    data, beta0, support = gen_dataset(config, index)
    try:
        pilot = fit_unpenalized(data, loss, opts).raise_for_status()
        grid = default_grid(data, loss, pilot.beta, grid_points, min_ratio)
        fit = select_lambda(data, loss, PenaltyMethod.LLA, grid=grid, opts=opts, pilot=pilot).fit
    except MEstError as e:
        logger.warning(f"normality rep {index} failed: {e}")
        return "failed", None

    if fit.support != list(support):
        return "mismatch", None

    X1 = data.X[:, support]
    d11 = X1.T @ X1 / data.n
    s2 = sn_squared(d11, u, gamma, sigma2, gamma_power)
    diff = fit.beta[support] - beta0[support]
    return "ok", math.sqrt(data.n) * float(u @ diff) / math.sqrt(s2)


def normality_check(
    config: ScenarioConfig,
    u: Sequence[float],
    replicates: Optional[int] = None,
    loss: Optional[LossSpec] = None,
    gamma_power: int = 1,
    opts: Optional[SolveOptions] = None,
    parallel: int = 1,
    grid_points: int = DEFAULT_GRID_POINTS,
    min_ratio: float = DEFAULT_MIN_RATIO,
    moment_method: str = "auto",
) -> NormalityResult:
    """Run the normality diagnostic.

    Args:
        config: Scenario (its error law feeds gamma and sigma^2)
        u: Direction of length k with 0 < ||u|| <= 1
        replicates: Replicate count (config.replicates if omitted)
        loss: Loss for the pilot and LLA fits (LAD by default)
        gamma_power: 1 or 2, the power of gamma in s_n^2
        opts: Solver options
        parallel: joblib workers over replicates
        grid_points: Lambda grid size
        min_ratio: Lambda grid ratio
        moment_method: Passed to gamma_sigma2

    Returns:
        NormalityResult

    Raises:
        ScenarioError: If replicates < 1, u has the wrong length or norm,
            or no replicate recovered the support
        FailureBudgetExceeded: If more than 1% of replicates failed
    """
    replicates = config.replicates if replicates is None else replicates
    if replicates < 1:
        raise ScenarioError(f"normality_check needs replicates >= 1, got {replicates}")
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != len(config.support):
        raise ScenarioError(f"u must have length k={len(config.support)}, got {u.size}")
    norm = float(np.linalg.norm(u))
    if norm == 0.0 or norm > 1.0 + 1e-12:
        raise ScenarioError(f"u must satisfy 0 < ||u|| <= 1, got {norm:.6g}")
    if gamma_power not in (1, 2):
        raise ScenarioError("gamma_power must be 1 or 2")

    loss = loss or LossSpec.lad()
    opts = opts or SolveOptions()
    gamma, sigma2 = gamma_sigma2(loss, config.dist, method=moment_method)
    logger.info(
        f"normality {config.scenario_id}: {replicates} replicates, "
        f"gamma={gamma:.5f} sigma2={sigma2:.5f} power={gamma_power}"
    )

    args = (gamma, sigma2, gamma_power, opts, grid_points, min_ratio)
    if parallel == 1:
        outcomes = [_replicate_statistic(config, loss, u, i, *args) for i in range(replicates)]
    else:
        outcomes = Parallel(n_jobs=parallel)(
            delayed(_replicate_statistic)(config, loss, u, i, *args) for i in range(replicates)
        )

    samples = np.array([t for status, t in outcomes if status == "ok"], dtype=float)
    mismatches = sum(1 for status, _ in outcomes if status == "mismatch")
    failures = sum(1 for status, _ in outcomes if status == "failed")

    if failures > FAILURE_BUDGET * replicates:
        logger.error(f"normality {config.scenario_id}: {failures}/{replicates} replicates failed")
        raise FailureBudgetExceeded(f"{failures} of {replicates} replicates failed")
    if samples.size == 0:
        raise ScenarioError("no replicate recovered the true support")
    if mismatches:
        logger.info(f"{mismatches} replicate(s) did not recover the support exactly")

    ks = stats.kstest(samples, "norm")
    return NormalityResult(
        ks_stat=float(ks.statistic),
        pvalue=float(ks.pvalue),
        critical_value=KS_CRITICAL_1PCT / math.sqrt(samples.size),
        samples=samples,
        gamma=gamma,
        sigma2=sigma2,
        gamma_power=gamma_power,
        replicates=replicates,
        support_mismatches=mismatches,
        failures=failures,
        u=u.tolist(),
    )
