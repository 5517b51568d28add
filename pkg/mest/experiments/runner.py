"""
Monte Carlo runner for the variable-selection study.

For every replicate of a scenario:
1. Generate (X, y) from the replicate's own seed substream
2. Fit every requested method (Oracle, LassoLS, LassoLAD, LLA)
3. Score EE, PE, C, IC

Records are aggregated per method into TableRows. Replicates fan out with
joblib; results are keyed by replicate index so the rows do not depend on
the execution schedule.
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np
from joblib import Parallel, delayed

from ..exceptions import FailureBudgetExceeded, MEstError, ScenarioError
from ..losses import LossSpec
from ..metrics import (
    ReplicateRecord,
    aggregate,
    estimation_error,
    prediction_error,
    selection_counts,
)
from ..simgen import ScenarioConfig, dump_dataset, gen_dataset
from ..solver import Dataset, SolveOptions, fit_oracle, fit_unpenalized
from ..tuning import (
    DEFAULT_GRID_POINTS,
    DEFAULT_MIN_RATIO,
    PenaltyMethod,
    default_grid,
    select_lambda,
)

logger = logging.getLogger(__name__)

FAILURE_BUDGET = 0.01


class MethodKind(Enum):
    ORACLE = "oracle"
    LASSO_LS = "lasso-ls"
    LASSO_LAD = "lasso-lad"
    LLA = "lla"


@dataclass(frozen=True)
class MethodSpec:
    """An estimation method and the loss it fits.

    LassoLS and LassoLAD fix their loss; Oracle and LLA default to LAD.
    """

    kind: MethodKind
    loss: Optional[LossSpec] = None

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", MethodSpec._kind_from_name(self.kind))
        if self.kind == MethodKind.LASSO_LS:
            fixed = LossSpec.least_squares()
        elif self.kind == MethodKind.LASSO_LAD:
            fixed = LossSpec.lad()
        else:
            fixed = None
        if fixed is not None:
            if self.loss is not None and self.loss != fixed:
                raise ScenarioError(f"{self.kind.value} always fits {fixed.label}")
            object.__setattr__(self, "loss", fixed)
        elif self.loss is None:
            object.__setattr__(self, "loss", LossSpec.lad())

    @staticmethod
    def _kind_from_name(name: str) -> MethodKind:
        try:
            return MethodKind(name.strip().lower())
        except ValueError:
            valid = [k.value for k in MethodKind]
            raise ScenarioError(f"Unknown method '{name}'. Must be one of: {valid}")

    @property
    def label(self) -> str:
        return self.kind.value

    @classmethod
    def parse_list(cls, text: str, loss: Optional[LossSpec] = None) -> List["MethodSpec"]:
        """'oracle,lla,lasso-ls' -> MethodSpecs; loss applies to Oracle and LLA."""
        methods = []
        for name in text.split(","):
            if not name.strip():
                continue
            kind = cls._kind_from_name(name)
            fits_own_loss = kind in (MethodKind.ORACLE, MethodKind.LLA)
            methods.append(cls(kind, loss if fits_own_loss else None))
        if not methods:
            raise ScenarioError("no methods given")
        return methods


DEFAULT_METHODS = "oracle,lasso-ls,lasso-lad,lla"


@dataclass(frozen=True)
class TableRow:
    """One row of a results table."""

    scenario: str
    n: int
    p: int
    k: int
    method: str
    ee: float
    pe: float
    c: float
    ic: float
    cp: float
    replicates: int

    @property
    def m(self) -> int:
        """Number of true zero coefficients."""
        return self.p - self.k


@dataclass
class ScenarioReport:
    """Rows of one scenario plus failure accounting."""

    config: ScenarioConfig
    rows: List[TableRow] = field(default_factory=list)
    failures: int = 0
    total_fits: int = 0

    @property
    def failure_rate(self) -> float:
        return self.failures / self.total_fits if self.total_fits else 0.0


def estimate(
    method: MethodSpec,
    data: Dataset,
    support: Sequence[int],
    opts: SolveOptions,
    grid_points: int = DEFAULT_GRID_POINTS,
    min_ratio: float = DEFAULT_MIN_RATIO,
    standardize: bool = False,
) -> np.ndarray:
    """Coefficient estimate of one method on one dataset.

    Raises:
        MEstError: If any fit raised or did not converge
    """
    scales = None
    if standardize:
        data, scales = data.standardized()

    if method.kind == MethodKind.ORACLE:
        beta = fit_oracle(data, method.loss, support, opts).raise_for_status().beta
    elif method.kind == MethodKind.LLA:
        pilot = fit_unpenalized(data, method.loss, opts).raise_for_status()
        grid = default_grid(data, method.loss, pilot.beta, grid_points, min_ratio)
        beta = select_lambda(
            data, method.loss, PenaltyMethod.LLA, grid=grid, opts=opts, pilot=pilot
        ).fit.beta
    else:
        grid = default_grid(data, method.loss, None, grid_points, min_ratio)
        beta = select_lambda(data, method.loss, PenaltyMethod.LASSO, grid=grid, opts=opts).fit.beta

    if scales is not None:
        beta = beta / scales
    return beta


def _run_replicate(
    config: ScenarioConfig,
    methods: Sequence[MethodSpec],
    opts: SolveOptions,
    index: int,
    grid_points: int,
    min_ratio: float,
    standardize: bool,
    holdout_pe: bool,
    dump_dir: Optional[Path],
) -> Tuple[int, Dict[str, Union[ReplicateRecord, str]]]:
    """Fit all methods on replicate `index`; failures come back as error strings."""
    data, beta0, support = gen_dataset(config, index)
    if dump_dir is not None:
        dump_dataset(data, Path(dump_dir) / f"{config.scenario_id}-rep{index:04d}.csv")
    pe_data = gen_dataset(config, index, holdout=True).data if holdout_pe else data

    outcomes: Dict[str, Union[ReplicateRecord, str]] = {}
    for method in methods:
        try:
            beta = estimate(method, data, support, opts, grid_points, min_ratio, standardize)
            c, ic = selection_counts(beta, support, opts.zero_tol)
            outcomes[method.label] = ReplicateRecord(
                ee=estimation_error(beta, beta0),
                pe=prediction_error(pe_data, beta),
                c=c,
                ic=ic,
            )
        except MEstError as e:
            outcomes[method.label] = f"{type(e).__name__}: {e}"
    return index, outcomes


class ScenarioRunner:
    """Runs all replicates of one scenario.

    Usage:
        runner = ScenarioRunner(ScenarioConfig(n=200, replicates=100), methods)
        report = runner.run()
        for row in report.rows:
            print(row.method, row.cp)
    """

    def __init__(
        self,
        config: ScenarioConfig,
        methods: Sequence[MethodSpec],
        opts: Optional[SolveOptions] = None,
        parallel: int = 1,
        grid_points: int = DEFAULT_GRID_POINTS,
        min_ratio: float = DEFAULT_MIN_RATIO,
        standardize: bool = False,
        holdout_pe: bool = False,
        dump_dir: Optional[Path] = None,
    ):
        if not methods:
            raise ScenarioError("at least one method is required")
        labels = [m.label for m in methods]
        if len(set(labels)) != len(labels):
            raise ScenarioError(f"duplicate methods: {labels}")
        if config.replicates < 1:
            raise ScenarioError("a scenario needs at least one replicate")
        if MethodKind.ORACLE in (m.kind for m in methods) and not config.support:
            raise ScenarioError("oracle method needs a nonempty true support")

        self.config = config
        self.methods = list(methods)
        self.opts = opts or SolveOptions()
        self.parallel = parallel
        self.grid_points = grid_points
        self.min_ratio = min_ratio
        self.standardize = standardize
        self.holdout_pe = holdout_pe
        self.dump_dir = dump_dir

    def run(self) -> ScenarioReport:
        """Run every replicate and aggregate per method.

        Raises:
            FailureBudgetExceeded: If more than 1% of the fits failed
        """
        config = self.config
        logger.info(
            f"scenario {config.scenario_id}: n={config.n} p={config.p} k={config.k}, "
            f"{config.replicates} replicates, {len(self.methods)} methods, "
            f"{self.parallel} worker(s)"
        )

        args = (
            self.grid_points,
            self.min_ratio,
            self.standardize,
            self.holdout_pe,
            self.dump_dir,
        )
        indices = range(config.replicates)
        if self.parallel == 1:
            results = [_run_replicate(config, self.methods, self.opts, i, *args) for i in indices]
        else:
            results = Parallel(n_jobs=self.parallel)(
                delayed(_run_replicate)(config, self.methods, self.opts, i, *args) for i in indices
            )
        results.sort(key=lambda item: item[0])

        report = ScenarioReport(config=config)
        records: Dict[str, List[ReplicateRecord]] = {m.label: [] for m in self.methods}
        for index, outcomes in results:
            for label, outcome in outcomes.items():
                report.total_fits += 1
                if isinstance(outcome, ReplicateRecord):
                    records[label].append(outcome)
                else:
                    report.failures += 1
                    logger.warning(f"{config.scenario_id} rep {index} {label} failed: {outcome}")

        if report.failures > FAILURE_BUDGET * report.total_fits:
            logger.error(
                f"{config.scenario_id}: {report.failures}/{report.total_fits} fits failed"
            )
            raise FailureBudgetExceeded(
                f"{report.failures} of {report.total_fits} fits failed in "
                f"{config.scenario_id} (budget {FAILURE_BUDGET:.0%})"
            )

        for method in self.methods:
            summary = aggregate(records[method.label], config.p, config.k)
            report.rows.append(
                TableRow(
                    scenario=config.scenario_id,
                    n=config.n,
                    p=config.p,
                    k=config.k,
                    method=method.label,
                    ee=summary.ee_median,
                    pe=summary.pe_median,
                    c=summary.c_mean,
                    ic=summary.ic_mean,
                    cp=summary.cp,
                    replicates=len(records[method.label]),
                )
            )

        logger.info(f"scenario {config.scenario_id} done ({report.failures} failed fits)")
        return report


def run_scenario(
    config: ScenarioConfig,
    methods: Sequence[MethodSpec],
    opts: Optional[SolveOptions] = None,
    parallel: int = 1,
    **kwargs,
) -> List[TableRow]:
    """Run a scenario and return one TableRow per method.

    Keyword arguments are forwarded to ScenarioRunner (grid_points,
    min_ratio, standardize, holdout_pe, dump_dir).
    """
    return ScenarioRunner(config, methods, opts, parallel, **kwargs).run().rows
