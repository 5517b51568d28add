"""
Tests for the Monte Carlo scenario runner.

Tests:
1. MethodSpec parsing and loss rules
2. Oracle rows on a small scenario
3. Determinism across worker counts
4. Failure budget accounting
5. Optional behaviour: holdout PE, data dumps, standardization
"""

from unittest.mock import patch

import numpy as np
import pytest

from mest import LossSpec, ScenarioConfig
from mest.exceptions import FailureBudgetExceeded, ScenarioError, SolverError
from mest.experiments import (
    DEFAULT_METHODS,
    MethodKind,
    MethodSpec,
    ScenarioRunner,
    TableRow,
    estimate,
    run_scenario,
)
from mest.experiments import runner as runner_module


# ============================================================================
# Methods
# ============================================================================


class TestMethodSpec:
    """Method names and the loss each method fits."""

    def test_parse_default_list(self):
        methods = MethodSpec.parse_list(DEFAULT_METHODS)
        assert [m.label for m in methods] == ["oracle", "lasso-ls", "lasso-lad", "lla"]

    def test_lasso_losses_are_fixed(self):
        methods = MethodSpec.parse_list("lasso-ls,lasso-lad,lla", loss=LossSpec.huber(1.345))
        assert methods[0].loss == LossSpec.least_squares()
        assert methods[1].loss == LossSpec.lad()
        assert methods[2].loss == LossSpec.huber(1.345)

    def test_oracle_and_lla_default_to_lad(self):
        assert MethodSpec(MethodKind.ORACLE).loss == LossSpec.lad()
        assert MethodSpec("lla").loss == LossSpec.lad()

    def test_conflicting_loss_rejected(self):
        with pytest.raises(ScenarioError):
            MethodSpec(MethodKind.LASSO_LS, LossSpec.lad())

    def test_unknown_name_rejected(self):
        with pytest.raises(ScenarioError):
            MethodSpec.parse_list("oracle,ridge")

    def test_empty_list_rejected(self):
        with pytest.raises(ScenarioError):
            MethodSpec.parse_list(" , ")

    def test_case_and_whitespace(self):
        assert MethodSpec.parse_list(" Oracle , LLA ")[1].kind == MethodKind.LLA


class TestRunnerValidation:
    """Constructor checks."""

    def test_duplicate_methods(self, small_scenario):
        with pytest.raises(ScenarioError):
            ScenarioRunner(small_scenario, MethodSpec.parse_list("lla,lla"))

    def test_no_methods(self, small_scenario):
        with pytest.raises(ScenarioError):
            ScenarioRunner(small_scenario, [])

    def test_zero_replicates(self):
        with pytest.raises(ScenarioError):
            ScenarioRunner(ScenarioConfig(n=60, replicates=0), MethodSpec.parse_list("oracle"))

    def test_oracle_needs_support(self):
        config = ScenarioConfig(n=60, beta_nonzero=(), replicates=1)
        with pytest.raises(ScenarioError):
            ScenarioRunner(config, MethodSpec.parse_list("oracle"))


# ============================================================================
# Rows
# ============================================================================


class TestOracleRows:
    """The oracle knows the support, so selection is perfect."""

    def test_oracle_row(self, small_scenario):
        rows = run_scenario(small_scenario, MethodSpec.parse_list("oracle"))
        assert len(rows) == 1
        row = rows[0]
        assert isinstance(row, TableRow)
        assert (row.n, row.p, row.k, row.m) == (60, 15, 4, 11)
        assert row.c == 11.0
        assert row.ic == 0.0
        assert row.cp == 1.0
        assert row.replicates == 2
        assert row.scenario == "normal-n60"
        assert row.ee > 0.0

    def test_estimate_is_zero_off_support(self, small_scenario):
        from mest import SolveOptions, gen_dataset

        data, _, support = gen_dataset(small_scenario, 0)
        beta = estimate(MethodSpec(MethodKind.ORACLE), data, support, SolveOptions())
        assert np.all(beta[4:] == 0.0)
        assert np.all(beta[:4] != 0.0)


class TestDeterminism:
    """Rows depend only on the seed, never on the schedule."""

    def test_rerun_is_identical(self, small_scenario):
        methods = MethodSpec.parse_list("oracle,lla")
        a = run_scenario(small_scenario, methods, grid_points=8)
        b = run_scenario(small_scenario, methods, grid_points=8)
        assert a == b

    def test_parallel_matches_serial(self, small_scenario):
        methods = MethodSpec.parse_list(DEFAULT_METHODS)
        serial = run_scenario(small_scenario, methods, parallel=1, grid_points=8)
        parallel = run_scenario(small_scenario, methods, parallel=2, grid_points=8)
        assert serial == parallel

    def test_seed_changes_rows(self):
        methods = MethodSpec.parse_list("oracle")
        a = run_scenario(ScenarioConfig(n=60, seed=1, replicates=2), methods)
        b = run_scenario(ScenarioConfig(n=60, seed=2, replicates=2), methods)
        assert a[0].ee != b[0].ee


# ============================================================================
# Failures
# ============================================================================


class TestFailureBudget:
    """More than 1% failed fits aborts the scenario."""

    def test_all_failures_abort(self, small_scenario):
        with patch(
            "mest.experiments.runner.estimate", side_effect=SolverError("did not converge")
        ):
            with pytest.raises(FailureBudgetExceeded):
                run_scenario(small_scenario, MethodSpec.parse_list("oracle"))

    def test_one_failure_in_a_hundred_is_tolerated(self):
        config = ScenarioConfig(n=60, seed=3, replicates=100)
        real_estimate = runner_module.estimate
        calls = {"n": 0}

        def flaky(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] == 1:
                raise SolverError("did not converge")
            return real_estimate(*args, **kwargs)

        with patch("mest.experiments.runner.estimate", side_effect=flaky):
            report = ScenarioRunner(config, MethodSpec.parse_list("oracle")).run()

        assert report.failures == 1
        assert report.total_fits == 100
        assert report.failure_rate == pytest.approx(0.01)
        assert report.rows[0].replicates == 99

    def test_two_failures_in_a_hundred_abort(self):
        config = ScenarioConfig(n=60, seed=3, replicates=100)
        real_estimate = runner_module.estimate
        calls = {"n": 0}

        def flaky(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] <= 2:
                raise SolverError("did not converge")
            return real_estimate(*args, **kwargs)

        with patch("mest.experiments.runner.estimate", side_effect=flaky):
            with pytest.raises(FailureBudgetExceeded):
                ScenarioRunner(config, MethodSpec.parse_list("oracle")).run()


# ============================================================================
# Options
# ============================================================================


class TestRunnerOptions:
    """holdout_pe, dump_dir and standardize."""

    def test_holdout_changes_pe_only(self, small_scenario):
        methods = MethodSpec.parse_list("oracle")
        in_sample = run_scenario(small_scenario, methods)[0]
        holdout = run_scenario(small_scenario, methods, holdout_pe=True)[0]
        assert holdout.ee == in_sample.ee
        assert holdout.c == in_sample.c
        assert holdout.pe != in_sample.pe

    def test_dump_dir_writes_each_replicate(self, small_scenario, tmp_path):
        run_scenario(small_scenario, MethodSpec.parse_list("oracle"), dump_dir=tmp_path)
        files = sorted(p.name for p in tmp_path.iterdir())
        assert files == ["normal-n60-rep0000.csv", "normal-n60-rep0001.csv"]

    def test_standardize_keeps_original_scale(self, small_scenario):
        """Coefficients are mapped back, so the oracle EE stays small."""
        rows = run_scenario(
            small_scenario, MethodSpec.parse_list("oracle"), standardize=True
        )
        assert rows[0].ee < 1.0
        assert rows[0].cp == 1.0
