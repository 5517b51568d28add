"""
Tests for the mest command line.

Tests:
1. simulate end to end on a tiny scenario; same seed gives byte-identical CSV for any worker count
2. Usage errors exit with 1
3. Failure budget exits with 2
4. M_EST_SEED overrides --seed
5. normality argument handling
"""

from unittest.mock import patch

import numpy as np
import pytest
from click.testing import CliRunner

from mest.cli import EXIT_FAILURE_BUDGET, EXIT_USAGE, cli
from mest.exceptions import FailureBudgetExceeded
from mest.experiments import NormalityResult, TableRow, parse_report


@pytest.fixture
def runner():
    return CliRunner()


def fake_rows(scenario):
    return [
        TableRow(
            scenario=scenario.scenario_id,
            n=scenario.n,
            p=scenario.p,
            k=scenario.k,
            method="oracle",
            ee=0.1,
            pe=1.0,
            c=float(scenario.m),
            ic=0.0,
            cp=1.0,
            replicates=scenario.replicates,
        )
    ]


def fake_result():
    return NormalityResult(
        ks_stat=0.02,
        pvalue=0.8,
        critical_value=0.0729,
        samples=np.array([0.1, -0.3]),
        gamma=0.79788,
        sigma2=1.0,
        gamma_power=2,
        replicates=2,
        u=[0.0, 1.0, 0.0, 0.0],
    )


# ============================================================================
# simulate
# ============================================================================


class TestSimulate:
    """mest simulate."""

    def test_oracle_end_to_end(self, runner, tmp_path):
        out = tmp_path / "table.csv"
        result = runner.invoke(
            cli, ["simulate", "--n", "40", "--reps", "1", "--methods", "oracle", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        rows = parse_report(out.read_text())
        assert len(rows) == 1
        row = rows[0]
        assert (row.n, row.p, row.k) == (40, 13, 4)
        assert row.c == 9.0
        assert row.ic == 0.0
        assert row.cp == 1.0

    def test_same_seed_writes_identical_csv(self, runner, tmp_path):
        args = ["simulate", "--n", "40", "--reps", "2", "--seed", "3", "--methods", "oracle,lla"]
        first, second = tmp_path / "A.csv", tmp_path / "B.csv"
        for out in (first, second):
            result = runner.invoke(cli, [*args, "--out", str(out)])
            assert result.exit_code == 0, result.output
        assert first.read_bytes() == second.read_bytes()
        assert [row.method for row in parse_report(first.read_text())] == ["oracle", "lla"]

    def test_worker_count_does_not_change_csv(self, runner, tmp_path):
        args = ["simulate", "--n", "40", "--reps", "2", "--seed", "3", "--methods", "oracle,lla"]
        serial, pooled = tmp_path / "serial.csv", tmp_path / "pooled.csv"
        result = runner.invoke(cli, [*args, "--parallel", "1", "--out", str(serial)])
        assert result.exit_code == 0, result.output
        result = runner.invoke(cli, [*args, "--parallel", "2", "--out", str(pooled)])
        assert result.exit_code == 0, result.output
        assert serial.read_bytes() == pooled.read_bytes()

    def test_several_sample_sizes(self, runner):
        with patch("mest.cli.run_scenario", side_effect=lambda s, *a, **kw: fake_rows(s)) as mock:
            result = runner.invoke(cli, ["simulate", "--n", "200", "--n", "500", "--reps", "3"])
        assert result.exit_code == 0, result.output
        assert [call.args[0].n for call in mock.call_args_list] == [200, 500]
        assert "normal-n200,200,28,4,oracle" in result.output
        assert "normal-n500,500,45,4,oracle" in result.output

    def test_markdown_format(self, runner):
        with patch("mest.cli.run_scenario", side_effect=lambda s, *a, **kw: fake_rows(s)):
            result = runner.invoke(cli, ["simulate", "--format", "markdown"])
        assert result.exit_code == 0, result.output
        assert "### normal-n200 (n=200, p=28, m=24)" in result.output

    def test_flags_forwarded(self, runner, tmp_path):
        with patch("mest.cli.run_scenario", side_effect=lambda s, *a, **kw: fake_rows(s)) as mock:
            result = runner.invoke(
                cli,
                [
                    "simulate",
                    "--dist", "t5",
                    "--parallel", "3",
                    "--grid-points", "10",
                    "--holdout-pe",
                    "--dump-data", str(tmp_path),
                ],
            )
        assert result.exit_code == 0, result.output
        call = mock.call_args
        assert call.args[0].dist.name == "t5"
        assert call.kwargs["parallel"] == 3
        assert call.kwargs["grid_points"] == 10
        assert call.kwargs["holdout_pe"] is True
        assert call.kwargs["standardize"] is False
        assert call.kwargs["dump_dir"] == tmp_path


class TestExitCodes:
    """0 success, 1 usage errors, 2 failure budget."""

    @pytest.mark.parametrize(
        "args",
        [
            ["simulate", "--format", "latex"],
            ["simulate", "--dist", "cauchy"],
            ["simulate", "--methods", "ridge"],
            ["simulate", "--loss", "huber:-1"],
            ["simulate", "--reps", "0"],
            ["no-such-command"],
        ],
    )
    def test_usage_errors(self, runner, args):
        result = runner.invoke(cli, args)
        assert result.exit_code == EXIT_USAGE

    def test_failure_budget(self, runner):
        with patch("mest.cli.run_scenario", side_effect=FailureBudgetExceeded("3 of 100 failed")):
            result = runner.invoke(cli, ["simulate", "--reps", "100"])
        assert result.exit_code == EXIT_FAILURE_BUDGET
        assert "3 of 100 failed" in result.output

    def test_missing_config_file(self, runner, tmp_path):
        result = runner.invoke(cli, ["simulate", "--config", str(tmp_path / "missing.yaml")])
        assert result.exit_code == EXIT_USAGE


class TestSeeding:
    """M_EST_SEED wins over --seed and the config file."""

    def test_env_overrides_flag(self, runner):
        with patch("mest.cli.run_scenario", side_effect=lambda s, *a, **kw: fake_rows(s)) as mock:
            result = runner.invoke(
                cli, ["simulate", "--seed", "5"], env={"M_EST_SEED": "99"}
            )
        assert result.exit_code == 0, result.output
        assert mock.call_args.args[0].seed == 99

    def test_flag_overrides_config(self, runner, tmp_path):
        path = tmp_path / "study.yaml"
        path.write_text("simulation:\n  seed: 3\n  replicates: 7\n")
        with patch("mest.cli.run_scenario", side_effect=lambda s, *a, **kw: fake_rows(s)) as mock:
            result = runner.invoke(cli, ["simulate", "--config", str(path), "--seed", "5"])
        assert result.exit_code == 0, result.output
        scenario = mock.call_args.args[0]
        assert scenario.seed == 5
        assert scenario.replicates == 7


# ============================================================================
# normality
# ============================================================================


class TestNormality:
    """mest normality."""

    def test_direction_and_power(self, runner, tmp_path):
        samples = tmp_path / "samples.csv"
        with patch("mest.cli.normality_check", return_value=fake_result()) as mock:
            result = runner.invoke(
                cli,
                [
                    "normality",
                    "--n", "100",
                    "--reps", "2",
                    "--coord", "2",
                    "--sn-gamma-power", "2",
                    "--samples-out", str(samples),
                ],
            )
        assert result.exit_code == 0, result.output
        call = mock.call_args
        assert call.args[0].n == 100
        assert call.args[1] == [0.0, 1.0, 0.0, 0.0]
        assert call.kwargs["gamma_power"] == 2
        assert samples.read_text().splitlines()[0] == "statistic"
        assert "gamma_power=2" in result.output

    def test_coord_out_of_range(self, runner):
        with patch("mest.cli.normality_check") as mock:
            result = runner.invoke(cli, ["normality", "--coord", "5"])
        assert result.exit_code == EXIT_USAGE
        mock.assert_not_called()

    def test_bad_power(self, runner):
        result = runner.invoke(cli, ["normality", "--sn-gamma-power", "3"])
        assert result.exit_code == EXIT_USAGE
