"""Tests for the asymptotic-normality diagnostic."""

import math

import numpy as np
import pytest

from mest import LossSpec, ScenarioConfig
from mest.exceptions import ScenarioError, SpecError
from mest.experiments import NormalityResult, normality_check, sn_squared
from mest.experiments.normality import KS_CRITICAL_1PCT


class TestSnSquared:
    def test_power_one(self):
        assert sn_squared(np.eye(1), [1.0], gamma=0.8, sigma2=1.0) == pytest.approx(1.25)

    def test_power_two(self):
        value = sn_squared(np.eye(1), [1.0], gamma=0.8, sigma2=1.0, gamma_power=2)
        assert value == pytest.approx(1.5625)

    def test_quadratic_form(self):
        d11 = np.array([[2.0, 0.0], [0.0, 4.0]])
        u = [0.6, 0.8]
        expected = 0.36 / 2.0 + 0.64 / 4.0
        assert sn_squared(d11, u, gamma=1.0, sigma2=1.0) == pytest.approx(expected)

    def test_shape_mismatch(self):
        with pytest.raises(SpecError):
            sn_squared(np.eye(2), [1.0], gamma=1.0, sigma2=1.0)

    def test_bad_power(self):
        with pytest.raises(SpecError):
            sn_squared(np.eye(1), [1.0], gamma=1.0, sigma2=1.0, gamma_power=3)


class TestNormalityValidation:
    """Arguments rejected before any fitting."""

    def test_zero_replicates(self):
        with pytest.raises(ScenarioError):
            normality_check(ScenarioConfig(n=100), [1, 0, 0, 0], replicates=0)

    def test_wrong_length(self):
        with pytest.raises(ScenarioError):
            normality_check(ScenarioConfig(n=100, replicates=1), [1, 0, 0])

    def test_norm_above_one(self):
        with pytest.raises(ScenarioError):
            normality_check(ScenarioConfig(n=100, replicates=1), [1, 1, 0, 0])

    def test_zero_direction(self):
        with pytest.raises(ScenarioError):
            normality_check(ScenarioConfig(n=100, replicates=1), [0, 0, 0, 0])


class TestNormalityRun:
    """A short run and the result object."""

    def test_accounting(self):
        config = ScenarioConfig(n=200, seed=11, replicates=5)
        result = normality_check(config, [1, 0, 0, 0])
        assert isinstance(result, NormalityResult)
        assert result.samples.size + result.support_mismatches + result.failures == 5
        assert result.samples.size >= 1
        assert np.all(np.isfinite(result.samples))
        expected = KS_CRITICAL_1PCT / math.sqrt(result.samples.size)
        assert result.critical_value == pytest.approx(expected)
        assert 0.0 <= result.pvalue <= 1.0
        assert result.u == [1.0, 0.0, 0.0, 0.0]
        assert result.gamma == pytest.approx(2.0 / math.sqrt(2.0 * math.pi), rel=1e-6)
        assert result.sigma2 == pytest.approx(1.0, rel=1e-6)

    def test_summary_mentions_verdict(self):
        result = NormalityResult(
            ks_stat=0.01,
            pvalue=0.9,
            critical_value=0.05,
            samples=np.zeros(3),
            gamma=0.8,
            sigma2=1.0,
            gamma_power=1,
            replicates=3,
        )
        assert result.passed
        assert "[PASS]" in result.summary()
        assert "samples=3/3" in result.summary()


@pytest.mark.slow
class TestNormalityAcceptance:
    """n=700 with normal errors: the statistic is close to N(0, 1).

    The sandwich variance (gamma squared) is the one that standardizes LAD.
    """

    def test_passes_at_one_percent(self):
        config = ScenarioConfig(n=700, seed=2024, replicates=500)
        result = normality_check(
            config, [1, 0, 0, 0], loss=LossSpec.lad(), gamma_power=2, parallel=-1
        )
        assert result.gamma_power == 2
        assert result.passed, result.summary()
