"""Tests for synthetic data generation."""

import numpy as np
import pytest
from scipy import stats

from mest import ErrorDist, ScenarioConfig, ar1_covariance, dimension_for, gen_dataset, gen_design
from mest import gen_errors
from mest.exceptions import ScenarioError
from mest.simgen import dump_dataset, splitmix64, substream_seed


class TestSeeding:
    """Substream seed derivation."""

    def test_splitmix64_reference_value(self):
        """First output of a splitmix64 generator seeded with 0."""
        assert splitmix64(0) == 0xE220A8397B1DCDAF

    def test_substreams_differ(self):
        seeds = {substream_seed(42, i) for i in range(1000)}
        assert len(seeds) == 1000

    def test_substream_is_xor(self):
        assert substream_seed(0, 5) == splitmix64(5)
        assert substream_seed(7, 5) == 7 ^ splitmix64(5)


class TestCovariance:
    """AR(1) covariance."""

    def test_two_by_two(self):
        np.testing.assert_array_equal(ar1_covariance(2, 0.5), [[1.0, 0.5], [0.5, 1.0]])

    def test_zero_rho_is_identity(self):
        np.testing.assert_array_equal(ar1_covariance(3, 0.0), np.eye(3))

    def test_corner_entry(self):
        assert ar1_covariance(3, 0.5)[0, 2] == pytest.approx(0.25)

    def test_invalid_rho(self):
        with pytest.raises(ScenarioError):
            ar1_covariance(3, 1.0)


class TestDesign:
    """Gaussian design rows."""

    def test_sample_covariance(self):
        X = gen_design(20000, 3, 0.5, seed=1)
        np.testing.assert_allclose(np.cov(X, rowvar=False), ar1_covariance(3, 0.5), atol=0.02)

    def test_uncorrelated_columns(self):
        X = gen_design(20000, 3, 0.0, seed=2)
        corr = np.corrcoef(X, rowvar=False)
        assert np.max(np.abs(corr - np.eye(3))) < 0.02

    def test_deterministic(self):
        np.testing.assert_array_equal(gen_design(50, 4, 0.5, 9), gen_design(50, 4, 0.5, 9))


class TestErrors:
    """Error laws."""

    @pytest.mark.parametrize(
        "name,variance,tol", [("normal", 1.0, 0.01), ("t5", 5 / 3, 0.02), ("mixture", 1.8, 0.02)]
    )
    def test_variance(self, name, variance, tol):
        eps = gen_errors(1_000_000, ErrorDist.from_name(name), seed=3)
        assert np.var(eps) == pytest.approx(variance, abs=tol)
        assert ErrorDist.from_name(name).variance == pytest.approx(variance)

    def test_normal_draws_pass_ks(self):
        eps = gen_errors(100_000, ErrorDist(), seed=4)
        assert stats.kstest(eps, "norm").statistic < 1.63 / np.sqrt(eps.size)

    def test_t5_matches_cdf(self):
        eps = gen_errors(100_000, ErrorDist.from_name("t5"), seed=5)
        assert stats.kstest(eps, lambda x: stats.t.cdf(x, 5)).statistic < 1.63 / np.sqrt(eps.size)

    def test_deterministic(self):
        dist = ErrorDist.from_name("mixture")
        np.testing.assert_array_equal(gen_errors(100, dist, 1), gen_errors(100, dist, 1))

    def test_unknown_name(self):
        with pytest.raises(ScenarioError):
            ErrorDist.from_name("cauchy")


class TestScenarioConfig:
    """Scenario validation and defaults."""

    @pytest.mark.parametrize("n,p", [(200, 28), (500, 45), (700, 53)])
    def test_dimension_rule(self, n, p):
        assert dimension_for(n) == p
        assert ScenarioConfig(n=n).p == p

    def test_defaults(self):
        config = ScenarioConfig(n=200)
        assert config.k == 4
        assert config.m == 24
        assert config.rho == 0.5
        assert config.replicates == 500
        assert config.support == [0, 1, 2, 3]
        assert config.scenario_id == "normal-n200"
        np.testing.assert_array_equal(config.beta0[:4], [-2.0, 2.5, 3.0, -1.0])
        assert np.all(config.beta0[4:] == 0.0)

    def test_dist_by_name(self):
        assert ScenarioConfig(n=50, dist="t5").dist == ErrorDist.from_name("t5")

    def test_invalid(self):
        with pytest.raises(ScenarioError):
            ScenarioConfig(n=0)
        with pytest.raises(ScenarioError):
            ScenarioConfig(n=50, p=3)
        with pytest.raises(ScenarioError):
            ScenarioConfig(n=50, rho=-1.0)

    def test_zero_signal_rejected(self):
        with pytest.raises(ScenarioError, match="nonzero"):
            ScenarioConfig(n=50, beta_nonzero=(1.0, 0.0, -2.0))

    def test_k_counts_support(self):
        config = ScenarioConfig(n=50, beta_nonzero=(1.0, -2.0))
        assert config.k == len(config.support) == 2
        assert ScenarioConfig(n=50, beta_nonzero=()).k == 0


class TestGenDataset:
    """Replicate generation."""

    def test_shapes_and_support(self, small_scenario):
        data, beta0, support = gen_dataset(small_scenario, 0)
        assert (data.n, data.p) == (60, 15)
        assert support == [0, 1, 2, 3]
        assert beta0.size == 15

    def test_noise_free(self):
        config = ScenarioConfig(n=30, noise_free=True)
        data, beta0, _ = gen_dataset(config, 3)
        np.testing.assert_array_equal(data.y, data.X @ beta0)

    def test_bit_for_bit_reproducible(self, small_scenario):
        a = gen_dataset(small_scenario, 1).data
        b = gen_dataset(small_scenario, 1).data
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.y, b.y)

    def test_replicates_independent(self, small_scenario):
        a = gen_dataset(small_scenario, 0).data
        b = gen_dataset(small_scenario, 1).data
        assert not np.array_equal(a.X, b.X)

    def test_holdout_is_fresh_draw(self, small_scenario):
        a = gen_dataset(small_scenario, 0).data
        b = gen_dataset(small_scenario, 0, holdout=True).data
        assert not np.array_equal(a.y, b.y)

    def test_dump_dataset(self, small_scenario, tmp_path):
        data = gen_dataset(small_scenario, 0).data
        path = dump_dataset(data, tmp_path / "rep.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join([f"x{j}" for j in range(1, 16)] + ["y"])
        assert len(lines) == 61
        loaded = np.loadtxt(path, delimiter=",", skiprows=1)
        np.testing.assert_allclose(loaded[:, -1], data.y)
