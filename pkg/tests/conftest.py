"""Shared fixtures for mest tests."""

import numpy as np
import pytest

from mest import Dataset, LossSpec, ScenarioConfig, SolveOptions


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Tests never see M_EST_* overrides from the developer's shell."""
    for name in ("M_EST_SEED", "M_EST_PARALLEL", "M_EST_REPS"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def median_data():
    """p=1, X = ones, y = (1, 2, 9): the unpenalized LAD fit is the median 2."""
    return Dataset(np.ones((3, 1)), np.array([1.0, 2.0, 9.0]))


@pytest.fixture
def random_data(rng):
    """n=40, p=3 linear model with normal noise."""
    X = rng.standard_normal((40, 3))
    y = X @ np.array([1.5, 0.0, -2.0]) + rng.standard_normal(40)
    return Dataset(X, y)


@pytest.fixture
def lad():
    return LossSpec.lad()


@pytest.fixture
def opts():
    return SolveOptions()


@pytest.fixture
def small_scenario():
    """A cheap scenario: n=60 gives p=15, k=4."""
    return ScenarioConfig(n=60, seed=7, replicates=2)
