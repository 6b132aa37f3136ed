"""Shared fixtures: one default configuration and one detection model per session."""

import numpy as np
import pytest

from gqsim import ExperimentConfig, ModelCache


@pytest.fixture(scope="session")
def cfg():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def cache(cfg):
    return ModelCache(cfg)


@pytest.fixture(scope="session")
def model(cache, cfg):
    return cache.model(cfg.g0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260823)
