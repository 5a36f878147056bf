"""Shared fixtures and hypothesis profiles."""

import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("fast", max_examples=25, deadline=None)
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture(autouse=True)
def numpy_errors():
    with np.errstate(over="raise"):
        yield


@pytest.fixture
def no_workers_env(monkeypatch):
    monkeypatch.delenv("SWARM_SACRIFICE_WORKERS", raising=False)
