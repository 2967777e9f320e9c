# Native and installed modules
import numpy as np
import pytest


@pytest.fixture(autouse=True)
def testing_env(monkeypatch):
    monkeypatch.setenv("WORKBENCH_ENV", "testing")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
