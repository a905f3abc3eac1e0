"""Shared fixtures for the test suite."""

from __future__ import annotations

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))   # make `import oracles` explicit

from tbdyn import ModelParams


@pytest.fixture
def default_params() -> ModelParams:
    """Baseline parameters exactly as shipped."""
    return ModelParams()


@pytest.fixture
def rng() -> np.random.Generator:
    """A fixed-seed generator so every test run sees the same draws."""
    return np.random.default_rng(20260825)


@pytest.fixture
def random_states(rng) -> np.ndarray:
    """Positive states spanning the dynamic range, plus boundary cases."""
    n = 200
    exponents = rng.uniform(-2.0, 8.0, size=(n, 4))
    states = 10.0 ** exponents
    edge = np.array([
        [5e5, 0.0, 0.0, 20.0],       # uninfected
        [5e5, 0.0, 0.0, 0.0],        # killing-term denominator = 0
        [0.0, 0.0, 0.0, 0.0],        # origin
        [5e5, 1.0, 2e8, 20.0],       # above carrying capacity
        [1e-30, 1e-30, 1e-30, 1e-30],
    ])
    return np.vstack([states, edge])
