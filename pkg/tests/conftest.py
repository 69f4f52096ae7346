"""Shared fixtures."""

from __future__ import annotations

import numpy as np
import pytest

from riccati_nav.simulator import Environment, NoiseSpec, run_truth
from riccati_nav.trajectories import circle_trajectory, eight_trajectory


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def env() -> Environment:
    return Environment()


@pytest.fixture(scope="session")
def eight():
    return eight_trajectory()


@pytest.fixture(scope="session")
def circle():
    return circle_trajectory()


@pytest.fixture(scope="session")
def eight_samples():
    """Noise-free eight-trajectory samples, 10 s at 10 ms."""
    return run_truth(eight_trajectory(), Environment(), NoiseSpec(), 10.0, 0.01)
