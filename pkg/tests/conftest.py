import os
import sys
from pathlib import Path

import hypothesis
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from scripts.chains.finite_mcmc import FiniteDist, FiniteKernel
from scripts.models.presets import two_coin, two_coin_exact

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None, derandomize=True)
hypothesis.settings.register_profile("dev", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def two_state():
    """K = [[0.6, 0.4], [0.2, 0.8]] with its stationary law (1/3, 2/3)."""
    K = FiniteKernel.from_rows([[0.6, 0.4], [0.2, 0.8]])
    mu = FiniteDist(np.array([1 / 3, 2 / 3]))
    return K, mu


@pytest.fixture(scope="session")
def coin():
    return two_coin()


@pytest.fixture(scope="session")
def coin_exact():
    return two_coin_exact()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
