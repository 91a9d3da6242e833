import numpy as np
import pytest

from src.data.grids import QuantConfig
from src.data.states import gaussian_state, hermite_state


@pytest.fixture
def config():
    """Default numeric configuration, ħ = 1"""
    return QuantConfig()


@pytest.fixture
def ground_state(config):
    """(πħ)^{-1/4} e^{-q²/2ħ} on the default grid"""
    return hermite_state(0, config)


@pytest.fixture
def gaussian(config):
    """Displaced, boosted Gaussian that is not an eigenstate"""
    return gaussian_state(config, width=0.8, center=0.3, momentum=0.4)


@pytest.fixture
def rng():
    """Seeded generator for property checks"""
    return np.random.default_rng(12345)
