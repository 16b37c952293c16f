"""Shared fixtures: canonical spectra and white/white systems."""

import numpy as np
import pytest

from analog_matching.core import spectrum
from analog_matching.core.waterfill import SystemSpec


def white_system(snr: float, rho: float = 1.0, variance: float = 1.0) -> SystemSpec:
    return SystemSpec.white(snr, rho, variance)


@pytest.fixture
def ar1_source():
    return spectrum.ar1(0.9)


@pytest.fixture
def two_level_noise():
    return spectrum.two_level(1.0, 3.0)


@pytest.fixture
def white_10db():
    return white_system(10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
