import numpy as np
import pytest

from ofdm import default_allocation


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def plan():
    return default_allocation()
