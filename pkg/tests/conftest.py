import numpy as np
import pytest

from dsa_counts import ModelParams


@pytest.fixture
def std_params():
    return ModelParams(2.0, 1.0, 0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
