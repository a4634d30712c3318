import numpy as np
import pytest

from youngflow.fbm import FbmSpec, generate_fbm, generate_one_sided


@pytest.fixture(scope="session")
def fbm07():
    """Two-sided fBm, H = 0.7, on [-4, 4] at 256 steps per unit."""
    return generate_fbm(FbmSpec(0.7, 4, 256, seed=11))


@pytest.fixture(scope="session")
def fbm_unit():
    """One-sided fBm, H = 0.75, on [0, 1] at 128 steps."""
    return generate_one_sided(FbmSpec(0.75, 1, 128, seed=3))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
