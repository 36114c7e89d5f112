import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(np.random.SeedSequence(12345))


@pytest.fixture
def small_instance(rng):
    """A small non-degenerate (features, ground truth) pair."""
    x = rng.standard_normal((40, 5))
    x_b = x[:, :2] * np.array([3.0, 1.0])
    return x, x_b
