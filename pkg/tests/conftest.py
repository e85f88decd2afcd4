import numpy as np
import pytest

from nosignal.entangle import build_epr_state, gaussian_band
from nosignal.lattice import make_grid


@pytest.fixture
def grid64():
    return make_grid(8.0, 64)


@pytest.fixture
def epr64(grid64):
    return build_epr_state(gaussian_band(grid64, 0.5, 1.5))


@pytest.fixture
def rng():
    return np.random.default_rng(20051107)


def tv_density(a, b, weight):
    return 0.5 * float(np.sum(np.abs(np.asarray(a) - np.asarray(b)))) * weight
