import math

import numpy as np
import pytest

from nsbesov.spectral import make_grid
from nsbesov.forcing import make_bump


@pytest.fixture(scope="session")
def grid2d():
    return make_grid(2, 64, 4 * math.pi)


@pytest.fixture(scope="session")
def grid2d_fine():
    return make_grid(2, 128, 4 * math.pi)


@pytest.fixture(scope="session")
def grid3d():
    return make_grid(3, 32, 4 * math.pi)


@pytest.fixture(scope="session")
def grid3d_main():
    return make_grid(3, 64, 4 * math.pi)


@pytest.fixture(scope="session")
def bump3d(grid3d):
    return make_bump(grid3d)


@pytest.fixture()
def rng():
    return np.random.default_rng(20250809)
