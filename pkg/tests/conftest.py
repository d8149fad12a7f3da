import numpy as np
import pytest

from calibrated_holonomy.calibration import CalibrationClass, PotentialSpec, admissible_from_spec
from calibrated_holonomy.geometry import GridSpec, build_grid


@pytest.fixture(scope="session")
def grid():
    return build_grid(GridSpec())


@pytest.fixture(scope="session")
def small_grid():
    return build_grid(GridSpec(12, 24, 6, 6))


@pytest.fixture(scope="session")
def seeded_torsion(grid):
    return admissible_from_spec(CalibrationClass(2.0, 3.0), PotentialSpec(1, 1, 0.5, 11), grid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def embedding(grid):
    theta, phi, x, y = grid.coordinates()
    st = np.sin(theta)
    return st * np.cos(phi), st * np.sin(phi), np.cos(theta), x, y
