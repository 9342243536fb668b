import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from modscat.spectral_core import ComplexField, make_grid

settings.register_profile(
    "default", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid1():
    return make_grid(1, 1024, 64.0)


@pytest.fixture(scope="session")
def grid2():
    return make_grid(2, 128, 16.0)


def gaussian(grid, amp=1.0, width=1.0, k0=0.0):
    x = grid.coords[0]
    return ComplexField(grid, amp * np.exp(-grid.r2 / (2 * width ** 2) + 1j * k0 * x))


def rel(a, b):
    return float(np.linalg.norm(np.ravel(a - b)) / np.linalg.norm(np.ravel(b)))
