"""Initial-data families. None of them is singled out by the theory; they
are convenient members of H^1 with finite first moments."""
import numpy as np
from numpy.polynomial import hermite

from ..errors import ConfigError
from ..spectral_core import ComplexField, l2_norm


def gaussian(grid, amplitude=1.0, width=1.0):
    return ComplexField(grid, amplitude * np.exp(-grid.r2 / (2.0 * width ** 2)) + 0j)


def radial_gaussian_2d(grid, amplitude=1.0, width=1.0):
    if grid.dim != 2:
        raise ConfigError("radial_gaussian_2d needs a 2-D grid")
    return gaussian(grid, amplitude, width)


def random_h11(grid, seed, amplitude=1.0, width=1.0, modes=6):
    """Random complex combination of the first ``modes`` Hermite functions per
    axis, scaled to ``||u|| = amplitude * ||gaussian||``."""
    rng = np.random.default_rng(seed)
    vals = np.ones(grid.shape, dtype=complex)
    for axis, c in enumerate(grid.coords):
        coef = rng.standard_normal(modes) + 1j * rng.standard_normal(modes)
        coef /= (1.0 + np.arange(modes)) ** 2
        s = c / width
        vals = vals * (hermite.hermval(s, coef.real) + 1j * hermite.hermval(s, coef.imag)) * np.exp(-s ** 2 / 2)
    f = ComplexField(grid, vals)
    ref = l2_norm(gaussian(grid, 1.0, width))
    return f * (amplitude * ref / l2_norm(f))


def build(grid, section, seed):
    if section.family == "gaussian":
        return gaussian(grid, section.amplitude, section.width)
    if section.family == "radial_gaussian_2d":
        return radial_gaussian_2d(grid, section.amplitude, section.width)
    if section.family == "random_h11":
        return random_h11(grid, seed, section.amplitude, section.width, section.modes)
    raise ConfigError(f"unknown initial-data family {section.family!r}")
