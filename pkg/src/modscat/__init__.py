"""Spectral simulator and diagnostics for long-range (modified) scattering of
the defocusing critical NLS  i u_t + (1/2) Lap u = |u|^{2/n} u."""
from .spectral_core import Grid, ComplexField, make_grid, forward_fourier, inverse_fourier

__version__ = "0.1.0"

__all__ = ["Grid", "ComplexField", "make_grid", "forward_fourier", "inverse_fourier"]
