"""Uniform periodic lattices, the unitary continuum Fourier transform, and norms.

Physical samples sit at ``x_j = -L + j*dx`` and frequency samples at
``xi_k = -pi/dx + k*dxi`` (both centred, ``j, k = 0..N-1``).  The transform
is the Riemann-sum discretisation of

    F f(xi) = (2 pi)^(-n/2) \\int exp(-i x.xi) f(x) dx,

which is exactly unitary between the two lattices with the weights
``dx**n`` and ``dxi**n``.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from ._accel import thread_cap
from .errors import GridError, SpaceTagError

PHYSICAL = "physical"
FREQUENCY = "frequency"
_SPACES = (PHYSICAL, FREQUENCY)


@dataclass(frozen=True)
class Grid:
    """Lattice ``[-L, L)^dim`` with ``points`` samples per axis."""

    dim: int
    points: int
    half_width: float

    def __post_init__(self):
        if self.dim not in (1, 2) or isinstance(self.dim, bool):
            raise GridError(f"dim must be 1 or 2, got {self.dim!r}")
        n = self.points
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 16 or n & (n - 1):
            raise GridError(f"points per dim must be a power of two >= 16, got {n!r}")
        if not np.isfinite(self.half_width) or self.half_width <= 0:
            raise GridError(f"half_width must be positive, got {self.half_width!r}")
        object.__setattr__(self, "points", int(n))
        object.__setattr__(self, "half_width", float(self.half_width))

    @property
    def shape(self):
        return (self.points,) * self.dim

    @property
    def size(self):
        return self.points ** self.dim

    @property
    def dx(self):
        return 2.0 * self.half_width / self.points

    @property
    def dxi(self):
        return np.pi / self.half_width

    @property
    def xi_max(self):
        """Nyquist frequency ``pi/dx``; the frequency lattice is ``[-xi_max, xi_max)``."""
        return np.pi / self.dx

    @property
    def cell(self):
        return self.dx ** self.dim

    @property
    def dual_cell(self):
        return self.dxi ** self.dim

    @cached_property
    def x(self):
        return -self.half_width + self.dx * np.arange(self.points)

    @cached_property
    def xi(self):
        return -self.xi_max + self.dxi * np.arange(self.points)

    @cached_property
    def coords(self):
        """Per-axis coordinate arrays broadcast to ``shape`` (``ij`` indexing)."""
        return np.meshgrid(*([self.x] * self.dim), indexing="ij")

    @cached_property
    def r2(self):
        return sum(c * c for c in self.coords)

    @cached_property
    def k2(self):
        ks = np.meshgrid(*([self.xi] * self.dim), indexing="ij")
        return sum(k * k for k in ks)

    @cached_property
    def fourier_scale(self):
        return (self.dx / np.sqrt(2.0 * np.pi)) ** self.dim


def make_grid(dim, points_per_dim, half_width):
    return Grid(dim, points_per_dim, half_width)


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex samples on a :class:`Grid`, tagged physical or frequency.

    ``values`` is stored as a read-only view; build new fields rather than
    mutating.
    """

    grid: Grid
    values: np.ndarray
    space: str = PHYSICAL

    def __post_init__(self):
        if self.space not in _SPACES:
            raise SpaceTagError(f"unknown space tag {self.space!r}")
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.size == self.grid.size and vals.shape != self.grid.shape:
            vals = vals.reshape(self.grid.shape)
        if vals.shape != self.grid.shape:
            raise GridError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite samples")
        view = vals.view()
        view.flags.writeable = False
        object.__setattr__(self, "values", view)

    @classmethod
    def zeros(cls, grid, space=PHYSICAL):
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128), space)

    def with_values(self, values, space=None):
        return ComplexField(self.grid, values, self.space if space is None else space)

    def _check_compatible(self, other):
        if not isinstance(other, ComplexField):
            return NotImplemented
        if other.grid != self.grid:
            raise GridError("fields live on different grids")
        if other.space != self.space:
            raise SpaceTagError("fields carry different space tags")
        return None

    def __add__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar):
        if isinstance(scalar, ComplexField):
            return NotImplemented
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


def require_space(f, space):
    if f.space != space:
        raise SpaceTagError(f"expected a {space} field, got {f.space}")


def _axes(grid):
    return tuple(range(grid.dim))


def fft_centered(values, grid):
    """Continuum-normalised transform of centred physical samples (raw arrays)."""
    ax = _axes(grid)
    out = sfft.fftn(sfft.ifftshift(values, axes=ax), axes=ax, workers=thread_cap())
    return sfft.fftshift(out, axes=ax) * grid.fourier_scale


def ifft_centered(values, grid):
    ax = _axes(grid)
    out = sfft.ifftn(sfft.ifftshift(values, axes=ax), axes=ax, workers=thread_cap())
    return sfft.fftshift(out, axes=ax) / grid.fourier_scale


def forward_fourier(f):
    require_space(f, PHYSICAL)
    return ComplexField(f.grid, fft_centered(f.values, f.grid), FREQUENCY)


def inverse_fourier(f):
    require_space(f, FREQUENCY)
    return ComplexField(f.grid, ifft_centered(f.values, f.grid), PHYSICAL)


def _weight(f):
    return f.grid.cell if f.space == PHYSICAL else f.grid.dual_cell


def l2_norm(f):
    v = f.values
    return float(np.sqrt(_weight(f) * np.sum(v.real * v.real + v.imag * v.imag)))


def lp_norm(f, p):
    if p == np.inf:
        return linf_norm(f)
    if p <= 0:
        raise ValueError("p must be positive")
    return float((_weight(f) * np.sum(np.abs(f.values) ** p)) ** (1.0 / p))


def linf_norm(f):
    return float(np.max(np.abs(f.values))) if f.values.size else 0.0


def inner(f, g):
    """``(f|g) = \\int f conj(g)`` on a common lattice (same space tag)."""
    if f.grid != g.grid:
        raise GridError("fields live on different grids")
    if f.space != g.space:
        raise SpaceTagError("fields carry different space tags")
    return complex(_weight(f) * np.vdot(g.values, f.values))


def grad_l2_norm(f):
    """``||grad f||_{L^2}`` through the multiplier ``|xi|``."""
    require_space(f, PHYSICAL)
    fh = fft_centered(f.values, f.grid)
    return float(np.sqrt(f.grid.dual_cell * np.sum(f.grid.k2 * np.abs(fh) ** 2)))


@dataclass(frozen=True)
class NormReport:
    l2: float
    linf: float
    grad_l2: float
    lp: dict = field(default_factory=dict)
    weighted: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = [self.l2, self.linf, self.grad_l2, *self.lp.values(), *self.weighted.values()]
        if any(v < 0 for v in vals):
            raise ValueError("norms must be nonnegative")


def norms(f, ps=None, sigmas=(1.0,)):
    """Quadrature values of the norms used throughout.

    ``ps`` defaults to the critical exponent ``2 + 2/dim``; ``weighted[s]`` is
    ``||<x>^s f||_{L^2}``.
    """
    require_space(f, PHYSICAL)
    if ps is None:
        ps = (2.0 + 2.0 / f.grid.dim,)
    r2 = f.grid.r2
    abs2 = np.abs(f.values) ** 2
    weighted = {
        float(s): float(np.sqrt(f.grid.cell * np.sum((1.0 + r2) ** s * abs2))) for s in sigmas
    }
    return NormReport(
        l2=l2_norm(f),
        linf=linf_norm(f),
        grad_l2=grad_l2_norm(f),
        lp={float(p): lp_norm(f, p) for p in ps},
        weighted=weighted,
    )


def weighted_sobolev_norm(f, s, sigma):
    """Norm on ``H^s \\cap F(H^sigma)`` taken as the sum of the two pieces.

    ``||<xi>^s F f||_{L^2} + ||<x>^sigma f||_{L^2}``; with ``s = sigma = 0``
    this is ``2 ||f||_{L^2}``.
    """
    require_space(f, PHYSICAL)
    if s < 0 or sigma < 0:
        raise ValueError("s and sigma must be nonnegative")
    g = f.grid
    fh = fft_centered(f.values, g)
    sob = np.sqrt(g.dual_cell * np.sum((1.0 + g.k2) ** s * np.abs(fh) ** 2))
    wt = np.sqrt(g.cell * np.sum((1.0 + g.r2) ** sigma * np.abs(f.values) ** 2))
    return float(sob + wt)
