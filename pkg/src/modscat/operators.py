"""Free propagator, modulation, dilation, the vector field J and the W-profile.

Conventions (``n`` = lattice dimension):

    U(t) f        = F^{-1} exp(-i t |xi|^2 / 2) F f
    M(t) f (x)    = exp(i |x|^2 / (2t)) f(x)
    D(t) f (x)    = (i t)^{-n/2} f(x / t)
    J(t)          = x + i t grad = U(t) x U(-t) = M(t) (i t grad) M(-t)
    W(t)          = F M(t) U(-t) u(t)

so that ``U(t) = M(t) D(t) F M(t)`` and ``F M(t) U(-t) = D(t)^{-1} M(-t)``.
"""
import numpy as np
from scipy.signal import czt

from . import kernels
from .errors import ScheduleError, SingularTimeError, SpaceTagError, SupportError
from .spectral_core import (
    FREQUENCY,
    PHYSICAL,
    ComplexField,
    fft_centered,
    forward_fourier,
    ifft_centered,
    l2_norm,
    require_space,
)

LEAK_TOL = 1e-10


def _nonzero_time(t, what):
    if t == 0:
        raise SingularTimeError(f"{what} is singular at t = 0")


def free_propagate(f, t):
    """``U(t) f`` through the exact frequency multiplier."""
    require_space(f, PHYSICAL)
    if t == 0:
        return f
    g = f.grid
    fh = fft_centered(f.values, g) * np.exp(-0.5j * t * g.k2)
    return ComplexField(g, ifft_centered(fh, g), PHYSICAL)


def modulate(f, t):
    """``M(t) f``: multiplication by ``exp(i|x|^2/(2t))``."""
    _nonzero_time(t, "M(t)")
    require_space(f, PHYSICAL)
    return f.with_values(kernels.chirp(f.values, f.grid.r2, 0.5 / t))


def _lattice(grid, space):
    if space == PHYSICAL:
        return -grid.half_width, grid.dx
    if space == FREQUENCY:
        return -grid.xi_max, grid.dxi
    raise SpaceTagError(f"unknown space tag {space!r}")


def _resample_axis(vals, axis, src_origin, src_step, dst_origin, dst_step):
    """Trigonometric interpolant of ``vals`` along ``axis`` evaluated at ``dst_origin + m*dst_step``.

    Points outside the source window ``[src_origin, src_origin + N*src_step)``
    are set to zero (no periodic wrap).
    """
    n = vals.shape[axis]
    period = n * src_step
    k = np.arange(n) - n // 2
    shape = [1] * vals.ndim
    shape[axis] = n
    coef = np.fft.fftshift(np.fft.fft(vals, axis=axis), axes=axis) / n
    coef = coef * np.exp(2j * np.pi * k * (dst_origin - src_origin) / period).reshape(shape)
    out = czt(coef, m=n, w=np.exp(2j * np.pi * dst_step / period), a=1.0, axis=axis)
    m = np.arange(n)
    out = out * np.exp(-1j * np.pi * n * m * dst_step / period).reshape(shape)
    y = dst_origin + m * dst_step
    outside = (y < src_origin) | (y >= src_origin + period)
    if np.any(outside):
        out[(slice(None),) * axis + (outside,)] = 0.0
    return out


def _leak_fractions(f, scale, out_space):
    """Mass fractions lost to the window cut and to under-sampling when
    evaluating ``f(scale * y)`` on the ``out_space`` lattice."""
    g = f.grid
    a, h = _lattice(g, f.space)
    b, delta = _lattice(g, out_space)
    abs2 = np.abs(f.values) ** 2
    total = abs2.sum()
    if total == 0:
        return 0.0, 0.0
    # window: arguments reach only |y| <= |b| * |scale|
    reach = abs(b) * abs(scale)
    src = a + h * np.arange(g.points)
    keep = np.abs(src) <= reach
    mask = keep
    for _ in range(g.dim - 1):
        mask = np.multiply.outer(mask, keep)
    window_loss = float(abs2[~mask].sum() / total)
    # band: interpolant frequencies 2 pi k / P must satisfy |k| < P / (2 |scale| delta)
    period = g.points * h
    kmax = period / (2.0 * abs(scale) * delta)
    spec = np.abs(np.fft.fftshift(np.fft.fftn(f.values))) ** 2
    kk = np.abs(np.arange(g.points) - g.points // 2)
    band = kk < kmax
    bmask = band
    for _ in range(g.dim - 1):
        bmask = np.multiply.outer(bmask, band)
    band_loss = float(spec[~bmask].sum() / spec.sum())
    return window_loss, band_loss


def rescale(f, scale, prefactor=1.0, out_space=None, leak_tol=LEAK_TOL):
    """Sample ``prefactor * f(scale * y)`` on the ``out_space`` lattice.

    Band-limited interpolation (chirp-z evaluation of the trigonometric
    interpolant). Raises :class:`SupportError` when more than ``leak_tol`` of
    the mass falls off the window or outside the representable band.
    """
    out_space = f.space if out_space is None else out_space
    g = f.grid
    if leak_tol is not None:
        window_loss, band_loss = _leak_fractions(f, scale, out_space)
        if window_loss > leak_tol:
            raise SupportError(f"rescaled support exceeds the grid (lost fraction {window_loss:.3e})")
        if band_loss > leak_tol:
            raise SupportError(f"rescaled spectrum exceeds the band (lost fraction {band_loss:.3e})")
    a, h = _lattice(g, f.space)
    b, delta = _lattice(g, out_space)
    if scale == 1.0 and out_space == f.space:
        vals = np.array(f.values)
    else:
        vals = np.asarray(f.values)
        for axis in range(g.dim):
            vals = _resample_axis(vals, axis, a, h, scale * b, scale * delta)
    return ComplexField(g, prefactor * vals, out_space)


def dilate(f, t, out_space=PHYSICAL, leak_tol=LEAK_TOL):
    """``D(t) f (x) = (it)^{-n/2} f(x/t)``, output on the ``out_space`` lattice."""
    _nonzero_time(t, "D(t)")
    pref = complex(0.0, t) ** (-f.grid.dim / 2.0)
    return rescale(f, 1.0 / t, pref, out_space, leak_tol)


def dilate_inverse(f, t, out_space=FREQUENCY, leak_tol=LEAK_TOL):
    """``D(t)^{-1} f (x) = (it)^{n/2} f(x t)``."""
    _nonzero_time(t, "D(t)^-1")
    pref = complex(0.0, t) ** (f.grid.dim / 2.0)
    return rescale(f, t, pref, out_space, leak_tol)


def dollard_rhs(f, t, leak_tol=LEAK_TOL):
    """``M(t) D(t) F M(t) f``."""
    g = forward_fourier(modulate(f, t))
    return modulate(dilate(g, t, out_space=PHYSICAL, leak_tol=leak_tol), t)


def dollard_residual(f, t, leak_tol=LEAK_TOL):
    """``||U(t) f - M(t) D(t) F M(t) f|| / ||f||`` (0 for the zero field)."""
    nf = l2_norm(f)
    if nf == 0:
        return 0.0
    diff = free_propagate(f, t) - dollard_rhs(f, t, leak_tol)
    return l2_norm(diff) / nf


def _grad_components(f):
    g = f.grid
    fh = fft_centered(f.values, g)
    ks = np.meshgrid(*([g.xi] * g.dim), indexing="ij")
    return [ifft_centered(1j * k * fh, g) for k in ks]


def apply_J(f, t, route="factorized"):
    """Components of ``J(t) f = x f + i t grad f``, one field per axis.

    ``route="factorized"`` evaluates ``M(t) (i t grad) M(-t) f``;
    ``route="direct"`` differentiates ``f`` spectrally and adds ``x f``.
    At ``t = 0`` both reduce to ``x f``. The factorized route needs the chirp
    ``exp(-i|x|^2/(2t))`` resolved where ``f`` lives, i.e. ``|x|/t < xi_max``.
    """
    require_space(f, PHYSICAL)
    g = f.grid
    if t == 0:
        return tuple(f.with_values(c * f.values) for c in g.coords)
    if route == "direct":
        grads = _grad_components(f)
        return tuple(f.with_values(c * f.values + 1j * t * d) for c, d in zip(g.coords, grads))
    if route != "factorized":
        raise ValueError(f"unknown route {route!r}")
    h = modulate(f, -t)
    return tuple(modulate(h.with_values(1j * t * d), t) for d in _grad_components(h))


def J_norm(f, t):
    """``||J(t) f||_{L^2}`` evaluated as ``||x U(-t) f||`` (no chirp on the lattice)."""
    h = free_propagate(f, -t)
    return float(np.sqrt(f.grid.cell * np.sum(f.grid.r2 * np.abs(h.values) ** 2)))


def profile_W(u, t):
    """``W(t) = F M(t) U(-t) u(t)`` on the frequency lattice (``t >= 1``)."""
    if t < 1:
        raise ScheduleError(f"profile diagnostics start at t = 1, got t = {t}")
    return forward_fourier(modulate(free_propagate(u, -t), t))


def profile_W_dilation(u, t, leak_tol=LEAK_TOL):
    """Independent route ``D(t)^{-1} M(-t) u``, used only as an oracle."""
    if t < 1:
        raise ScheduleError(f"profile diagnostics start at t = 1, got t = {t}")
    return dilate_inverse(modulate(u, -t), t, out_space=FREQUENCY, leak_tol=leak_tol)
