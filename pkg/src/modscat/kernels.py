"""Pointwise kernels on the solver hot path.

Every kernel exists twice: an ``@njit`` loop and a vectorised numpy twin.
The module-level names dispatch to one of them according to
``modscat._accel.USE_NUMBA``; both sets stay importable for benchmarking
and cross-checking (see ``benchmarks/bench_kernels.py``).
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit


# --- numpy twins ----------------------------------------------------------

def _gauge_rotate_np(u, scale, inv_n, saturated):
    r2 = u.real * u.real + u.imag * u.imag
    if saturated:
        g = np.expm1(inv_n * np.log1p(r2))
    else:
        g = r2 ** inv_n
    u *= np.exp(-1j * (scale * g))
    return u


def _phase_integrand_np(w, amp2_scale, inv_n, saturated):
    r2 = amp2_scale * (w.real * w.real + w.imag * w.imag)
    if saturated:
        return np.expm1(inv_n * np.log1p(r2))
    return r2 ** inv_n


def _chirp_np(f, r2, coef):
    return f * np.exp(1j * (coef * r2))


def _shell_sums_np(abs2, idx, nbins):
    return np.bincount(idx.reshape(-1), weights=abs2.reshape(-1), minlength=nbins)


# --- numba loops ----------------------------------------------------------

@njit(cache=True, inline="always")
def _g_nb(r2, inv_n, saturated):
    # numpy fast-paths the exponents 1 and 1/2; a generic pow here costs ~5x
    if saturated:
        return math.expm1(inv_n * math.log1p(r2))
    if inv_n == 1.0:
        return r2
    if inv_n == 0.5:
        return math.sqrt(r2)
    return r2 ** inv_n


@njit(cache=True)
def _gauge_rotate_nb(u, scale, inv_n, saturated):
    flat = u.reshape(-1)
    for i in range(flat.size):
        z = flat[i]
        th = -scale * _g_nb(z.real * z.real + z.imag * z.imag, inv_n, saturated)
        c = math.cos(th)
        s = math.sin(th)
        flat[i] = complex(z.real * c - z.imag * s, z.real * s + z.imag * c)
    return u


@njit(cache=True)
def _phase_integrand_nb(w, amp2_scale, inv_n, saturated):
    flat = w.reshape(-1)
    out = np.empty(flat.size)
    for i in range(flat.size):
        z = flat[i]
        out[i] = _g_nb(amp2_scale * (z.real * z.real + z.imag * z.imag), inv_n, saturated)
    return out.reshape(w.shape)


@njit(cache=True)
def _chirp_nb(f, r2, coef):
    ff = f.reshape(-1)
    rr = r2.reshape(-1)
    out = np.empty(ff.size, dtype=np.complex128)
    for i in range(ff.size):
        th = coef * rr[i]
        c = math.cos(th)
        s = math.sin(th)
        z = ff[i]
        out[i] = complex(z.real * c - z.imag * s, z.real * s + z.imag * c)
    return out.reshape(f.shape)


@njit(cache=True)
def _shell_sums_nb(abs2, idx, nbins):
    a = abs2.reshape(-1)
    k = idx.reshape(-1)
    out = np.zeros(nbins)
    for i in range(a.size):
        out[k[i]] += a[i]
    return out


NUMPY = {
    "gauge_rotate": _gauge_rotate_np,
    "phase_integrand": _phase_integrand_np,
    "chirp": _chirp_np,
    "shell_sums": _shell_sums_np,
}
NUMBA = {
    "gauge_rotate": _gauge_rotate_nb,
    "phase_integrand": _phase_integrand_nb,
    "chirp": _chirp_nb,
    "shell_sums": _shell_sums_nb,
}

_ACTIVE = NUMBA if USE_NUMBA else NUMPY
BACKEND = "numba" if USE_NUMBA else "numpy"


def gauge_rotate(u, scale, inv_n, saturated=False):
    """In place: ``u *= exp(-i * scale * g(|u|^2))``.

    ``g(r2) = r2**inv_n`` for the power law, ``(1 + r2)**inv_n - 1`` when
    saturated. ``u`` must be C-contiguous complex128.
    """
    return _ACTIVE["gauge_rotate"](u, float(scale), float(inv_n), bool(saturated))


def phase_integrand(w, amp2_scale, inv_n, saturated=False):
    """``g(amp2_scale * |w|^2)`` as a new real array."""
    return _ACTIVE["phase_integrand"](w, float(amp2_scale), float(inv_n), bool(saturated))


def chirp(f, r2, coef):
    """``f * exp(i * coef * r2)`` as a new array."""
    return _ACTIVE["chirp"](f, r2, float(coef))


def shell_sums(abs2, idx, nbins):
    """Sum ``abs2`` into ``nbins`` bins labelled by the integer array ``idx``."""
    return _ACTIVE["shell_sums"](abs2, idx, int(nbins))
