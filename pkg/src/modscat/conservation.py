"""Conserved and monotone quantities, the saturated nonlinearity algebra, and
two functional-inequality checks (Hardy, Gagliardo-Nirenberg type).
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .errors import FrameError, ScheduleError
from .nls_solver import Nonlinearity
from .operators import J_norm
from .spectral_core import (
    PHYSICAL,
    grad_l2_norm,
    l2_norm,
    lp_norm,
    require_space,
)


def mass(f):
    """``(1/2) \\int |u|^2``."""
    require_space(f, PHYSICAL)
    return 0.5 * l2_norm(f) ** 2


def _as_nonlinearity(kind, dim):
    if isinstance(kind, Nonlinearity):
        return kind
    if kind == "power":
        return Nonlinearity("power", dim)
    return Nonlinearity(kind, dim if kind == "linear" else 3)


def energy(f, kind="power"):
    """``(1/2)||grad u||^2 + \\int V(u)`` with ``V`` the potential of ``kind``.

    For the power law ``V = n/(n+1) |u|^{2+2/n}``, the density whose
    derivative in ``conj(u)`` is ``|u|^{2/n} u``; this is the conserved
    combination. ``kind`` is a :class:`Nonlinearity` or ``"power"``
    (``n`` = grid dimension) / ``"linear"``.
    """
    require_space(f, PHYSICAL)
    nl = _as_nonlinearity(kind, f.grid.dim)
    r2 = np.abs(f.values) ** 2
    pot = f.grid.cell * float(np.sum(nl.potential_density(r2)))
    return 0.5 * grad_l2_norm(f) ** 2 + pot


# --- pseudoconformal energy -----------------------------------------------

def _critical_power(f, n):
    q = 2.0 + 2.0 / n
    return lp_norm(f, q) ** q


@dataclass
class PseudoconformalLedger:
    """Running terms of

        (1+t)^{-1} ||J(1+t)u||^2 + (2n/(n+1)) (1+t) ||u||_q^q
            + \\int_0^t (1+s)^{-2} ||J(1+s)u(s)||^2 ds  =  C0,   q = 2 + 2/n.

    Feed it snapshots in increasing time, starting at ``t = 0``; the history
    integral is a trapezoid over the snapshot times.
    """

    n: int = 1
    c0: float = 0.0
    dissipation: float = 0.0
    last_time: float = None
    last_integrand: float = 0.0
    kinetic: float = 0.0
    potential: float = 0.0
    residual: float = 0.0
    history: list = field(default_factory=list)

    def update(self, u, t):
        kin = J_norm(u, 1.0 + t) ** 2 / (1.0 + t)
        pot = 2.0 * self.n / (self.n + 1.0) * (1.0 + t) * _critical_power(u, self.n)
        integrand = kin / (1.0 + t)
        if self.last_time is None:
            if t != 0:
                raise ScheduleError("the pseudoconformal ledger must start at t = 0")
            self.c0 = kin + pot
        else:
            if t <= self.last_time:
                raise ScheduleError(f"non-monotone time {t} after {self.last_time}")
            self.dissipation += 0.5 * (t - self.last_time) * (integrand + self.last_integrand)
        self.last_time = t
        self.last_integrand = integrand
        self.kinetic = kin
        self.potential = pot
        lhs = kin + pot + self.dissipation
        self.residual = 0.0 if self.c0 == 0 else abs(lhs - self.c0) / self.c0
        self.history.append((t, kin, pot, self.dissipation, self.residual))
        return self

    def __call__(self, state):
        self.update(state.field, state.time)
        return {
            "cpce_residual": self.residual,
            "cpce_kinetic": self.kinetic,
            "cpce_potential": self.potential,
            "cpce_dissipation": self.dissipation,
            "cpce_c0": self.c0,
        }


def pseudoconformal_residual(ledger, u, t):
    """Relative deviation of the three-term sum from ``C0`` at time ``t``.

    The ledger must already hold the snapshot at ``t`` (or one step behind,
    in which case it is advanced with ``u``).
    """
    if ledger.last_time is None or t > ledger.last_time:
        ledger.update(u, t)
    elif t != ledger.last_time:
        raise ScheduleError(f"ledger is at t={ledger.last_time}, asked for t={t}")
    return ledger.residual


def v_frame_energy_residual(v, tau, running_dissipation, c_star):
    """Deviation of ``(1-tau)||grad v||^2 + 2n/(n+1)||v||_q^q + diss`` from ``c_star``.

    ``running_dissipation`` is ``\\int_0^tau ||grad v||^2``; relative unless
    ``c_star`` is zero.
    """
    if not (0.0 <= tau < 1.0):
        raise FrameError(f"tau must lie in [0, 1), got {tau}")
    n = v.grid.dim
    lhs = (1.0 - tau) * grad_l2_norm(v) ** 2 + 2.0 * n / (n + 1.0) * _critical_power(v, n)
    lhs += running_dissipation
    if c_star == 0:
        return abs(lhs)
    return abs(lhs - c_star) / abs(c_star)


@dataclass
class VFrameEnergyLedger:
    """Observer for tau-frame runs: trapezoid ``\\int_0^tau ||grad v||^2`` and the residual."""

    c_star: float = None
    dissipation: float = 0.0
    last_tau: float = None
    last_grad2: float = 0.0
    residual: float = 0.0

    def update(self, v, tau):
        g2 = grad_l2_norm(v) ** 2
        if self.last_tau is None:
            if tau != 0:
                raise ScheduleError("the v-frame ledger must start at tau = 0")
            n = v.grid.dim
            self.c_star = g2 + 2.0 * n / (n + 1.0) * _critical_power(v, n)
        else:
            if tau <= self.last_tau:
                raise ScheduleError(f"non-monotone tau {tau} after {self.last_tau}")
            self.dissipation += 0.5 * (tau - self.last_tau) * (g2 + self.last_grad2)
        self.last_tau = tau
        self.last_grad2 = g2
        self.residual = v_frame_energy_residual(v, tau, self.dissipation, self.c_star)
        return self

    def __call__(self, state):
        self.update(state.field, state.time)
        return {"vframe_residual": self.residual, "vframe_dissipation": self.dissipation}


# --- saturated nonlinearity algebra -----------------------------------------

def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")


def f_sat(z, n):
    """``(<z>^{2/n} - 1) z`` with ``<z> = (1 + |z|^2)^{1/2}``."""
    _check_n(n)
    z = np.asarray(z, dtype=complex)
    return np.expm1(np.log1p(np.abs(z) ** 2) / n) * z


def V_sat(z, n):
    """``n/(n+1) (<z>^{2(n+1)/n} - 1) - |z|^2``."""
    _check_n(n)
    r2 = np.abs(np.asarray(z)) ** 2
    return n / (n + 1.0) * np.expm1((n + 1.0) / n * np.log1p(r2)) - r2


def W_sat(z, n):
    """``(n+2) V(z) - n conj(z) f(z)`` (real)."""
    z = np.asarray(z, dtype=complex)
    return (n + 2.0) * V_sat(z, n) - n * np.real(np.conj(z) * f_sat(z, n))


def W_sat_alt(z, n):
    """Equivalent form ``V(z) + n(<z>^{2/n} - 1) - |z|^2``."""
    r2 = np.abs(np.asarray(z)) ** 2
    return V_sat(z, n) + n * np.expm1(np.log1p(r2) / n) - r2


def check_fvw_inequalities(n, sample_count, seed, slack=1e-12, modulus_range=(1e-6, 1e6)):
    """Sample ``z`` with log-uniform modulus and uniform phase and test

        |f(z)| <= 2|z|^{1+2/n},   0 <= V(z) <= 3|z|^{2+2/n},   W(z) <= V(z)

    with absolute slack. Returns a JSON-ready report; ``witness`` holds the
    first violating sample as ``[re, im]``.
    """
    _check_n(n)
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = np.log(modulus_range[0]), np.log(modulus_range[1])
    rad = np.exp(rng.uniform(lo, hi, sample_count))
    z = rad * np.exp(1j * rng.uniform(0.0, 2 * np.pi, sample_count))
    f = f_sat(z, n)
    V = V_sat(z, n)
    W = W_sat(z, n)
    margins = np.stack([
        2.0 * rad ** (1.0 + 2.0 / n) - np.abs(f),
        V,
        3.0 * rad ** (2.0 + 2.0 / n) - V,
        V - W,
    ])
    worst = margins.min(axis=0)
    bad = worst < -slack
    witness = None
    if bad.any():
        k = int(np.argmax(bad))
        witness = [float(z[k].real), float(z[k].imag)]
    return {
        "name": f"fvw_n{n}",
        "samples": int(sample_count),
        "violations": int(bad.sum()),
        "worst_margin": float(worst.min()),
        "seed": seed,
        "witness": witness,
    }


# --- Hardy --------------------------------------------------------------------

def hardy_check(F, s, t):
    """``lhs = \\int_s^t tau^{-2} (\\int_s^tau F)^2 dtau``, ``rhs = 4 \\int_s^t F^2``.

    ``F`` holds samples on the uniform lattice ``linspace(s, t, len(F))``;
    both integrals are trapezoid rules on that lattice.
    """
    if s <= 0 or t <= s:
        raise ValueError(f"need 0 < s < t, got s={s}, t={t}")
    F = np.asarray(F, dtype=float)
    if F.ndim != 1 or F.size < 2:
        raise ValueError("F must be a 1-D array with at least two samples")
    if np.any(F < 0):
        raise ValueError("F must be nonnegative")
    tau = np.linspace(s, t, F.size)
    G = cumulative_trapezoid(F, tau, initial=0.0)
    lhs = float(trapezoid(G ** 2 / tau ** 2, tau))
    rhs = float(4.0 * trapezoid(F ** 2, tau))
    return lhs, rhs


# --- L^infinity bounds --------------------------------------------------------

def _point_values(f, points):
    """Trigonometric interpolant of a physical field at arbitrary points ``(P, dim)``."""
    g = f.grid
    c = np.fft.fftshift(np.fft.fftn(f.values)) / g.size
    k = 2 * np.pi * (np.arange(g.points) - g.points // 2) / (2 * g.half_width)
    pts = np.atleast_2d(points)
    E = [np.exp(1j * np.outer(pts[:, a] + g.half_width, k)) for a in range(g.dim)]
    if g.dim == 1:
        return E[0] @ c
    return np.einsum("pa,ab,pb->p", E[0], c, E[1])


def angular_variance(f, radii=None, angles=16):
    """Largest normalised variance of ``f`` over circles, for radiality checks."""
    g = f.grid
    if g.dim != 2:
        return 0.0
    if radii is None:
        radii = np.linspace(0.1, 0.5, 5) * g.half_width
    th = 2 * np.pi * np.arange(angles) / angles
    scale = float(np.max(np.abs(f.values)) ** 2) or 1.0
    worst = 0.0
    for r in radii:
        vals = _point_values(f, np.stack([r * np.cos(th), r * np.sin(th)], axis=1))
        worst = max(worst, float(np.mean(np.abs(vals - vals.mean()) ** 2)) / scale)
    return worst


def gn_linf_bound_check(f, p, radius=1.0, radial_tol=1e-8):
    """Sup-norm bounds by the ``L^{2p-2}`` norm and the gradient.

    1D: ``lhs = ||phi||_inf``, ``rhs = p^{1/p} ||phi||_{2p-2}^{1-1/p} ||phi'||^{1/p}``.
    2D (radial only): ``lhs = |phi(x)|^p`` at ``|x| = radius``,
    ``rhs = (p/|x|) ||phi||_{2p-2}^{p-1} ||grad phi||``.
    """
    require_space(f, PHYSICAL)
    if p <= 1:
        raise ValueError("p must exceed 1")
    q = 2.0 * p - 2.0
    grad = grad_l2_norm(f)
    lq = lp_norm(f, q)
    if f.grid.dim == 1:
        lhs = float(np.max(np.abs(f.values)))
        rhs = p ** (1.0 / p) * lq ** (1.0 - 1.0 / p) * grad ** (1.0 / p)
        return lhs, float(rhs)
    if radius <= 0:
        raise ValueError("evaluation radius must be positive")
    var = angular_variance(f)
    if var > radial_tol:
        raise ValueError(f"field is not radial (angular variance {var:.3e})")
    val = _point_values(f, np.array([[radius, 0.0]]))[0]
    lhs = float(abs(val) ** p)
    rhs = p / radius * lq ** (p - 1.0) * grad
    return lhs, float(rhs)
