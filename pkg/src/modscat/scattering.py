"""Modified phase, modified profile and the Cauchy-gap bookkeeping.

The phase is accumulated on the fixed frequency lattice. Since
``|u(tau, tau y)| = tau^{-n/2} |W(tau)(y)|`` with ``W = F M(tau) U(-tau) u``,

    phi(t, xi) = \\int_1^t g(tau^{-n} |W(tau)(xi)|^2) dtau,

where ``g(r2) = r2^{1/n}`` (power law, so the integrand is
``tau^{-1}|W|^{2/n}``) or ``(1 + r2)^{1/n} - 1`` (saturated). The modified
profile is ``v(t) = F^{-1} exp(i phi) W(t)``.
"""
import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import GridError, ScheduleError
from .nls_solver import Nonlinearity
from .operators import J_norm, profile_W
from .spectral_core import (
    FREQUENCY,
    PHYSICAL,
    ComplexField,
    Grid,
    fft_centered,
    inverse_fourier,
    l2_norm,
    require_space,
)

SIGNS = ("+", "-", "off")


@dataclass
class PhaseAccumulator:
    """Trapezoid accumulators for the phase field and for
    ``H(t) = \\int_1^t tau^{-2} ||J(tau) u||^2 dtau``.

    The two integrals keep separate node memories so they may be fed on
    different schedules. Both start at ``t = 1``.
    """

    grid: Grid
    nonlinearity: Nonlinearity = Nonlinearity()
    phi: np.ndarray = None
    phi_time: float = None
    phi_prev: np.ndarray = None
    H: float = 0.0
    h_time: float = None
    h_prev: float = 0.0

    def __post_init__(self):
        if self.phi is None:
            self.phi = np.zeros(self.grid.shape)

    def integrand(self, W, tau):
        nl = self.nonlinearity
        if not nl.active:
            return np.zeros(self.grid.shape)
        vals = np.ascontiguousarray(W.values)
        return kernels.phase_integrand(vals, tau ** (-self.grid.dim), nl.inv_n, nl.saturated)


def _step(last, tau, dtau):
    if tau < 1:
        raise ScheduleError(f"accumulation starts at t = 1, got {tau}")
    if last is None:
        if tau != 1:
            raise ScheduleError(f"first accumulation node must be t = 1, got {tau}")
        return 0.0
    if dtau is None:
        dtau = tau - last
    if dtau < 0 or tau < last:
        raise ScheduleError(f"non-monotone time {tau} after {last}")
    if abs((tau - last) - dtau) > 1e-9 * max(1.0, tau):
        raise ScheduleError(f"dtau={dtau} does not match the node spacing {tau - last}")
    return dtau


def phase_update(acc, W, tau, dtau=None):
    """Add the trapezoid increment over ``[tau - dtau, tau]`` to ``acc.phi``."""
    require_space(W, FREQUENCY)
    if W.grid != acc.grid:
        raise GridError("profile and accumulator live on different grids")
    h = _step(acc.phi_time, tau, dtau)
    node = acc.integrand(W, tau)
    if acc.phi_time is not None and h > 0:
        acc.phi = acc.phi + 0.5 * h * (node + acc.phi_prev)
    if acc.phi_time is None or h > 0:
        acc.phi_prev = node
        acc.phi_time = float(tau)
    return acc


def h_update_value(acc, j_norm, tau, dtau=None):
    """Trapezoid step of ``H`` from a precomputed ``||J(tau) u(tau)||``."""
    h = _step(acc.h_time, tau, dtau)
    node = j_norm ** 2 / tau ** 2
    if acc.h_time is not None and h > 0:
        acc.H += 0.5 * h * (node + acc.h_prev)
    if acc.h_time is None or h > 0:
        acc.h_prev = node
        acc.h_time = float(tau)
    return acc


def h_update(acc, u, tau, dtau=None):
    require_space(u, PHYSICAL)
    return h_update_value(acc, J_norm(u, tau), tau, dtau)


def modified_profile(u, t, acc=None, sign="+", tol=None, W=None):
    """``v(t) = F^{-1} exp(+-i phi) F M(t) U(-t) u(t)`` as a physical field.

    ``sign="off"`` drops the phase. ``tol`` bounds the allowed mismatch
    between ``t`` and the accumulator's last node. ``W`` may be passed when
    it is already computed.
    """
    if sign not in SIGNS:
        raise ValueError(f"sign must be one of {SIGNS}")
    W = profile_W(u, t) if W is None else W
    if sign == "off" or acc is None:
        return inverse_fourier(W)
    if acc.phi_time is None:
        raise ScheduleError("phase accumulator has no nodes yet")
    tol = 1e-9 * max(1.0, t) if tol is None else tol
    if abs(acc.phi_time - t) > tol:
        raise ScheduleError(f"accumulator is at t={acc.phi_time}, profile requested at t={t}")
    s = 1.0 if sign == "+" else -1.0
    return inverse_fourier(W.with_values(kernels.chirp(W.values, acc.phi, s)))


def cauchy_gap(v_t, v_s):
    """``||v_t - v_s||_{L^2}``."""
    return l2_norm(v_t - v_s)


def tail_bound(H_s, H_t, H_limit_est, s, t, grad_F_phi_norm, sup_F_phi):
    """``(1/s - 1/t)^{1/2} dH^{1/2} ||grad F phi|| + dH^{1/2} H(t)^{1/2} ||F phi||_inf``
    with ``dH = H(t) - H(s)``; no implicit constant.

    ``H_limit_est`` (may be None) is only checked for consistency with ``H_t``.
    """
    if t < s:
        raise ValueError(f"need t >= s, got s={s}, t={t}")
    if s < 1:
        raise ValueError("s must be >= 1")
    if H_limit_est is not None and H_limit_est < H_t - 1e-12 * max(1.0, abs(H_t)):
        raise ValueError("H_limit_est below H(t)")
    if t == s:
        return 0.0
    dH = max(H_t - H_s, 0.0)
    return math.sqrt(1.0 / s - 1.0 / t) * math.sqrt(dH) * grad_F_phi_norm + math.sqrt(dH * max(H_t, 0.0)) * sup_F_phi


def _shell_index(grid):
    r = np.sqrt(grid.r2)
    idx = np.zeros(grid.shape, dtype=np.int64)
    outer = r >= 1.0
    idx[outer] = np.floor(np.log2(r[outer])).astype(np.int64) + 1
    return idx


def besov_weak_norm(f, s_index):
    """``max( ||f 1_{|x|<1}||, sup_j 2^{s j} ||f 1_{2^j <= |x| < 2^{j+1}}|| )``.

    Sharp shells on the field's own lattice; the field is read as it is (the
    caller decides which side of the transform it represents).
    """
    g = f.grid
    idx = _shell_index(g)
    nb = int(idx.max()) + 1
    sums = kernels.shell_sums(np.ascontiguousarray(np.abs(f.values) ** 2), idx, nb)
    cell = g.cell if f.space == PHYSICAL else g.dual_cell
    norms = np.sqrt(cell * sums)
    weights = np.concatenate([[1.0], 2.0 ** (s_index * np.arange(nb - 1))])
    return float(np.max(weights * norms))


def weak_h1_pairing(v_t, u_plus, test):
    """``(grad(v_t - u_plus) | grad test)`` computed spectrally."""
    for f in (v_t, u_plus, test):
        require_space(f, PHYSICAL)
    if not (v_t.grid == u_plus.grid == test.grid):
        raise GridError("fields live on different grids")
    g = v_t.grid
    d = fft_centered(v_t.values - u_plus.values, g)
    p = fft_centered(test.values, g)
    return complex(g.dual_cell * np.sum(g.k2 * d * np.conj(p)))


def gaussian_test_norms(grid):
    """``(||grad F phi||, ||F phi||_inf)`` for the unit-L^2 Gaussian ``phi``."""
    n = grid.dim
    # F phi is again a unit Gaussian exp(-|xi|^2/2) / pi^{n/4}
    sup = math.pi ** (-n / 4.0)
    grad = math.sqrt(n / 2.0)
    return grad, sup


@dataclass
class ConvergenceLedger:
    """Profiles ``v(t)`` and ``H(t)`` at checkpoints; gaps between them on demand."""

    s_index: float = -1.0
    times: list = field(default_factory=list)
    profiles: dict = field(default_factory=dict)
    H: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    test_norms: tuple = None

    def add(self, t, v, H=0.0, **extras):
        if self.times and t <= self.times[-1]:
            raise ScheduleError(f"checkpoint {t} not after {self.times[-1]}")
        if self.profiles and v.grid != next(iter(self.profiles.values())).grid:
            raise GridError("profile grid changed")
        self.times.append(float(t))
        self.profiles[float(t)] = v
        self.H[float(t)] = float(H)
        self.extras[float(t)] = dict(extras)
        if self.test_norms is None:
            self.test_norms = gaussian_test_norms(v.grid)

    def gap(self, t, s):
        return cauchy_gap(self.profiles[t], self.profiles[s])

    def weak_gap(self, t, s):
        return besov_weak_norm(self.profiles[t] - self.profiles[s], self.s_index)

    def partner(self, t):
        """Largest power of two strictly below ``t`` among the checkpoints."""
        cands = [s for s in self.times if s < t and math.log2(s).is_integer()]
        return max(cands) if cands else None

    def bound(self, s, t):
        gn, sup = self.test_norms
        return tail_bound(self.H[s], self.H[t], None, s, t, gn, sup)

    def rows(self):
        out = []
        for t in self.times:
            s = self.partner(t)
            if s is None:
                continue
            ex = self.extras[t]
            out.append({
                "t": t,
                "s": s,
                "l2_gap": self.gap(t, s),
                "weak_gap": self.weak_gap(t, s),
                "tail_bound": self.bound(s, t),
                "H_t": self.H[t],
                "mass": ex.get("mass", float("nan")),
                "energy": ex.get("energy", float("nan")),
                "linf": ex.get("linf", float("nan")),
                "t_linf_scaled": ex.get("t_linf_scaled", float("nan")),
            })
        return out

    def dyadic_rows(self):
        return [r for r in self.rows() if math.log2(r["t"]).is_integer() and r["t"] == 2 * r["s"]]

    def gaps_monotone(self, after=4.0):
        g = [r["l2_gap"] for r in self.dyadic_rows() if r["t"] > after]
        return all(b <= a for a, b in zip(g, g[1:]))

    def write_csv(self, path):
        cols = ["t", "s", "l2_gap", "weak_gap", "tail_bound", "H_t", "mass", "energy", "linf", "t_linf_scaled"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in self.rows():
                w.writerow([format(r[c], ".17g") for c in cols])


class FinalState(NamedTuple):
    u_plus: ComplexField
    gap: float


def extract_final_state(ledger, late_fraction=0.5):
    """``u+ ~ v(T_max)``; the gap is the sup of ``||v(t) - v(T_max)||`` over
    checkpoints ``t >= late_fraction * T_max``."""
    late = [t for t in ledger.times if t > 1]
    if len(late) < 3:
        raise ScheduleError("need at least three checkpoints beyond t = 1")
    T = ledger.times[-1]
    up = ledger.profiles[T]
    gaps = [ledger.gap(T, t) for t in ledger.times if late_fraction * T <= t < T]
    return FinalState(up, max(gaps, default=0.0))
