"""Strang split-step integration in the direct frame and the pseudoconformal frame.

Direct frame:          i u_t   + (1/2) Lap u = g(|u|^2) u
Pseudoconformal frame: i v_tau + (1/2) Lap v = g(|v|^2) v / (1 - tau),   tau in [0, 1)

with ``g(r2) = r2**(1/n)`` (power) or ``(1 + r2)**(1/n) - 1`` (saturated).
The potential substep keeps ``|u|`` fixed, so it is integrated exactly as a
pointwise phase rotation; the kinetic substep is the exact free multiplier.
"""
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import kernels
from ._accel import thread_cap
from .errors import FrameError, InvariantViolation, ScheduleError
from .operators import modulate, rescale
from .spectral_core import PHYSICAL, ComplexField, l2_norm, require_space

DIRECT = "direct"
PSEUDOCONFORMAL = "pseudoconformal"
_FRAMES = (DIRECT, PSEUDOCONFORMAL)


@dataclass(frozen=True)
class Nonlinearity:
    """``kind`` is ``"power"`` (exponent 1 + 2/n, n in {1, 2}), ``"saturated"``
    (n >= 3) or ``"linear"`` (switched off, for control runs)."""

    kind: str = "power"
    n: int = 1

    def __post_init__(self):
        if self.kind == "power":
            if self.n not in (1, 2):
                raise ValueError(f"power nonlinearity needs n in {{1, 2}}, got {self.n}")
        elif self.kind == "saturated":
            if self.n < 3:
                raise ValueError(f"saturated nonlinearity needs n >= 3, got {self.n}")
        elif self.kind != "linear":
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")

    @property
    def saturated(self):
        return self.kind == "saturated"

    @property
    def active(self):
        return self.kind != "linear"

    @property
    def inv_n(self):
        return 1.0 / self.n

    def g(self, r2):
        r2 = np.asarray(r2, dtype=float)
        if self.kind == "linear":
            return np.zeros_like(r2)
        if self.saturated:
            return np.expm1(np.log1p(r2) / self.n)
        return r2 ** self.inv_n

    def potential_density(self, r2):
        """Energy density ``V`` with ``dV/d(conj z) = g(|z|^2) z``."""
        r2 = np.asarray(r2, dtype=float)
        n = self.n
        if self.kind == "linear":
            return np.zeros_like(r2)
        if self.saturated:
            return n / (n + 1.0) * np.expm1((n + 1.0) / n * np.log1p(r2)) - r2
        return n / (n + 1.0) * r2 ** (1.0 + 1.0 / n)


@dataclass(frozen=True)
class SolverState:
    field: ComplexField
    time: float
    nonlinearity: Nonlinearity = Nonlinearity()
    dt: float = 1e-3
    frame: str = DIRECT

    def __post_init__(self):
        require_space(self.field, PHYSICAL)
        if self.frame not in _FRAMES:
            raise FrameError(f"unknown frame {self.frame!r}")
        if self.frame == PSEUDOCONFORMAL and not (0.0 <= self.time < 1.0):
            raise FrameError(f"pseudoconformal time must lie in [0, 1), got {self.time}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    def replace(self, **kw):
        d = dict(field=self.field, time=self.time, nonlinearity=self.nonlinearity,
                 dt=self.dt, frame=self.frame)
        d.update(kw)
        return SolverState(**d)


def _potential_weight(frame, t, h):
    """Integral of the time coefficient of the potential over ``[t, t + h]``."""
    if frame == DIRECT:
        return h
    if t + h >= 1.0:
        raise FrameError(f"step [{t}, {t + h}] crosses tau = 1")
    # \int_t^{t+h} ds / (1 - s) = log((1 - t) / (1 - t - h))
    return -math.log1p(-h / (1.0 - t))


def nonlinear_substep(state, dt):
    """Exact potential flow over ``[time, time + dt]``; advances ``time``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    w = _potential_weight(state.frame, state.time, dt)
    vals = np.array(state.field.values)
    nl = state.nonlinearity
    if nl.active:
        kernels.gauge_rotate(vals, w, nl.inv_n, nl.saturated)
    return state.replace(field=state.field.with_values(vals), time=state.time + dt)


def _kinetic(f, h):
    g = f.grid
    ax = tuple(range(g.dim))
    uh = sfft.fftn(f.values, axes=ax, workers=thread_cap())
    uh *= np.exp(-0.5j * h * sfft.ifftshift(g.k2))
    return f.with_values(sfft.ifftn(uh, axes=ax, workers=thread_cap()))


def strang_step(state, dt=None):
    """Half kinetic, full potential, half kinetic."""
    dt = state.dt if dt is None else dt
    f = _kinetic(state.field, 0.5 * dt)
    s = nonlinear_substep(state.replace(field=f), dt)
    return s.replace(field=_kinetic(s.field, 0.5 * dt))


class _Stepper:
    """Fused Strang loop on arrays in FFT (unshifted) layout.

    Adjacent kinetic half steps are merged, so ``k`` steps cost ``k + 1``
    transform pairs.
    """

    def __init__(self, grid, nonlinearity, frame):
        self.grid = grid
        self.nl = nonlinearity
        self.frame = frame
        self.axes = tuple(range(grid.dim))
        self.k2 = sfft.ifftshift(grid.k2)
        self._cache = {}

    def _mult(self, h):
        m = self._cache.get(h)
        if m is None:
            m = np.exp(-0.5j * h * self.k2)
            if len(self._cache) > 8:
                self._cache.clear()
            self._cache[h] = m
        return m

    def advance(self, u, t0, h, k):
        """``k`` steps of size ``h`` from time ``t0``; ``u`` is consumed."""
        if k <= 0:
            return u
        ax = self.axes
        w = thread_cap()
        half = self._mult(0.5 * h)
        full = self._mult(h)
        uh = sfft.fftn(u, axes=ax, workers=w, overwrite_x=True)
        uh *= half
        u = sfft.ifftn(uh, axes=ax, workers=w, overwrite_x=True)
        for i in range(k):
            if self.nl.active:
                wt = _potential_weight(self.frame, t0 + i * h, h)
                kernels.gauge_rotate(u, wt, self.nl.inv_n, self.nl.saturated)
            uh = sfft.fftn(u, axes=ax, workers=w, overwrite_x=True)
            uh *= full if i < k - 1 else half
            u = sfft.ifftn(uh, axes=ax, workers=w, overwrite_x=True)
        return u


def step_counts(interval, dt):
    """Full steps and trailing partial step covering ``interval``."""
    k = int(math.floor(interval / dt + 1e-9))
    rem = interval - k * dt
    if rem <= 1e-9 * dt:
        rem = 0.0
    return k, rem


@dataclass
class Trajectory:
    final: SolverState
    records: list = field(default_factory=list)


class MassDriftMonitor:
    """Abort when ``||u||^2`` drifts from its initial value by more than ``tol`` (relative)."""

    name = "mass_drift"

    def __init__(self, tol=1e-9):
        self.tol = tol
        self.m0 = None

    def __call__(self, state, last_record):
        m = l2_norm(state.field) ** 2
        if self.m0 is None:
            self.m0 = m
            return
        ref = self.m0 if self.m0 > 0 else 1.0
        drift = abs(m - self.m0) / ref
        if drift > self.tol:
            raise InvariantViolation(self.name, f"relative mass drift {drift:.3e} > {self.tol:.1e} at t={state.time}", last_record)


def boundary_mass_fraction(f, fraction=0.5):
    """Share of ``||f||^2`` outside the box ``|x_i| < fraction * L``."""
    g = f.grid
    inside = np.abs(g.x) < fraction * g.half_width
    mask = inside
    for _ in range(g.dim - 1):
        mask = np.multiply.outer(mask, inside)
    abs2 = np.abs(f.values) ** 2
    tot = abs2.sum()
    return 0.0 if tot == 0 else float(abs2[~mask].sum() / tot)


class BoundaryMassMonitor:
    """Abort when the mass share outside ``|x| < fraction * L`` exceeds ``tol``."""

    name = "boundary_mass"

    def __init__(self, fraction=0.5, tol=1e-8):
        self.fraction = fraction
        self.tol = tol

    def __call__(self, state, last_record):
        b = boundary_mass_fraction(state.field, self.fraction)
        if b > self.tol:
            raise InvariantViolation(self.name, f"boundary mass {b:.3e} > {self.tol:.1e} at t={state.time}", last_record)


def spectral_tail_fraction(f):
    """Share of spectral energy in the top octave ``|xi_i| > xi_max / 2``."""
    g = f.grid
    fh = np.abs(sfft.fftn(f.values)) ** 2
    k = np.abs(sfft.fftfreq(g.points, d=g.dx) * 2 * np.pi)
    low = k <= 0.5 * g.xi_max
    mask = low
    for _ in range(g.dim - 1):
        mask = np.multiply.outer(mask, low)
    tot = fh.sum()
    return 0.0 if tot == 0 else float(fh[~mask].sum() / tot)


def default_monitors():
    return [MassDriftMonitor(1e-9), BoundaryMassMonitor(0.5, 1e-8)]


def evolve(state, t_end, checkpoint_times=(), observers=(), monitors=None):
    """Integrate to ``t_end``, stopping at each checkpoint.

    Each observer is called as ``obs(snapshot)`` and may return a dict that is
    merged into the checkpoint record; a checkpoint where every observer
    returns None leaves no record. Monitors run before observers and raise
    :class:`InvariantViolation` (carrying the last good record) on failure.
    ``t_end`` always closes the list of stops.
    """
    if not t_end > state.time:
        raise ScheduleError(f"t_end={t_end} must exceed the current time {state.time}")
    cps = [float(c) for c in checkpoint_times]
    if any(b < a for a, b in zip(cps, cps[1:])):
        raise ScheduleError("checkpoint times must be sorted")
    stops = [c for c in cps if state.time < c < t_end] + [float(t_end)]
    if state.frame == PSEUDOCONFORMAL and t_end >= 1.0:
        raise FrameError("pseudoconformal runs must end before tau = 1")
    monitors = default_monitors() if monitors is None else list(monitors)
    observers = list(observers)

    grid = state.field.grid
    ax = tuple(range(grid.dim))
    stepper = _Stepper(grid, state.nonlinearity, state.frame)
    u = sfft.ifftshift(np.array(state.field.values), axes=ax)
    t = state.time
    dt = state.dt
    records = []
    last = None

    def snapshot(time):
        vals = sfft.fftshift(u, axes=ax)
        return state.replace(field=ComplexField(grid, vals), time=time)

    first = snapshot(t)
    for m in monitors:
        m(first, None)

    cp_set = set(cps)
    for stop in stops:
        k, rem = step_counts(stop - t, dt)
        u = stepper.advance(u, t, dt, k)
        if rem > 0:
            u = stepper.advance(u, t + k * dt, rem, 1)
        t = stop
        snap = snapshot(t)
        for m in monitors:
            m(snap, last)
        if stop in cp_set:
            rec = {"t": t}
            keep = not observers
            for obs in observers:
                out = obs(snap)
                if out is not None:
                    rec.update(out)
                    keep = True
            if keep:
                records.append(rec)
                last = rec
    return Trajectory(final=snap, records=records)


def pseudoconformal_map(u, t, leak_tol=1e-10):
    """Direct-frame snapshot ``u(t)`` to ``(v(tau), tau)`` with ``tau = t/(1+t)``.

    ``v(tau, xi) = (1+t)^{n/2} exp(-i (1+t) |xi|^2 / 2) u(t, (1+t) xi)``; the
    chirp is removed on the ``u`` lattice before resampling.
    """
    if t < 0:
        raise FrameError("pseudoconformal map needs t >= 0")
    s = 1.0 + t
    h = modulate(u, -s)
    v = rescale(h, s, s ** (u.grid.dim / 2.0), PHYSICAL, leak_tol)
    return v, t / s


def pseudoconformal_unmap(v, tau, leak_tol=1e-10):
    """Inverse of :func:`pseudoconformal_map`: ``(v, tau) -> (u(t), t)``."""
    if not (0.0 <= tau < 1.0):
        raise FrameError(f"tau must lie in [0, 1), got {tau}")
    t = tau / (1.0 - tau)
    s = 1.0 + t
    g = rescale(v, 1.0 / s, s ** (-v.grid.dim / 2.0), PHYSICAL, leak_tol)
    return modulate(g, s), t


def evolve_pseudoconformal(v0, tau_end, dt, nonlinearity=Nonlinearity(), checkpoint_taus=(),
                           observers=(), monitors=None, eps_min=1e-3):
    """Solve the tau-frame problem from ``v(0) = v0`` to ``tau_end <= 1 - eps_min``."""
    if tau_end > 1.0 - eps_min:
        raise FrameError(f"tau_end={tau_end} is closer than {eps_min} to tau = 1")
    state = SolverState(v0, 0.0, nonlinearity, dt, PSEUDOCONFORMAL)
    if monitors is None:
        monitors = [MassDriftMonitor(1e-9)]
    return evolve(state, tau_end, checkpoint_taus, observers, monitors)


# --- flat binary snapshots ------------------------------------------------
#
# header  (little-endian, 48 bytes):
#   magic  4s   b"MSNP"
#   version u32 (1)
#   dim     u32
#   points  u32  (per axis)
#   L       f64  half width
#   time    f64
#   frame   u32  (0 direct, 1 pseudoconformal)
#   kind    u32  (0 linear, 1 power, 2 saturated)
#   n       u32
#   pad     u32  (0)
# payload: points**dim complex samples in C order, interleaved (re, im) f64.

_HEADER = struct.Struct("<4sIIIddIIII")
_MAGIC = b"MSNP"
_KINDS = ("linear", "power", "saturated")


def write_snapshot(path, state):
    f = state.field
    g = f.grid
    head = _HEADER.pack(_MAGIC, 1, g.dim, g.points, g.half_width, float(state.time),
                        _FRAMES.index(state.frame), _KINDS.index(state.nonlinearity.kind),
                        state.nonlinearity.n, 0)
    data = np.ascontiguousarray(f.values, dtype="<c16").tobytes()
    Path(path).write_bytes(head + data)


def read_snapshot(path, dt=1e-3):
    from .spectral_core import Grid

    raw = Path(path).read_bytes()
    magic, ver, dim, pts, L, t, frame, kind, n, _ = _HEADER.unpack_from(raw)
    if magic != _MAGIC or ver != 1:
        raise ValueError(f"{path}: not a snapshot file")
    grid = Grid(dim, pts, L)
    vals = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape(grid.shape)
    return SolverState(ComplexField(grid, vals.astype(np.complex128)), t,
                       Nonlinearity(_KINDS[kind], n), dt, _FRAMES[frame])
