"""Run one configured experiment and write its outputs to a directory.

Outputs (all deterministic for a fixed config):
    diagnostics.csv   per-checkpoint conservation and decay diagnostics
    ledger.csv        dyadic Cauchy gaps of the modified profile
    contrast.csv      corrected vs phase-free gaps at dyadic pairs
    manifest.json     config, run id, conventions and summary numbers
    snapshots/        optional binary field snapshots at reporting times
"""
import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__, kernels
from ..conservation import PseudoconformalLedger, VFrameEnergyLedger, energy, mass
from ..nls_solver import (
    BoundaryMassMonitor,
    MassDriftMonitor,
    Nonlinearity,
    SolverState,
    boundary_mass_fraction,
    evolve,
    evolve_pseudoconformal,
    pseudoconformal_map,
    spectral_tail_fraction,
    write_snapshot,
)
from ..operators import profile_W
from ..scattering import (
    ConvergenceLedger,
    PhaseAccumulator,
    extract_final_state,
    h_update,
    modified_profile,
    phase_update,
)
from ..spectral_core import Grid, grad_l2_norm, l2_norm, linf_norm
from . import initial_data
from .config import canonical_json
from .fitting import fit_decay_rate

DIAG_COLUMNS = [
    "t", "mass", "energy", "energy_drift", "linf", "t_third_linf", "t_half_linf",
    "H", "cpce_residual", "cpce_kinetic", "cpce_potential", "cpce_dissipation",
    "boundary_mass", "spectral_tail",
]
CONTRAST_COLUMNS = ["t", "s", "gap_corrected", "gap_uncorrected", "ratio", "weak_corrected", "tail_bound"]
PC_COLUMNS = ["tau", "t", "mass", "grad_v", "vframe_residual", "vframe_dissipation"]


def _key(t):
    return round(float(t), 10)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([format(float(r[c]), ".17g") for c in columns])


def run_id(cfg):
    return hashlib.sha1(canonical_json(cfg).encode()).hexdigest()[:12]


def reporting_times(tcfg, t_end):
    if isinstance(tcfg.checkpoints, str):
        rep = [2.0 ** k for k in range(0, int(math.floor(math.log2(t_end))) + 1)] if t_end >= 1 else []
        rep.append(float(t_end))
    else:
        rep = list(tcfg.checkpoints)
    rep += [t for t in tcfg.fine_prefix if t <= t_end]
    return sorted({_key(t) for t in rep if 0 < t <= t_end})


def node_times(start, stop, h, extra):
    k = np.arange(1, int(math.floor((stop - start) / h + 1e-9)) + 1)
    base = {_key(start + i * h) for i in k}
    return sorted(base | {_key(t) for t in extra if start < t <= stop})


@dataclass
class RunResult:
    out_dir: Path
    diagnostics: list
    ledger_rows: list
    contrast_rows: list
    summary: dict
    manifest: dict
    extra: dict = field(default_factory=dict)


def _conventions(cfg):
    return {
        "fourier": "unitary, (2 pi)^{-n/2} exp(-i x xi)",
        "phase_lower_limit": 1.0,
        "phase_sign": cfg.diagnostics.sign,
        "profile": "v(t) = F^-1 exp(+-i phi) F M(t) U(-t) u(t)",
        "weak_gap_object": "physical-side v(t) - v(s), sharp dyadic shells",
        "energy": "0.5||grad u||^2 + n/(n+1)||u||_q^q",
        "cpce_dissipation_J": "J(1+s)",
        "initial_data_family": cfg.initial_data.family + " (chosen family)",
        "quadrature": f"trapezoid, nodes every {cfg.time.node_steps} steps plus reporting times",
    }


def _setup(cfg):
    g = Grid(cfg.grid.dim, cfg.grid.points, cfg.grid.half_width)
    nl = Nonlinearity(cfg.nonlinearity.kind, cfg.nonlinearity.n)
    u0 = initial_data.build(g, cfg.initial_data, cfg.run.seed)
    return g, nl, u0


def run_experiment(cfg, out_dir=None):
    """Direct-frame run with phase tracking; both the configured sign and the
    phase-free control are tracked along the same trajectory."""
    tc, dc = cfg.time, cfg.diagnostics
    T = tc.t_end
    g, nl, u0 = _setup(cfg)
    dim = g.dim
    rep = reporting_times(tc, T)
    rep_set = set(rep)
    diag = {_key(t) for t in rep}
    if tc.diagnostic_every > 0:
        diag |= {_key(k * tc.diagnostic_every) for k in range(1, int(T / tc.diagnostic_every + 1e-9) + 1)}
    nodes = node_times(0.0, T, tc.node_steps * tc.dt, diag | {1.0} if T >= 1 else diag)
    diag_set = diag

    E0 = energy(u0, nl)
    cpce = PseudoconformalLedger(n=dim if nl.kind == "linear" else nl.n)
    cpce.update(u0, 0.0)
    acc = PhaseAccumulator(g, nl)
    main = ConvergenceLedger(s_index=dc.s_index)
    ctrl = ConvergenceLedger(s_index=dc.s_index)
    snap_dir = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if dc.snapshots:
            snap_dir = out_dir / "snapshots"
            snap_dir.mkdir(exist_ok=True)
    tails = []

    def observer(s):
        t, u = s.time, s.field
        cpce.update(u, t)
        if t >= 1:
            W = profile_W(u, t)
            phase_update(acc, W, t)
            h_update(acc, u, t)
        if t not in diag_set:
            return None
        m = mass(u)
        e = energy(u, nl)
        li = linf_norm(u)
        tail = spectral_tail_fraction(u)
        tails.append(tail)
        rec = {
            "mass": m, "energy": e, "energy_drift": abs(e - E0) / abs(E0) if E0 else abs(e),
            "linf": li, "t_third_linf": t ** (1.0 / 3.0) * li, "t_half_linf": t ** (dim / 2.0) * li,
            "H": acc.H if t >= 1 else 0.0,
            "cpce_residual": cpce.residual, "cpce_kinetic": cpce.kinetic,
            "cpce_potential": cpce.potential, "cpce_dissipation": cpce.dissipation,
            "boundary_mass": boundary_mass_fraction(u, dc.boundary_fraction),
            "spectral_tail": tail,
        }
        if t in rep_set and t >= 1:
            extras = dict(mass=m, energy=e, linf=li, t_linf_scaled=t ** (dim / 2.0) * li)
            main.add(t, modified_profile(u, t, acc, dc.sign, W=W), acc.H, **extras)
            ctrl.add(t, modified_profile(u, t, acc, "off", W=W), acc.H, **extras)
            if snap_dir is not None:
                write_snapshot(snap_dir / f"t_{t:012.6f}.bin", s)
        return rec

    state = SolverState(u0, 0.0, nl, tc.dt)
    monitors = [MassDriftMonitor(dc.mass_tol), BoundaryMassMonitor(dc.boundary_fraction, dc.boundary_tol)]
    traj = evolve(state, T, nodes, [observer], monitors)
    diags = traj.records

    rows = main.rows()
    contrast = []
    for a, b in zip(main.dyadic_rows(), ctrl.dyadic_rows()):
        contrast.append({
            "t": a["t"], "s": a["s"], "gap_corrected": a["l2_gap"], "gap_uncorrected": b["l2_gap"],
            "ratio": a["l2_gap"] / b["l2_gap"] if b["l2_gap"] > 0 else float("nan"),
            "weak_corrected": a["weak_gap"], "tail_bound": a["tail_bound"],
        })

    summary = _summarize(diags, main, contrast, tails, dc, T)
    manifest = {
        "run_id": run_id(cfg),
        "package_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "config": cfg.to_dict(),
        "conventions": _conventions(cfg),
        "summary": summary,
    }
    if out_dir is not None:
        write_csv(out_dir / "diagnostics.csv", DIAG_COLUMNS, diags)
        main.write_csv(out_dir / "ledger.csv")
        write_csv(out_dir / "contrast.csv", CONTRAST_COLUMNS, contrast)
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return RunResult(out_dir, diags, rows, contrast, summary, manifest,
                     {"ledger": main, "control": ctrl, "final": traj.final, "accumulator": acc, "cpce": cpce})


def _summarize(diags, main, contrast, tails, dc, T):
    late = [r for r in diags if r["t"] >= 1]
    s = {
        "max_energy_drift": max((r["energy_drift"] for r in diags), default=0.0),
        "max_cpce_residual": max((r["cpce_residual"] for r in diags), default=0.0),
        "max_spectral_tail": max(tails, default=0.0),
    }
    s["under_resolved"] = s["max_spectral_tail"] > dc.tail_tol
    if late:
        s["sup_t_third_linf"] = max(r["t_third_linf"] for r in late)
        s["sup_t_half_linf"] = max(r["t_half_linf"] for r in late)
        try:
            alpha, pref = fit_decay_rate([r["t"] for r in late], [r["linf"] for r in late])
            s["linf_decay_alpha"], s["linf_decay_prefactor"] = alpha, pref
        except ValueError:
            pass
    if contrast:
        s["final_contrast_ratio"] = contrast[-1]["ratio"]
        s["gaps_nonincreasing_after_4"] = main.gaps_monotone(4.0)
        ratios = [c["gap_corrected"] / c["tail_bound"] for c in contrast if c["tail_bound"] > 0]
        if ratios:
            s["gap_bound_ratio_spread"] = max(ratios) / min(ratios)
    if len([t for t in main.times if t > 1]) >= 3:
        s["achieved_gap"] = extract_final_state(main).gap
    return s


def run_pseudoconformal(cfg, out_dir=None):
    """tau-frame run from ``v0 = u0 exp(-i|x|^2/2)`` to ``tau_end``."""
    tc = cfg.time
    g, nl, u0 = _setup(cfg)
    v0, _ = pseudoconformal_map(u0, 0.0)
    if isinstance(tc.checkpoints, str):
        rep = [_key(k * 0.1) for k in range(1, int(tc.tau_end / 0.1 + 1e-9) + 1)] + [_key(tc.tau_end)]
    else:
        rep = [_key(t) for t in tc.checkpoints if 0 < t <= tc.tau_end]
    rep_set = set(rep)
    nodes = node_times(0.0, tc.tau_end, tc.node_steps * tc.dt, rep_set)
    led = VFrameEnergyLedger()
    led.update(v0, 0.0)

    def observer(s):
        out = led(s)
        if s.time not in rep_set:
            return None
        tau = s.time
        out.update(tau=tau, t=tau / (1.0 - tau), mass=mass(s.field), grad_v=grad_l2_norm(s.field))
        return out

    traj = evolve_pseudoconformal(v0, tc.tau_end, tc.dt, nl, nodes, [observer],
                                  [MassDriftMonitor(cfg.diagnostics.mass_tol)])
    rows = traj.records
    summary = {"max_vframe_residual": max((r["vframe_residual"] for r in rows), default=0.0)}
    manifest = {"run_id": run_id(cfg), "package_version": __version__, "kernel_backend": kernels.BACKEND,
                "config": cfg.to_dict(), "conventions": _conventions(cfg), "summary": summary}
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_csv(out_dir / "pseudoconformal.csv", PC_COLUMNS, rows)
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return RunResult(out_dir, rows, [], [], summary, manifest, {"final": traj.final})
