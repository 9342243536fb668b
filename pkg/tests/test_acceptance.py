"""Acceptance gate: criteria 1-15.

The long-time checks share one reference run (configs/reference_1d_cubic.toml),
one dt/2 companion run and one 2D radial run (configs/radial_2d_cubic.toml).
Each test records a one-line verdict; the lines are printed together at the
end of the module.
"""
import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from modscat.conservation import check_fvw_inequalities, gn_linf_bound_check, hardy_check
from modscat.experiments import config as cfgmod
from modscat.experiments.fitting import fit_decay_rate
from modscat.experiments.runner import run_experiment
from modscat.nls_solver import (
    Nonlinearity,
    SolverState,
    evolve,
    evolve_pseudoconformal,
    pseudoconformal_map,
    pseudoconformal_unmap,
)
from modscat.operators import dollard_residual, free_propagate
from modscat.spectral_core import ComplexField, l2_norm, make_grid

ROOT = Path(__file__).resolve().parents[1]
REF = cfgmod.load(ROOT / "configs" / "reference_1d_cubic.toml")
RADIAL = cfgmod.load(ROOT / "configs" / "radial_2d_cubic.toml")
CUBIC = Nonlinearity("power", 1)

VERDICTS = {}


def verdict(num, ok, detail):
    VERDICTS[num] = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok


@pytest.fixture(scope="module", autouse=True)
def summary(request):
    yield
    tr = request.config.pluginmanager.get_plugin("terminalreporter")
    lines = [VERDICTS[k] for k in sorted(VERDICTS)]
    if tr is not None:
        tr.write_line("")
        tr.write_line("acceptance summary")
        for line in lines:
            tr.write_line(line)
    else:
        print("\n".join(lines))


def timed(fn, *a, **kw):
    t0 = time.perf_counter()
    out = fn(*a, **kw)
    return out, time.perf_counter() - t0


def with_dt(cfg, dt):
    return replace(cfg, time=replace(cfg.time, dt=dt))


@pytest.fixture(scope="module")
def ref_run(tmp_path_factory):
    return timed(run_experiment, REF, tmp_path_factory.mktemp("ref"))


@pytest.fixture(scope="module")
def ref_half(tmp_path_factory):
    return run_experiment(with_dt(REF, REF.time.dt / 2), tmp_path_factory.mktemp("ref_half"))


def gaussian(g, width=1.0, k0=0.0):
    return ComplexField(g, np.exp(-g.r2 / (2 * width ** 2) + 1j * k0 * g.coords[0]))


def test_c01_free_propagator():
    g = make_grid(1, 1024, 64.0)
    u0 = gaussian(g)

    def go():
        errs = []
        for t in (0.5, 1.0, 2.0):
            a = 1 + 1j * t
            exact = a ** -0.5 * np.exp(-g.x ** 2 / (2 * a))
            errs.append(np.linalg.norm(free_propagate(u0, t).values - exact) / np.linalg.norm(exact))
        return max(errs)

    err, dt = timed(go)
    assert verdict(1, err < 1e-8 and dt < 1.0, f"max rel L2 err {err:.2e} (< 1e-8), {dt:.3f} s (< 1 s)")


def test_c02_dollard():
    g = make_grid(1, 4096, 128.0)
    suite = [gaussian(g, w, k) for w in (0.7, 1.0, 1.5) for k in (0.0, 0.5, -1.0)]

    def go():
        return max(dollard_residual(f, t) for f in suite for t in (1.0, 2.0, 4.0, 8.0))

    res, dt = timed(go)
    assert verdict(2, res < 1e-6 and dt < 5.0, f"max residual {res:.2e} (< 1e-6), {dt:.2f} s (< 5 s)")


def test_c03_mass(ref_run):
    res, dt = ref_run
    steps = round(REF.time.t_end / REF.time.dt)
    m0 = res.diagnostics[0]["mass"]
    drift = max(abs(r["mass"] - m0) / m0 for r in res.diagnostics)
    ok = drift < 1e-9 and dt < 120 and steps == 25600
    assert verdict(3, ok, f"mass drift {drift:.2e} (< 1e-9) over {steps} steps, run {dt:.1f} s (< 120 s)")


def test_c04_energy(ref_run, ref_half):
    res, _ = ref_run
    d1 = res.summary["max_energy_drift"]
    d2 = ref_half.summary["max_energy_drift"]
    ok = d1 < 1e-6 and d1 / d2 >= 3
    assert verdict(4, ok, f"energy drift {d1:.2e} (< 1e-6), {d2:.2e} at dt/2, ratio {d1 / d2:.2f} (>= 3)")


def test_c05_strang_order():
    g = make_grid(1, 8192, 256.0)
    u0 = gaussian(g)

    def go():
        sols = [evolve(SolverState(u0, 0.0, CUBIC, dt), 1.0).final.field for dt in (0.02, 0.01, 0.005)]
        return math.log2(l2_norm(sols[0] - sols[1]) / l2_norm(sols[1] - sols[2]))

    p, dt = timed(go)
    assert verdict(5, abs(p - 2.0) <= 0.2 and dt < 60, f"observed order {p:.3f} (2 +- 0.2), {dt:.1f} s")


def _cpce_at(res, t):
    return next(r for r in res.diagnostics if r["t"] == t)


def test_c06_pseudoconformal_energy(ref_run, ref_half):
    res, _ = ref_run
    r1, r2 = _cpce_at(res, 8.0), _cpce_at(ref_half, 8.0)
    c0 = res.extra["cpce"].c0
    # ||J(1+t)u||^2 <= C0 (1+t)  <=>  kinetic term (1+t)^{-1}||J||^2 <= C0
    jco6 = all(r["cpce_kinetic"] <= c0 * (1 + 1e-9) for r in res.diagnostics)
    jco29 = all(r["cpce_dissipation"] <= c0 for r in res.diagnostics)
    ok = r1["cpce_residual"] < 1e-3 and r2["cpce_residual"] < r1["cpce_residual"] and jco6 and jco29
    assert verdict(6, ok, f"residual at t=8 {r1['cpce_residual']:.2e} (< 1e-3), dt/2 {r2['cpce_residual']:.2e}; "
                          f"J bound {'ok' if jco6 else 'BROKEN'}, dissipation <= C0 {'ok' if jco29 else 'BROKEN'}")


def test_c07_frame_equivalence():
    g = make_grid(1, 8192, 256.0)
    u0 = gaussian(g)

    def go():
        direct = evolve(SolverState(u0, 0.0, CUBIC, 1e-3), 1.0).final.field
        v0, _ = pseudoconformal_map(u0, 0.0)
        tr = evolve_pseudoconformal(v0, 0.5, 2.5e-4)
        back, _ = pseudoconformal_unmap(tr.final.field, tr.final.time)
        return l2_norm(back - direct) / l2_norm(direct)

    err, dt = timed(go)
    assert verdict(7, err < 1e-4 and dt < 120, f"rel L2 err at t=1 {err:.2e} (< 1e-4), {dt:.1f} s")


def test_c08_linf_decay(ref_run):
    res, _ = ref_run
    late = [r for r in res.diagnostics if 1 <= r["t"] <= 64]
    sup3 = max(r["t_third_linf"] for r in late)
    sup2 = max(r["t_half_linf"] for r in late)
    alpha, _ = fit_decay_rate([r["t"] for r in late], [r["linf"] for r in late])
    ok = math.isfinite(sup3) and math.isfinite(sup2) and 0.33 <= alpha <= 0.6
    assert verdict(8, ok, f"sup t^(1/3)|u|inf {sup3:.4f}, sup t^(1/2)|u|inf {sup2:.4f}, alpha {alpha:.4f} in [0.33, 0.6]")


def test_c09_contrast(ref_run):
    res, _ = ref_run
    last = res.contrast_rows[-1]
    gaps = [r["gap_corrected"] for r in res.contrast_rows if r["s"] >= 4]
    mono = all(b <= a for a, b in zip(gaps, gaps[1:]))
    ok = last["ratio"] < 0.5 and mono
    assert verdict(9, ok, f"final pair [{last['s']:g},{last['t']:g}] corrected/uncorrected {last['ratio']:.4f} (< 0.5); "
                          f"gaps after t=4 nonincreasing: {mono}")


def test_c10_tail_bound(ref_run):
    res, _ = ref_run
    ratios = [r["gap_corrected"] / r["tail_bound"] for r in res.contrast_rows]
    spread = max(ratios) / min(ratios)
    assert verdict(10, spread < 10, f"gap/bound in [{min(ratios):.3f}, {max(ratios):.3f}], spread {spread:.2f}x (< 10x)")


def test_c11_weak_norm_2d(tmp_path_factory):
    res, dt = timed(run_experiment, RADIAL, tmp_path_factory.mktemp("radial"))
    rows = res.extra["ledger"].dyadic_rows()
    dom = all(r["weak_gap"] <= r["l2_gap"] for r in rows)
    weak = [r["weak_gap"] for r in rows]
    dec = all(b < a for a, b in zip(weak, weak[1:]))
    ok = dom and dec and len(rows) >= 3
    assert verdict(11, ok, f"weak gaps {', '.join(f'{w:.3e}' for w in weak)}; <= L2 gaps: {dom}; decreasing: {dec}; {dt:.0f} s")


def test_c12_fvw():
    reps, dt = timed(lambda: [check_fvw_inequalities(n, 100_000, seed=n) for n in (3, 4, 5)])
    v = sum(r["violations"] for r in reps)
    assert verdict(12, v == 0 and dt < 5, f"{v} violations in 3 x 1e5 samples, {dt:.2f} s (< 5 s)")


def test_c13_hardy():
    rng = np.random.default_rng(13)

    def go():
        worst = 0.0
        bad = 0
        for _ in range(1000):
            F = np.repeat(rng.uniform(0, 1, rng.integers(1, 40)), 32)
            s = rng.uniform(1e-3, 5.0)
            lhs, rhs = hardy_check(F, s, s + rng.uniform(0.1, 50.0))
            bad += lhs > rhs
            worst = max(worst, lhs / rhs)
        return bad, worst

    (bad, worst), dt = timed(go)
    assert verdict(13, bad == 0 and dt < 5,
                   f"{bad} of 1000 with lhs > 4 int F^2, worst lhs/rhs {worst:.3f}, {dt:.2f} s (< 5 s)")


def test_c14_gn():
    rng = np.random.default_rng(14)
    g1, g2 = make_grid(1, 1024, 20.0), make_grid(2, 128, 12.0)

    def go():
        bad, worst = 0, 0.0
        for _ in range(100):
            c = rng.standard_normal(4)
            f = ComplexField(g1, (c[0] + c[1] * g1.x + 1j * c[2]) * np.exp(-(g1.x - c[3]) ** 2 / rng.uniform(0.5, 4)))
            lhs, rhs = gn_linf_bound_check(f, rng.uniform(1.2, 5.0))
            bad += lhs > rhs
            worst = max(worst, lhs / rhs)
        for _ in range(100):
            a, w = rng.standard_normal(), rng.uniform(0.5, 3.0)
            h = ComplexField(g2, (1 + a * g2.r2 / w) * np.exp(-g2.r2 / w) + 0j)
            lhs, rhs = gn_linf_bound_check(h, rng.uniform(1.2, 5.0), radius=rng.uniform(0.2, 4.0))
            bad += lhs > rhs
            worst = max(worst, lhs / rhs)
        return bad, worst

    (bad, worst), dt = timed(go)
    assert verdict(14, bad == 0 and dt < 30, f"{bad} of 200 violated, worst lhs/rhs {worst:.3f}, {dt:.1f} s (< 30 s)")


def test_c15_determinism(ref_run, tmp_path):
    res, _ = ref_run
    again = run_experiment(REF, tmp_path)
    names = ("diagnostics.csv", "ledger.csv", "contrast.csv", "manifest.json")
    same = {n: (res.out_dir / n).read_bytes() == (again.out_dir / n).read_bytes() for n in names}
    assert verdict(15, all(same.values()), "byte-identical: " + ", ".join(f"{n}={v}" for n, v in same.items()))
