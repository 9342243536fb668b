"""Numba loops vs numpy twins for the solver hot path.

    python benchmarks/bench_kernels.py [--repeat 50]

Times each pointwise kernel on a 1D (8192) and a 2D (512^2) array, then a
full fused Strang step with each backend (run in a child process with
MODSCAT_NUMBA set accordingly).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from modscat import kernels

STEP = """
import timeit, numpy as np
from modscat.spectral_core import make_grid, ComplexField
from modscat.nls_solver import Nonlinearity, _Stepper
g = make_grid({dim}, {n}, 64.0)
st = _Stepper(g, Nonlinearity("power", {dim}), "direct")
u = np.exp(-g.r2 / 2) + 0j
st.advance(u.copy(), 0.0, 1e-3, 2)
k = 20
t = min(timeit.repeat(lambda: st.advance(u.copy(), 0.0, 1e-3, k), number=1, repeat=5)) / k
print(t)
"""


def bench(fn, args, repeat):
    fn(*[a.copy() if isinstance(a, np.ndarray) else a for a in args])  # warm-up / compile
    return min(timeit.repeat(lambda: fn(*[a.copy() if isinstance(a, np.ndarray) else a for a in args]),
                             number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'shape':>12}{'numpy [us]':>14}{'numba [us]':>14}{'speedup':>10}")
    for shape in ((8192,), (512, 512)):
        u = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        r2 = rng.uniform(0, 100, shape)
        idx = rng.integers(0, 12, shape)
        cases = {
            "gauge_rotate": (u, 0.01, 1.0, False),
            "phase_integrand": (u, 0.5, 1.0, False),
            "chirp": (u, r2, 0.3),
            "shell_sums": (np.abs(u) ** 2, idx, 12),
        }
        for name, a in cases.items():
            tn = bench(kernels.NUMPY[name], a, args.repeat)
            tb = bench(kernels.NUMBA[name], a, args.repeat)
            print(f"{name:<16}{'x'.join(map(str, shape)):>12}{tn * 1e6:>14.1f}{tb * 1e6:>14.1f}{tn / tb:>10.2f}")
    print()
    print(f"{'strang step':<16}{'shape':>12}{'numpy [us]':>14}{'numba [us]':>14}{'speedup':>10}")
    for dim, n in ((1, 8192), (2, 512)):
        res = {}
        for flag in ("0", "1"):
            env = dict(os.environ, MODSCAT_NUMBA=flag, MODSCAT_THREADS="1")
            out = subprocess.run([sys.executable, "-c", STEP.format(dim=dim, n=n)], env=env,
                                 capture_output=True, text=True, check=True)
            res[flag] = float(out.stdout.strip())
        shape = "x".join([str(n)] * dim)
        print(f"{'fused step':<16}{shape:>12}{res['0'] * 1e6:>14.1f}{res['1'] * 1e6:>14.1f}{res['0'] / res['1']:>10.2f}")


if __name__ == "__main__":
    main()
