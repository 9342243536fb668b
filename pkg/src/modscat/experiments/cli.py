"""Command-line entry point ``modscat``.

Exit codes: 0 success, 1 invariant failure, 2 usage or configuration error.
"""
import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from ..errors import ConfigError, InvariantViolation, ModscatError
from . import config as cfgmod
from .fitting import fit_decay_rate

EXIT_OK, EXIT_INVARIANT, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out_dir(args, cfg):
    from .runner import run_id

    if args.out:
        return Path(args.out)
    return Path("runs") / f"{cfg.run.name}-{run_id(cfg)}"


def _simulate(args):
    from .runner import run_experiment

    cfg = cfgmod.load(args.config)
    res = run_experiment(cfg, _out_dir(args, cfg))
    print(json.dumps(res.summary, indent=2, sort_keys=True))
    print(f"outputs in {res.out_dir}")
    return EXIT_OK


def _contrast(args):
    from .runner import run_experiment

    cfg = cfgmod.load(args.config)
    res = run_experiment(cfg, _out_dir(args, cfg))
    for r in res.contrast_rows:
        print(f"[{r['s']:g}, {r['t']:g}]  corrected {r['gap_corrected']:.4e}  "
              f"uncorrected {r['gap_uncorrected']:.4e}  ratio {r['ratio']:.3f}")
    return EXIT_OK


def _pseudoconformal(args):
    from .runner import run_pseudoconformal

    cfg = cfgmod.load(args.config)
    res = run_pseudoconformal(cfg, _out_dir(args, cfg))
    print(json.dumps(res.summary, indent=2, sort_keys=True))
    return EXIT_OK


def _propcheck(args):
    from .. import conservation as cons

    seed = args.seed
    ok = True
    reports = []
    if args.suite == "fvw":
        for n in (3, 4, 5):
            rep = cons.check_fvw_inequalities(n, args.samples, seed)
            reports.append(rep)
            ok &= rep["violations"] == 0
    elif args.suite == "hardy":
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(args.samples):
            F = np.repeat(rng.uniform(0, 1, rng.integers(1, 20)), 50)
            s = rng.uniform(0.01, 2.0)
            lhs, rhs = cons.hardy_check(F, s, s + rng.uniform(0.1, 10.0))
            worst = max(worst, lhs / rhs if rhs > 0 else 0.0)
            ok &= lhs <= rhs
        reports.append({"name": "hardy", "samples": args.samples, "worst_ratio": worst, "seed": seed})
    elif args.suite == "gn":
        from ..spectral_core import ComplexField, Grid

        rng = np.random.default_rng(seed)
        g1, g2 = Grid(1, 512, 20.0), Grid(2, 128, 10.0)
        worst = 0.0
        for _ in range(args.samples):
            c = rng.normal(size=3)
            f = ComplexField(g1, (c[0] + c[1] * g1.x) * np.exp(-(g1.x - c[2]) ** 2 / rng.uniform(0.5, 4)) + 0j)
            lhs, rhs = cons.gn_linf_bound_check(f, rng.uniform(1.5, 4.0))
            worst = max(worst, lhs / rhs)
            ok &= lhs <= rhs
            w = rng.uniform(0.5, 2.0)
            h = ComplexField(g2, (1 + rng.normal() * g2.r2 / w) * np.exp(-g2.r2 / w) + 0j)
            lhs, rhs = cons.gn_linf_bound_check(h, rng.uniform(1.5, 4.0), radius=rng.uniform(0.3, 3.0))
            worst = max(worst, lhs / rhs)
            ok &= lhs <= rhs
        reports.append({"name": "gn", "samples": args.samples, "worst_ratio": worst, "seed": seed})
    else:
        from ..operators import dollard_residual
        from ..spectral_core import ComplexField, Grid

        rng = np.random.default_rng(seed)
        g = Grid(1, 4096, 128.0)
        worst = 0.0
        for _ in range(min(args.samples, 50)):
            w = rng.uniform(0.5, 2.0)
            f = ComplexField(g, np.exp(-g.x ** 2 / (2 * w * w) + 1j * rng.uniform(-1, 1) * g.x))
            worst = max(worst, dollard_residual(f, rng.uniform(1.0, 8.0)))
        ok = worst < 1e-6
        reports.append({"name": "dollard", "samples": min(args.samples, 50), "worst_residual": worst, "seed": seed})
    print(json.dumps(reports, indent=2))
    return EXIT_OK if ok else EXIT_INVARIANT


def _fit(args):
    path = Path(args.csv)
    if not path.is_file():
        raise ConfigError(f"no such file: {path}")
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    if not rows or args.column not in rows[0]:
        raise ConfigError(f"column {args.column!r} not in {path}")
    t = [float(r["t"]) for r in rows]
    y = [float(r[args.column]) for r in rows]
    alpha, pref = fit_decay_rate(t, y)
    print(json.dumps({"column": args.column, "alpha": alpha, "prefactor": pref}))
    return EXIT_OK


def build_parser():
    p = _Parser(prog="modscat", description="Long-range NLS scattering experiments.")
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)
    sub.required = True
    for name, fn, hlp in (
        ("simulate", _simulate, "run a direct-frame experiment"),
        ("contrast", _contrast, "run and print corrected vs phase-free gaps"),
        ("pseudoconformal", _pseudoconformal, "run a tau-frame experiment"),
    ):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("config")
        sp.add_argument("--out", help="output directory (default runs/<name>-<id>)")
        sp.set_defaults(func=fn)
    sp = sub.add_parser("propcheck", help="sampling checks of the inequality suites")
    sp.add_argument("--suite", choices=("fvw", "hardy", "gn", "operators"), default="fvw")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--samples", type=int, default=1000)
    sp.set_defaults(func=_propcheck)
    sp = sub.add_parser("fit", help="fit a power-law decay to a CSV column")
    sp.add_argument("csv")
    sp.add_argument("--column", default="linf")
    sp.set_defaults(func=_fit)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        return args.func(args)
    except InvariantViolation as e:
        print(f"invariant failure: {e}", file=sys.stderr)
        if e.last_record:
            print(json.dumps(e.last_record, default=float), file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigError, ModscatError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
