"""Experiment configuration: nested tables in TOML (JSON also accepted).

Grammar (all tables optional except ``[grid]``, ``[initial_data]`` and ``[time]``):

    [run]            name (str), seed (int)
    [grid]           dim (1|2), points (power of two), half_width (float)
    [nonlinearity]   kind ("power"|"saturated"|"linear"), n (int)
    [initial_data]   family ("gaussian"|"radial_gaussian_2d"|"random_h11"),
                     amplitude, width, modes (random_h11 only)
    [time]           dt, t_end (direct frame) or tau_end (pseudoconformal),
                     frame ("direct"|"pseudoconformal"),
                     checkpoints ("dyadic" or a list of times),
                     fine_prefix (list), node_steps (int), diagnostic_every (float)
    [diagnostics]    sign ("+"|"-"|"off"), s_index, mass_tol, boundary_fraction,
                     boundary_tol, tail_tol, snapshots (bool)
"""
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import tomli
import tomli_w

from ..errors import ConfigError


@dataclass(frozen=True)
class RunSection:
    name: str = "run"
    seed: int = 0


@dataclass(frozen=True)
class GridSection:
    dim: int = 1
    points: int = 1024
    half_width: float = 64.0


@dataclass(frozen=True)
class NonlinearitySection:
    kind: str = "power"
    n: int = 1


@dataclass(frozen=True)
class InitialDataSection:
    family: str = "gaussian"
    amplitude: float = 1.0
    width: float = 1.0
    modes: int = 6


@dataclass(frozen=True)
class TimeSection:
    dt: float = 1e-3
    t_end: float = 1.0
    tau_end: float = 0.5
    frame: str = "direct"
    checkpoints: object = "dyadic"
    fine_prefix: tuple = ()
    node_steps: int = 4
    diagnostic_every: float = 1.0


@dataclass(frozen=True)
class DiagnosticsSection:
    sign: str = "+"
    s_index: float = -1.0
    mass_tol: float = 1e-9
    boundary_fraction: float = 0.5
    boundary_tol: float = 1e-8
    tail_tol: float = 1e-6
    snapshots: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    run: RunSection = field(default_factory=RunSection)
    grid: GridSection = field(default_factory=GridSection)
    nonlinearity: NonlinearitySection = field(default_factory=NonlinearitySection)
    initial_data: InitialDataSection = field(default_factory=InitialDataSection)
    time: TimeSection = field(default_factory=TimeSection)
    diagnostics: DiagnosticsSection = field(default_factory=DiagnosticsSection)

    def to_dict(self):
        d = asdict(self)
        d["time"]["fine_prefix"] = list(d["time"]["fine_prefix"])
        if not isinstance(d["time"]["checkpoints"], str):
            d["time"]["checkpoints"] = list(d["time"]["checkpoints"])
        return d


_SECTIONS = {f.name: f.type for f in fields(ExperimentConfig)}
_TYPES = {
    "run": RunSection,
    "grid": GridSection,
    "nonlinearity": NonlinearitySection,
    "initial_data": InitialDataSection,
    "time": TimeSection,
    "diagnostics": DiagnosticsSection,
}
_FLOATS = {"half_width", "amplitude", "width", "dt", "t_end", "tau_end", "diagnostic_every",
           "s_index", "mass_tol", "boundary_fraction", "boundary_tol", "tail_tol"}


def _section(name, raw):
    cls = _TYPES[name]
    if not isinstance(raw, dict):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name for f in fields(cls)}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(extra))}")
    vals = {}
    for k, v in raw.items():
        if k in _FLOATS and isinstance(v, int) and not isinstance(v, bool):
            v = float(v)
        if k == "fine_prefix":
            v = tuple(float(x) for x in v)
        if k == "checkpoints" and not isinstance(v, str):
            v = tuple(float(x) for x in v)
        vals[k] = v
    return cls(**vals)


def _validate(cfg):
    t = cfg.time
    if t.frame not in ("direct", "pseudoconformal"):
        raise ConfigError(f"unknown frame {t.frame!r}")
    if not t.dt > 0:
        raise ConfigError("time.dt must be positive")
    if isinstance(t.checkpoints, str) and t.checkpoints != "dyadic":
        raise ConfigError("time.checkpoints must be 'dyadic' or a list of times")
    if t.node_steps < 1:
        raise ConfigError("time.node_steps must be >= 1")
    if cfg.diagnostics.sign not in ("+", "-", "off"):
        raise ConfigError("diagnostics.sign must be '+', '-' or 'off'")
    if cfg.initial_data.family not in ("gaussian", "radial_gaussian_2d", "random_h11"):
        raise ConfigError(f"unknown initial-data family {cfg.initial_data.family!r}")
    return cfg


def from_dict(d):
    extra = set(d) - set(_SECTIONS)
    if extra:
        raise ConfigError(f"unknown table(s): {', '.join(sorted(extra))}")
    for req in ("grid", "initial_data", "time"):
        if req not in d:
            raise ConfigError(f"missing table [{req}]")
    try:
        return _validate(ExperimentConfig(**{k: _section(k, v) for k, v in d.items()}))
    except TypeError as e:
        raise ConfigError(str(e)) from e


def parse(text, fmt="toml"):
    try:
        d = json.loads(text) if fmt == "json" else tomli.loads(text)
    except (tomli.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot parse config: {e}") from e
    return from_dict(d)


def load(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse(p.read_text(), "json" if p.suffix == ".json" else "toml")


def dumps(cfg):
    return tomli_w.dumps(cfg.to_dict())


def canonical_json(cfg):
    return json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
