"""Plain-text sectioned ``key = value`` configuration.

Zero-dependency parsing with line-accurate errors: unknown keys, type
mismatches, duplicates (both lines cited) and violated constraints all
name the offending line.  ``#`` starts a comment anywhere.  Every key has
a documented default except alpha, which is required.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .grid import Grid
from .model import Coefficients, Params
from .stepper import SCHEMES, StepControl
from .sweep import PRESETS


class ConfigError(ValueError):
    """Configuration file problem, with the offending line in the message."""


_REQUIRED = object()

# section -> key -> (kind, default); kind in float/int/str/float_list/int_list
_SCHEMA = {
    "model": {
        "alpha": ("float", _REQUIRED),
        "kappa": ("float", 0.0),
        "d_u": ("float", 1.0), "d_v": ("float", 1.0), "d_w": ("float", 1.0),
        "decay_u": ("float", 1.0), "decay_v": ("float", 1.0), "decay_w": ("float", 1.0),
        "production": ("float", 1.0),
        "preset": ("str", "gaussian-bump-v"),
        "seed": ("int", 0),
        "const_u": ("float", 1.0), "const_v": ("float", 0.0), "const_w": ("float", 0.0),
    },
    "grid": {
        "ndim": ("int", 1),
        "cells": ("int_list", (64,)),
        "lengths": ("float_list", (1.0,)),
    },
    "stepper": {
        "scheme": ("str", "imex"),
        "dt_max": ("float", 0.01),
        "cfl_advect": ("float", 0.4),
        "cfl_react": ("float", 0.9),
        "t_end": ("float", 5.0),
    },
    "monitors": {
        "monitor_every": ("float", 0.1),
        "snapshot_every": ("float", 0.0),
        "growth_factor": ("float", 1000.0),
        "tail_fraction": ("float", 0.2),
        "slope_tol": ("float", 1e-4),
        "out_dir": ("str", "out"),
    },
    "sweep": {
        "alphas": ("float_list", None),
        "seeds": ("int_list", (0,)),
    },
}


@dataclass(frozen=True)
class PresetSettings:
    name: str = "gaussian-bump-v"
    seed: int = 0
    constants: tuple[float, float, float] = (1.0, 0.0, 0.0)


@dataclass(frozen=True)
class MonitorSettings:
    monitor_every: float = 0.1
    snapshot_every: float = 0.0
    growth_factor: float = 1000.0
    tail_fraction: float = 0.2
    slope_tol: float = 1e-4
    out_dir: str = "out"


@dataclass(frozen=True)
class SweepSettings:
    alphas: tuple[float, ...] | None = None
    seeds: tuple[int, ...] = (0,)


@dataclass(frozen=True)
class Config:
    params: Params
    grid: Grid
    control: StepControl
    t_end: float
    monitors: MonitorSettings = field(default_factory=MonitorSettings)
    preset: PresetSettings = field(default_factory=PresetSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)


def _parse_scalar(kind: str, raw: str, line_no: int, key: str):
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        if kind == "str":
            return raw
        items = [piece.strip() for piece in raw.replace(",", " ").split()]
        if not items:
            raise ValueError
        if kind == "int_list":
            return tuple(int(piece) for piece in items)
        return tuple(float(piece) for piece in items)
    except ValueError:
        raise ConfigError(
            f"line {line_no}: key {key!r} expects {kind.replace('_', ' of ')}, got {raw!r}"
        ) from None


def _tokenize(text: str):
    values: dict[tuple[str, str], object] = {}
    lines_of: dict[tuple[str, str], int] = {}
    section = None
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(
                    f"line {line_no}: unknown section [{section}]; "
                    f"expected one of {sorted(_SCHEMA)}")
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw_line.strip()!r}")
        if section is None:
            raise ConfigError(f"line {line_no}: key outside of any section")
        key, raw_value = (piece.strip() for piece in line.split("=", 1))
        if key not in _SCHEMA[section]:
            raise ConfigError(f"line {line_no}: unknown key {key!r} in section [{section}]")
        if (section, key) in values:
            raise ConfigError(
                f"line {line_no}: duplicate key {key!r} in [{section}] "
                f"(first set on line {lines_of[(section, key)]})")
        kind, _ = _SCHEMA[section][key]
        values[(section, key)] = _parse_scalar(kind, raw_value, line_no, key)
        lines_of[(section, key)] = line_no
    return values, lines_of


def parse_config(text: str) -> Config:
    """Parse and fully validate a configuration; all errors carry lines."""
    values, lines_of = _tokenize(text)

    def get(section, key):
        if (section, key) in values:
            return values[(section, key)]
        default = _SCHEMA[section][key][1]
        if default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r} in section [{section}]")
        return default

    def constrain(section, key, value, ok: bool, requirement: str):
        if not ok:
            location = lines_of.get((section, key))
            prefix = f"line {location}: " if location is not None else ""
            raise ConfigError(f"{prefix}{key} must satisfy {requirement}, got {value}")
        return value

    alpha = constrain("model", "alpha", get("model", "alpha"),
                      get("model", "alpha") >= 0, "alpha >= 0")
    kappa = constrain("model", "kappa", get("model", "kappa"),
                      get("model", "kappa") >= 0, "kappa >= 0")
    coeff_values = {}
    for name in ("d_u", "d_v", "d_w", "decay_u", "decay_v", "decay_w", "production"):
        coeff_values[name] = constrain("model", name, get("model", name),
                                       get("model", name) > 0, f"{name} > 0")
    params = Params(alpha=alpha, kappa=kappa, coeffs=Coefficients(**coeff_values))

    ndim = constrain("grid", "ndim", get("grid", "ndim"),
                     get("grid", "ndim") in (1, 2, 3), "ndim in {1, 2, 3}")
    cells = get("grid", "cells")
    if len(cells) == 1:
        cells = cells * ndim
    constrain("grid", "cells", cells, len(cells) == ndim, f"one entry or {ndim} entries")
    constrain("grid", "cells", cells, all(c >= 3 for c in cells), "every axis >= 3 cells")
    lengths = get("grid", "lengths")
    if len(lengths) == 1:
        lengths = lengths * ndim
    constrain("grid", "lengths", lengths, len(lengths) == ndim, f"one entry or {ndim} entries")
    constrain("grid", "lengths", lengths, all(L > 0 for L in lengths), "every length > 0")
    grid = Grid(cells, lengths)

    scheme = constrain("stepper", "scheme", get("stepper", "scheme"),
                       get("stepper", "scheme") in SCHEMES, f"one of {SCHEMES}")
    dt_max = constrain("stepper", "dt_max", get("stepper", "dt_max"),
                       get("stepper", "dt_max") > 0, "dt_max > 0")
    cfl_advect = constrain("stepper", "cfl_advect", get("stepper", "cfl_advect"),
                           0 < get("stepper", "cfl_advect") < 1, "0 < cfl_advect < 1")
    cfl_react = constrain("stepper", "cfl_react", get("stepper", "cfl_react"),
                          0 < get("stepper", "cfl_react") < 1, "0 < cfl_react < 1")
    control = StepControl(dt_max=dt_max, cfl_advect=cfl_advect,
                          cfl_react=cfl_react, scheme=scheme)
    t_end = constrain("stepper", "t_end", get("stepper", "t_end"),
                      get("stepper", "t_end") >= 0, "t_end >= 0")

    monitors = MonitorSettings(
        monitor_every=constrain("monitors", "monitor_every", get("monitors", "monitor_every"),
                                get("monitors", "monitor_every") > 0, "monitor_every > 0"),
        snapshot_every=constrain("monitors", "snapshot_every", get("monitors", "snapshot_every"),
                                 get("monitors", "snapshot_every") >= 0, "snapshot_every >= 0"),
        growth_factor=constrain("monitors", "growth_factor", get("monitors", "growth_factor"),
                                get("monitors", "growth_factor") > 0, "growth_factor > 0"),
        tail_fraction=constrain("monitors", "tail_fraction", get("monitors", "tail_fraction"),
                                0 < get("monitors", "tail_fraction") <= 1,
                                "0 < tail_fraction <= 1"),
        slope_tol=constrain("monitors", "slope_tol", get("monitors", "slope_tol"),
                            get("monitors", "slope_tol") > 0, "slope_tol > 0"),
        out_dir=get("monitors", "out_dir"),
    )

    preset_name = constrain("model", "preset", get("model", "preset"),
                            get("model", "preset") in PRESETS, f"one of {PRESETS}")
    constants = tuple(
        constrain("model", key, get("model", key), get("model", key) >= 0, f"{key} >= 0")
        for key in ("const_u", "const_v", "const_w"))
    preset = PresetSettings(name=preset_name, seed=get("model", "seed"), constants=constants)

    alphas = get("sweep", "alphas")
    if alphas is not None:
        constrain("sweep", "alphas", alphas, all(a >= 0 for a in alphas), "every alpha >= 0")
    sweep = SweepSettings(alphas=alphas, seeds=get("sweep", "seeds"))

    return Config(params=params, grid=grid, control=control, t_end=t_end,
                  monitors=monitors, preset=preset, sweep=sweep)


def config_to_text(config: Config) -> str:
    """Canonical serialization; parsing it back yields an equal Config."""
    c = config.params.coeffs
    lines = [
        "[model]",
        f"alpha = {config.params.alpha!r}",
        f"kappa = {config.params.kappa!r}",
        f"d_u = {c.d_u!r}", f"d_v = {c.d_v!r}", f"d_w = {c.d_w!r}",
        f"decay_u = {c.decay_u!r}", f"decay_v = {c.decay_v!r}", f"decay_w = {c.decay_w!r}",
        f"production = {c.production!r}",
        f"preset = {config.preset.name}",
        f"seed = {config.preset.seed}",
        f"const_u = {config.preset.constants[0]!r}",
        f"const_v = {config.preset.constants[1]!r}",
        f"const_w = {config.preset.constants[2]!r}",
        "",
        "[grid]",
        f"ndim = {config.grid.ndim}",
        f"cells = {', '.join(str(s) for s in config.grid.shape)}",
        f"lengths = {', '.join(repr(L) for L in config.grid.lengths)}",
        "",
        "[stepper]",
        f"scheme = {config.control.scheme}",
        f"dt_max = {config.control.dt_max!r}",
        f"cfl_advect = {config.control.cfl_advect!r}",
        f"cfl_react = {config.control.cfl_react!r}",
        f"t_end = {config.t_end!r}",
        "",
        "[monitors]",
        f"monitor_every = {config.monitors.monitor_every!r}",
        f"snapshot_every = {config.monitors.snapshot_every!r}",
        f"growth_factor = {config.monitors.growth_factor!r}",
        f"tail_fraction = {config.monitors.tail_fraction!r}",
        f"slope_tol = {config.monitors.slope_tol!r}",
        f"out_dir = {config.monitors.out_dir}",
        "",
        "[sweep]",
        f"seeds = {', '.join(str(s) for s in config.sweep.seeds)}",
    ]
    if config.sweep.alphas is not None:
        lines.append(f"alphas = {', '.join(repr(a) for a in config.sweep.alphas)}")
    return "\n".join(lines) + "\n"


def load_config(path) -> Config:
    try:
        with open(path) as handle:
            text = handle.read()
    except OSError as error:
        raise ConfigError(f"cannot read config file {path}: {error}") from error
    return parse_config(text)
