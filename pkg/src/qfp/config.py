"""Run configuration: flat ``key = value`` text with one section per block.

Sections: ``[model]`` (or ``[physical]``), ``[grid]``, ``[run]`` and ``[initial]``.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .fields import PhaseGrid, WignerField, gaussian, gaussian_mixture, signed_mixture
from .io import read_field
from .model import ModelParams, shift_frame, validate_params

SCENARIOS = ("flow", "kernel", "propagate", "steady", "entropy", "dispersion", "oracle", "verify")
NEEDS_TIMES = {"flow", "kernel", "propagate", "entropy", "dispersion", "oracle"}
NEEDS_GRID = {"propagate", "steady", "entropy", "dispersion", "oracle"}

_MODEL_KEYS = {"gamma", "omega0", "dpp", "dqq", "dpq", "dim", "hbar", "mass", "a", "b"}
_PHYS_KEYS = {"coupling", "kb_t", "omega_cutoff", "omega0", "mass", "hbar", "dim", "a", "b"}


def _floats(text: str) -> list[float]:
    try:
        return [float(s) for s in text.replace(";", ",").split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"not a number list: {text!r}") from exc


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    params: ModelParams  # as configured (possibly m != 1)
    kinetic: ModelParams  # rescaled to m = 1, used by the solvers
    frame_shift: np.ndarray
    grid: PhaseGrid | None
    auto_grid: bool
    times: tuple
    output: Path
    seed: int
    initial: dict
    options: dict = field(default_factory=dict)
    source: dict = field(default_factory=dict)

    def option(self, key, default=None):
        return self.options.get(key, default)


def _section(cp, name):
    return dict(cp.items(name)) if cp.has_section(name) else {}


def _get_float(d, key, default=None):
    if key not in d:
        if default is None:
            raise ConfigError(f"missing key {key!r}")
        return default
    try:
        return float(d[key])
    except ValueError as exc:
        raise ConfigError(f"{key} = {d[key]!r} is not a number") from exc


def _get_int(d, key, default=None):
    v = _get_float(d, key, default)
    if int(v) != v:
        raise ConfigError(f"{key} must be an integer")
    return int(v)


def parse_params(cp: configparser.ConfigParser) -> tuple[ModelParams, np.ndarray]:
    model = _section(cp, "model")
    phys = _section(cp, "physical")
    if model and phys:
        raise ConfigError("use either [model] or [physical], not both")
    if phys:
        unknown = set(phys) - _PHYS_KEYS
        if unknown:
            raise ConfigError(f"unknown [physical] keys: {sorted(unknown)}")
        p = ModelParams.from_physical(
            _get_float(phys, "coupling"), _get_float(phys, "kb_t"),
            _get_float(phys, "omega_cutoff"), _get_float(phys, "omega0"),
            mass=_get_float(phys, "mass", 1.0), hbar=_get_float(phys, "hbar", 1.0),
            dim=_get_int(phys, "dim", 1))
        src = phys
    elif model:
        unknown = set(model) - _MODEL_KEYS
        if unknown:
            raise ConfigError(f"unknown [model] keys: {sorted(unknown)}")
        p = ModelParams(
            gamma=_get_float(model, "gamma"), omega0=_get_float(model, "omega0"),
            dpp=_get_float(model, "dpp"), dqq=_get_float(model, "dqq", 0.0),
            dpq=_get_float(model, "dpq", 0.0), dim=_get_int(model, "dim", 1),
            hbar=_get_float(model, "hbar", 1.0), mass=_get_float(model, "mass", 1.0))
        src = model
    else:
        raise ConfigError("missing [model] section")
    a = _floats(src.get("a", "0"))
    shift = shift_frame(p.omega0 / np.sqrt(p.mass), np.asarray(a) / p.mass, p.dim)
    return validate_params(p), shift


def parse_grid(cp, dim: int = 1) -> tuple[PhaseGrid | None, bool]:
    g = _section(cp, "grid")
    if not g:
        return None, False
    try:
        grid = PhaseGrid(_get_int(g, "dim", dim), _get_float(g, "lx"), _get_float(g, "lv"),
                         _get_int(g, "nx"), _get_int(g, "nv"))
    except ValueError as exc:
        raise ConfigError(f"[grid]: {exc}") from exc
    auto = g.get("auto", "false").strip().lower() in ("1", "true", "yes", "on")
    return grid, auto


def load_config(path, scenario: str, overrides: dict | None = None) -> RunConfig:
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}")
    cp = configparser.ConfigParser()
    try:
        read = cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not read:
        raise ConfigError(f"cannot read config {path}")
    return build_config(cp, scenario, overrides or {}, base=Path(path).parent)


def build_config(cp: configparser.ConfigParser, scenario: str, overrides: dict,
                 base: Path = Path(".")) -> RunConfig:
    params, shift = parse_params(cp)
    grid, auto = parse_grid(cp, params.dim)
    run = _section(cp, "run")
    run.update({k: v for k, v in overrides.items() if v is not None})
    declared = run.get("scenario")
    if declared and declared != scenario:
        raise ConfigError(f"config declares scenario {declared!r}, invoked as {scenario!r}")
    if grid is not None and grid.dim != params.dim:
        raise ConfigError("[grid] dim differs from [model] dim")
    if scenario in NEEDS_GRID and grid is None:
        raise ConfigError(f"scenario {scenario!r} needs a [grid] section")

    times = tuple(_floats(run["times"])) if "times" in run else ()
    if scenario in NEEDS_TIMES:
        if not times:
            raise ConfigError(f"scenario {scenario!r} needs [run] times")
        if any(t <= 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("times must be positive and strictly increasing")

    out = Path(run.get("output", f"qfp_{scenario}"))
    if not out.is_absolute():
        out = base / out
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")

    opts = {}
    for key in ("generator", "kappa_variant", "scheme"):
        if key in run:
            opts[key] = run[key].strip()
    for key in ("dt", "band_rate", "c_stab"):
        if key in run:
            opts[key] = _get_float(run, key)
    for key in ("band", "order"):
        if key in run:
            opts[key] = _get_int(run, key)
    if "p_norms" in run:
        opts["p_norms"] = tuple(float(s) if s.strip() not in ("inf", "infinity") else float("inf")
                                for s in run["p_norms"].split(","))
    if "measure" in run:
        opts["measure"] = run["measure"].strip().lower() in ("1", "true", "yes", "on")

    initial = _section(cp, "initial")
    if "path" in initial and not Path(initial["path"]).is_absolute():
        initial["path"] = str(base / initial["path"])
    source = {s: dict(cp.items(s)) for s in cp.sections()}
    return RunConfig(scenario, params, params.unit_mass(), shift, grid, auto, times, out,
                     _get_int(run, "seed", 0), initial, opts, source)


def initial_field(cfg: RunConfig) -> WignerField:
    """Build w0 from [initial]; normalized to unit mass once, here, unless normalize = false."""
    from .equilibrium import steady_state

    spec = dict(cfg.initial)
    kind = spec.get("kind", "gaussian").strip()
    g = cfg.grid
    if kind == "gaussian":
        mean = _floats(spec.get("mean", "0, 0"))
        c = _floats(spec.get("cov", "1, 0, 1"))
        w = gaussian(g, (mean[0], mean[1]), ((c[0], c[1]), (c[1], c[2])))
    elif kind == "mixture":
        comps = [_floats(part) for part in spec.get("components", "").split("|") if part.strip()]
        if not comps or any(len(c) != 6 for c in comps):
            raise ConfigError("mixture components need 'weight, mx, mv, cxx, cxv, cvv' separated by '|'")
        w = gaussian_mixture(g, [c[0] for c in comps], [(c[1], c[2]) for c in comps],
                             [((c[3], c[4]), (c[4], c[5])) for c in comps])
    elif kind == "signed-mixture":
        sep = _get_float(spec, "separation", 3.5)
        w = signed_mixture(g, _get_float(spec, "plus", 1.5), _get_float(spec, "minus", 0.5),
                           (-sep, 0.0), (sep, 0.0), _get_float(spec, "width", 0.6))
    elif kind == "steady":
        ss = steady_state(cfg.kinetic)
        dx, dv = (_floats(spec.get("shift", "0, 0")) + [0.0, 0.0])[:2]
        x, xi = g.mesh()
        w = WignerField(g, ss(x - dx, xi - dv))
    elif kind == "csv":
        if "path" not in spec:
            raise ConfigError("[initial] kind = csv needs path")
        w = read_field(spec["path"])
        if w.grid != g:
            raise ConfigError("CSV grid differs from [grid]")
    else:
        raise ConfigError(f"unknown initial kind {kind!r}")
    if spec.get("normalize", "true").strip().lower() in ("1", "true", "yes", "on"):
        w = w.normalized()
    return w
