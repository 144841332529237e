"""Experiment configuration: INI files with a fixed, flat key schema.

Example::

    [geometry]
    dimension = 1
    layer_bounds = 0, 0.5, 1
    spacing = 0.0025

    [coefficients]
    alpha = 1, 1
    beta = 1, 4
    gamma = 2, 2
    tau = 0.5, 2

    [run]
    horizon_crossings = 3

    [initial]
    a_potential = 0.25 | 0.2 | 0.1
    a_pressure = 0.7 | 0.15 | 1

Bump fields are ``center | radius | amplitude`` triples (the centre is a
comma list in 2D/3D) separated by ``;``.  Unknown sections or keys raise
:class:`ConfigError`.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields
from pathlib import Path

from .coefficients import MediumCoefficients
from .errors import ConfigError
from .grid import GeometrySpec


@dataclass
class BumpSpec:
    center: tuple
    radius: float
    amplitude: float = 1.0


@dataclass
class GeometryBlock:
    dimension: int
    layer_bounds: tuple
    spacing: float
    center: tuple | None = None

    def spec(self) -> GeometrySpec:
        return GeometrySpec(self.dimension, self.layer_bounds, self.spacing, self.center)


@dataclass
class MultiplierBlock:
    x0: tuple | None = None          # default: box centre (1D: left end)
    delta0: float = 0.0
    c2: float | None = None
    strict: bool = True


@dataclass
class RunBlock:
    horizon: float | None = None
    horizon_crossings: float | None = None
    cfl: float = 0.9
    seed: int = 0
    tol: float = 1e-8
    max_iter: int = 500
    trials: int = 4
    support: str = "full"
    form: str = "combined"
    filter_cutoff: float | None = 0.7
    t0_threshold: float = 0.1


@dataclass
class InitialBlock:
    mode: str = "bumps"              # bumps | random | zero
    a_potential: list = field(default_factory=list)
    a_pressure: list = field(default_factory=list)
    b_potential: list = field(default_factory=list)
    b_pressure: list = field(default_factory=list)


@dataclass
class OutputBlock:
    directory: str = "out"
    snapshot_every: int = 0
    energy_every: int = 1
    trace_stride: int = 1


@dataclass
class ExperimentConfig:
    geometry: GeometryBlock
    coefficients: MediumCoefficients
    multiplier: MultiplierBlock = field(default_factory=MultiplierBlock)
    run: RunBlock = field(default_factory=RunBlock)
    initial: InitialBlock = field(default_factory=InitialBlock)
    output: OutputBlock = field(default_factory=OutputBlock)
    source: str | None = None


# ---------------------------------------------------------------------------
# parsing helpers


def _floats(text: str, key: str) -> tuple:
    try:
        return tuple(float(v) for v in text.replace(" ", "").split(",") if v != "")
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a comma-separated list of numbers, got {text!r}") from exc


def _bumps(text: str, key: str) -> list:
    out = []
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        parts = [p.strip() for p in chunk.split("|")]
        if len(parts) not in (2, 3):
            raise ConfigError(f"{key}: each bump is 'center | radius [| amplitude]', got {chunk!r}")
        c = _floats(parts[0], key)
        try:
            r = float(parts[1])
            a = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError as exc:
            raise ConfigError(f"{key}: bad number in {chunk!r}") from exc
        if r <= 0:
            raise ConfigError(f"{key}: bump radius must be positive")
        out.append(BumpSpec(c, r, a))
    return out


def _optional_float(text: str, key: str):
    if text.strip().lower() in ("", "none"):
        return None
    return _float(text, key)


def _float(text: str, key: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from exc


def _int(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from exc


def _str(text: str, key: str) -> str:
    return text.strip()


def _bool(text: str, key: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


_SCHEMA = {
    "geometry": {"dimension": _int, "layer_bounds": _floats, "spacing": _float, "center": _floats},
    "coefficients": {"alpha": _floats, "beta": _floats, "gamma": _floats, "tau": _floats},
    "multiplier": {"x0": _floats, "delta0": _float, "c2": _optional_float, "strict": _bool},
    "run": {"horizon": _float, "horizon_crossings": _float, "cfl": _float, "seed": _int, "tol": _float,
            "max_iter": _int, "trials": _int, "support": _str, "form": _str,
            "filter_cutoff": _optional_float, "t0_threshold": _float},
    "initial": {"mode": _str, "a_potential": _bumps, "a_pressure": _bumps, "b_potential": _bumps,
                "b_pressure": _bumps},
    "output": {"directory": _str, "snapshot_every": _int, "energy_every": _int, "trace_stride": _int},
}
_REQUIRED = ("geometry", "coefficients")


def _section(cp, name) -> dict:
    if not cp.has_section(name):
        return {}
    schema = _SCHEMA[name]
    out = {}
    for key, raw in cp.items(name):
        if key not in schema:
            raise ConfigError(f"unknown key [{name}] {key}")
        out[key] = schema[key](raw.strip(), f"[{name}] {key}")
    return out


def _validate(cfg: ExperimentConfig):
    gm, run = cfg.geometry, cfg.run
    if gm.dimension not in (1, 2, 3):
        raise ConfigError("[geometry] dimension must be 1, 2 or 3")
    if not gm.spacing > 0:
        raise ConfigError("[geometry] spacing must be positive")
    if len(cfg.coefficients.alpha) != len(gm.layer_bounds) - 1:
        raise ConfigError("coefficient lists need one value per layer (len(layer_bounds) - 1)")
    if run.horizon is not None and run.horizon_crossings is not None:
        raise ConfigError("[run] give either horizon or horizon_crossings, not both")
    if run.horizon is not None and not run.horizon > 0:
        raise ConfigError("[run] horizon must be positive")
    if run.horizon_crossings is not None and not run.horizon_crossings > 0:
        raise ConfigError("[run] horizon_crossings must be positive")
    if not 0 < run.cfl <= 1:
        raise ConfigError("[run] cfl must lie in (0, 1]")
    if run.tol <= 0 or run.max_iter < 0 or run.trials < 1:
        raise ConfigError("[run] tol > 0, max_iter >= 0 and trials >= 1 are required")
    if run.support not in ("full", "near_s1"):
        raise ConfigError("[run] support must be 'full' or 'near_s1'")
    if run.form not in ("combined", "separated"):
        raise ConfigError("[run] form must be 'combined' or 'separated'")
    if cfg.initial.mode not in ("bumps", "random", "zero"):
        raise ConfigError("[initial] mode must be bumps, random or zero")
    for name in ("a_potential", "a_pressure", "b_potential", "b_pressure"):
        for b in getattr(cfg.initial, name):
            if len(b.center) != gm.dimension:
                raise ConfigError(f"[initial] {name}: centre needs {gm.dimension} coordinates")
    if cfg.multiplier.x0 is not None and len(cfg.multiplier.x0) != gm.dimension:
        raise ConfigError(f"[multiplier] x0 needs {gm.dimension} coordinates")
    if cfg.multiplier.delta0 < 0:
        raise ConfigError("[multiplier] delta0 must be non-negative")


def parse_config(text: str, source: str | None = None) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        cp.read_string(text, source=source or "<string>")
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    for s in cp.sections():
        if s not in _SCHEMA:
            raise ConfigError(f"unknown section [{s}]")
    for s in _REQUIRED:
        if not cp.has_section(s):
            raise ConfigError(f"missing section [{s}]")
    geo = _section(cp, "geometry")
    for k in ("dimension", "layer_bounds", "spacing"):
        if k not in geo:
            raise ConfigError(f"missing key [geometry] {k}")
    co = _section(cp, "coefficients")
    for k in ("alpha", "beta", "gamma", "tau"):
        if k not in co:
            raise ConfigError(f"missing key [coefficients] {k}")
    try:
        coeffs = MediumCoefficients(**co)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[coefficients] {exc}") from exc
    cfg = ExperimentConfig(
        GeometryBlock(**geo), coeffs,
        MultiplierBlock(**_section(cp, "multiplier")),
        RunBlock(**_section(cp, "run")),
        InitialBlock(**_section(cp, "initial")),
        OutputBlock(**_section(cp, "output")),
        source,
    )
    _validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config(text, str(p))


def dump_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config` (up to float formatting)."""

    def fmt(v):
        if isinstance(v, (tuple, list)) and v and isinstance(v[0], BumpSpec):
            return "; ".join(f"{', '.join(map(repr, b.center))} | {b.radius!r} | {b.amplitude!r}" for b in v)
        if isinstance(v, (tuple, list)):
            return ", ".join(repr(float(x)) for x in v)
        return str(v)

    cp = configparser.ConfigParser(interpolation=None)
    blocks = {"geometry": cfg.geometry, "coefficients": cfg.coefficients, "multiplier": cfg.multiplier,
              "run": cfg.run, "initial": cfg.initial, "output": cfg.output}
    for name, blk in blocks.items():
        cp.add_section(name)
        for f in fields(blk):
            v = getattr(blk, f.name)
            if v is None:
                if f.name in ("c2", "filter_cutoff"):
                    cp.set(name, f.name, "none")
                continue
            if isinstance(v, list) and not v:
                continue
            cp.set(name, f.name, fmt(v))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
