"""Run configuration: a TOML file with four sections, overridden by flags.

    [problem]     nonlinearity, coefficients, a
    [grids]       kmax, lambda_max, n_grid, profile_n, spectrum_n,
                  secondary_steps, morse_every
    [tolerances]  quad_rel, quad_abs, max_subdivisions, d_tol
    [output]      out, json, svg, morse
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class Problem:
    nonlinearity: str = "cubic"
    coefficients: list = field(default_factory=list)
    a: float = 1.0


@dataclass
class Grids:
    kmax: int = 2
    lambda_max: float = 15.0
    n_grid: int = 200
    profile_n: int = 200
    spectrum_n: int = 2000
    secondary_steps: int = 200
    morse_every: int = 0


@dataclass
class Tolerances:
    quad_rel: float = 1e-11
    quad_abs: float = 1e-14
    max_subdivisions: int = 256
    d_tol: float = 1e-6


@dataclass
class Output:
    out: str = "out"
    json: bool = True
    svg: bool = True
    morse: bool = False


@dataclass
class Config:
    problem: Problem = field(default_factory=Problem)
    grids: Grids = field(default_factory=Grids)
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: Output = field(default_factory=Output)

    def as_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {"problem": Problem, "grids": Grids, "tolerances": Tolerances, "output": Output}

# flag name -> (section, key)
FLAG_KEYS = {
    "nonlinearity": ("problem", "nonlinearity"),
    "a": ("problem", "a"),
    "kmax": ("grids", "kmax"),
    "lambda_max": ("grids", "lambda_max"),
    "grid": ("grids", "n_grid"),
    "out": ("output", "out"),
    "json": ("output", "json"),
    "svg": ("output", "svg"),
}


def _coerce(section: str, key: str, value, kind):
    where = f"[{section}] {key}"
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true or false")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string")
        return value
    if kind is list:
        if not isinstance(value, list) or not all(
            isinstance(c, (int, float)) and not isinstance(c, bool) for c in value
        ):
            raise ConfigError(f"{where} must be a list of numbers")
        return [float(c) for c in value]
    raise ConfigError(f"{where}: unsupported type")


def _types(cls) -> dict:
    defaults = cls()
    return {f.name: type(getattr(defaults, f.name)) for f in fields(cls)}


def validate(cfg: Config) -> Config:
    p, g, t = cfg.problem, cfg.grids, cfg.tolerances
    if p.nonlinearity not in ("cubic", "sine", "custom"):
        raise ConfigError("[problem] nonlinearity must be cubic, sine or custom")
    if p.nonlinearity == "custom" and not p.coefficients:
        raise ConfigError("[problem] coefficients are required for a custom nonlinearity")
    if not p.a > 0:
        raise ConfigError("[problem] a must be positive")
    if g.kmax < 1:
        raise ConfigError("[grids] kmax must be >= 1")
    if not g.lambda_max > 0:
        raise ConfigError("[grids] lambda_max must be positive")
    for key in ("n_grid", "profile_n"):
        if getattr(g, key) < 2:
            raise ConfigError(f"[grids] {key} must be >= 2")
    if g.spectrum_n < 10:
        raise ConfigError("[grids] spectrum_n must be >= 10")
    if g.secondary_steps < 1:
        raise ConfigError("[grids] secondary_steps must be >= 1")
    if g.morse_every < 0:
        raise ConfigError("[grids] morse_every must be >= 0")
    if not (0 < t.quad_rel < 1 and 0 < t.quad_abs < 1):
        raise ConfigError("[tolerances] quad_rel and quad_abs must lie in (0, 1)")
    if t.max_subdivisions < 1:
        raise ConfigError("[tolerances] max_subdivisions must be >= 1")
    if not t.d_tol > 0:
        raise ConfigError("[tolerances] d_tol must be positive")
    return cfg


def from_mapping(data: dict) -> Config:
    cfg = Config()
    for section, body in data.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        target = getattr(cfg, section)
        types = _types(_SECTIONS[section])
        for key, value in body.items():
            if key not in types:
                raise ConfigError(f"unknown key [{section}] {key}")
            setattr(target, key, _coerce(section, key, value, types[key]))
    return cfg


def load_config(path: str | None = None, overrides: dict | None = None) -> Config:
    """Defaults, then the file at ``path``, then non-None ``overrides`` (flag names)."""
    data = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    cfg = from_mapping(data)
    for name, value in (overrides or {}).items():
        if value is None:
            continue
        if name not in FLAG_KEYS:
            raise ConfigError(f"unknown override {name}")
        section, key = FLAG_KEYS[name]
        kind = _types(_SECTIONS[section])[key]
        setattr(getattr(cfg, section), key, _coerce(section, key, value, kind))
    return validate(cfg)
