"""Experiment configuration files (TOML).

Example::

    [map]
    degree = 2
    sin = [0.05]

    [tau]
    kind = "trig"          # "trig" | "coboundary" | "family"
    sin = [0.1591549430918953]

    [run]
    R = 2.0
    n = [4, 8, 16]
    strategy = "grid:512"
    seed = 1

    [output]
    json = "report.json"
    csv = "report.csv"
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .captivity import XStrategy
from .circle_map import CircleMap, InvalidMapError
from .cocycle import PerturbationFamily, RoofFunction, TrigRoof, coboundary_from, fourier_basis
from .trig import TrigPoly


class ConfigError(ValueError):
    """Invalid or unreadable configuration; the message names the offending field."""


_SECTIONS = {"map", "tau", "run", "output"}


@dataclass
class ExperimentConfig:
    cmap: CircleMap
    tau: RoofFunction | None = None
    family: PerturbationFamily | None = None
    R: float | None = None
    ns: list[int] = field(default_factory=lambda: [4, 8])
    strategy: XStrategy = field(default_factory=XStrategy)
    rho: float | None = None
    samples: int | None = None
    seed: int | None = None
    workers: int | None = None
    json_path: str | None = None
    csv_path: str | None = None
    extra: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def roof(self) -> RoofFunction:
        """tau itself, or the base of the family."""
        if self.tau is not None:
            return self.tau
        if self.family is not None:
            return self.family.base
        raise ConfigError("tau: no roof function configured")


def _get(section: dict, key: str, where: str, kind, default: Any = ..., check=None):
    if key not in section:
        if default is ...:
            raise ConfigError(f"{where}.{key}: missing required field")
        return default
    value = section[key]
    if kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)
        value = float(value) if ok else value
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind is str:
        ok = isinstance(value, str)
    elif kind == "floats":
        ok = isinstance(value, list) and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        )
        value = [float(v) for v in value] if ok else value
    elif kind == "ints":
        ok = isinstance(value, list) and all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    else:
        raise TypeError(kind)
    if not ok:
        name = {float: "a number", int: "an integer", str: "a string"}.get(kind, f"a list of {kind}")
        raise ConfigError(f"{where}.{key}: expected {name}, got {value!r}")
    if check is not None:
        message = check(value)
        if message:
            raise ConfigError(f"{where}.{key}: {message}")
    return value


def _poly(section: dict, where: str, prefix: str = "") -> TrigPoly:
    return TrigPoly(
        _get(section, prefix + "sin", where, "floats", []),
        _get(section, prefix + "cos", where, "floats", []),
        _get(section, prefix + "const", where, float, 0.0),
    )


def parse_config(data: dict) -> ExperimentConfig:
    unknown = set(data) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    for name in _SECTIONS & set(data):
        if not isinstance(data[name], dict):
            raise ConfigError(f"{name}: expected a table")
    m = data.get("map")
    if m is None:
        raise ConfigError("map: missing required section")
    try:
        cmap = CircleMap(
            _get(m, "degree", "map", int),
            _get(m, "sin", "map", "floats", []),
            _get(m, "cos", "map", "floats", []),
        )
    except InvalidMapError as exc:
        raise ConfigError(f"map: {exc}") from None

    cfg = ExperimentConfig(cmap=cmap, raw=data)
    t = data.get("tau")
    if t is not None:
        kind = _get(t, "kind", "tau", str, "trig")
        if kind == "trig":
            cfg.tau = TrigRoof(_poly(t, "tau"))
        elif kind == "coboundary":
            phi = _poly(t, "tau", "phi_")
            cfg.tau = coboundary_from(phi, _get(t, "c", "tau", float, 0.0), cmap)
        elif kind == "family":
            K = _get(t, "K", "tau", int, 4, lambda v: None if v >= 1 else "must be >= 1")
            cfg.family = PerturbationFamily(TrigRoof(_poly(t, "tau", "base_")), fourier_basis(K))
        else:
            raise ConfigError(f"tau.kind: expected 'trig', 'coboundary' or 'family', got {kind!r}")

    r = data.get("run", {})
    positive = lambda v: None if v > 0 else "must be positive"
    cfg.R = _get(r, "R", "run", float, None, positive)
    cfg.ns = _get(r, "n", "run", "ints", cfg.ns, lambda v: None if v and min(v) >= 1 else "values must be >= 1")
    strat = _get(r, "strategy", "run", str, "grid:64")
    try:
        cfg.strategy = XStrategy.parse(strat)
    except ValueError as exc:
        raise ConfigError(f"run.strategy: {exc}") from None
    cfg.rho = _get(r, "rho", "run", float, None, positive)
    cfg.samples = _get(r, "samples", "run", int, None, lambda v: None if v >= 1 else "must be >= 1")
    cfg.seed = _get(r, "seed", "run", int, None)
    cfg.workers = _get(r, "workers", "run", int, None, lambda v: None if v >= 1 else "must be >= 1")
    known = {"R", "n", "strategy", "rho", "samples", "seed", "workers"}
    cfg.extra = {k: v for k, v in r.items() if k not in known}

    o = data.get("output", {})
    cfg.json_path = _get(o, "json", "output", str, None)
    cfg.csv_path = _get(o, "csv", "output", str, None)

    if cfg.R is not None and cfg.tau is not None and cfg.R <= cfg.tau.sup_deriv:
        raise ConfigError(
            f"run.R: must exceed the certified ||tau'|| = {cfg.tau.sup_deriv:.12g}, got {cfg.R!r}"
        )
    if cfg.R is not None and cfg.family is not None and cfg.R <= cfg.family.uniform_sup_deriv():
        raise ConfigError(
            f"run.R: must exceed the family bound sup_t ||tau_t'|| <= {cfg.family.uniform_sup_deriv():.12g}"
        )
    if cfg.samples is not None and cfg.seed is None:
        raise ConfigError("run.seed: required whenever run.samples is set")
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data)
