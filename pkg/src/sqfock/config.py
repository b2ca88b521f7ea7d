"""Scenario configuration files.

Configs are TOML with four sections::

    scenario = "fig2"          # optional; must match --scenario when given

    [model]                    # ModelParams overrides (SI or simulation units)
    kerr = 1.0

    [protocol]                 # scenario knobs; defaults live in scenarios.py
    r = 1.5

    [sweep]                    # only for sweep-type scenarios
    observables = ["alpha", "dk_ratio"]
    [[sweep.axis]]
    variable = "r"
    min = 0.0
    max = 2.0
    points = 5
    scale = "linear"

    [output]
    precision = 17

Unknown sections or keys are errors.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .errors import ConfigError
from .model import ModelParams

SECTIONS = ("scenario", "model", "protocol", "sweep", "output")
AXIS_KEYS = {"variable", "min", "max", "points", "scale"}
OUTPUT_KEYS = {"precision", "path"}


@dataclass(frozen=True)
class Axis:
    variable: str
    min: float
    max: float
    points: int
    scale: str = "linear"

    def __post_init__(self):
        if self.points < 1 or int(self.points) != self.points:
            raise ConfigError(f"axis {self.variable}: points must be a positive integer")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"axis {self.variable}: scale must be 'linear' or 'log'")
        if self.scale == "log" and not (self.min > 0 and self.max > 0):
            raise ConfigError(f"axis {self.variable}: log scale needs positive bounds")
        if self.points > 1 and not self.max > self.min:
            raise ConfigError(f"axis {self.variable}: max must exceed min")

    def values(self):
        import numpy as np

        if self.points == 1:
            return np.array([float(self.min)])
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.points)
        return np.linspace(self.min, self.max, self.points)


@dataclass
class ScenarioConfig:
    scenario: str | None = None
    model: dict = field(default_factory=dict)
    protocol: dict = field(default_factory=dict)
    axes: list = field(default_factory=list)
    observables: list | None = None
    precision: int = 17
    path: str | None = None

    def canonical(self):
        """Plain-data view used for hashing and provenance."""
        return {
            "scenario": self.scenario,
            "model": dict(sorted(self.model.items())),
            "protocol": dict(sorted(self.protocol.items())),
            "axes": [vars(a) for a in self.axes],
            "observables": self.observables,
            "precision": self.precision,
        }

    def hash(self):
        blob = json.dumps(self.canonical(), sort_keys=True, default=_jsonable).encode()
        return hashlib.sha256(blob).hexdigest()


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return str(x)


def _number(section, key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be numeric, got {value!r}")
    return value


def parse(data):
    """Validate a decoded TOML mapping into a :class:`ScenarioConfig`."""
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    cfg = ScenarioConfig()
    if "scenario" in data:
        if not isinstance(data["scenario"], str):
            raise ConfigError("scenario must be a string")
        cfg.scenario = data["scenario"]

    model = data.get("model", {})
    allowed = set(ModelParams.field_names())
    bad = set(model) - allowed
    if bad:
        raise ConfigError(f"unknown model keys {sorted(bad)}; allowed: {sorted(allowed)}")
    for k, v in model.items():
        if k == "mass" and v is None:
            continue
        _number("model", k, v)
    cfg.model = dict(model)

    protocol = data.get("protocol", {})
    if not isinstance(protocol, dict):
        raise ConfigError("[protocol] must be a table")
    cfg.protocol = dict(protocol)

    sweep = data.get("sweep", {})
    bad = set(sweep) - {"axis", "observables"}
    if bad:
        raise ConfigError(f"unknown sweep keys {sorted(bad)}")
    for raw in sweep.get("axis", []):
        extra = set(raw) - AXIS_KEYS
        missing = {"variable", "min", "max", "points"} - set(raw)
        if extra or missing:
            raise ConfigError(f"sweep axis keys: unknown {sorted(extra)}, missing {sorted(missing)}")
        cfg.axes.append(Axis(
            str(raw["variable"]),
            float(_number("sweep.axis", "min", raw["min"])),
            float(_number("sweep.axis", "max", raw["max"])),
            int(_number("sweep.axis", "points", raw["points"])),
            str(raw.get("scale", "linear")),
        ))
    if "observables" in sweep:
        obs = sweep["observables"]
        if not isinstance(obs, list) or not all(isinstance(o, str) for o in obs):
            raise ConfigError("sweep.observables must be a list of names")
        cfg.observables = list(obs)

    output = data.get("output", {})
    bad = set(output) - OUTPUT_KEYS
    if bad:
        raise ConfigError(f"unknown output keys {sorted(bad)}")
    if "precision" in output:
        p = output["precision"]
        if isinstance(p, bool) or not isinstance(p, int) or not 1 <= p <= 17:
            raise ConfigError("output.precision must be an integer in [1, 17]")
        cfg.precision = p
    cfg.path = output.get("path")
    return cfg


def load(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse(data)
