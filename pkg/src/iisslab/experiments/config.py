"""Run configuration: YAML schema, defaults and per-scenario parameter sets.

The config file is a single YAML mapping; every key is optional and unknown
keys are rejected by name.  Scenario parameters can be overridden globally
from the command line (seed, out, dt, n).
"""

from __future__ import annotations

import copy
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

__all__ = ["ConfigError", "RunConfig", "DEFAULT_SCENARIO_PARAMS",
           "default_config", "load_config", "scenario_rng"]

PI2 = math.pi**2


class ConfigError(ValueError):
    """Malformed or unknown configuration content."""


DEFAULT_SCENARIO_PARAMS: dict[str, dict] = {
    "linear_unbounded": {
        "b_values": [1.0, 2.0],
        "c_values": [1.0, 2.0, 4.0],
        "dt": 0.01,
        "horizon": 5.0,
        "checkpoint_times": [1.0, 2.0, 5.0],
        "gain_slopes": [1.0, 10.0, 100.0],
        "witness_c_factors": [2.0, 5.0, 10.0],  # witnesses c = a+1 and factor*a
        "grid_margin": 500,
        "rel_tol": 0.01,
    },
    "linear_l2l4": {
        "n": 200,
        "w": 1.0,
        "dt": 1.0e-4,
        "horizon": 5.0,
        "num_inputs": 20,
        "amplitude": 1.0,
        "switch_every": 0.25,
    },
    "bilinear_instability": {
        "n": 200,
        "dt": 1.0e-3,
        "horizon": 5.0,
        "c_values": [0.0, 5.0, PI2, 12.0, 15.0],
        "flip_offset": 0.5,
        "rate_rel_tol": 0.05,
    },
    "reaction_diffusion": {
        "n": 200,
        "c": 1.0,
        "L_values": [0.5, 0.9, 1.0, 2.0],
        "iss_L_values": [0.5, 0.9],
        "dt": 2.5e-4,
        "horizon": 5.0,
        "num_inputs": 20,
        "amplitude": 2.0,
        "switch_every": 0.25,
        "coefficient_w": 1.0,
        "coefficient_L_values": [0.5, 0.7, 0.9, 0.95, 0.99],
    },
    "lp_iss": {
        "n": 200,
        "dt": 5.0e-4,
        "horizon": 5.0,
        "num_inputs": 20,
        "amplitude": 1.0,
        "switch_every": 0.25,
        "p_values": [1, 2],
        "impulse_level": 50.0,
        "impulse_width": 0.01,
    },
    "bilinear_bound": {
        "n": 200,
        "dt": 2.5e-4,
        "horizon": 5.0,
        "c": 1.0,
        "L_values": [0.5, 1.0, 2.0],
        "num_inputs_per_L": 20,
        "amplitude": 2.0,
        "switch_every": 0.25,
        "constant_levels": [1.0, 5.0],
    },
}

_TOP_LEVEL_KEYS = {"seed", "out", "record_every", "scenarios"}


@dataclass
class RunConfig:
    seed: int = 20260810
    out: Path = Path("out")
    record_every: int = 200
    scenarios: dict[str, dict] = field(
        default_factory=lambda: copy.deepcopy(DEFAULT_SCENARIO_PARAMS))

    def params(self, scenario: str) -> dict:
        if scenario not in self.scenarios:
            raise ConfigError(f"unknown scenario {scenario!r}; known: "
                              f"{sorted(self.scenarios)}")
        return self.scenarios[scenario]

    def override(self, seed: Optional[int] = None, out: Optional[str] = None,
                 dt: Optional[float] = None, n: Optional[int] = None) -> "RunConfig":
        if seed is not None:
            self.seed = int(seed)
        if out is not None:
            self.out = Path(out)
        for params in self.scenarios.values():
            if dt is not None and "dt" in params:
                params["dt"] = float(dt)
            if n is not None and "n" in params:
                params["n"] = int(n)
        return self


def default_config() -> RunConfig:
    return RunConfig()


def load_config(path: "str | Path | None") -> RunConfig:
    """Parse and validate a YAML config; None yields the built-in defaults."""
    cfg = default_config()
    if path is None:
        return cfg
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if raw is None:
        return cfg
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a mapping, got {type(raw).__name__}")
    unknown = set(raw) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    if "seed" in raw:
        cfg.seed = int(raw["seed"])
    if "out" in raw:
        cfg.out = Path(str(raw["out"]))
    if "record_every" in raw:
        cfg.record_every = int(raw["record_every"])
        if cfg.record_every < 1:
            raise ConfigError("record_every must be a positive integer")
    for name, params in (raw.get("scenarios") or {}).items():
        if name not in cfg.scenarios:
            raise ConfigError(f"unknown scenario {name!r}; known: "
                              f"{sorted(cfg.scenarios)}")
        if not isinstance(params, dict):
            raise ConfigError(f"scenario {name!r} must map parameter names to values")
        bad = set(params) - set(cfg.scenarios[name])
        if bad:
            raise ConfigError(f"unknown parameters for scenario {name!r}: {sorted(bad)}")
        for key, value in params.items():
            default = cfg.scenarios[name][key]
            if isinstance(default, list) and not isinstance(value, list):
                raise ConfigError(f"{name}.{key} must be a list")
            if isinstance(default, (int, float)) and not isinstance(value, (int, float)):
                raise ConfigError(f"{name}.{key} must be numeric")
            cfg.scenarios[name][key] = value
    return cfg


def scenario_rng(seed: int, scenario: str) -> np.random.Generator:
    """Deterministic per-scenario generator keyed by a stable name hash, so
    scenarios stay reproducible independently of execution order."""
    return np.random.default_rng(
        np.random.SeedSequence([seed, zlib.crc32(scenario.encode())]))
