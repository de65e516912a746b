"""Run configuration: every tolerance and default in one place.

A config can be loaded from a JSON file (the CLI's ``--config``); unknown
keys are rejected so typos do not silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field


@dataclass
class GeometryOptions:
    dedup_rel_tol: float = 1e-12      # points closer than this (relative) are merged
    joggle_rel_magnitude: float = 1e-9
    seed: int = 0
    boundary_rel_tol: float = 1e-9    # cospherical-tie detection
    violation_rel_tol: float = 1e-7   # circumsphere strict-inside tolerance


@dataclass
class FilterOptions:
    gap_tolerance: float = 1e-7       # dominating-gap threshold, normalized space
    range_delta: float = 1e-6         # degeneracy guard in 1/(nadir - ideal + delta)


@dataclass
class ScalarizationOptions:
    rho: float = 1e-4                 # augmentation coefficient of the achievement function


@dataclass
class CrsOptions:
    population: int = 0               # 0 -> 10 * (n + 1)
    max_evals: int = 2000
    spread_tol: float = 1e-9
    seed: int = 0


@dataclass
class LocalImproveOptions:
    max_iters: int = 40
    fd_step_rel: float = 1e-6         # central-difference step, relative to box range
    min_step_rel: float = 1e-10


@dataclass
class PaintConfig:
    dominance_tolerance: float = 1e-9  # default tolerance for dominance checks
    geometry: GeometryOptions = field(default_factory=GeometryOptions)
    filter: FilterOptions = field(default_factory=FilterOptions)
    scalarization: ScalarizationOptions = field(default_factory=ScalarizationOptions)
    crs: CrsOptions = field(default_factory=CrsOptions)
    local_improve: LocalImproveOptions = field(default_factory=LocalImproveOptions)

    @classmethod
    def from_dict(cls, data: dict) -> "PaintConfig":
        cfg = cls()
        for key, value in data.items():
            if not hasattr(cfg, key):
                raise KeyError(f"unknown config key: {key!r}")
            current = getattr(cfg, key)
            if dataclasses.is_dataclass(current):
                if not isinstance(value, dict):
                    raise TypeError(f"config section {key!r} must be an object")
                for sub, subval in value.items():
                    if not hasattr(current, sub):
                        raise KeyError(f"unknown config key: {key}.{sub}")
                    setattr(current, sub, subval)
            else:
                setattr(cfg, key, value)
        return cfg

    @classmethod
    def from_json_file(cls, path: str) -> "PaintConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)
