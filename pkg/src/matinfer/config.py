"""Run configuration: one human-readable JSON file per run.

CLI flags override individual fields; the config hash recorded in the run
manifest covers the fully-resolved configuration, so a chain can always be
reproduced bit-identically from (config, seed, target).
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field

from .materials import MODELS

_DEFAULTS = {
    "model": "bump",
    "seed": 0,
    "resolution": 128,
    "out_dir": "runs/latest",
    "rig": {"fov": 0.7, "distance": 2.0},
    "summary": {
        "recipe": [
            {"op": "bins", "layout": "concentric", "k": 16, "weight": 1.0},
            {"op": "mean", "weight": 1.0},
        ],
        "weights_file": None,
    },
    "error_model": {"rel": 0.05, "floor": 1e-3},
    "sampler": {"n_samples": 2000, "alpha": None, "tau": None,
                "burn_in": 500, "freeze_after": None},
    "map": {"iters": 300, "lr": 0.1},
    "prior_overrides": {},
    "target": {"path": None, "synth": None},
}


@dataclass
class RunConfig:
    model: str
    seed: int
    resolution: int
    out_dir: str
    rig: dict
    summary: dict
    error_model: dict
    sampler: dict
    map: dict
    prior_overrides: dict = field(default_factory=dict)
    target: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; "
                             f"choose one of {', '.join(sorted(MODELS))}")
        if self.resolution < 4 or self.resolution & (self.resolution - 1):
            raise ValueError("resolution must be a power of two >= 4")

    def to_dict(self) -> dict:
        return copy.deepcopy(asdict(self))

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def save(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def make_config(overrides: dict | None = None) -> RunConfig:
    return RunConfig(**_merge(_DEFAULTS, overrides or {}))


def load_config(path: str, extra_overrides: dict | None = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if extra_overrides:
        data = _merge(data, extra_overrides)
    return make_config(data)


def set_path(overrides: dict, dotted: str, value):
    """Record a `a.b.c=value` CLI override into a nested override dict."""
    keys = dotted.split(".")
    cur = overrides
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
    try:
        cur[keys[-1]] = json.loads(value)
    except (json.JSONDecodeError, TypeError):
        cur[keys[-1]] = value
