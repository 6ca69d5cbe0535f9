"""Run configuration: JSON document with strict key checking.

Every run resolves its configuration against the defaults below, rejects
unknown keys, and can echo the fully resolved document so a rerun from the
echo reproduces the outputs byte for byte.
"""

from __future__ import annotations

import copy
import json

from .errors import ConfigError
from .phantom import PhantomConfig
from .unroll import UnrollConfig

DEFAULTS: dict = {
    "precision": "f64",
    "phantom": {
        "height": 32,
        "width": 32,
        "nframes": 60,
        "cardiac_period": 8.7,
        "resp_period": 23.3,
        "resp_amplitude": 2.0,
        "contraction_ratio": 0.6,
        "noise_sigma": 0.0,
        "seed": 0,
    },
    "sampling": {
        "lines_per_frame": 6,
        "navigator_lines": 2,
        "start_index": 1,
    },
    "graph": {
        "k": 10,
        "sigma": None,
    },
    "unroll": {
        "n_iterations": 4,
        "lam1": 0.05,
        "lam2": 0.05,
        "train_lam1": True,
        "train_lam2": True,
        "n_outer": 2,
        "epochs_per_outer": 50,
        "batch_frames": 15,
        "loss_margin": 2,
        "lr": 1e-3,
        "seed": 0,
        "n_layers": 3,
        "n_filters": 8,
        "kernel_size": 3,
        "use_norm": False,
    },
    "compare": {
        "train_seed": 0,
        "test_seed": 1,
    },
}


def _merge(defaults: dict, overrides: dict, path: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, value in overrides.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown configuration key: {where}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}: expected an object")
            out[key] = _merge(defaults[key], value, where)
        else:
            out[key] = value
    return out


def resolve_config(overrides: dict | None = None) -> dict:
    """Merge user overrides into the defaults, rejecting unknown keys."""
    if overrides is None:
        overrides = {}
    if not isinstance(overrides, dict):
        raise ConfigError("configuration document must be a JSON object")
    cfg = _merge(DEFAULTS, overrides)
    if cfg["precision"] not in ("f32", "f64"):
        raise ConfigError("precision must be 'f32' or 'f64'")
    return cfg


def load_config(path: str | None) -> dict:
    if path is None:
        return resolve_config({})
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return resolve_config(doc)


def effective_config_json(cfg: dict) -> str:
    """Deterministic serialization of a resolved configuration."""
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"


def phantom_config(cfg: dict) -> PhantomConfig:
    try:
        return PhantomConfig(**cfg["phantom"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid phantom configuration: {exc}") from exc


def unroll_config(cfg: dict) -> UnrollConfig:
    try:
        return UnrollConfig(**cfg["unroll"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid unroll configuration: {exc}") from exc
