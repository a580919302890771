"""Experiment configuration: JSON with a fixed schema and documented defaults.

A user file is deep-merged over :data:`DEFAULTS` and the result is checked
against :data:`SCHEMA`. Unknown keys are rejected; a :class:`ConfigError`
names the offending key.
"""
from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import jsonschema

from .exceptions import ConfigError

__all__ = ["DEFAULTS", "SCHEMA", "load_config", "merge_config", "validate_config", "config_hash"]

DEFAULTS = {
    "encoder": {
        # None picks the task preset: (3, 3) jumper, (6, 4) swimmer
        "rbf_dims": None,
        "gamma": 0.3,
        "mlp_hidden": [8, 12],
    },
    "simulator": {},
    "optimizer": {
        "lambda": 50,
        "generations": 200,
        "sequential_budgets": [150, 50],
        "sigma0": 0.3,
        "seed": 0,
        "schedule": "joint",
    },
    "loss": {
        "alpha": [6.0, 0.2, 1.0, 1.0],
        "beta": [12.0, 1.0, 1.0],
    },
    "matching": {
        "target": "cross",
        "rbf_per_axis": 8,
        "grid": 50,
        "tau": 1.0,
        "torus_radii": [0.22, 0.38],
        "cross_arm_width": 0.2,
        "cross_margin": 0.1,
    },
    "analysis": {
        "encoder": "basis",
        "rbf_per_axis": 4,
        "layers": [3, 6, 12, 6, 3],
        "n_samples": 600,
        "cloud_size": 200,
        "gamma": 0.3,
    },
}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "additionalProperties": False, "required": list(required)}


SCHEMA = _obj(
    {
        "encoder": _obj(
            {
                "rbf_dims": {"type": ["array", "null"], "items": _posint, "minItems": 2, "maxItems": 3},
                "gamma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "mlp_hidden": {"type": "array", "items": _posint, "minItems": 2, "maxItems": 2},
            }
        ),
        "simulator": _obj(
            {
                "dt": _pos,
                "n_steps": _posint,
                "gravity": _num,
                "k_passive": _pos,
                "k_muscle": _pos,
                "damping": {"type": "number", "minimum": 0},
                "node_mass": _pos,
                "contact_stiffness": {"type": "number", "minimum": 0},
                "contact_damping": {"type": "number", "minimum": 0},
                "friction": {"type": "number", "minimum": 0},
                "drag": {"type": "number", "minimum": 0},
                "kappa": {"type": "number", "minimum": 0, "maximum": 1},
            }
        ),
        "optimizer": _obj(
            {
                "lambda": {"type": "integer", "minimum": 2},
                "generations": _posint,
                "sequential_budgets": {"type": "array", "items": _posint, "minItems": 2, "maxItems": 2},
                "sigma0": _pos,
                "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
                "schedule": {"enum": ["joint", "sequential"]},
            }
        ),
        "loss": _obj(
            {
                "alpha": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 4, "maxItems": 4},
                "beta": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 3, "maxItems": 3},
            }
        ),
        "matching": _obj(
            {
                "target": {"enum": ["torus", "cross"]},
                "rbf_per_axis": _posint,
                "grid": {"type": "integer", "minimum": 2},
                "tau": _pos,
                "torus_radii": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
                "cross_arm_width": _pos,
                "cross_margin": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5},
            }
        ),
        "analysis": _obj(
            {
                "encoder": {"enum": ["basis", "neural"]},
                "rbf_per_axis": _posint,
                "layers": {"type": "array", "items": _posint, "minItems": 2},
                "n_samples": {"type": "integer", "minimum": 2},
                "cloud_size": {"type": "integer", "minimum": 4},
                "gamma": {"type": ["number", "null"], "exclusiveMinimum": 0},
            }
        ),
    }
)


def merge_config(base: dict, override: dict) -> dict:
    """Recursive dict merge; ``override`` wins and neither input is modified."""
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge_config(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _key_of(err: jsonschema.ValidationError) -> str:
    path = [str(p) for p in err.absolute_path]
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        path = path + extra[:1]
    return ".".join(path) or "<root>"


def validate_config(cfg: dict) -> dict:
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        key = _key_of(err)
        raise ConfigError(f"invalid config at '{key}': {err.message}", key=key)
    t = cfg["matching"]["torus_radii"]
    if not t[0] < t[1]:
        raise ConfigError("invalid config at 'matching.torus_radii': inner radius must be smaller",
                          key="matching.torus_radii")
    return cfg


def load_config(path=None, overrides=None) -> dict:
    """Defaults, then the JSON file at ``path``, then ``overrides``; validated."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc.strerror}", key="<file>") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc.msg}", key="<file>") from exc
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object", key="<root>")
        cfg = merge_config(cfg, user)
    if overrides:
        cfg = merge_config(cfg, overrides)
    return validate_config(cfg)


def config_hash(cfg: dict) -> str:
    """SHA-256 of the canonical JSON form."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
