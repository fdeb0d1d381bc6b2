"""TOML experiment configuration with dotted ``--set`` overrides."""

from __future__ import annotations

import copy
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .experiments import DEFAULTS


class ConfigError(ValueError):
    pass


def parse_value(text):
    """Interpret an override value as a TOML literal, falling back to a string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_override(cfg, item):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, value = item.split("=", 1)
    parts = key.strip().split(".")
    node = cfg
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {key!r} descends into a non-table value")
    node[parts[-1]] = parse_value(value.strip())


def _merge(base, extra):
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _merge(base[k], v)
        else:
            base[k] = v
    return base


def load_config(experiment, path=None, overrides=()):
    """Defaults for ``experiment`` updated by the TOML file and then the overrides."""
    if experiment not in DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {sorted(DEFAULTS)}")
    cfg = {"experiment": experiment, "seed": 0, "output": {}}
    _merge(cfg, copy.deepcopy(DEFAULTS[experiment]))
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        if data.get("experiment", experiment) != experiment:
            raise ConfigError(f"config is for {data['experiment']!r}, not {experiment!r}")
        _merge(cfg, data)
    for item in overrides:
        apply_override(cfg, item)
    validate(cfg)
    return cfg


def validate(cfg):
    known = DEFAULTS[cfg["experiment"]]
    for section in ("system", "numerics"):
        extra = set(cfg.get(section, {})) - set(known[section])
        if extra:
            raise ConfigError(f"unknown {section} keys: {sorted(extra)}")
    num = cfg["numerics"]
    for key in ("T", "dt", "sample_every", "T_fit", "fit_dt", "tol", "M"):
        if key in num and not (isinstance(num[key], (int, float)) and num[key] > 0):
            raise ConfigError(f"numerics.{key} must be a positive number")
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
