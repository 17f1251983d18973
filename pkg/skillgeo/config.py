"""
Skillgeo configuration - loads user defaults from ~/.skillgeo/config.yaml

Users can tune solver tolerances, enumeration caps and estimator defaults.
Per-call arguments always override config values.
"""

import os

_CONFIG_PATH = os.path.expanduser("~/.skillgeo/config.yaml")
_JSON_CONFIG_PATH = os.path.expanduser("~/.skillgeo/config.json")

DEFAULTS = {
    # mdp
    "dedupe_tol": 1e-8,
    "hull_tol": 1e-7,
    "enumeration_cap": 10**6,
    "power_tol": 1e-12,
    "power_max_iter": 10**6,
    # geometry
    "misl_tol": 1e-7,
    "misl_max_iter": 10**6,
    "active_tol": 1e-4,
    "weights_tol": 1e-6,
    "tiebreak_seeds": 16,
    # wdsl
    "pwsep_tol": 1e-7,
    "subset_cap": 10**5,
    "awd_restarts": 8,
    # shared
    "tie_tol": 1e-9,
    "assumption_tol": 1e-6,
    "positive_weight": 1e-9,
    # estimators
    "c_stab": 1.0,
    "knn_k": 3,
    "n_projections": 64,
    # export
    "float_digits": 12,
}

_config = None


def get_config() -> dict:
    """Load config from ~/.skillgeo/config.yaml (or .json fallback).

    Returns merged dict: user values override DEFAULTS.
    Unknown keys are silently ignored.
    Missing file = all defaults.
    """
    global _config
    if _config is not None:
        return _config

    _config = dict(DEFAULTS)

    user = _load_yaml() or _load_json() or {}

    for key in DEFAULTS:
        if key in user:
            _config[key] = user[key]

    return _config


def get(key: str):
    """Get a single config value."""
    return get_config()[key]


def resolve(value, key: str):
    """Return ``value`` unless it is None, in which case the config value."""
    return get(key) if value is None else value


def _load_yaml() -> dict | None:
    """Try loading YAML config. Returns None if file missing or PyYAML not installed."""
    try:
        import yaml
    except ImportError:
        return None

    try:
        with open(_CONFIG_PATH) as f:
            return yaml.safe_load(f) or {}
    except FileNotFoundError:
        return None


def _load_json() -> dict | None:
    """Fallback: try loading JSON config."""
    import json

    try:
        with open(_JSON_CONFIG_PATH) as f:
            return json.load(f)
    except FileNotFoundError:
        return None
