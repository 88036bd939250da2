"""
lrlab Configuration
Environment settings (.env / .env.local) and validated TOML experiment configurations
"""

import hashlib
import json
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path

from dotenv import load_dotenv

from lrlab.errors import ConfigError

load_dotenv()
load_dotenv('.env.local')

# Paths
CONFIG_DIR = Path("configs")
DEFAULT_OUT = Path("reports")

DEFAULT_TOLERANCES = {
    "eps_num": 1e-8,
    "cluster_tol": 1e-8,
    "quad_tol": 1e-9,
}

TOP_LEVEL_KEYS = {"scenarios", "seed", "out", "tolerances"}


def worker_cap(jobs=None):
    """Worker count: explicit value, else LRLAB_JOBS, else 1"""
    if jobs is None:
        jobs = int(os.getenv("LRLAB_JOBS", "1"))
    return max(1, int(jobs))


def log_level():
    return os.getenv("LRLAB_LOG_LEVEL", "INFO").upper()


def output_dir(cli_out=None, config_out=None):
    """--out beats LRLAB_OUT, which beats the config file's `out`"""
    if cli_out:
        return Path(cli_out)
    env_out = os.getenv("LRLAB_OUT")
    if env_out:
        return Path(env_out)
    return Path(config_out) if config_out else DEFAULT_OUT


def config_hash(obj):
    canonical = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass(frozen=True)
class ExperimentConfig:
    scenarios: tuple
    seed: int
    out: str
    tolerances: dict
    params: dict = field(default_factory=dict)
    source: str = None

    def resolved(self):
        """Plain-data view used for hashing and report manifests"""
        return {
            "scenarios": list(self.scenarios),
            "seed": self.seed,
            "tolerances": dict(sorted(self.tolerances.items())),
            "params": {name: dict(sorted(self.params[name].items())) for name in self.scenarios},
        }

    @property
    def hash(self):
        return config_hash(self.resolved())


def _type_name(value):
    return type(value).__name__


def _check_value(scenario, key, default, value):
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif isinstance(default, str):
        ok = isinstance(value, str)
    elif isinstance(default, list):
        ok = isinstance(value, list) and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
        if ok and default and all(isinstance(v, int) for v in default):
            ok = all(isinstance(v, int) for v in value)
    else:
        ok = False
    if not ok:
        raise ConfigError(
            f"[{scenario}] {key} = {value!r} has type {_type_name(value)}, expected {_type_name(default)}")
    return value


def validate(raw, source=None):
    """Check a parsed TOML document and merge it over the scenario defaults"""
    from lrlab.scenarios import SCENARIOS

    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a table")
    unknown = set(raw) - TOP_LEVEL_KEYS - set(SCENARIOS)
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    names = raw.get("scenarios")
    if not isinstance(names, list) or not names:
        raise ConfigError("`scenarios` must be a non-empty list of scenario names")
    for name in names:
        if name not in SCENARIOS:
            raise ConfigError(f"unknown scenario {name!r}; run `lrlab list` for the choices")
    if len(set(names)) != len(names):
        raise ConfigError("a scenario is listed twice")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    out = raw.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out must be a path string")

    tolerances = dict(DEFAULT_TOLERANCES)
    overrides = raw.get("tolerances", {})
    if not isinstance(overrides, dict):
        raise ConfigError("[tolerances] must be a table")
    for key, value in overrides.items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {key!r}")
        value = _check_value("tolerances", key, DEFAULT_TOLERANCES[key], value)
        if value <= 0:
            raise ConfigError(f"tolerance {key} must be positive")
        tolerances[key] = value

    params = {}
    for name in names:
        scenario = SCENARIOS[name]
        table = raw.get(name, {})
        if not isinstance(table, dict):
            raise ConfigError(f"[{name}] must be a table")
        merged = dict(scenario.defaults)
        for key, value in table.items():
            if key not in scenario.defaults:
                raise ConfigError(f"[{name}] unknown key {key!r}")
            merged[key] = _check_value(name, key, scenario.defaults[key], value)
        scenario.check(merged)
        params[name] = merged
    for name in set(SCENARIOS) & set(raw):
        if name not in names:
            raise ConfigError(f"[{name}] is configured but not listed in `scenarios`")

    return ExperimentConfig(tuple(names), seed, out, tolerances, params, source)


def load_config(path):
    """Read and validate a TOML experiment file"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path} not found")
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return validate(raw, source=str(path))
