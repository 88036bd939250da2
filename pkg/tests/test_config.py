from pathlib import Path

import pytest

from lrlab import config
from lrlab.config import DEFAULT_TOLERANCES, load_config, output_dir, validate, worker_cap
from lrlab.errors import ConfigError
from lrlab.scenarios import SCENARIOS

CONFIGS = Path(__file__).parent.parent / "configs"


def test_defaults_are_merged():
    cfg = validate({"scenarios": ["dyson"], "dyson": {"n_max": 3}})
    assert cfg.scenarios == ("dyson",)
    assert cfg.params["dyson"]["n_max"] == 3
    assert cfg.params["dyson"]["t"] == SCENARIOS["dyson"].defaults["t"]
    assert cfg.tolerances == DEFAULT_TOLERANCES
    assert cfg.seed == 0


def test_int_accepted_for_float_key():
    cfg = validate({"scenarios": ["dyson"], "dyson": {"t": 1}})
    assert cfg.params["dyson"]["t"] == 1.0 and isinstance(cfg.params["dyson"]["t"], float)


def test_config_hash_tracks_parameters():
    a = validate({"scenarios": ["dyson"]})
    b = validate({"scenarios": ["dyson"], "dyson": {"t": 0.5}})
    c = validate({"scenarios": ["dyson"], "dyson": {"t": 0.7}})
    assert a.hash == b.hash
    assert a.hash != c.hash
    assert len(a.hash) == 64


@pytest.mark.parametrize("raw, message", [
    ({"scenarios": []}, "non-empty"),
    ({}, "non-empty"),
    ({"scenarios": ["lr-quantum"]}, "unknown scenario"),
    ({"scenarios": ["dyson", "dyson"]}, "twice"),
    ({"scenarios": ["dyson"], "colour": 1}, "unknown keys"),
    ({"scenarios": ["dyson"], "dyson": {"order": 2}}, "unknown key"),
    ({"scenarios": ["dyson"], "dyson": {"n_max": 2.5}}, "expected int"),
    ({"scenarios": ["dyson"], "dyson": {"n_max": True}}, "expected int"),
    ({"scenarios": ["aklt"], "aklt": {"open_sizes": [3, "4"]}}, "expected list"),
    ({"scenarios": ["dyson"], "aklt": {}}, "not listed"),
    ({"scenarios": ["dyson"], "seed": "7"}, "seed"),
    ({"scenarios": ["dyson"], "tolerances": {"eps_num": -1.0}}, "positive"),
    ({"scenarios": ["dyson"], "tolerances": {"eps": 1e-9}}, "unknown tolerance"),
])
def test_invalid_configs(raw, message):
    with pytest.raises(ConfigError, match=message):
        validate(raw)


def test_scenario_semantic_checks():
    with pytest.raises(ConfigError, match="larger than the chain"):
        validate({"scenarios": ["gapped-approx"], "gapped-approx": {"ells": [1, 20]}})
    with pytest.raises(ConfigError, match="dense cap"):
        validate({"scenarios": ["clustering"], "clustering": {"n_sites": 14}})
    with pytest.raises(ConfigError, match="nonnegative"):
        validate({"scenarios": ["lr-spin"], "lr-spin": {"t_max": -1.0}})


def test_tolerance_override():
    cfg = validate({"scenarios": ["dyson"], "tolerances": {"eps_num": 1e-6}})
    assert cfg.tolerances["eps_num"] == 1e-6
    assert cfg.tolerances["cluster_tol"] == DEFAULT_TOLERANCES["cluster_tol"]


def test_shipped_configs_validate():
    files = sorted(CONFIGS.glob("*.toml"))
    assert len(files) >= len(SCENARIOS)
    covered = set()
    for path in files:
        cfg = load_config(path)
        covered.update(cfg.scenarios)
        assert cfg.source == str(path)
    assert covered == set(SCENARIOS)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("scenarios = [dyson\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_output_dir_precedence(monkeypatch):
    monkeypatch.delenv("LRLAB_OUT", raising=False)
    assert output_dir() == config.DEFAULT_OUT
    assert output_dir(None, "from-config") == Path("from-config")
    monkeypatch.setenv("LRLAB_OUT", "from-env")
    assert output_dir(None, "from-config") == Path("from-env")
    assert output_dir("from-cli", "from-config") == Path("from-cli")


def test_worker_cap(monkeypatch):
    monkeypatch.setenv("LRLAB_JOBS", "3")
    assert worker_cap() == 3
    assert worker_cap(2) == 2
    assert worker_cap(0) == 1
