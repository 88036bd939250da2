import numpy as np
import pytest

from lrlab.config import validate
from lrlab.errors import ConfigError
from lrlab.scenarios import SCENARIOS, ScenarioResult, _time_grid, scenario_table

ORDER = [
    "lr-spin", "lr-harmonic", "anharmonic-bounds", "thermolimit", "dyson",
    "clustering", "clustering-harmonic", "aklt", "gapped-approx",
]


def run(name, **overrides):
    cfg = validate({"scenarios": [name], name: overrides})
    return SCENARIOS[name].run(cfg.params[name], seed=cfg.seed, tolerances=cfg.tolerances)


def test_registry_order_and_table():
    assert list(SCENARIOS) == ORDER
    table = scenario_table()
    assert len(table) == 9
    assert list(table["name"]) == ORDER
    assert table["theorem"].str.len().min() > 10
    assert scenario_table().equals(table)


def test_defaults_pass_their_own_checks():
    cfg = validate({"scenarios": ORDER})
    for name in ORDER:
        assert cfg.params[name] == SCENARIOS[name].defaults


def test_time_grid():
    grid = _time_grid(2.0, step=0.05)
    assert len(grid) == 41 and grid[-1] == 2.0 and grid[1] == 0.05
    assert np.array_equal(_time_grid(3.0, points=31), np.round(np.linspace(0, 3, 31), 12))


def test_result_status_transitions():
    result = ScenarioResult("x")
    result.warn("fit inconclusive")
    assert result.status == "warn"
    assert not result.require(False, "bound violated")
    assert result.status == "fail"
    result.warn("later warning")
    assert result.status == "fail"
    assert result.warnings == ["fit inconclusive", "bound violated", "later warning"]


@pytest.mark.parametrize("name, overrides", [
    ("lr-spin", {"A_site": 3, "B_site": 3}),
    ("lr-spin", {"model": "xy"}),
    ("thermolimit", {"sizes": [5, 6]}),
    ("clustering", {"max_translation": 11}),
    ("aklt", {"factorization_ells": [1, 5]}),
    ("aklt", {"periodic_sizes": [14]}),
    ("lr-harmonic", {"separations": [40]}),
    ("anharmonic-bounds", {"measures_file": "no/such/file.json"}),
    ("gapped-approx", {"A_size": 10}),
    ("gapped-approx", {"method": "simpson"}),
])
def test_semantic_rejections(name, overrides):
    with pytest.raises(ConfigError, match=name):
        validate({"scenarios": [name], name: overrides})


def test_lr_spin_small_chain():
    result = run("lr-spin", n_sites=5, B_site=4, t_max=0.5, t_step=0.1)
    assert result.status == "pass", result.warnings
    assert len(result.tables["sweep_series"]) == 6
    assert set(result.tables) == {"sweep_series", "sweep_exponential", "random_pairs", "series_oracle"}
    assert result.summary["series_oracle_passed"]
    assert result.summary["theorem"] == SCENARIOS["lr-spin"].theorem


def test_lr_spin_is_deterministic():
    first = run("lr-spin", n_sites=4, B_site=3, t_max=0.3, t_step=0.1, oracle_sites=0)
    second = run("lr-spin", n_sites=4, B_site=3, t_max=0.3, t_step=0.1, oracle_sites=0)
    assert first.summary == second.summary
    assert first.tables["random_pairs"].equals(second.tables["random_pairs"])


def test_dyson_default():
    result = run("dyson")
    assert result.status == "pass", result.warnings
    table = result.tables["dyson"]
    assert list(table["order"]) == [0, 1, 2, 3, 4, 5]
    assert table["pass"].all()


def test_clustering_harmonic_default():
    result = run("clustering-harmonic")
    assert result.status != "fail", result.warnings
    rates = result.summary["fitted_rates"]
    assert 0 < rates[0] < rates[1]


def test_anharmonic_growth_factor():
    result = run("anharmonic-bounds", t_points=5, separations=[2, 4])
    assert result.status == "pass", result.warnings
    table = result.tables["bounds"]
    assert np.allclose(table["ratio"], table["expected_ratio"])
    assert "multisite" in table.columns
    tail = result.tables["volume_tail"]["tail"]
    assert tail.iloc[0] == 0.0 and tail.iloc[-1] > 0.0


def test_gapped_approx_small_chain():
    result = run("gapped-approx", n_sites=8, A_size=4, ells=[1])
    assert result.status != "fail", result.warnings
    table = result.tables["pipeline"]
    assert list(table["ell"]) == [1]
    assert table["pb_norm"].iloc[0] <= 1 + 1e-8
    assert result.summary["reports"][0]["alpha"] == pytest.approx(2.0)


@pytest.mark.slow
def test_lr_spin_default_sweep():
    result = run("lr-spin")
    assert result.status == "pass", result.warnings
    assert len(result.tables["sweep_series"]) == 41
    assert len(result.tables["sweep_exponential"]) == 41


@pytest.mark.slow
def test_lr_harmonic_default():
    result = run("lr-harmonic")
    assert result.status == "pass", result.warnings
    assert result.summary["max_oracle_difference"] <= 1e-8
    assert result.tables["infinite_kernels"]["max_difference"].max() <= 1e-6


@pytest.mark.slow
def test_aklt_default():
    result = run("aklt")
    assert result.status == "pass", result.warnings
    gaps = result.tables["gaps"]
    assert (gaps.loc[gaps["boundary"] == "open", "degeneracy"] == 4).all()
    assert result.summary["entropy_cross_check"] < 1e-10


@pytest.mark.slow
def test_thermolimit_default():
    result = run("thermolimit")
    assert result.status in ("pass", "warn"), result.warnings
    assert result.tables["volume_convergence"]["pass"].all()


@pytest.mark.slow
def test_clustering_default():
    result = run("clustering")
    assert result.status != "fail", result.warnings
    assert result.summary["gamma"] > 0


@pytest.mark.slow
def test_gapped_approx_default():
    result = run("gapped-approx")
    assert result.status != "fail", result.warnings
    assert list(result.tables["pipeline"]["ell"]) == [1, 2, 3]
