import json

import pandas as pd
import pytest

from lrlab.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, EXIT_WARN, exit_code, main
from lrlab.scenarios import SCENARIOS

DYSON = """
scenarios = ["dyson"]
seed = 3

[dyson]
n_max = 4
"""


def write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_exit_code_mapping():
    assert exit_code(["pass", "pass"]) == EXIT_OK
    assert exit_code(["pass", "warn"]) == EXIT_WARN
    assert exit_code(["warn", "fail", "pass"]) == EXIT_FAIL
    assert exit_code([]) == EXIT_OK


def test_list_prints_every_scenario(capsys):
    assert main(["list"]) == EXIT_OK
    out = capsys.readouterr().out
    positions = [out.index(f"\n{name}\n") for name in SCENARIOS]
    assert positions == sorted(positions)
    for scenario in SCENARIOS.values():
        assert scenario.theorem in out


def test_validate(tmp_path, capsys):
    assert main(["validate", str(write(tmp_path, DYSON))]) == EXIT_OK
    assert "✓" in capsys.readouterr().out
    assert main(["validate", str(write(tmp_path, "scenarios = []\n", "empty.toml"))]) == EXIT_CONFIG
    assert "non-empty" in capsys.readouterr().err


def test_run_rejects_wide_band(tmp_path, capsys):
    path = write(tmp_path, 'scenarios = ["gapped-approx"]\n\n[gapped-approx]\nells = [12]\n')
    assert main(["run", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG
    assert "larger than the chain" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_run_writes_reports(tmp_path):
    out = tmp_path / "reports"
    assert main(["run", str(write(tmp_path, DYSON)), "--out", str(out)]) == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["scenarios"] == [{"name": "dyson", "status": "pass"}]
    assert manifest["exit_code"] == EXIT_OK
    summary = json.loads((out / "dyson" / "summary.json").read_text())
    assert summary["config_hash"] == manifest["config_hash"]
    assert summary["tolerances"]["eps_num"] == 1e-8
    assert summary["seed"] == 3
    assert summary["tables"] == ["dyson.csv"]
    table = pd.read_csv(out / "dyson" / "dyson.csv")
    assert len(table) == 5


def test_repeat_runs_are_byte_identical(tmp_path):
    path = write(tmp_path, DYSON)
    assert main(["run", str(path), "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["run", str(path), "--out", str(tmp_path / "b"), "--jobs", "2"]) == EXIT_OK
    for name in ("manifest.json", "dyson/summary.json", "dyson/dyson.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_env_out_directory(tmp_path, monkeypatch):
    monkeypatch.setenv("LRLAB_OUT", str(tmp_path / "env"))
    assert main(["run", str(write(tmp_path, DYSON))]) == EXIT_OK
    assert (tmp_path / "env" / "manifest.json").exists()


def test_bad_jobs_flag(tmp_path):
    assert main(["run", str(write(tmp_path, DYSON)), "--jobs", "0", "--out", str(tmp_path)]) == EXIT_CONFIG


@pytest.mark.slow
def test_lr_spin_default_run(tmp_path):
    path = write(tmp_path, 'scenarios = ["lr-spin"]\n')
    assert main(["run", str(path), "--out", str(tmp_path / "out")]) == EXIT_OK
    assert len(pd.read_csv(tmp_path / "out" / "lr-spin" / "sweep_series.csv")) == 41
