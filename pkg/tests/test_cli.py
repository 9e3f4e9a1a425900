"""Tests for the experiment runner CLI: configs, artifacts, exit codes."""

import json
import os

import pytest

from korovkinlab.cli import main


def _write_config(tmp_path, **overrides):
    config = {
        "experiment": "mellin-rates",
        "mode": {"variant": "density-filter",
                 "parameters": {"member": "non-squares"}},
        "horizon": 64,
        "grid": {"region": "box", "resolution": 16},
        "phi": {"family": "linear"},
        "gamma": 10.0,
        "xi": {"family": "power", "p": 1.0},
        "seed": 0,
        "output_dir": str(tmp_path / "out"),
    }
    config.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return path, config


def test_mellin_rates_run(tmp_path, capsys):
    path, config = _write_config(tmp_path)
    assert main(["run", "--config", str(path)]) == 0
    out_dir = config["output_dir"]
    report = json.loads(open(os.path.join(out_dir, "report.json")).read())
    assert sorted(report) == ["classifications", "config", "limsup_estimates",
                              "pass", "tolerances"]
    assert report["pass"] is True
    assert report["config"]["threads"] == 1
    assert "density_tol" in report["tolerances"]
    lines = open(os.path.join(out_dir, "evidence.csv")).read().splitlines()
    assert lines[0] == "w,err_e0,err_e1,err_e2,err_f,ratio_f,class"
    assert len(lines) == 1 + config["horizon"]
    # w=2 row: the first-moment error scales as 1/(w+2)
    cells = lines[2].split(",")
    assert float(cells[2]) == pytest.approx(config["gamma"] / (2.0 * 4.0), abs=1e-9)


def test_reruns_are_byte_identical(tmp_path):
    path, config = _write_config(tmp_path)
    assert main(["run", "--config", str(path)]) == 0
    out_dir = config["output_dir"]
    first = {name: open(os.path.join(out_dir, name), "rb").read()
             for name in ("report.json", "evidence.csv")}
    assert main(["run", "--config", str(path)]) == 0
    for name, blob in first.items():
        assert open(os.path.join(out_dir, name), "rb").read() == blob


def test_unknown_field_is_rejected(tmp_path):
    path, _ = _write_config(tmp_path, extra_field=1)
    assert main(["run", "--config", str(path)]) == 2


def test_unknown_experiment_is_rejected(tmp_path):
    path, _ = _write_config(tmp_path, experiment="frobnicate")
    assert main(["run", "--config", str(path)]) == 2


def test_bad_horizon_is_rejected(tmp_path):
    path, _ = _write_config(tmp_path, horizon=8)
    assert main(["run", "--config", str(path)]) == 2


def test_missing_config_file(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2


def test_invalid_threads_env(tmp_path, monkeypatch):
    path, _ = _write_config(tmp_path)
    monkeypatch.setenv("KOROVKIN_LAB_THREADS", "lots")
    assert main(["run", "--config", str(path)]) == 2


def test_threads_env_echoed(tmp_path, monkeypatch):
    path, config = _write_config(tmp_path)
    monkeypatch.setenv("KOROVKIN_LAB_THREADS", "4")
    assert main(["run", "--config", str(path)]) == 0
    report = json.loads(
        open(os.path.join(config["output_dir"], "report.json")).read())
    assert report["config"]["threads"] == 4


def test_density_subcommand(capsys):
    assert main(["density", "--matrix", "cesaro", "--set", "squares",
                 "--imax", "5000"]) == 0
    out = capsys.readouterr().out
    assert "density estimate" in out


def test_density_subcommand_flags_degenerate(capsys):
    assert main(["density", "--matrix", "degenerate", "--set", "squares",
                 "--imax", "500"]) == 1
    assert "(A2) fails" in capsys.readouterr().out


def test_check_system_subcommand(capsys):
    assert main(["check-system", "--system", "euclid", "--resolution", "32"]) == 0
    out = capsys.readouterr().out
    assert "C1" in out and "P1: Holds" in out


def test_density_experiment_writes_header_only_csv(tmp_path):
    path, config = _write_config(
        tmp_path, experiment="density", horizon=2000,
        mode={"variant": "psi-a", "parameters": {"matrix": "cesaro"}},
        grid={"matrix": "cesaro", "set": "squares", "resolution": 16})
    assert main(["run", "--config", str(path)]) == 0
    out_dir = config["output_dir"]
    lines = open(os.path.join(out_dir, "evidence.csv")).read().splitlines()
    assert len(lines) == 1            # header only
    report = json.loads(open(os.path.join(out_dir, "report.json")).read())
    assert report["pass"] is True
    assert report["limsup_estimates"]["density"] <= 0.05


def test_limit_experiment_almost_alternating(tmp_path):
    path, config = _write_config(
        tmp_path, experiment="limit", horizon=1000,
        mode={"variant": "almost", "parameters": {"m_max": 50}},
        grid={"net": "alternating", "candidate": 0.5, "resolution": 16})
    assert main(["run", "--config", str(path)]) == 0
    report = json.loads(
        open(os.path.join(config["output_dir"], "report.json")).read())
    assert report["classifications"]["limit"] == "Converges"


def test_limsup_experiment(tmp_path):
    path, config = _write_config(
        tmp_path, experiment="limsup", horizon=500,
        mode={"variant": "frechet"},
        grid={"net": "alternating", "resolution": 16})
    assert main(["run", "--config", str(path)]) == 0
    report = json.loads(
        open(os.path.join(config["output_dir"], "report.json")).read())
    assert report["limsup_estimates"]["limsup"] == pytest.approx(1.0, abs=1e-5)
    assert report["limsup_estimates"]["liminf"] == pytest.approx(0.0, abs=1e-5)
