import json
import subprocess
import sys

import pytest

from chmarcus.cli import main

FAST = "grid.N = 256\nexperiment.T = 0.3\nexperiment.n_paths = 2\nexperiment.epsilons = 0.08, 0.0\n"


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(FAST)
    return p


def test_soliton_check(tmp_path, capsys):
    assert main(["soliton-check", "--out", str(tmp_path)]) == 0
    assert "peak" in capsys.readouterr().out
    lines = (tmp_path / "profile.csv").read_text().splitlines()
    assert lines[0] == "x,phi,dphi_dx,dphi_dc" and len(lines) == 513


def test_simulate_and_modulate(cfg_file, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(cfg_file), "--out", str(out), "--stride", "4"]) == 0
    assert main(["modulate", "--config", str(cfg_file), "--out", str(out), "--seed", "3"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seed"] == 3 and summary["epsilon"] == 0.08
    assert (out / "track.csv").exists()


def test_exit_prob(cfg_file, tmp_path, capsys):
    out = tmp_path / "e"
    assert main(["exit-prob", "--config", str(cfg_file), "--out", str(out), "--keep-paths"]) == 0
    printed = capsys.readouterr().out
    assert printed == (out / "report.csv").read_text()
    assert len(list((out / "paths").rglob("*.csv"))) == 4


def test_print_config_round_trip(capsys):
    assert main(["print-config"]) == 0
    text = capsys.readouterr().out
    assert "grid.L = 80.0" in text


@pytest.mark.parametrize("body", ["experiment.n_paths = 0\n", "grid.N = x\n", "bogus\n"])
def test_config_errors_exit_2(tmp_path, body, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text(body)
    assert main(["exit-prob", "--config", str(p), "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_exit_2(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_workers_must_be_positive(cfg_file):
    assert main(["exit-prob", "--config", str(cfg_file), "--workers", "0"]) == 2


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "chmarcus.cli", "print-config"],
                       capture_output=True, text=True, cwd=tmp_path)
    assert r.returncode == 0 and "soliton.c0 = 3.0" in r.stdout


def test_ensemble_failure_exit_3(cfg_file, tmp_path, monkeypatch):
    from chmarcus import cli
    from chmarcus.experiments import EXIT_COLUMNS, ExperimentReport

    def broken(cfg, workers=1, keep=None):
        return ExperimentReport("exit-prob", EXIT_COLUMNS, [], {}, [{"error": "x"}] * 2)

    monkeypatch.setattr(cli, "run_exit_prob", broken)
    assert main(["exit-prob", "--config", str(cfg_file), "--out", str(tmp_path)]) == 3
