import json

import numpy as np
import pytest

from chmarcus.config import RunConfig
from chmarcus.experiments import (CONVERGENCE_COLUMNS, EXIT_COLUMNS, ExperimentReport, emit,
                                  run_convergence, run_exit_prob)
from chmarcus.noise import b_of_eps

SMALL = RunConfig().replace(grid__N=256, experiment__T=0.5, experiment__n_paths=3,
                            experiment__epsilons=(0.3, 0.08, 0.0))


@pytest.fixture(scope="module")
def exit_report():
    return run_exit_prob(SMALL)


def test_exit_report_shape(exit_report):
    r = exit_report
    assert r.columns == EXIT_COLUMNS
    assert [row["epsilon"] for row in r.rows] == [0.3, 0.08, 0.0]
    assert len(r.paths) == 9 and r.n_failed == 0 and not r.failed
    for row in r.rows:
        p, m = row["exit_frac"], row["n_paths"]
        assert 0 <= p <= 1 and m == 3
        assert row["stderr"] == pytest.approx(np.sqrt(p * (1 - p) / m))
    assert r.rows[-1]["exit_frac"] == 0.0 and r.rows[-1]["b_eps"] == 0.0
    assert r.meta["base_seed"] == 0 and len(r.meta["config_hash"]) == 64


def test_b_eps_column(exit_report):
    from chmarcus.experiments import Setup
    s = Setup(SMALL)
    assert exit_report.rows[1]["b_eps"] == b_of_eps(s.grid, 0.08, s.sigma, s.measure)


def test_emit_files(exit_report, tmp_path):
    out = emit(exit_report, tmp_path / "r")
    csv = (out / "report.csv").read_text().splitlines()
    assert csv[0] == ",".join(EXIT_COLUMNS)
    assert len(csv) - 1 == len(SMALL.experiment.epsilons)
    body = json.loads((out / "report.json").read_text())
    assert body["rows"] == exit_report.rows
    assert "runtime_s" in json.loads((out / "timing.json").read_text())


def test_rerun_byte_identical(exit_report):
    again = run_exit_prob(SMALL)
    assert again.to_json() == exit_report.to_json()
    assert again.to_csv() == exit_report.to_csv()


def test_workers_byte_identical(exit_report):
    par = run_exit_prob(SMALL, workers=2)
    assert par.to_json() == exit_report.to_json()


def test_keep_paths(tmp_path):
    cfg = SMALL.replace(experiment__n_paths=2, experiment__epsilons=(0.08,))
    run_exit_prob(cfg, keep=str(tmp_path))
    files = sorted(p.name for p in (tmp_path / "paths").rglob("*.csv"))
    assert files == ["seed_0.csv", "seed_1.csv"]


def test_failed_paths_counted():
    paths = [{"error": None}] * 9 + [{"error": "boom"}] * 2
    r = ExperimentReport("exit-prob", EXIT_COLUMNS, [], {}, paths)
    assert r.n_failed == 2 and r.failed
    assert not ExperimentReport("exit-prob", EXIT_COLUMNS, [], {}, paths[:10]).failed


def test_convergence_constant_sigma():
    # eta^eps is the remainder divided by eps, so it needs the finer grid to stay at roundoff
    cfg = SMALL.replace(grid__N=512, noise__sigma="constant:1", experiment__n_paths=2,
                        experiment__epsilons=(0.08, 0.04, 0.02))
    r = run_convergence(cfg)
    assert r.columns == CONVERGENCE_COLUMNS and len(r.rows) == 3
    for row in r.rows:
        for key in ("d_mu", "d_b", "d_y", "d_a", "mean_sup_l2"):
            assert row[key] < 1e-6, (row["epsilon"], key)


def test_convergence_variable_sigma():
    cfg = SMALL.replace(experiment__n_paths=2, experiment__T=1.0,
                        experiment__epsilons=(0.08, 0.04, 0.02))
    r = run_convergence(cfg)
    sup = [row["mean_sup_l2"] for row in r.rows]
    assert sup[1] <= 0.8 * sup[0] and sup[2] <= 0.8 * sup[1]
    for key in ("d_mu", "d_b", "d_y"):
        d = [row[key] for row in r.rows]
        assert d[1] < d[0] and d[2] < d[1], key
    # per-seed constants of the coefficient bound d <= C (sup_l2 + eps)
    consts = []
    for p in r.paths:
        for e in p["per_eps"]:
            d = max(e["d_mu"], e["d_b"], e["d_y"], e["d_a"])
            consts.append(d / (e["sup_l2"] + e["epsilon"]))
    assert max(consts) / min(consts) < 10
