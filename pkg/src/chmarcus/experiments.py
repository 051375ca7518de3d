"""Seeded Monte Carlo drivers: exit-probability scaling and remainder convergence.

Each path is one task ``(config, epsilon, seed)``; results are keyed by seed
and reduced in seed order, so reports do not depend on the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, config_hash, format_config
from .errors import CHMarcusError
from .grid import PeriodicGrid
from .linearized import evolve_eta, limit_coeffs, limit_mu_b, compare_remainder
from .modulation import track, write_track
from .noise import IntensityMeasure, b_of_eps, sample_path, sigma_field
from .solver import SolverConfig, evolve
from .soliton import SolitonParams, build_profile

# ensemble is reported as failed when more than this fraction of paths abort
ABORT_FRACTION = 0.10

EXIT_COLUMNS = ("epsilon", "b_eps", "exit_frac", "stderr", "n_paths")
CONVERGENCE_COLUMNS = ("epsilon", "mean_sup_l2", "d_mu", "d_b", "d_y", "d_a")


@dataclass
class ExperimentReport:
    kind: str
    columns: tuple
    rows: list[dict]
    meta: dict
    paths: list[dict] = field(default_factory=list)
    runtime: float = 0.0

    @property
    def n_failed(self) -> int:
        return sum(1 for p in self.paths if p.get("error"))

    @property
    def failed(self) -> bool:
        return self.n_failed > ABORT_FRACTION * max(len(self.paths), 1)

    def to_json(self) -> str:
        body = {"kind": self.kind, "columns": list(self.columns), "rows": self.rows,
                "meta": self.meta, "paths": self.paths}
        return json.dumps(body, indent=1, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_cell(row[c]) for c in self.columns])
        return buf.getvalue()


def _cell(v):
    return repr(float(v)) if isinstance(v, float) else v


class Setup:
    """Objects shared by every path of one config."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.grid = PeriodicGrid(cfg.grid.L, cfg.grid.N, cfg.grid.dealias)
        self.k = cfg.soliton.k
        self.c0 = cfg.soliton.c0
        self.profile = build_profile(SolitonParams(self.c0, self.k), self.grid)
        self.sigma = sigma_field(self.grid, cfg.noise.sigma)
        self.measure = IntensityMeasure(cfg.noise.atoms)
        self.solver = SolverConfig(dt=cfg.solver.dt, record_every=cfg.solver.record_every,
                                   dealias=cfg.grid.dealias)

    def noise(self, seed: int):
        return sample_path(self.measure, self.cfg.experiment.T, seed)

    def run_track(self, noise, eps):
        traj = evolve(self.grid, self.profile.phi, noise, eps, self.sigma, self.k, self.solver)
        return track(traj, self.cfg.experiment.alpha, self.c0, self.sigma, self.k,
                     frame=self.cfg.noise.frame)


def _path_dir(keep: str | None, eps: float, seed: int) -> Path | None:
    if keep is None:
        return None
    d = Path(keep) / "paths" / f"eps_{eps!r}"
    d.mkdir(parents=True, exist_ok=True)
    return d / f"seed_{seed}.csv"


def exit_path(cfg: RunConfig, eps: float, seed: int, keep: str | None = None) -> dict:
    """One exit-probability sample; failures are returned, not raised."""
    try:
        s = Setup(cfg)
        tk = s.run_track(s.noise(seed), eps)
        out = _path_dir(keep, eps, seed)
        if out is not None:
            write_track(tk, s.grid, out)
        return {"epsilon": eps, "seed": seed, "exited": tk.exited,
                "exit_time": tk.exit_time, "reason": tk.exit_reason, "error": None}
    except (CHMarcusError, ValueError, FloatingPointError) as exc:
        return {"epsilon": eps, "seed": seed, "exited": None, "exit_time": None,
                "reason": None, "error": f"{type(exc).__name__}: {exc}"}


def convergence_path(cfg: RunConfig, seed: int, keep: str | None = None) -> dict:
    """Coupled sample: one noise path drives the limit equation and every epsilon."""
    try:
        s = Setup(cfg)
        noise = s.noise(seed)
        frame = cfg.noise.frame
        lim = limit_coeffs(s.c0, s.sigma, s.profile)
        eta_traj = evolve_eta(noise, 1.0, lim, s.c0, s.sigma, s.k, s.solver, grid=s.grid, frame=frame)
        per_eps = []
        for eps in cfg.experiment.epsilons:
            tk = s.run_track(noise, eps)
            out = _path_dir(keep, eps, seed)
            if out is not None:
                write_track(tk, s.grid, out)
            d = dict(d_mu=0.0, d_b=0.0, d_y=0.0, d_a=0.0)
            for st, cf, eta in zip(tk.states, tk.coeffs, eta_traj.states):
                mu, b = limit_mu_b(s.profile, s.sigma, st.t, frame)
                d["d_mu"] = max(d["d_mu"], abs(cf.mu_eps - mu))
                d["d_b"] = max(d["d_b"], abs(cf.b_eps - b))
                d["d_y"] = max(d["d_y"], abs(cf.y_eps - lim.y(eta, s.grid)))
                d["d_a"] = max(d["d_a"], abs(cf.a_eps - lim.a(eta, s.grid)))
            per_eps.append({"epsilon": eps, "sup_l2": compare_remainder(tk, eta_traj, cfg.experiment.T),
                            "exited": tk.exited, **d})
        return {"seed": seed, "per_eps": per_eps, "error": None}
    except (CHMarcusError, ValueError, FloatingPointError) as exc:
        return {"seed": seed, "per_eps": None, "error": f"{type(exc).__name__}: {exc}"}


def _run(fn, tasks, workers: int):
    if workers <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *t) for t in tasks]
        return [f.result() for f in futures]


def _meta(cfg: RunConfig, kind: str) -> dict:
    return {"kind": kind, "version": __version__, "config_hash": config_hash(cfg),
            "config": format_config(cfg, include_output=False),
            "base_seed": cfg.experiment.base_seed, "n_paths": cfg.experiment.n_paths}


def _seeds(cfg: RunConfig) -> list[int]:
    e = cfg.experiment
    return list(range(e.base_seed, e.base_seed + e.n_paths))


def run_exit_prob(cfg: RunConfig, workers: int = 1, keep: str | None = None) -> ExperimentReport:
    t0 = time.perf_counter()
    s = Setup(cfg)
    tasks = [(cfg, eps, seed, keep) for eps in cfg.experiment.epsilons for seed in _seeds(cfg)]
    results = sorted(_run(exit_path, tasks, workers), key=lambda r: (-r["epsilon"], r["seed"]))
    rows = []
    for eps in cfg.experiment.epsilons:
        ok = [r for r in results if r["epsilon"] == eps and not r["error"]]
        m = len(ok)
        p = sum(1 for r in ok if r["exited"]) / m if m else float("nan")
        rows.append({"epsilon": float(eps), "b_eps": b_of_eps(s.grid, eps, s.sigma, s.measure),
                     "exit_frac": float(p), "stderr": math.sqrt(p * (1 - p) / m) if m else float("nan"),
                     "n_paths": m})
    return ExperimentReport("exit-prob", EXIT_COLUMNS, rows, _meta(cfg, "exit-prob"), results,
                            time.perf_counter() - t0)


def run_convergence(cfg: RunConfig, workers: int = 1, keep: str | None = None) -> ExperimentReport:
    t0 = time.perf_counter()
    tasks = [(cfg, seed, keep) for seed in _seeds(cfg)]
    results = sorted(_run(convergence_path, tasks, workers), key=lambda r: r["seed"])
    ok = [r for r in results if not r["error"]]
    rows = []
    for i, eps in enumerate(cfg.experiment.epsilons):
        vals = [r["per_eps"][i] for r in ok]

        def mean(key):
            return float(np.mean([v[key] for v in vals])) if vals else float("nan")

        rows.append({"epsilon": float(eps), "mean_sup_l2": mean("sup_l2"), "d_mu": mean("d_mu"),
                     "d_b": mean("d_b"), "d_y": mean("d_y"), "d_a": mean("d_a")})
    return ExperimentReport("convergence", CONVERGENCE_COLUMNS, rows, _meta(cfg, "convergence"), results,
                            time.perf_counter() - t0)


def emit(report: ExperimentReport, directory) -> Path:
    """Write ``report.json``, ``report.csv`` and the wall-clock ``timing.json``."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.to_json())
        (out / "report.csv").write_text(report.to_csv())
        (out / "timing.json").write_text(json.dumps({"runtime_s": report.runtime}) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    return out
