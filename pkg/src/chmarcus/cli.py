"""Command-line entry point ``chmarcus``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, format_config, load_config
from .errors import CHMarcusError, ConfigError
from .experiments import Setup, emit, run_convergence, run_exit_prob
from .modulation import parameter_residual, write_track
from .solver import h1_evolution_residual, write_trajectory
from .soliton import SolitonParams, build_profile, ode_residual

EXIT_OK, EXIT_CONFIG, EXIT_ENSEMBLE = 0, 2, 3


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = cfg.replace(experiment__base_seed=args.seed)
    if args.out is not None:
        cfg = cfg.replace(output__dir=args.out)
    return cfg


def _decay_fit(grid, phi, lo=10.0, hi=30.0) -> float:
    x = grid.x
    sel = (x >= lo) & (x <= hi)
    slope, _ = np.polyfit(x[sel], np.log(phi[sel]), 1)
    return float(-slope)


def cmd_soliton_check(cfg: RunConfig, args) -> int:
    s = Setup(cfg)
    prof = s.profile
    params = SolitonParams(cfg.soliton.c0, cfg.soliton.k)
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "profile.csv", "w") as fh:
        fh.write("x,phi,dphi_dx,dphi_dc\n")
        for row in zip(s.grid.x, prof.phi, prof.dphi_dx, prof.dphi_dc):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    print(f"peak      {float(prof.phi.max())!r} (expected {params.height!r})")
    print(f"residual  {ode_residual(prof):.3e}")
    print(f"decay     {_decay_fit(s.grid, prof.phi):.6f} (expected {params.decay_rate:.6f})")
    print(f"profile   {out / 'profile.csv'}")
    return EXIT_OK


def _one_path(cfg: RunConfig, args):
    s = Setup(cfg)
    eps = args.epsilon if args.epsilon is not None else cfg.experiment.epsilons[0]
    noise = s.noise(cfg.experiment.base_seed)
    return s, eps, noise


def cmd_simulate(cfg: RunConfig, args) -> int:
    from .solver import evolve

    s, eps, noise = _one_path(cfg, args)
    traj = evolve(s.grid, s.profile.phi, noise, eps, s.sigma, s.k, s.solver)
    out = write_trajectory(traj, cfg.output.dir, stride=args.stride,
                           manifest={"text": format_config(cfg)})
    print(f"{len(noise)} jumps, {len(traj)} records, "
          f"H1 residual {h1_evolution_residual(traj, s.sigma):.3e} -> {out}")
    return EXIT_OK


def cmd_modulate(cfg: RunConfig, args) -> int:
    s, eps, noise = _one_path(cfg, args)
    tk = s.run_track(noise, eps)
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    write_track(tk, s.grid, out / "track.csv")
    r_x, r_c = parameter_residual(tk, noise)
    summary = {"epsilon": eps, "seed": cfg.experiment.base_seed, "jumps": len(noise),
               "exit_time": tk.exit_time, "exit_reason": tk.exit_reason, "r_x": r_x, "r_c": r_c}
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _ensemble(runner, cfg: RunConfig, args) -> int:
    keep = cfg.output.dir if args.keep_paths else None
    report = runner(cfg, workers=args.workers, keep=keep)
    emit(report, cfg.output.dir)
    sys.stdout.write(report.to_csv())
    if report.failed:
        print(f"ensemble failed: {report.n_failed}/{len(report.paths)} paths aborted", file=sys.stderr)
        return EXIT_ENSEMBLE
    return EXIT_OK


COMMANDS = {
    "soliton-check": cmd_soliton_check,
    "simulate": cmd_simulate,
    "modulate": cmd_modulate,
    "exit-prob": lambda cfg, args: _ensemble(run_exit_prob, cfg, args),
    "convergence": lambda cfg, args: _ensemble(run_convergence, cfg, args),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chmarcus", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--seed", type=int, help="override experiment.base_seed")
        p.add_argument("--out", help="override output.dir")
        p.add_argument("--keep-paths", action="store_true", help="write per-path track CSVs")
        p.add_argument("--workers", type=int, default=1, help="worker processes for ensembles")
        if name in ("simulate", "modulate"):
            p.add_argument("--epsilon", type=float, help="noise strength (default: first experiment.epsilons)")
        if name == "simulate":
            p.add_argument("--stride", type=int, default=1, help="keep every n-th grid column")
    sub.add_parser("print-config", help="print the effective default config").add_argument("--config")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "print-config":
            cfg = load_config(args.config) if args.config else RunConfig()
            sys.stdout.write(format_config(cfg))
            return EXIT_OK
        cfg = _config(args)
        if getattr(args, "workers", 1) < 1:
            raise ConfigError("--workers must be >= 1")
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CHMarcusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
