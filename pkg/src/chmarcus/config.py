"""Run configuration: a flat ``section.key = value`` text format.

Lines starting with ``#`` are comments.  Unknown keys and malformed values
raise ``ConfigError``.  ``format_config(parse_config(text))`` is canonical, so
``parse_config(format_config(cfg)) == cfg`` for every valid config.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _parse_atoms(text: str) -> tuple[tuple[float, float], ...]:
    atoms = []
    for item in text.split(","):
        if not item.strip():
            continue
        z, sep, w = item.partition(":")
        if not sep:
            raise ValueError(f"atom {item.strip()!r} is not of the form z:w")
        atoms.append((float(z), float(w)))
    return tuple(atoms)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ", ".join(f"{z!r}:{w!r}" for z, w in value)
        return ", ".join(repr(v) for v in value)
    return str(value)


_PARSERS = {bool: _parse_bool, int: int, float: float, str: str.strip}


@dataclass(frozen=True)
class GridConfig:
    L: float = 80.0
    N: int = 512
    dealias: bool = True


@dataclass(frozen=True)
class SolitonConfig:
    c0: float = 3.0
    k: float = 1.0


@dataclass(frozen=True)
class NoiseConfig:
    atoms: tuple = field(default=((0.5, 1.0), (-0.5, 1.0)), metadata={"parse": _parse_atoms})
    sigma: str = "sine:1,0.3"
    frame: str = "comoving"


@dataclass(frozen=True)
class SolverSection:
    dt: float = 4e-3
    record_every: int = 5


@dataclass(frozen=True)
class ExperimentConfig:
    epsilons: tuple = field(default=(0.08, 0.04, 0.02), metadata={"parse": _parse_floats})
    alpha: float = 0.05
    T: float = 2.0
    n_paths: int = 200
    base_seed: int = 0


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"


_SECTIONS = {
    "grid": GridConfig,
    "soliton": SolitonConfig,
    "noise": NoiseConfig,
    "solver": SolverSection,
    "experiment": ExperimentConfig,
    "output": OutputConfig,
}


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig = GridConfig()
    soliton: SolitonConfig = SolitonConfig()
    noise: NoiseConfig = NoiseConfig()
    solver: SolverSection = SolverSection()
    experiment: ExperimentConfig = ExperimentConfig()
    output: OutputConfig = OutputConfig()

    def __post_init__(self):
        validate(self)

    def replace(self, **dotted) -> "RunConfig":
        """Copy with ``section__key=value`` overrides, e.g. ``experiment__T=1.0``."""
        sections = {name: getattr(self, name) for name in _SECTIONS}
        for key, value in dotted.items():
            sec, _, name = key.partition("__")
            if sec not in sections or name not in {f.name for f in dataclasses.fields(sections[sec])}:
                raise ConfigError(f"unknown config key {sec}.{name}")
            sections[sec] = dataclasses.replace(sections[sec], **{name: value})
        return RunConfig(**sections)


def validate(cfg: RunConfig) -> None:
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    g, s, n, sv, e = cfg.grid, cfg.soliton, cfg.noise, cfg.solver, cfg.experiment
    need(g.L > 0, "grid.L must be positive")
    need(g.N >= 16 and g.N % 2 == 0, "grid.N must be even and >= 16")
    need(s.k > 0 and s.c0 > 2 * s.k, "soliton needs k > 0 and c0 > 2k")
    need(len(n.atoms) > 0, "noise.atoms must list at least one z:w pair")
    for z, w in n.atoms:
        need(0 < abs(z) <= 1 and w > 0, f"bad atom {z}:{w}; need 0 < |z| <= 1, w > 0")
    need(n.frame in ("comoving", "fixed"), "noise.frame must be 'comoving' or 'fixed'")
    kind = n.sigma.partition(":")[0].strip().lower()
    need(kind in ("constant", "sine"), "noise.sigma must be 'constant:v' or 'sine:mean,amp'")
    need(sv.dt > 0, "solver.dt must be positive")
    need(sv.record_every >= 1, "solver.record_every must be >= 1")
    eps = e.epsilons
    need(len(eps) > 0, "experiment.epsilons must not be empty")
    need(all(x >= 0 for x in eps), "experiment.epsilons must be non-negative")
    need(all(a > b for a, b in zip(eps, eps[1:])), "experiment.epsilons must be strictly decreasing")
    need(e.alpha > 0, "experiment.alpha must be positive")
    need(e.T > 0, "experiment.T must be positive")
    need(e.n_paths >= 1, "experiment.n_paths must be >= 1")


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    base = RunConfig() if base is None else base
    values: dict[str, dict] = {name: {} for name in _SECTIONS}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {raw.strip()!r}")
        sec, _, name = key.strip().partition(".")
        cls = _SECTIONS.get(sec)
        fields = {f.name: f for f in dataclasses.fields(cls)} if cls else {}
        if name not in fields:
            raise ConfigError(f"line {lineno}: unknown key {key.strip()!r}")
        f = fields[name]
        parser = f.metadata.get("parse") or _PARSERS[type(f.default)]
        try:
            values[sec][name] = parser(val.strip())
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key.strip()}: {exc}") from exc
    sections = {sec: dataclasses.replace(getattr(base, sec), **vals) for sec, vals in values.items()}
    return RunConfig(**sections)


def format_config(cfg: RunConfig, include_output: bool = True) -> str:
    lines = []
    for sec in _SECTIONS:
        if sec == "output" and not include_output:
            continue
        obj = getattr(cfg, sec)
        for f in dataclasses.fields(obj):
            lines.append(f"{sec}.{f.name} = {_fmt(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: RunConfig) -> str:
    """sha256 of the canonical text, ignoring where results are written."""
    return hashlib.sha256(format_config(cfg, include_output=False).encode()).hexdigest()


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)
