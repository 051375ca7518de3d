"""Compound-Poisson driver, Marcus jump maps and compensator terms.

The Levy driver is ``L(t) = int int z N~(dt, dz)`` for a finite discrete
intensity measure, so every path has finitely many jumps ``(t_j, z_j)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import JumpTooLargeError
from .grid import PeriodicGrid

# characteristic integration for the time-1 Marcus flow
MARCUS_SUBSTEPS = 8


@dataclass(frozen=True)
class IntensityMeasure:
    """Finite sum of point masses ``sum_i w_i delta_{z_i}`` on ``{0 < |z| <= 1}``."""

    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        atoms = tuple((float(z), float(w)) for z, w in self.atoms)
        for z, w in atoms:
            if not (0 < abs(z) <= 1):
                raise ValueError(f"atom mark must satisfy 0 < |z| <= 1, got {z}")
            if not w > 0:
                raise ValueError(f"atom weight must be positive, got {w}")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def symmetric(cls, z: float = 0.5, w: float = 1.0) -> "IntensityMeasure":
        return cls(((z, w), (-z, w)))

    @property
    def marks(self) -> np.ndarray:
        return np.array([z for z, _ in self.atoms])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    @property
    def total_rate(self) -> float:
        return float(sum(w for _, w in self.atoms))

    def moment(self, p: int) -> float:
        """``int z^p d(theta)``."""
        return float(sum(w * z**p for z, w in self.atoms))


@dataclass(frozen=True, eq=False)
class NoisePath:
    horizon: float
    times: np.ndarray
    marks: np.ndarray
    measure: IntensityMeasure
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        marks = np.asarray(self.marks, dtype=float)
        if times.shape != marks.shape:
            raise ValueError("times and marks must have equal length")
        if np.any(np.diff(times) <= 0):
            raise ValueError("jump times must be strictly increasing")
        if times.size and (times[0] <= 0 or times[-1] > self.horizon):
            raise ValueError("jump times must lie in (0, T]")
        allowed = set(self.measure.marks.tolist())
        if any(m not in allowed for m in marks.tolist()):
            raise ValueError("every jump mark must be an atom of the measure")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "marks", marks)

    def __len__(self) -> int:
        return int(self.times.size)

    def scaled(self, factor: float) -> "NoisePath":
        """Same jump times with marks multiplied by ``factor`` (measure rescaled alike)."""
        measure = IntensityMeasure(tuple((factor * z, w) for z, w in self.measure.atoms))
        return NoisePath(self.horizon, self.times, factor * self.marks, measure, self.seed)

    def to_json(self) -> str:
        return json.dumps({
            "T": self.horizon,
            "seed": self.seed,
            "atoms": [list(a) for a in self.measure.atoms],
            "events": [[float(t), float(z)] for t, z in zip(self.times, self.marks)],
        }, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "NoisePath":
        d = json.loads(text)
        events = np.array(d["events"], dtype=float).reshape(-1, 2)
        measure = IntensityMeasure(tuple(tuple(a) for a in d["atoms"]))
        return cls(d["T"], events[:, 0], events[:, 1], measure, d.get("seed"))


def sample_path(measure: IntensityMeasure, horizon: float, seed: int) -> NoisePath:
    """Poisson jump times of rate ``total_rate`` on ``(0, T]`` with categorical marks."""
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    rng = np.random.default_rng(seed)
    rate = measure.total_rate
    if rate == 0:
        return NoisePath(horizon, np.empty(0), np.empty(0), measure, seed)
    n = rng.poisson(rate * horizon)
    times = np.sort(horizon - rng.uniform(0.0, horizon, size=n))  # values in (0, T]
    idx = rng.choice(len(measure.atoms), size=n, p=measure.weights / rate)
    return NoisePath(horizon, times, measure.marks[idx], measure, seed)


def _is_constant(sigma: np.ndarray) -> bool:
    return float(np.ptp(sigma)) <= 1e-14 * max(1.0, float(np.max(np.abs(sigma))))


def characteristic_feet(grid: PeriodicGrid, amplitude: float, sigma: np.ndarray) -> np.ndarray:
    """Positions ``X(0)`` of characteristics ``dX/ds = amplitude * sigma(X)`` ending at the nodes."""
    h = 1.0 / MARCUS_SUBSTEPS
    X = np.array(grid.x, dtype=float)

    def vel(pos):
        # backward in time
        return -amplitude * grid.evaluate(sigma, pos)

    for _ in range(MARCUS_SUBSTEPS):
        k1 = vel(X)
        k2 = vel(X + 0.5 * h * k1)
        k3 = vel(X + 0.5 * h * k2)
        k4 = vel(X + h * k3)
        X = X + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return X


def marcus_map(grid: PeriodicGrid, u: np.ndarray, amplitude: float, sigma: np.ndarray) -> np.ndarray:
    """Time-1 flow of ``dy/dt = -amplitude * sigma(x) y_x`` started at ``u``.

    For constant ``sigma`` this is the exact translation ``u(x - amplitude*sigma)``.
    """
    grid.check(u, sigma)
    if amplitude == 0:
        return np.array(u, dtype=float, copy=True)
    reach = abs(amplitude) * float(np.max(np.abs(sigma)))
    if reach > 0.25 * grid.length:
        raise JumpTooLargeError(
            f"jump too large for domain: |amplitude|*max|sigma| = {reach:.3g} > L/4"
        )
    if _is_constant(sigma):
        return grid.shift(u, amplitude * float(sigma[0]))
    return grid.evaluate(u, characteristic_feet(grid, amplitude, sigma))


def compensator_drift(grid: PeriodicGrid, u: np.ndarray, epsilon: float,
                      sigma: np.ndarray, measure: IntensityMeasure) -> np.ndarray:
    """``sum_i w_i [Phi(eps z_i) u - u + eps z_i sigma u_x]``."""
    out = np.zeros_like(u, dtype=float)
    if epsilon == 0:
        return out
    su_x = sigma * grid.deriv(u)
    for z, w in measure.atoms:
        a = epsilon * z
        out += w * (marcus_map(grid, u, a, sigma) - u + a * su_x)
    return out


def jump_compensation(grid: PeriodicGrid, u: np.ndarray, epsilon: float,
                      sigma: np.ndarray, measure: IntensityMeasure) -> np.ndarray:
    """``sum_i w_i [Phi(eps z_i) u - u]``: the dt-part of the compensated jump integral."""
    out = np.zeros_like(u, dtype=float)
    if epsilon == 0:
        return out
    for z, w in measure.atoms:
        out += w * (marcus_map(grid, u, epsilon * z, sigma) - u)
    return out


def sigma_x_sup(grid: PeriodicGrid, sigma: np.ndarray) -> float:
    return float(np.max(np.abs(grid.deriv(sigma))))


def b_of_eps(grid: PeriodicGrid, epsilon: float, sigma: np.ndarray, measure: IntensityMeasure) -> float:
    """Noise-strength functional ``int (e^{a}-1)^2 + (e^{3a/2}-1)^2 d(theta)``, ``a = eps|z| |sigma_x|_inf``."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    s = sigma_x_sup(grid, sigma)
    total = 0.0
    for z, w in measure.atoms:
        a = epsilon * abs(z) * s
        total += w * (np.expm1(a) ** 2 + np.expm1(1.5 * a) ** 2)
    return float(total)


def sigma_field(grid: PeriodicGrid, spec: str) -> np.ndarray:
    """Build sigma from ``"constant:v"`` or ``"sine:mean,amp"`` (one period across the box)."""
    kind, _, args = spec.partition(":")
    kind = kind.strip().lower()
    try:
        values = [float(a) for a in args.split(",")] if args.strip() else []
    except ValueError as exc:
        raise ValueError(f"bad sigma spec {spec!r}") from exc
    if kind == "constant" and len(values) == 1:
        return np.full(grid.n_points, values[0])
    if kind == "sine" and len(values) == 2:
        mean, amp = values
        return mean + amp * np.sin(2.0 * np.pi * grid.x / grid.length)
    raise ValueError(f"bad sigma spec {spec!r}; expected 'constant:v' or 'sine:mean,amp'")
