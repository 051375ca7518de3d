"""Event-driven integration of the stochastic Camassa-Holm equation.

Orientation of the driver: the equation is integrated as

    du + (u u_x + P_x) dt = eps * sigma * u_x <> dL(t),

so a jump of mark ``z`` replaces ``u`` by the time-1 flow of
``dy/dt = eps z sigma y_x``, i.e. ``marcus_map(u, -eps z, sigma)``; for constant
sigma that is ``u(x + eps sigma z)``.  This is the orientation in which the
modulation equations for ``(x_eps, c_eps)`` hold pathwise.  Between jumps the
compensated driver moves continuously with slope ``-int z d(theta)``, which
adds ``-eps (int z d theta) sigma u_x`` to the Camassa-Holm vector field.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import SolverError
from .grid import PeriodicGrid
from .noise import IntensityMeasure, NoisePath, marcus_map
from .operators import ch_drift, hamiltonian_h1

REGULAR, PRE_JUMP, POST_JUMP = 0, 1, 2
_KIND_NAMES = {REGULAR: "regular", PRE_JUMP: "pre_jump", POST_JUMP: "post_jump"}


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    record_every: int = 10
    dealias: bool = True
    cfl_guard: float = 0.45

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if not 0 < self.cfl_guard < 0.5:
            raise ValueError("cfl_guard must lie in (0, 0.5)")


@dataclass(eq=False)
class Trajectory:
    grid: PeriodicGrid
    times: np.ndarray
    states: np.ndarray
    kinds: np.ndarray
    jump_ids: np.ndarray
    noise: NoisePath
    epsilon: float
    kind: str = "full"
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def regular(self) -> np.ndarray:
        return self.kinds == REGULAR


def jump_amplitude(epsilon: float, mark: float) -> float:
    """``marcus_map`` amplitude realizing a driver jump of size ``mark``."""
    return -epsilon * mark


def drift(grid: PeriodicGrid, u: np.ndarray, epsilon: float, sigma: np.ndarray,
          measure: IntensityMeasure, k: float) -> np.ndarray:
    """Vector field between jumps: Camassa-Holm flow plus the compensator of ``L``."""
    out = ch_drift(grid, u, k)
    m1 = measure.moment(1)
    if epsilon != 0 and m1 != 0:
        out = out - epsilon * m1 * sigma * grid.deriv(u)
    return out


def rk4_step(rhs: Callable[[float, np.ndarray], np.ndarray], u: np.ndarray, h: float,
             t: float = 0.0) -> np.ndarray:
    k1 = rhs(t, u)
    k2 = rhs(t + 0.5 * h, u + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, u + 0.5 * h * k2)
    k4 = rhs(t + h, u + h * k3)
    return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(grid: PeriodicGrid, rhs, jump, u0: np.ndarray, noise: NoisePath,
              config: SolverConfig, speed: Callable[[np.ndarray], float]) -> dict:
    """Shared event-driven RK4 loop.

    ``rhs(t, u)`` is the vector field between jumps and ``jump(u, z, t)`` the
    jump map.
    Regular steps sit on the lattice ``n * dt``; a step that straddles a jump
    time is split so the jump is applied exactly at ``t_j``.  Records are kept
    every ``record_every`` lattice steps, at ``T``, and on both sides of every
    jump.
    """
    T, dt = noise.horizon, config.dt
    n_steps = int(np.ceil(T / dt - 1e-9))
    times, states, kinds, jids = [0.0], [np.array(u0, dtype=float)], [REGULAR], [-1]
    u = np.array(u0, dtype=float)
    t = 0.0
    ev = 0
    n_events = len(noise)

    def advance(u, t, target):
        h = target - t
        if h <= 1e-14:
            return u
        if speed(u) * h / grid.dx > config.cfl_guard:
            raise SolverError(
                f"CFL guard violated at t={t:.6g}: speed*dt/dx = {speed(u) * h / grid.dx:.3g}"
            )
        u = rk4_step(rhs, u, h, t)
        if not np.all(np.isfinite(u)):
            raise SolverError(f"non-finite state at t={target:.6g}")
        return u

    for n in range(n_steps):
        target = min((n + 1) * dt, T)
        just_jumped = False
        while ev < n_events and noise.times[ev] <= target + 1e-14:
            tj = noise.times[ev]
            u = advance(u, t, tj)
            t = tj
            times.append(t); states.append(u.copy()); kinds.append(PRE_JUMP); jids.append(ev)
            u = jump(u, noise.marks[ev], t)
            if not np.all(np.isfinite(u)):
                raise SolverError(f"non-finite state after jump {ev} at t={t:.6g}")
            times.append(t); states.append(u.copy()); kinds.append(POST_JUMP); jids.append(ev)
            ev += 1
            just_jumped = abs(target - t) <= 1e-14
        u = advance(u, t, target)
        t = target
        if ((n + 1) % config.record_every == 0 or n + 1 == n_steps) and not just_jumped:
            times.append(t); states.append(u.copy()); kinds.append(REGULAR); jids.append(-1)
    return dict(times=np.array(times), states=np.array(states),
                kinds=np.array(kinds, dtype=np.int8), jump_ids=np.array(jids))


def evolve(grid: PeriodicGrid, u0: np.ndarray, noise: NoisePath, epsilon: float,
           sigma: np.ndarray, k: float, config: SolverConfig = SolverConfig(),
           measure: IntensityMeasure | None = None) -> Trajectory:
    """Integrate one sample path of the Marcus-form equation on ``[0, T]``."""
    grid = dataclasses.replace(grid, dealias=config.dealias)
    grid.check(u0, sigma)
    measure = noise.measure if measure is None else measure

    def rhs(t, u):
        return drift(grid, u, epsilon, sigma, measure, k)

    def jump(u, z, t):
        return marcus_map(grid, u, jump_amplitude(epsilon, z), sigma)

    def speed(u):
        return float(np.max(np.abs(u)))

    out = integrate(grid, rhs, jump, u0, noise, config, speed)
    return Trajectory(grid, noise=noise, epsilon=epsilon, **out,
                      meta={"k": k, "dt": config.dt, "record_every": config.record_every})


def h1_evolution_residual(traj: Trajectory, sigma: np.ndarray,
                          measure: IntensityMeasure | None = None) -> float:
    """Pathwise check of the H1 balance along a trajectory.

    ``H1(u(t)) - H1(u0)`` must equal the sum of jump increments of ``H1`` plus
    the time integral of the compensator correction
    ``eps (int z d theta) / 2 * (sigma_x, u^2 - u_x^2)``.  Returns the largest
    mismatch over the recorded times, relative to ``H1(u0)``.
    """
    grid = traj.grid
    measure = traj.noise.measure if measure is None else measure
    eps = traj.epsilon
    m1 = measure.moment(1)
    sx = grid.deriv(sigma)
    h1 = np.array([hamiltonian_h1(grid, u) for u in traj.states])
    if eps != 0 and m1 != 0:
        q = np.array([0.5 * eps * m1 * grid.inner(sx, u**2 - grid.deriv(u) ** 2)
                      for u in traj.states])
    else:
        q = np.zeros_like(h1)
    predicted = np.zeros_like(h1)
    for i in range(1, len(h1)):
        if traj.kinds[i] == POST_JUMP:
            inc = h1[i] - h1[i - 1]
        else:
            inc = 0.5 * (q[i] + q[i - 1]) * (traj.times[i] - traj.times[i - 1])
        predicted[i] = predicted[i - 1] + inc
    return float(np.max(np.abs(h1 - h1[0] - predicted)) / abs(h1[0]))


def write_trajectory(traj: Trajectory, directory, stride: int = 1, manifest: dict | None = None) -> Path:
    """CSV bundle: ``times.csv``, ``fields.csv`` (strided columns) and ``manifest.json``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "times.csv", "w") as fh:
        fh.write("index,t,kind,jump_index\n")
        for i, (t, kd, j) in enumerate(zip(traj.times, traj.kinds, traj.jump_ids)):
            fh.write(f"{i},{t!r},{_KIND_NAMES[int(kd)]},{int(j)}\n")
    cols = slice(None, None, stride)
    with open(out / "fields.csv", "w") as fh:
        fh.write("index," + ",".join(repr(float(x)) for x in traj.grid.x[cols]) + "\n")
        for i, row in enumerate(traj.states):
            fh.write(f"{i}," + ",".join(repr(float(v)) for v in row[cols]) + "\n")
    info = {
        "kind": traj.kind,
        "epsilon": traj.epsilon,
        "seed": traj.noise.seed,
        "grid": {"L": traj.grid.length, "N": traj.grid.n_points},
        "stride": stride,
        "n_records": len(traj),
        "noise": json.loads(traj.noise.to_json()),
        **traj.meta,
    }
    if manifest:
        info["config"] = manifest
    (out / "manifest.json").write_text(json.dumps(info, indent=1, sort_keys=True))
    return out
