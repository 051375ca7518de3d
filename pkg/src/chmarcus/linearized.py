"""Linear limit equation for the remainder ``eta`` and its comparison with ``eta^eps``.

    d eta = 1/2 (1 - d^2)^{-1} d/dx L_{c0} eta dt + (y dphi/dx - a dphi/dc) dt
            + (sigma dphi/dx + mu dphi/dx - b dphi/dc) <> dL,   eta(0) = 0

The jump coefficient does not depend on ``eta``, so a Marcus jump of mark
``z`` is the plain increment ``z * h``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import PeriodicGrid
from .modulation import FRAMES, ModulationTrack
from .noise import IntensityMeasure, NoisePath
from .operators import LinearizedOperator
from .solver import SolverConfig, Trajectory, integrate
from .soliton import SolitonParams, SolitonProfile, build_profile


@dataclass(frozen=True, eq=False)
class LimitCoefficients:
    """``mu``, ``b`` for one sigma field, plus pairing fields for ``y(eta)``, ``a(eta)``."""

    mu: float
    b: float
    y_field: np.ndarray
    a_field: np.ndarray
    jump_field: np.ndarray
    A0: np.ndarray

    def y(self, eta: np.ndarray, grid: PeriodicGrid) -> float:
        return grid.inner(eta, self.y_field)

    def a(self, eta: np.ndarray, grid: PeriodicGrid) -> float:
        return grid.inner(eta, self.a_field)


def _mu_b(profile: SolitonProfile, sigma: np.ndarray, A0: np.ndarray) -> tuple[float, float]:
    g = profile.grid
    forcing = sigma * profile.dphi_dx
    mu = -g.inner(forcing, profile.helm_dphi_dx) / A0[0, 0]
    b = -g.inner(forcing, profile.helm_phi) / A0[1, 1]
    return float(mu), float(b)


def limit_coeffs(c0: float, sigma: np.ndarray, profile: SolitonProfile | None = None,
                 k: float | None = None, grid: PeriodicGrid | None = None) -> LimitCoefficients:
    """Coefficients of the limit equation.

    ``y(eta) = -(1/2) (d/dx L eta, dphi/dx) / A0_11`` and
    ``a(eta) = -(1/2) (d/dx L eta, phi) / A0_22`` are rewritten, using that
    ``L`` is symmetric and ``d/dx`` skew, as single pairings of ``eta`` with
    ``L phi_xx / (2 A0_11)`` and ``L phi_x / (2 A0_22)``.
    """
    if profile is None:
        profile = build_profile(SolitonParams(c0, k), grid)
    if profile.c != c0:
        raise ValueError(f"profile speed {profile.c} does not match c0={c0}")
    g = profile.grid
    g.check(sigma)
    A0 = np.diag([g.inner(profile.dphi_dx, profile.helm_dphi_dx),
                  -g.inner(profile.dphi_dc, profile.helm_phi)])
    assert A0[0, 0] > 0 and A0[1, 1] < 0, "degenerate reference matrix"
    op = LinearizedOperator.from_profile(profile)
    y_field = op.apply(profile.phi_xx) / (2.0 * A0[0, 0])
    a_field = op.apply(profile.dphi_dx) / (2.0 * A0[1, 1])
    mu, b = _mu_b(profile, sigma, A0)
    jump_field = sigma * profile.dphi_dx + mu * profile.dphi_dx - b * profile.dphi_dc
    for arr in (y_field, a_field, jump_field, A0):
        arr.flags.writeable = False
    return LimitCoefficients(mu, b, y_field, a_field, jump_field, A0)


def limit_mu_b(profile: SolitonProfile, sigma: np.ndarray, t: float = 0.0,
               frame: str = "comoving") -> tuple[float, float]:
    """``(mu, b)`` of the limit equation at time ``t`` (frame centred at ``c0 t``)."""
    g = profile.grid
    sig = sigma if frame == "fixed" or t == 0 else g.shift(sigma, -profile.c * t)
    A0 = np.diag([g.inner(profile.dphi_dx, profile.helm_dphi_dx),
                  -g.inner(profile.dphi_dc, profile.helm_phi)])
    return _mu_b(profile, sig, A0)


def evolve_eta(noise: NoisePath, mark_scale: float, limit: LimitCoefficients | None,
               c0: float, sigma: np.ndarray, k: float, config: SolverConfig = SolverConfig(),
               grid: PeriodicGrid | None = None, frame: str = "comoving",
               measure: IntensityMeasure | None = None) -> Trajectory:
    """Integrate the limit equation along ``noise`` with every mark multiplied by ``mark_scale``.

    With ``frame="comoving"`` the soliton sees ``sigma(x + c0 t)``, so ``mu``
    and ``b`` are re-evaluated along the way; ``"fixed"`` keeps the lab-frame
    coefficients in ``limit`` for all times.
    """
    if frame not in FRAMES:
        raise ValueError(f"frame must be one of {FRAMES}, got {frame!r}")
    if grid is None:
        grid = PeriodicGrid(n_points=sigma.size)
    profile = build_profile(SolitonParams(c0, k), grid)
    if limit is None:
        limit = limit_coeffs(c0, sigma, profile)
    measure = noise.measure if measure is None else measure
    m1 = mark_scale * measure.moment(1)
    op = LinearizedOperator.from_profile(profile)
    dphi_dx, dphi_dc = profile.dphi_dx, profile.dphi_dc
    A0 = limit.A0

    def jump_field(t):
        if frame == "fixed" or t == 0:
            return limit.jump_field
        sig = grid.shift(sigma, -c0 * t)
        mu, b = _mu_b(profile, sig, A0)
        return sig * dphi_dx + mu * dphi_dx - b * dphi_dc

    def rhs(t, eta):
        out = (op.comoving_drift(eta)
               + limit.y(eta, grid) * dphi_dx - limit.a(eta, grid) * dphi_dc)
        if m1 != 0:
            out = out - m1 * jump_field(t)
        return out

    def jump(eta, z, t):
        return eta + mark_scale * z * jump_field(t)

    out = integrate(grid, rhs, jump, np.zeros(grid.n_points), noise, config, lambda _: c0)
    return Trajectory(grid, noise=noise, epsilon=0.0, kind="limit", **out,
                      meta={"k": k, "c0": c0, "dt": config.dt, "record_every": config.record_every,
                            "mark_scale": mark_scale, "frame": frame})


def orthogonality_drift(eta_traj: Trajectory, c0: float, k: float | None = None) -> float:
    """Largest ``|(eta, (1 - d^2) phi)|``, ``|(eta, (1 - d^2) phi_x)|`` relative to max ``|eta|_H1``."""
    g = eta_traj.grid
    k = eta_traj.meta["k"] if k is None else k
    profile = build_profile(SolitonParams(c0, k), g)
    scale = max((g.h1_norm(e) for e in eta_traj.states), default=0.0)
    if scale == 0:
        return 0.0
    worst = max(max(abs(g.inner(e, profile.helm_phi)), abs(g.inner(e, profile.helm_dphi_dx)))
                for e in eta_traj.states)
    return float(worst / scale)


def compare_remainder(track: ModulationTrack, eta_traj: Trajectory, T: float | None = None) -> float:
    """``sup ||eta^eps(t) - eta(t)||_{L2}`` over the tracked records with ``t <= T``.

    Both sides must come from the same noise path and solver settings so the
    record times coincide.
    """
    g = eta_traj.grid
    n = len(track)
    if n > len(eta_traj) or not np.array_equal(track.times, eta_traj.times[:n]):
        raise ValueError("track and limit trajectory are not recorded on the same times")
    T = np.inf if T is None else T
    worst = 0.0
    for st, eta in zip(track.states, eta_traj.states[:n]):
        if st.t > T + 1e-12:
            break
        worst = max(worst, g.l2_norm(st.eta - eta))
    return float(worst)
