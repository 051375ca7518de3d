"""Modulated-soliton decomposition ``u = phi_{c}(x - x_eps) + eps * eta(x - x_eps)``.

Speed and phase are fixed by requiring ``eta`` to be orthogonal to
``(1 - d^2) phi_{c0}`` and ``(1 - d^2) d/dx phi_{c0}``; the coefficients of
the parameter equations

    dx_eps = c_eps dt + eps y dt + eps mu <> dL
    dc_eps = eps a dt + eps b <> dL

come from the 2x2 systems ``A (mu, b) = D`` and ``A (y, a) = E``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ModulationBreakdown
from .grid import PeriodicGrid
from .operators import LinearizedOperator, f_of_eta
from .solver import POST_JUMP, PRE_JUMP, Trajectory
from .soliton import SolitonParams, SolitonProfile, build_profile

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
TOL_ORTH = 1e-9
SING_REL = 1e-8
# c must stay this far above 2k for the profile family to be usable
C_MARGIN = 1e-3


@dataclass(eq=False)
class ModulationState:
    t: float
    c_eps: float
    x_eps: float
    eta: np.ndarray
    scale: float
    residuals: tuple[float, float]
    iterations: int = 0

    @property
    def remainder(self) -> np.ndarray:
        """``eps * eta`` in the co-moving frame."""
        return self.scale * self.eta


@dataclass(frozen=True)
class ModulationCoefficients:
    y_eps: float
    a_eps: float
    b_eps: float
    mu_eps: float
    A: np.ndarray
    detA: float


@dataclass(eq=False)
class ModulationTrack:
    c0: float
    alpha: float
    epsilon: float
    times: np.ndarray
    kinds: np.ndarray
    jump_ids: np.ndarray
    states: list[ModulationState]
    coeffs: list[ModulationCoefficients | None]
    exit_time: float | None = None
    exit_reason: str | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def exited(self) -> bool:
        return self.exit_time is not None

    def column(self, name: str) -> np.ndarray:
        if name in ("c_eps", "x_eps", "t"):
            return np.array([getattr(s, name) for s in self.states])
        return np.array([getattr(cf, name) if cf is not None else np.nan for cf in self.coeffs])


class Modulator:
    """Newton extraction of ``(c_eps, x_eps)`` against a fixed reference ``phi_{c0}``."""

    def __init__(self, grid: PeriodicGrid, c0: float, k: float, epsilon: float):
        self.grid = grid
        self.k = k
        self.epsilon = epsilon
        self.scale = epsilon if epsilon > 0 else 1.0
        self.ref = build_profile(SolitonParams(c0, k), grid)
        self.psi1 = self.ref.helm_dphi_dx
        self.psi2 = self.ref.helm_phi

    @property
    def c0(self) -> float:
        return self.ref.c

    def profile(self, c: float) -> SolitonProfile:
        if not c > 2 * self.k + C_MARGIN:
            raise ModulationBreakdown(f"speed left the admissible range: c={c:.6g}")
        return build_profile(SolitonParams(c, self.k), self.grid)

    def orthogonality(self, v: np.ndarray) -> np.ndarray:
        g = self.grid
        return np.array([g.inner(v, self.psi1), g.inner(v, self.psi2)])

    def extract(self, u: np.ndarray, guess: tuple[float, float], t: float = 0.0) -> ModulationState:
        g = self.grid
        c, x = float(guess[0]), float(guess[1])
        for it in range(NEWTON_MAX_ITER + 1):
            prof = self.profile(c)
            v = g.shift(u, -x)
            Y = self.orthogonality(v - prof.phi)
            if np.max(np.abs(Y)) < NEWTON_TOL:
                break
            if it == NEWTON_MAX_ITER:
                raise ModulationBreakdown(
                    f"Newton did not converge at t={t:.6g}: |Y|={np.max(np.abs(Y)):.3e}"
                )
            vx = g.deriv(v)
            J = np.array([
                [g.inner(vx, self.psi1), -g.inner(prof.dphi_dc, self.psi1)],
                [g.inner(vx, self.psi2), -g.inner(prof.dphi_dc, self.psi2)],
            ])
            try:
                dx, dc = np.linalg.solve(J, -Y)
            except np.linalg.LinAlgError as exc:
                raise ModulationBreakdown(f"singular extraction Jacobian at t={t:.6g}") from exc
            x += dx
            c += dc
        eta = (v - prof.phi) / self.scale
        return ModulationState(float(t), float(c), float(x), eta, self.scale,
                               tuple(float(r) for r in Y / self.scale), it)

    def reconstruct(self, state: ModulationState) -> np.ndarray:
        prof = self.profile(state.c_eps)
        return self.grid.shift(prof.phi + state.remainder, state.x_eps)


def extract(grid: PeriodicGrid, u: np.ndarray, c0: float, k: float, epsilon: float,
            guess: tuple[float, float] | None = None) -> ModulationState:
    mod = Modulator(grid, c0, k, epsilon)
    return mod.extract(u, (c0, 0.0) if guess is None else guess)


def assemble_system(grid: PeriodicGrid, state: ModulationState, epsilon: float,
                    sigma: np.ndarray, prof_eps: SolitonProfile, prof_c0: SolitonProfile):
    """Return ``(A, D, E)`` of the modulation systems at one instant."""
    psi1, psi2 = prof_c0.helm_dphi_dx, prof_c0.helm_phi
    eta = state.eta
    eps = epsilon
    ip = grid.inner
    eta_x = grid.deriv(eta)
    # row 2 keeps eps*eta_x as well: the eps*y*eta_x drift of eta pairs with psi2 too
    col_x = prof_eps.dphi_dx + eps * eta_x
    A = np.array([
        [ip(col_x, psi1), -ip(prof_eps.dphi_dc, psi1)],
        [ip(col_x, psi2), -ip(prof_eps.dphi_dc, psi2)],
    ])
    forcing = sigma * col_x
    D = -np.array([ip(forcing, psi1), ip(forcing, psi2)])
    half_dL = 0.5 * grid.deriv(LinearizedOperator.from_profile(prof_eps).apply(eta))
    E = -np.array([ip(half_dL, prof_c0.dphi_dx), ip(half_dL, prof_c0.phi)])
    if eps != 0:
        f = f_of_eta(grid, eta)
        E -= eps * np.array([ip(f, psi1), ip(f, psi2)])
    return A, D, E


def reference_matrix(prof_c0: SolitonProfile) -> np.ndarray:
    """``A`` at ``c_eps = c0``, ``eta = 0``: diagonal by parity."""
    g = prof_c0.grid
    return np.diag([g.inner(prof_c0.dphi_dx, prof_c0.helm_dphi_dx),
                    -g.inner(prof_c0.dphi_dc, prof_c0.helm_phi)])


def solve_coeffs(A: np.ndarray, D: np.ndarray, E: np.ndarray, tol_sing: float) -> ModulationCoefficients:
    det = float(np.linalg.det(A))
    if not abs(det) > tol_sing:
        raise ModulationBreakdown(f"modulation matrix is singular: det A = {det:.3e}")
    mu, b = np.linalg.solve(A, D)
    y, a = np.linalg.solve(A, E)
    return ModulationCoefficients(float(y), float(a), float(b), float(mu), A.copy(), det)


def _exceeds(grid, state, c0, alpha):
    if abs(state.c_eps - c0) >= alpha:
        return "speed"
    if grid.h1_norm(state.remainder) >= alpha:
        return "remainder"
    return None


FRAMES = ("comoving", "fixed")


def frame_sigma(grid: PeriodicGrid, sigma: np.ndarray, x_eps: float, frame: str = "comoving") -> np.ndarray:
    """Noise intensity as seen from the soliton frame.

    ``"comoving"`` samples ``sigma(x + x_eps)``, which is what multiplies the
    recentred state; ``"fixed"`` pairs the lab-frame samples directly.  Both
    agree for constant sigma.
    """
    if frame == "fixed" or x_eps == 0:
        return sigma
    if frame != "comoving":
        raise ValueError(f"frame must be one of {FRAMES}, got {frame!r}")
    return grid.shift(sigma, -x_eps)


def track(traj: Trajectory, alpha: float, c0: float, sigma: np.ndarray, k: float | None = None,
          frame: str = "comoving") -> ModulationTrack:
    """Modulate every recorded state until the first exit from the alpha-tube."""
    if frame not in FRAMES:
        raise ValueError(f"frame must be one of {FRAMES}, got {frame!r}")
    grid = traj.grid
    k = traj.meta.get("k") if k is None else k
    eps = traj.epsilon
    mod = Modulator(grid, c0, k, eps)
    tol_sing = SING_REL * float(np.linalg.norm(reference_matrix(mod.ref)))
    states, coeffs, keep = [], [], []
    exit_time = reason = None
    c, x, t_prev = c0, 0.0, 0.0
    for i, (t, u) in enumerate(zip(traj.times, traj.states)):
        guess = (c, x + c * (t - t_prev))
        try:
            st = mod.extract(u, guess, t)
            prof = mod.profile(st.c_eps)
            sig = frame_sigma(grid, sigma, st.x_eps, frame)
            A, D, E = assemble_system(grid, st, eps, sig, prof, mod.ref)
            cf = solve_coeffs(A, D, E, tol_sing)
        except ModulationBreakdown as exc:
            exit_time, reason = float(t), f"breakdown: {exc}"
            break
        states.append(st)
        coeffs.append(cf)
        keep.append(i)
        c, x, t_prev = st.c_eps, st.x_eps, t
        why = _exceeds(grid, st, c0, alpha)
        if why is not None:
            exit_time, reason = float(t), why
            break
    idx = np.array(keep, dtype=int)
    return ModulationTrack(c0, alpha, eps, traj.times[idx], traj.kinds[idx], traj.jump_ids[idx],
                           states, coeffs, exit_time, reason,
                           meta={"seed": traj.noise.seed, "frame": frame})


def parameter_residual(track: ModulationTrack, noise, epsilon: float | None = None) -> tuple[float, float]:
    """Largest mismatch between tracked ``(x_eps, c_eps)`` and their integrated equations.

    Continuous stretches use the trapezoid rule on ``c + eps*y - eps*mu*m1`` and
    ``eps*a - eps*b*m1`` (``m1`` is the mean jump of the intensity measure);
    each jump ``z`` contributes ``eps*z`` times the mean of the pre- and post-jump
    ``mu`` (resp. ``b``).
    """
    eps = track.epsilon if epsilon is None else epsilon
    m1 = noise.measure.moment(1)
    t = track.times
    x = np.array([s.x_eps for s in track.states])
    c = np.array([s.c_eps for s in track.states])
    y, a, b, mu = (track.column(n) for n in ("y_eps", "a_eps", "b_eps", "mu_eps"))
    vx = c + eps * y - eps * mu * m1
    vc = eps * a - eps * b * m1
    px = np.zeros_like(x)
    pc = np.zeros_like(c)
    for i in range(1, len(t)):
        if track.kinds[i] == POST_JUMP and track.kinds[i - 1] == PRE_JUMP:
            z = noise.marks[track.jump_ids[i]]
            dx_pred = eps * z * 0.5 * (mu[i] + mu[i - 1])
            dc_pred = eps * z * 0.5 * (b[i] + b[i - 1])
        else:
            h = t[i] - t[i - 1]
            dx_pred = 0.5 * h * (vx[i] + vx[i - 1])
            dc_pred = 0.5 * h * (vc[i] + vc[i - 1])
        px[i] = px[i - 1] + dx_pred
        pc[i] = pc[i - 1] + dc_pred
    r_x = float(np.max(np.abs(x - x[0] - px))) if len(t) else 0.0
    r_c = float(np.max(np.abs(c - c[0] - pc))) if len(t) else 0.0
    return r_x, r_c


TRACK_COLUMNS = ("t", "c_eps", "x_eps", "h1_norm_eta", "y_eps", "a_eps", "b_eps", "mu_eps", "detA", "exited")


def write_track(track: ModulationTrack, grid: PeriodicGrid, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACK_COLUMNS)
        last = len(track.states) - 1
        for i, (st, cf) in enumerate(zip(track.states, track.coeffs)):
            exited = int(track.exited and i == last)
            w.writerow([repr(float(st.t)), repr(st.c_eps), repr(st.x_eps),
                        repr(grid.h1_norm(st.eta)), repr(cf.y_eps), repr(cf.a_eps),
                        repr(cf.b_eps), repr(cf.mu_eps), repr(cf.detA), exited])
