"""Smooth Camassa-Holm solitary waves (k > 0) from their parametric form.

The profile is known only implicitly: with ``s = sqrt(1 - 2k/c)`` and
``theta0 = artanh(s)``,

    u(theta) = (c - 2k) / (1 + (2k/c) sinh(theta)^2)
    x(theta) = 2 theta / s + log(cosh(theta - theta0) / cosh(theta + theta0))

so evaluating ``phi_c(x)`` means inverting the strictly increasing map
``theta -> x(theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import DomainTooSmallError, InversionError
from .grid import PeriodicGrid

DEFAULT_C0 = 3.0
DEFAULT_K = 1.0

# tail amplitude allowed at x = +-L/2; see build_profile
TAIL_TOL = 1e-9
# step sizes for the finite-difference check of d phi / dc
DC_STEPS = (1e-4, 5e-5)

_MAX_NEWTON = 100


@dataclass(frozen=True)
class SolitonParams:
    c: float = DEFAULT_C0
    k: float = DEFAULT_K

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"need k > 0 for a smooth soliton, got k={self.k}")
        if not self.c > 2 * self.k:
            raise ValueError(f"need c > 2k for a smooth soliton, got c={self.c}, k={self.k}")

    @property
    def height(self) -> float:
        return self.c - 2 * self.k

    @property
    def decay_rate(self) -> float:
        return float(np.sqrt(1.0 - 2.0 * self.k / self.c))

    @property
    def theta0(self) -> float:
        return float(np.arctanh(self.decay_rate))

    @property
    def theta_max(self) -> float:
        # beyond this u(theta) < 1e-16 (c - 2k)
        return float(np.arcsinh(np.sqrt(1e16 * self.c / (2 * self.k))))

    def with_speed(self, c: float) -> "SolitonParams":
        return SolitonParams(c, self.k)


def _logcosh(a):
    a = np.abs(a)
    return a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)


def parametric_x(params: SolitonParams, theta):
    s, th0 = params.decay_rate, params.theta0
    return 2.0 * theta / s + _logcosh(theta - th0) - _logcosh(theta + th0)


def parametric_dx_dtheta(params: SolitonParams, theta):
    s, th0 = params.decay_rate, params.theta0
    return 2.0 / s + np.tanh(theta - th0) - np.tanh(theta + th0)


def parametric_u(params: SolitonParams, theta):
    return params.height / (1.0 + (2.0 * params.k / params.c) * np.sinh(theta) ** 2)


def parametric_dc(params: SolitonParams, theta):
    """``d phi_c / dc`` at the point ``x(theta)``, by implicit differentiation.

    ``phi = u(theta(x, c), c)`` so ``d_c phi = d_c u - d_theta u * d_c x / d_theta x``.
    """
    c, k = params.c, params.k
    r = 2.0 * k / c
    s, th0 = params.decay_rate, params.theta0
    sh2 = np.sinh(theta) ** 2
    den = 1.0 + r * sh2
    dr_dc = -2.0 * k / c**2
    du_dc = 1.0 / den - params.height * dr_dc * sh2 / den**2
    du_dth = -params.height * r * np.sinh(2.0 * theta) / den**2
    ds_dc = k / (c**2 * s)
    dth0_dc = ds_dc / (1.0 - s**2)
    dx_dc = (-2.0 * theta * ds_dc / s**2
             - (np.tanh(theta - th0) + np.tanh(theta + th0)) * dth0_dc)
    return du_dc - du_dth * dx_dc / parametric_dx_dtheta(params, theta)


def invert_parametric(params: SolitonParams, x, theta_guess=None):
    """Solve ``x(theta) = x`` for ``theta >= 0`` given ``x >= 0`` (vectorized).

    Safeguarded Newton: iterates that leave the current bracket are replaced
    by bisection.  Targets beyond ``x(theta_max)`` get ``theta_max``.
    """
    x = np.asarray(x, dtype=float)
    th_max = params.theta_max
    lo = np.zeros_like(x)
    hi = np.full_like(x, th_max)
    if theta_guess is None:
        theta = np.clip(0.5 * params.decay_rate * x, 0.0, th_max)
    else:
        theta = np.clip(np.asarray(theta_guess, dtype=float), 0.0, th_max)
    active = x < parametric_x(params, th_max)
    theta = np.where(active, theta, th_max)
    tol = 4.0 * np.finfo(float).eps
    for _ in range(_MAX_NEWTON):
        if not active.any():
            return theta
        th = theta[active]
        r = parametric_x(params, th) - x[active]
        d = parametric_dx_dtheta(params, th)
        if np.any(d <= 0):
            raise InversionError("parametric map is not increasing; check (c, k)")
        lo_a = np.where(r < 0, th, lo[active])
        hi_a = np.where(r > 0, th, hi[active])
        step = r / d
        new = th - step
        outside = (new < lo_a) | (new > hi_a)
        new = np.where(outside, 0.5 * (lo_a + hi_a), new)
        new = np.where(r == 0, th, new)
        done = (np.abs(new - th) <= tol * np.maximum(1.0, th)) | (r == 0)
        lo[active], hi[active] = lo_a, hi_a
        theta[active] = new
        idx = np.nonzero(active)[0]
        active[idx[done]] = False
    raise InversionError(f"theta inversion did not converge in {_MAX_NEWTON} iterations")


def profile_values(params: SolitonParams, x, theta_guess=None):
    """Return ``(phi_c(x), theta(|x|))`` for an array of positions."""
    x = np.asarray(x, dtype=float)
    theta = invert_parametric(params, np.abs(x), theta_guess)
    u = parametric_u(params, theta)
    u = np.where(theta >= params.theta_max, 0.0, u)
    return u, theta


def profile_at(params: SolitonParams, x: float) -> float:
    """Soliton profile at a single point (peak at x = 0)."""
    u, _ = profile_values(params, np.array([x]))
    return float(u[0])


@dataclass(frozen=True, eq=False)
class SolitonProfile:
    params: SolitonParams
    grid: PeriodicGrid
    phi: np.ndarray
    dphi_dx: np.ndarray
    dphi_dc: np.ndarray

    @property
    def c(self) -> float:
        return self.params.c

    @cached_property
    def phi_xx(self) -> np.ndarray:
        return self.grid.deriv(self.phi, 2)

    @cached_property
    def helm_phi(self) -> np.ndarray:
        """``(1 - d^2) phi``."""
        return self.grid.helmholtz(self.phi)

    @cached_property
    def helm_dphi_dx(self) -> np.ndarray:
        """``(1 - d^2) d/dx phi``."""
        return self.grid.helmholtz(self.dphi_dx)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@lru_cache(maxsize=512)
def build_profile(params: SolitonParams, grid: PeriodicGrid, tail_tol: float = TAIL_TOL) -> SolitonProfile:
    """Sample ``phi_c`` with its x- and c-derivatives on ``grid``.

    The x-derivative is spectral; the c-derivative is exact, from the
    parametric form (see ``parametric_dc``).
    """
    half = 0.5 * grid.length
    tail = profile_at(params, half)
    if tail >= tail_tol:
        raise DomainTooSmallError(
            f"domain too small: phi({half}) = {tail:.3e} >= {tail_tol:.1e} for c={params.c}, k={params.k}"
        )
    x = grid.x
    phi, theta = profile_values(params, x)
    dphi_dx = grid.deriv(phi, 1)
    dphi_dc = np.where(theta >= params.theta_max, 0.0, parametric_dc(params, theta))
    return SolitonProfile(params, grid, _frozen(phi), _frozen(dphi_dx), _frozen(dphi_dc))


def dphi_dc_finite_difference(params: SolitonParams, grid: PeriodicGrid, steps=DC_STEPS) -> np.ndarray:
    """Central difference in c, Richardson-extrapolated over two step sizes."""
    x = grid.x
    _, theta = profile_values(params, x)

    def central(h):
        up, _ = profile_values(params.with_speed(params.c + h), x, theta)
        dn, _ = profile_values(params.with_speed(params.c - h), x, theta)
        return (up - dn) / (2.0 * h)

    h1, h2 = steps
    ratio = (h1 / h2) ** 2
    return (ratio * central(h2) - central(h1)) / (ratio - 1.0)


def soliton_ode_residual(phi: np.ndarray, params: SolitonParams, grid: PeriodicGrid) -> float:
    """Max-norm residual of the travelling-wave ODE, relative to max|phi|."""
    c, k = params.c, params.k
    px = grid.deriv(phi, 1)
    pxx = grid.deriv(phi, 2)
    res = -c * phi + c * pxx + 1.5 * phi**2 + 2 * k * phi - phi * pxx - 0.5 * px**2
    return float(np.max(np.abs(res)) / np.max(np.abs(phi)))


def ode_residual(profile: SolitonProfile) -> float:
    return soliton_ode_residual(profile.phi, profile.params, profile.grid)
