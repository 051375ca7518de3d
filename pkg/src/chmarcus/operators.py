"""Hamiltonians, their gradients, the nonlocal pressure and linearizations.

Every quadratic or cubic product goes through ``grid.product`` (2/3 rule).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import PeriodicGrid
from .soliton import SolitonProfile


def hamiltonian_h1(grid: PeriodicGrid, u: np.ndarray) -> float:
    """``H1 = 1/2 int u^2 + u_x^2``."""
    ux = grid.deriv(u)
    return 0.5 * (grid.inner(u, u) + grid.inner(ux, ux))


def hamiltonian_h2(grid: PeriodicGrid, u: np.ndarray, k: float) -> float:
    """``H2 = 1/2 int u^3 + u u_x^2 + 2k u^2``."""
    ux = grid.deriv(u)
    return 0.5 * grid.dx * float(np.sum(u**3 + u * ux**2 + 2.0 * k * u**2))


def lyapunov(grid: PeriodicGrid, u: np.ndarray, c: float, k: float) -> float:
    """``H_c = c H1 - H2``."""
    return c * hamiltonian_h1(grid, u) - hamiltonian_h2(grid, u, k)


def h1_grad(grid: PeriodicGrid, u: np.ndarray) -> np.ndarray:
    return grid.helmholtz(u)


def h2_grad(grid: PeriodicGrid, u: np.ndarray, k: float) -> np.ndarray:
    """L2 gradient of H2: ``(3u^2 - u_x^2 - 2 u u_xx + 4k u) / 2``."""
    ux = grid.deriv(u, 1)
    uxx = grid.deriv(u, 2)
    return 0.5 * (3.0 * grid.product(u, u) - grid.product(ux, ux)
                  - 2.0 * grid.product(u, uxx)) + 2.0 * k * u


def pressure(grid: PeriodicGrid, u: np.ndarray, k: float) -> np.ndarray:
    """``P = (1 - d^2)^{-1} (u^2 + u_x^2 / 2 + 2k u)``."""
    ux = grid.deriv(u)
    return grid.helmholtz_inv(grid.product(u, u) + 0.5 * grid.product(ux, ux) + 2.0 * k * u)


def ch_drift(grid: PeriodicGrid, u: np.ndarray, k: float) -> np.ndarray:
    """Deterministic Camassa-Holm vector field ``-(u u_x + P_x)``.

    Same result as composing ``product``/``helmholtz_inv_deriv``, fused into
    five transforms because this is the inner loop of every simulation.
    """
    grid.check(u)
    xi = grid.wavenumbers.copy()
    xi[-1] = 0.0
    uh = np.fft.rfft(u)
    ux = np.fft.irfft(1j * xi * uh, n=grid.n_points)
    adv = np.fft.rfft(u * ux)
    src = np.fft.rfft(u * u + 0.5 * ux * ux)
    if grid.dealias:
        cut = ~grid._dealias_mask
        adv[cut] = 0.0
        src[cut] = 0.0
    out = -adv - (1j * xi / (1.0 + xi**2)) * (src + 2.0 * k * uh)
    return np.fft.irfft(out, n=grid.n_points)


@dataclass(frozen=True, eq=False)
class LinearizedOperator:
    """``L_c w = -d((2c - 2 phi) dw) - 6 phi w + 2 phi_xx w + 2 (c - 2k) w``."""

    grid: PeriodicGrid
    c: float
    k: float
    phi: np.ndarray
    phi_xx: np.ndarray

    @classmethod
    def from_profile(cls, profile: SolitonProfile) -> "LinearizedOperator":
        return cls(profile.grid, profile.c, profile.params.k, profile.phi, profile.phi_xx)

    def apply(self, w: np.ndarray) -> np.ndarray:
        g = self.grid
        flux = g.product(2.0 * self.c - 2.0 * self.phi, g.deriv(w))
        return (-g.deriv(flux)
                - 6.0 * g.product(self.phi, w)
                + 2.0 * g.product(self.phi_xx, w)
                + 2.0 * (self.c - 2.0 * self.k) * w)

    __call__ = apply

    def comoving_drift(self, w: np.ndarray) -> np.ndarray:
        """``1/2 (1 - d^2)^{-1} d/dx L_c w``: linearized flow in the frame of speed c."""
        return 0.5 * self.grid.helmholtz_inv_deriv(self.apply(w))


def apply_Lc(op: LinearizedOperator, w: np.ndarray) -> np.ndarray:
    return op.apply(w)


def f_of_eta(grid: PeriodicGrid, eta: np.ndarray) -> np.ndarray:
    """Quadratic remainder ``-eta eta_x - (1 - d^2)^{-1} d/dx (eta^2 + eta_x^2 / 2)``."""
    ex = grid.deriv(eta)
    return (-grid.product(eta, ex)
            - grid.helmholtz_inv_deriv(grid.product(eta, eta) + 0.5 * grid.product(ex, ex)))


def g_of_eta(grid: PeriodicGrid, eta: np.ndarray, c_eps: float,
             profile_ceps: SolitonProfile, profile_c0: SolitonProfile) -> np.ndarray:
    """Difference ``d/dx L_{c_eps} eta - d/dx L_{c0} eta`` written out term by term."""
    c0 = profile_c0.c
    dphi = profile_ceps.phi - profile_c0.phi
    dphi_xx = profile_ceps.phi_xx - profile_c0.phi_xx
    d = grid.deriv
    return (-2.0 * d(d(grid.product((c_eps - c0) - dphi, d(eta))))
            - 6.0 * d(grid.product(dphi, eta))
            + 2.0 * d(grid.product(dphi_xx, eta))
            + 2.0 * (c_eps - c0) * d(eta))
