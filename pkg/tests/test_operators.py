import numpy as np
import pytest

from chmarcus.operators import (LinearizedOperator, apply_Lc, ch_drift, f_of_eta, g_of_eta,
                                h1_grad, h2_grad, hamiltonian_h1, hamiltonian_h2, lyapunov,
                                pressure)
from chmarcus.soliton import SolitonParams, build_profile
from conftest import bump, smooth_random

# frozen from tests/oracles.py: integrals over the line, parametric quadrature
H1_3_1 = 2.14714371821294
H2_3_1 = 5.61124533335069
H1_4_1 = 6.72253420019948
H2_4_1 = 21.8074788655125


def gateaux(F, u, v, s=1e-5):
    return (F(u + s * v) - F(u - s * v)) / (2 * s)


def test_hamiltonians_vanish_at_zero(grid):
    z = np.zeros(grid.n_points)
    assert hamiltonian_h1(grid, z) == 0.0
    assert hamiltonian_h2(grid, z, 1.0) == 0.0


@pytest.mark.parametrize("c, h1, h2", [(3.0, H1_3_1, H2_3_1), (4.0, H1_4_1, H2_4_1)])
def test_hamiltonians_of_soliton_match_quadrature(grid, c, h1, h2):
    prof = build_profile(SolitonParams(c, 1.0), grid)
    assert hamiltonian_h1(grid, prof.phi) == pytest.approx(h1, rel=1e-9)
    assert hamiltonian_h2(grid, prof.phi, 1.0) == pytest.approx(h2, rel=1e-6)


@pytest.mark.parametrize("a", [0.37, -5.0, 12.5])
def test_hamiltonians_translation_invariant(grid, a):
    u = bump(grid, 1.0, 2.5)
    assert hamiltonian_h1(grid, grid.shift(u, a)) == pytest.approx(hamiltonian_h1(grid, u), abs=1e-12)
    assert hamiltonian_h2(grid, grid.shift(u, a), 1.0) == pytest.approx(hamiltonian_h2(grid, u, 1.0), rel=1e-12)


def test_h1_grad_of_constant(grid):
    assert np.allclose(h1_grad(grid, np.full(grid.n_points, 2.5)), 2.5)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gradients_match_gateaux(grid, seed):
    rng = np.random.default_rng(seed)
    u = smooth_random(grid, rng, amp=0.8)
    v = smooth_random(grid, rng, width=0.7)
    d1 = gateaux(lambda w: hamiltonian_h1(grid, w), u, v)
    assert grid.inner(h1_grad(grid, u), v) == pytest.approx(d1, rel=1e-7)
    d2 = gateaux(lambda w: hamiltonian_h2(grid, w, 1.0), u, v)
    assert grid.inner(h2_grad(grid, u, 1.0), v) == pytest.approx(d2, rel=1e-6)


def test_criticality(profile, grid):
    res = 3.0 * h1_grad(grid, profile.phi) - h2_grad(grid, profile.phi, 1.0)
    assert grid.l2_norm(res) < 1e-5 * grid.l2_norm(profile.phi)


def test_lyapunov_is_stationary_at_soliton(profile, grid):
    v = bump(grid, 0.5, 2.0)
    assert abs(gateaux(lambda w: lyapunov(grid, w, 3.0, 1.0), profile.phi, v)) < 1e-6


def test_pressure(grid):
    assert np.array_equal(pressure(grid, np.zeros(grid.n_points), 1.0), np.zeros(grid.n_points))
    u = bump(grid, -1.0, 2.0)
    ux = grid.deriv(u)
    lhs = grid.helmholtz(pressure(grid, u, 1.0))
    rhs = grid.product(u, u) + 0.5 * grid.product(ux, ux) + 2.0 * u
    assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_drift_equals_components(grid):
    u = bump(grid, 2.0, 1.7)
    ref = -grid.product(u, grid.deriv(u)) - grid.deriv(pressure(grid, u, 1.0))
    assert np.max(np.abs(ch_drift(grid, u, 1.0) - ref)) < 1e-13


def test_traveling_wave_relation(profile, grid):
    assert np.max(np.abs(ch_drift(grid, profile.phi, 1.0) + 3.0 * profile.dphi_dx)) < 1e-6


def test_linearized_zero_and_linearity(profile, grid, rng):
    op = LinearizedOperator.from_profile(profile)
    assert np.array_equal(op(np.zeros(grid.n_points)), np.zeros(grid.n_points))
    w, v = smooth_random(grid, rng), smooth_random(grid, rng)
    assert np.allclose(op(2 * w - v), 2 * op(w) - op(v), atol=1e-11)
    assert np.array_equal(apply_Lc(op, w), op.apply(w))


@pytest.mark.parametrize("seed", [3, 4, 5])
def test_linearized_self_adjoint(profile, grid, seed):
    rng = np.random.default_rng(seed)
    op = LinearizedOperator.from_profile(profile)
    w, v = smooth_random(grid, rng), smooth_random(grid, rng)
    a, b = grid.inner(op(w), v), grid.inner(w, op(v))
    assert abs(a - b) <= 1e-9 * max(abs(a), abs(b))


def test_translation_zero_mode(profile, grid):
    op = LinearizedOperator.from_profile(profile)
    assert grid.l2_norm(op(profile.dphi_dx)) / grid.l2_norm(profile.dphi_dx) < 1e-5


def test_linearized_is_second_variation(profile, grid, rng):
    # L_c = 2 (c H1 - H2)'' at phi_c
    op = LinearizedOperator.from_profile(profile)
    w = smooth_random(grid, rng, amp=1.0)

    def grad(u):
        return 3.0 * h1_grad(grid, u) - h2_grad(grid, u, 1.0)

    s = 1e-5
    second = (grad(profile.phi + s * w) - grad(profile.phi - s * w)) / (2 * s)
    assert np.max(np.abs(op(w) - 2.0 * second)) < 1e-6 * np.max(np.abs(op(w)))


def test_f_of_eta(grid, rng):
    assert np.array_equal(f_of_eta(grid, np.zeros(grid.n_points)), np.zeros(grid.n_points))
    eta = smooth_random(grid, rng)
    assert np.max(np.abs(f_of_eta(grid, 2 * eta) - 4 * f_of_eta(grid, eta))) < 1e-10
    scale = grid.l2_norm(eta) ** 3
    assert abs(grid.inner(grid.helmholtz(f_of_eta(grid, eta)), eta)) < 1e-9 * scale


def test_g_of_eta_identity(grid, profile, rng):
    eta = smooth_random(grid, rng)
    assert np.array_equal(g_of_eta(grid, eta, 3.0, profile, profile), np.zeros(grid.n_points))
    pe = build_profile(SolitonParams(3.1, 1.0), grid)
    lhs = grid.deriv(LinearizedOperator.from_profile(pe)(eta))
    rhs = grid.deriv(LinearizedOperator.from_profile(profile)(eta)) + g_of_eta(grid, eta, 3.1, pe, profile)
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * max(1.0, np.max(np.abs(lhs)))


def test_g_of_eta_linear_in_speed_offset(grid, profile, rng):
    eta = smooth_random(grid, rng)
    consts = []
    for dc in (0.01, 0.05, 0.1):
        pe = build_profile(SolitonParams(3.0 + dc, 1.0), grid)
        consts.append(grid.l2_norm(g_of_eta(grid, eta, 3.0 + dc, pe, profile)) / (dc * grid.h1_norm(eta)))
    assert max(consts) / min(consts) < 1.2
