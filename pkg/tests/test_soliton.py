import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chmarcus.errors import DomainTooSmallError
from chmarcus.grid import PeriodicGrid
from chmarcus.soliton import (SolitonParams, build_profile, dphi_dc_finite_difference,
                              invert_parametric, ode_residual, parametric_x, profile_at,
                              soliton_ode_residual)
from conftest import bump

# frozen from tests/oracles.py (mpmath, 30 digits, theta-parametrization)
PHI_3_1 = {0.0: 1.0, 0.5: 0.969542231931989, 1.7: 0.721831436390377,
           5.0: 0.148356361132975, 12.25: 0.00237698966068723}
DPHI_DC_3_1 = {0.0: 1.0, 0.5: 0.940006610732134, 1.7: 0.517559510668826,
               5.0: -0.0199210274800623, 12.25: -0.00382368962674596}
PHI_3_1_AT_40 = 2.62020781988790e-10


def test_params_validation():
    with pytest.raises(ValueError):
        SolitonParams(2.0, 1.0)
    with pytest.raises(ValueError):
        SolitonParams(3.0, 0.0)
    p = SolitonParams(3.0, 1.0)
    assert p.height == 1.0
    assert p.decay_rate == pytest.approx(np.sqrt(1 / 3))


@pytest.mark.parametrize("x", sorted(PHI_3_1))
def test_profile_matches_oracle(x):
    assert profile_at(SolitonParams(3.0, 1.0), x) == pytest.approx(PHI_3_1[x], rel=1e-12, abs=1e-15)
    assert profile_at(SolitonParams(3.0, 1.0), -x) == profile_at(SolitonParams(3.0, 1.0), x)


def test_tail_value_matches_oracle():
    assert profile_at(SolitonParams(3.0, 1.0), 40.0) == pytest.approx(PHI_3_1_AT_40, rel=1e-9)


def test_dphi_dc_matches_oracle(profile, grid):
    xs = np.array(sorted(DPHI_DC_3_1))
    got = grid.evaluate(profile.dphi_dc, xs)
    assert np.allclose(got, [DPHI_DC_3_1[x] for x in xs], rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("c", [2.9, 3.0, 4.5])
def test_dphi_dc_against_finite_difference(c, grid):
    p = SolitonParams(c, 1.0)
    prof = build_profile(p, grid)
    fd = dphi_dc_finite_difference(p, grid)
    assert np.max(np.abs(prof.dphi_dc - fd)) < 1e-8 * np.max(np.abs(fd))


def test_acceptance_shape(profile):
    phi = profile.phi
    assert phi.max() == pytest.approx(1.0, abs=1e-8)
    assert ode_residual(profile) < 1e-6
    # even about 0: node i pairs with N - i
    assert np.max(np.abs(phi[1:] - phi[1:][::-1])) < 1e-8
    assert np.all(np.abs(profile.dphi_dx) <= phi + 1e-8)


def test_peak_height_and_decay_rate(grid):
    p = SolitonParams(4.0, 1.0)
    prof = build_profile(p, grid)
    assert prof.phi.max() == pytest.approx(p.c - 2 * p.k, abs=1e-8)
    sel = (grid.x > 8) & (grid.x < 25)
    slope = np.polyfit(grid.x[sel], np.log(prof.phi[sel]), 1)[0]
    assert -slope == pytest.approx(p.decay_rate, rel=2e-3)


def test_domain_too_small():
    with pytest.raises(DomainTooSmallError):
        build_profile(SolitonParams(3.0, 1.0), PeriodicGrid(20.0, 512))


def test_residual_detects_non_solution(profile, grid):
    assert soliton_ode_residual(profile.phi + 0.1 * bump(grid, 2.0, 1.0), profile.params, grid) > 1e-2


def test_residual_shift_invariant(profile, grid):
    moved = grid.shift(profile.phi, 7.3)
    r0 = ode_residual(profile)
    assert abs(soliton_ode_residual(moved, profile.params, grid) - r0) < 1e-8


@settings(max_examples=40, deadline=None)
@given(st.floats(2.05, 20.0), st.floats(0.0, 60.0))
def test_inversion_roundtrip(c, x):
    p = SolitonParams(c, 1.0)
    th = invert_parametric(p, np.array([x]))
    if th[0] < p.theta_max:
        assert parametric_x(p, th)[0] == pytest.approx(x, abs=1e-11 * max(1.0, x))


def test_profile_is_cached(grid):
    p = SolitonParams(3.0, 1.0)
    assert build_profile(p, grid) is build_profile(p, grid)
    with pytest.raises(ValueError):
        build_profile(p, grid).phi[0] = 0.0


def test_build_runtime():
    t0 = time.perf_counter()
    build_profile(SolitonParams(3.123, 1.0), PeriodicGrid(80.0, 2048))
    assert time.perf_counter() - t0 < 5.0
