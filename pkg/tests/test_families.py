from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hitchinlab.families import (
    TorusFamily,
    d_anti,
    d_holo,
    dir_deriv,
    j_from_mu,
    nonholo_family,
    nonrigid_family,
    rigid_family,
    variation,
)
from hitchinlab.fields import ChartGrid, TorusGrid, identity_like, mat_mul, max_norm

EPS = 1e-4


def test_torus_structure_squares_to_minus_one(torus32):
    for tau in (1j, 2j, 1 + 1j, 0.5 + 0.8j):
        J = torus32.J_at(tau)
        assert max_norm(mat_mul(J, J) + identity_like(J)) < 1e-12


def test_torus_exact_variation_matches_quotient(torus32):
    for tau in (1j, 1 + 1j, 0.5 + 0.8j):
        for v in (1.0, 1j):
            fd = dir_deriv(torus32.J_at, tau, v, EPS)
            assert max_norm(torus32.vj_exact(tau, v) - fd) < 1e-6


def test_torus_variation_gates(torus32):
    var = variation(torus32, 1 + 1j, 1.0, EPS, exact=True)
    assert var.anticommute_residual < 1e-12
    assert var.symmetry_residual < 1e-12
    assert var.holomorphy_residual < 1e-12
    assert var.rigidity_residual < 1e-10
    # the closed-form G matches the one assembled from the FD variation
    var_fd = variation(torus32, 1 + 1j, 1.0, EPS)
    assert max_norm(var.G - var_fd.G) < 1e-6
    assert max_norm(var.G - torus32.g_exact(1 + 1j, 1.0)) < 1e-12


def test_state_cache_returns_same_object(torus32):
    assert torus32.state(1j) is torus32.state(1j)


def test_rigid_family_constant_datum_closed_form():
    # with f = c the generator must reproduce mu = (omega0 c / 4) sigma exactly
    grid = ChartGrid(17)
    c = 0.3 - 0.2j
    fam, _ = rigid_family(grid, {0: c}, order=6, radius=0.2)
    for sigma in (0.1, 0.05 + 0.12j):
        target = (2 * np.pi * c / 4.0) * sigma
        assert max_norm(fam.mu(sigma) - target) < 1e-14


def test_rigid_family_gates(chart48):
    fam, report = chart48
    assert report.order == 8
    assert report.mu_sup < 0.5  # still a genuine structure at the stated radius
    var = variation(fam, 0.1 + 0.05j, 1.0, EPS)
    assert var.anticommute_residual < 1e-8
    assert var.symmetry_residual < 1e-10
    assert var.holomorphy_residual < 1e-8
    assert var.rigidity_residual < 1e-8


def test_rigid_family_exact_variation_agrees_with_quotient(chart48):
    fam, _ = chart48
    sigma = 0.1 + 0.05j
    fd = dir_deriv(fam.J_at, sigma, 1.0, EPS)
    assert max_norm(fam.vj_exact(sigma, 1.0) - fd) < 1e-6


def test_nonrigid_family_is_flagged():
    grid = ChartGrid(48)
    var = variation(nonrigid_family(grid), 0.05, 1.0, EPS)
    assert var.rigidity_residual > 0.1


def test_nonholo_family_is_flagged():
    grid = ChartGrid(48)
    var = variation(nonholo_family(grid), 0.05, 1.0, EPS)
    assert var.holomorphy_residual > 0.5


def test_variation_raises_without_closed_form():
    grid = ChartGrid(16)
    with pytest.raises(ValueError):
        variation(nonholo_family(grid), 0.05, 1.0, EPS, exact=True)


@given(
    sr=st.floats(-0.5, 0.5),
    si=st.floats(-0.5, 0.5),
)
@settings(max_examples=30, deadline=None)
def test_parameter_wirtinger_derivatives(sr, si):
    sigma = complex(sr, si)

    def f(s: complex) -> np.ndarray:
        return np.array([[s**3]])

    # cubic in sigma: holomorphic derivative 3 sigma^2, antiholomorphic zero
    scale = max(abs(sigma) ** 2, 1.0)
    assert abs(d_holo(f, sigma, 1e-5)[0, 0] - 3 * sigma**2) < 1e-7 * scale
    assert abs(d_anti(f, sigma, 1e-5)[0, 0]) < 1e-7 * scale


@given(mr=st.floats(-0.5, 0.5), mi=st.floats(-0.5, 0.5))
@settings(max_examples=30, deadline=None)
def test_structure_from_beltrami_datum(mr, mi):
    mu = np.full((4, 4), complex(mr, mi))
    J = j_from_mu(mu)
    assert max_norm(mat_mul(J, J) + identity_like(J)) < 1e-10
    assert max_norm(np.imag(J)) < 1e-12  # the structure is a real endomorphism


def test_torus_default_potential_is_zero(torus32):
    st_ = torus32.state(1 + 1j)
    assert max_norm(st_.F) == 0.0
    # the metric coefficient in the holomorphic frame is constant on the torus
    assert max_norm(st_.h_w - st_.h_w[0, 0]) < 1e-10
