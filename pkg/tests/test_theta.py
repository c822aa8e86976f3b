from __future__ import annotations

import numpy as np
import pytest

from hitchinlab.fields import TorusGrid, max_norm
from hitchinlab.theta import (
    _as_path,
    connection_matrix,
    dbar_residual,
    gram,
    gram_rank,
    heat_grid_residual,
    heat_mode_residual,
    loop_offscalar,
    multiplier_residual,
    theta_basis,
    theta_basis_dtau,
    theta_basis_dx,
    transport,
)

TAUS = (1j, 2j, 1 + 1j, 0.5 + 0.8j)


def test_basis_golden_values(torus64):
    """Freezes the normalization and the characteristic convention."""
    grid = torus64.grid
    b1 = theta_basis(grid, 1, 1j)
    assert abs(b1[0, 0, 0] - 1.0864348112133082) < 1e-12
    b2 = theta_basis(grid, 2, 1j)
    assert abs(b2[0, 0, 0] - 1.0037348854877393) < 1e-12
    assert abs(b2[1, 0, 0] - 0.4157606025960271) < 1e-12  # characteristic 1/2


def test_translation_multipliers(torus64):
    grid = torus64.grid
    for tau in (1j, 0.5 + 0.8j):
        for k in (1, 2, 3):
            for j in range(k):
                assert multiplier_residual(grid, k, tau, j) < 1e-10


def test_basis_annihilated_by_antiholomorphic_derivative(torus64):
    for tau in (1j, 1 + 1j):
        for k in (1, 3):
            assert dbar_residual(torus64, tau, k) < 1e-10


def test_gram_is_golden_multiple_of_identity(torus64):
    grid = torus64.grid
    for tau in TAUS:
        for k in range(1, 6):
            G = gram(grid, k, tau, theta_basis(grid, k, tau))
            golden = np.sqrt(2.0 * np.pi / k)
            assert max_norm(G - golden * np.eye(k)) / golden < 1e-10
            assert gram_rank(G) == k


def test_gram_rank_detects_degeneracy():
    G = np.array([[2.0, 2.0], [2.0, 2.0]])  # rank one
    assert gram_rank(G) == 1


def test_exact_parameter_derivative_consistency(torus32):
    # FD in tau of the lattice sums against the termwise derivative
    grid = torus32.grid
    k, tau, h = 2, 1 + 1j, 1e-5
    fd = (theta_basis(grid, k, tau + h) - theta_basis(grid, k, tau - h)) / (2 * h)
    exact = theta_basis_dtau(grid, k, tau)
    assert max_norm(fd - exact) / max_norm(exact) < 1e-7


def test_heat_identities(torus64):
    for tau in TAUS:
        for k in range(1, 6):
            assert heat_mode_residual(k, tau) < 1e-12
            assert heat_grid_residual(torus64.grid, k, tau) < 1e-12


def test_termwise_x_derivative_orders(torus32):
    grid = torus32.grid
    b = theta_basis(grid, 1, 1j)
    d2 = theta_basis_dx(grid, 1, 1j, 2)
    # second derivative via two spectral passes agrees with the termwise sum
    twice = grid.deriv(grid.deriv(b[0], -2), -2)
    assert max_norm(twice - d2[0]) / max_norm(d2[0]) < 1e-9


def test_connection_matrix_basis_is_parallel(torus32):
    """The lattice basis is its own parameter flow: the connection matrix in
    the moving basis vanishes and the projection leaves no defect."""
    for tau in (1j, 1 + 1j):
        pd = connection_matrix(torus32, tau, 2, 1.0)
        assert max_norm(pd.M) < 1e-10
        assert pd.defect < 1e-10


def test_connection_matrix_difference_quotient_agrees(torus32):
    pd_exact = connection_matrix(torus32, 1j, 1, 1.0, exact=True)
    pd_fd = connection_matrix(torus32, 1j, 1, 1.0, eps=1e-4, exact=False)
    assert max_norm(pd_exact.M - pd_fd.M) < 1e-6


def test_path_normalization():
    path = _as_path((1j, 1 + 1j))
    assert path(0.0) == 1j
    assert path(1.0) == 1 + 1j
    assert path(0.5) == 0.5 + 1j
    assert path(-0.3) == 1j  # clamped
    fn = _as_path(lambda t: 1j + t)
    assert fn(0.25) == 0.25 + 1j
    with pytest.raises(ValueError):
        _as_path((1j,))


def test_transport_matches_oracle(torus32):
    res = transport(torus32, 1, (1j, 1 + 1j), np.eye(1, dtype=complex), steps=80)
    assert float(np.max(np.abs(res.end - np.eye(1)))) < 1e-9
    assert res.max_defect < 1e-9
    assert res.norm_drift < 1e-9


def test_transport_vector_and_matrix_coefficients(torus32):
    c0 = np.array([1.0 + 0.5j, -0.25j])
    res = transport(torus32, 2, (1j, 0.8 + 1.2j), c0, steps=60)
    assert res.end.shape == c0.shape
    assert float(np.max(np.abs(res.end - c0))) < 1e-9


def test_loop_holonomy_is_scalar(torus32):
    off, L = loop_offscalar(torus32, 2, 1j, 0.05, steps=60)
    assert off < 1e-8
    assert L.shape == (2, 2)


def test_mode_range_covers_mass():
    # truncation keeps the dropped summands below double precision
    from hitchinlab.theta import mode_range

    r = mode_range(1, 1.0)
    n_max = max(abs(n) for n in r)
    assert np.exp(-np.pi * n_max**2) < 1e-16
