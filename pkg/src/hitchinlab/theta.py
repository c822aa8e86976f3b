r"""Torus holomorphic sections, Gram data, parallel transport, holonomy.

At level ``k`` on the unit torus with the fixed unitary gauge, the
coefficient functions of holomorphic sections are the lattice sums

.. math::
    s_j(x, y; \tau) = \sum_{n\in\mathbb Z}
        \exp\!\big(i\pi k\tau\,\tilde n^2 + 2\pi i k\tilde n\,(x+\tau y)
                   + i\pi k\tau\,y^2\big),
    \qquad \tilde n = n + j/k,\ j = 0,\dots,k-1,

which satisfy the translation multipliers ``s(x+1,y) = s(x,y)``,
``s(x,y+1) = exp(-2 pi i k x) s(x,y)`` and are annihilated by the (0,1)
part of the connection.  The half-form frame is constant over the torus
and contributes no shift of the characteristics ``j/k``; this convention
is frozen by a golden test.

Each summand separately satisfies the mode identity

.. math::
    i\pi k\tilde n^2 \;=\; \frac{(2\pi i k\tilde n)^2}{4\pi i k},

equivalently the coefficient sums solve
:math:`\partial_\tau \theta = \tfrac{1}{4\pi i k}\partial_z^2\theta`;
the transported basis is therefore its own flow, which is the oracle the
transport runs are compared against.

Transport integrates the coefficient ODE :math:`\dot c = -M(t)c` with a
fixed-step 4th-order Runge-Kutta scheme, where ``M`` is the connection
matrix of the full family connection (reference part plus the
second-order correction) in the moving basis, assembled by Gram
projection.  The projection defect measures how well the connection
preserves the holomorphic subspace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bundle import a_T, bundle_data, sec_grad
from .families import TorusFamily, dir_deriv
from .fields import Array, TorusGrid, max_norm, proj_anti
from .operators import delta_G, u_apply

# ---------------------------------------------------------------------------
# basis
# ---------------------------------------------------------------------------


def mode_range(k: int, t2: float) -> range:
    """Lattice range keeping truncated summands below double-precision floor."""
    reach = int(np.ceil(np.sqrt(38.0 / (np.pi * k * t2)))) + 2
    return range(-reach, reach + 1)


def theta_basis(grid: TorusGrid, k: int, tau: complex) -> Array:
    """Holomorphic coefficient functions, shape ``(k, n, n)``."""
    x, y = grid.x, grid.y
    z = x + tau * y
    out = np.zeros((k,) + grid.shape, dtype=complex)
    for j in range(k):
        for n in mode_range(k, tau.imag):
            nt = n + j / k
            out[j] += np.exp(
                1j * np.pi * k * tau * nt * nt
                + 2j * np.pi * k * nt * z
                + 1j * np.pi * k * tau * y * y
            )
    return out


def theta_basis_dtau(grid: TorusGrid, k: int, tau: complex) -> Array:
    r"""Exact parameter derivative :math:`\partial_\tau s_j`, termwise
    :math:`i\pi k(\tilde n + y)^2` times the summand.  The sums are
    holomorphic in ``tau``, so the derivative along a real tangent
    direction ``v`` is ``v`` times this array."""
    x, y = grid.x, grid.y
    z = x + tau * y
    out = np.zeros((k,) + grid.shape, dtype=complex)
    for j in range(k):
        for n in mode_range(k, tau.imag):
            nt = n + j / k
            out[j] += (
                1j * np.pi * k * (nt + y) ** 2
                * np.exp(
                    1j * np.pi * k * tau * nt * nt
                    + 2j * np.pi * k * nt * z
                    + 1j * np.pi * k * tau * y * y
                )
            )
    return out


def theta_basis_dx(grid: TorusGrid, k: int, tau: complex, order: int = 1) -> Array:
    """Exact x-derivative of the basis, termwise ``(2 pi i k n~)**order``."""
    x, y = grid.x, grid.y
    z = x + tau * y
    out = np.zeros((k,) + grid.shape, dtype=complex)
    for j in range(k):
        for n in mode_range(k, tau.imag):
            nt = n + j / k
            out[j] += (2j * np.pi * k * nt) ** order * np.exp(
                1j * np.pi * k * tau * nt * nt
                + 2j * np.pi * k * nt * z
                + 1j * np.pi * k * tau * y * y
            )
    return out


def heat_grid_residual(grid: TorusGrid, k: int, tau: complex) -> float:
    r"""Worst per-mode defect of the heat identity on the grid.

    In this gauge the coefficient functions carry the extra factor
    :math:`e^{i\pi k\tau y^2}` relative to the bare lattice sums, so the
    heat equation picks up transport terms:

    .. math::
        \partial_\tau s_j = \frac{1}{4\pi i k}\,\partial_x^2 s_j
            + y\,\partial_x s_j + i\pi k\,y^2 s_j .

    Both sides are assembled from independent termwise-exact sums, so the
    residual probes only the normalization conventions, not a
    finite-difference error.
    """
    y = grid.y
    s = theta_basis(grid, k, tau)
    lhs = theta_basis_dtau(grid, k, tau)
    d1 = theta_basis_dx(grid, k, tau, 1)
    d2 = theta_basis_dx(grid, k, tau, 2)
    rhs = d2 / (4j * np.pi * k) + y * d1 + 1j * np.pi * k * y * y * s
    worst = 0.0
    for j in range(k):
        worst = max(worst, max_norm(lhs[j] - rhs[j]) / max_norm(s[j]))
    return worst


def multiplier_residual(grid: TorusGrid, k: int, tau: complex, j: int = 0) -> float:
    """Defect of the y-translation multiplier, evaluated off-grid."""
    if k < 1:
        raise ValueError("multiplier check needs a positive level")
    x, y = grid.x, grid.y

    def val(xx: Array, yy: Array) -> Array:
        z = xx + tau * yy
        out = np.zeros(xx.shape, dtype=complex)
        for n in mode_range(k, tau.imag):
            nt = n + j / k
            out += np.exp(
                1j * np.pi * k * tau * nt * nt
                + 2j * np.pi * k * nt * z
                + 1j * np.pi * k * tau * yy * yy
            )
        return out

    lhs = val(x, y + 1.0)
    rhs = np.exp(-2j * np.pi * k * x) * val(x, y)
    return float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))


def dbar_residual(fam: TorusFamily, tau: complex, k: int) -> float:
    """Relative sup of the (0,1) covariant derivative over the basis."""
    grid = fam.grid
    bd = bundle_data(fam, tau, k)
    Q = proj_anti(bd.state.J)
    basis = theta_basis(grid, k, tau)
    worst = 0.0
    for j in range(k):
        gr = sec_grad(bd, basis[j])
        anti = np.einsum("a...,ab...->b...", gr, Q)
        worst = max(worst, max_norm(anti) / max(max_norm(basis[j]), 1e-300))
    return worst


def gram(grid: TorusGrid, k: int, tau: complex, basis: Array) -> Array:
    r"""Inner products :math:`\langle s_i, s_j\rangle
    = 2\pi\sqrt{\operatorname{Im}\tau/\pi}\;\overline{\text{mean}}(s_i\bar s_j)`."""
    weight = 2.0 * np.pi * np.sqrt(tau.imag / np.pi)
    return weight * np.einsum("iab,jab->ij", basis, np.conj(basis)) / grid.n**2


def gram_rank(G: Array, rtol: float = 1e-10) -> int:
    ev = np.linalg.eigvalsh(G)
    return int(np.sum(ev > rtol * ev.max()))


def heat_mode_residual(k: int, tau: complex) -> float:
    r"""Largest defect of :math:`i\pi k\tilde n^2 = (2\pi i k\tilde n)^2/(4\pi i k)`
    over the truncated mode set (freezes the normalization conventions)."""
    worst = 0.0
    for j in range(k):
        for n in mode_range(k, tau.imag):
            nt = n + j / k
            lhs = 1j * np.pi * k * nt * nt
            rhs = (2j * np.pi * k * nt) ** 2 / (4j * np.pi * k)
            scale = max(abs(lhs), 1.0)
            worst = max(worst, abs(lhs - rhs) / scale)
    return worst


# ---------------------------------------------------------------------------
# connection matrix and transport
# ---------------------------------------------------------------------------


@dataclass
class ProjectionData:
    """Connection matrix in the moving basis plus its projection defect."""

    M: Array  # (k, k)
    defect: float  # sup-norm residual of nabla_V s_j off the span, relative


def connection_matrix(
    fam: TorusFamily,
    tau: complex,
    k: int,
    v: complex,
    eps: float = 1e-4,
    exact: bool = True,
) -> ProjectionData:
    grid = fam.grid
    basis = theta_basis(grid, k, tau)
    bd = bundle_data(fam, tau, k)
    aT = a_T(fam, tau, v, eps, exact=exact)
    nab = np.empty_like(basis)
    dbasis = theta_basis_dtau(grid, k, tau) if exact else None
    for j in range(k):
        if exact:
            Vs = v * dbasis[j]
        else:
            Vs = dir_deriv(lambda s: theta_basis(grid, k, s)[j], tau, v, eps)
        nab[j] = Vs + aT * basis[j] + u_apply(fam, tau, k, v, basis[j], eps, exact=exact)
    G = gram(grid, k, tau, basis)
    # pairing P[l, j] = weight * mean(conj(s_l) * nabla s_j); with
    # nabla s_j = sum_i M[i, j] s_i this gives P = G^T M, so M solves
    # conj(G) M = P (G is Hermitian).
    weight = 2.0 * np.pi * np.sqrt(tau.imag / np.pi)
    P = weight * np.einsum("lab,jab->lj", np.conj(basis), nab) / grid.n**2
    M = np.linalg.solve(np.conj(G), P)
    proj = np.einsum("ij,iab->jab", M, basis)
    scale = max(max_norm(basis), 1e-300)
    defect = max_norm(nab - proj) / scale
    return ProjectionData(M=M, defect=defect)


@dataclass
class TransportResult:
    path: tuple[complex, ...]
    steps: int
    start: Array  # coefficients at the start
    end: Array  # coefficients at the end
    max_defect: float  # worst projection defect along the path
    norm_drift: float  # relative drift of the Gram norm of the section


def _as_path(path) -> Callable[[float], complex]:
    """Normalize a waypoint sequence to a piecewise-linear path callable."""
    if callable(path):
        return path
    pts = [complex(p) for p in path]
    if len(pts) < 2:
        raise ValueError("a path needs at least two waypoints")
    segs = len(pts) - 1

    def fn(t: float) -> complex:
        u = min(max(t, 0.0), 1.0) * segs
        i = min(int(u), segs - 1)
        return pts[i] + (u - i) * (pts[i + 1] - pts[i])

    return fn


def transport(
    fam: TorusFamily,
    k: int,
    path,
    c0: Array,
    steps: int = 1000,
    eps: float = 1e-4,
    exact: bool = True,
) -> TransportResult:
    r"""Fixed-step RK4 integration of :math:`\dot c = -M(t)\,c`.

    ``path`` maps ``t in [0, 1]`` to parameters (a callable, or a
    sequence of waypoints joined by straight segments); directions are
    the path velocity.  The endpoint coefficients express the
    transported section in the holomorphic basis at the endpoint.
    Coefficients may be a vector or a matrix of stacked columns.
    """
    path = _as_path(path)
    grid = fam.grid
    h = 1.0 / steps
    c = np.asarray(c0, dtype=complex).copy()
    max_defect = 0.0
    memo: dict[float, Array] = {}

    def M_at(t: float) -> Array:
        nonlocal max_defect
        key = round(t, 12)
        if key in memo:
            return memo[key]
        tau = path(t)
        dt = 1e-6
        t_hi, t_lo = min(t + dt, 1.0), max(t - dt, 0.0)
        vel = (path(t_hi) - path(t_lo)) / (t_hi - t_lo)
        pd = connection_matrix(fam, tau, k, vel, eps, exact)
        max_defect = max(max_defect, pd.defect)
        memo[key] = pd.M
        return pd.M

    for i in range(steps):
        t = i * h
        M1 = M_at(t)
        M2 = M_at(t + 0.5 * h)
        M4 = M_at(t + h)
        k1 = -M1 @ c
        k2 = -M2 @ (c + 0.5 * h * k1)
        k3 = -M2 @ (c + 0.5 * h * k2)
        k4 = -M4 @ (c + h * k3)
        c = c + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    tau0, tau1 = path(0.0), path(1.0)
    G0 = gram(grid, k, tau0, theta_basis(grid, k, tau0))
    G1 = gram(grid, k, tau1, theta_basis(grid, k, tau1))
    c0 = np.asarray(c0, dtype=complex)
    c0m, cm = c0.reshape(c0.shape[0], -1), c.reshape(c.shape[0], -1)
    n0 = float(np.einsum("im,ij,jm->", np.conj(c0m), G0, c0m).real)
    n1 = float(np.einsum("im,ij,jm->", np.conj(cm), G1, cm).real)
    drift = abs(n1 - n0) / max(n0, 1e-300)
    return TransportResult(
        path=(tau0, tau1),
        steps=steps,
        start=np.asarray(c0, dtype=complex),
        end=c,
        max_defect=max_defect,
        norm_drift=drift,
    )


def loop_offscalar(
    fam: TorusFamily,
    k: int,
    center: complex,
    radius: float,
    steps: int = 200,
    eps: float = 1e-4,
    exact: bool = True,
) -> tuple[float, Array]:
    """Transport the full basis around a parameter circle.

    Returns the distance of the holonomy matrix from scalar multiples of
    the identity (relative operator norm) together with the matrix.
    """

    def path(t: float) -> complex:
        return center + radius * np.exp(2j * np.pi * t)

    L = transport(fam, k, path, np.eye(k, dtype=complex), steps, eps, exact).end
    lam = np.trace(L) / k
    off = np.linalg.norm(L - lam * np.eye(k), 2) / max(abs(lam), 1e-300)
    return float(off), L
