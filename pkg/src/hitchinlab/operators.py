r"""The family-connection operator stack and its identity residuals.

The family connection studied here acts on coefficient functions of the
level-``k`` half-form-twisted bundle as

.. math::
    \nabla_V = \hat\nabla^r_V + u(V), \qquad
    u(V) = \tfrac{1}{4k}\big(\Delta_{G(V)} + H(V)\big),

where :math:`\hat\nabla^r_V` is the reference derivative (parameter
derivative of the coefficient plus the half-form coefficient
:math:`A_T(V)`), :math:`\Delta_{G(V)}` is the second-order operator

.. math::
    \Delta_{G(V)} = \operatorname{Tr}\big(
        (\tilde\nabla\otimes\mathrm{id} + \mathrm{id}\otimes\nabla)
        \circ (G(V)\otimes\mathrm{id})\circ\nabla\big)

and :math:`H(V)` is the divergence-type potential one computes from the
Ricci potential ``F``:

.. math::
    H(V) = -2n\,V'[F] - \partial F\, G(V)\,\partial F
           - \operatorname{Tr}\tilde\nabla(G(V)\,\partial F),

with ``n = 0`` throughout this lab (torus and planar chart).

Every identity of the catalog is implemented as a *residual*: both sides
are assembled through independent code paths (difference quotients in
the parameter, spectral/finite-difference calculus on the surface) and
the sup-norm of the difference, normalized by the section scale, is
reported.  ``flip`` arguments implement the mutation self-test: flipping
the sign of any single term must push the residual above its budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .bundle import BundleData, a_T, bundle_data, sec_deriv, sec_grad, sec_grad_plain
from .families import ChartFamily, Family, KahlerState, d_holo, dir_deriv
from .fields import Array, ChartGrid, TensorField, TorusGrid, max_norm
from .geometry import cov_deriv

# ---------------------------------------------------------------------------
# variation tensors (lightweight; gates live in families.variation)
# ---------------------------------------------------------------------------


def G_of(family: Family, sigma: complex, v: complex, eps: float, exact: bool = False) -> Array:
    """(2,0) variation tensor G(V) for the real parameter direction ``v``."""
    if exact:
        g = family.g_exact(sigma, v)
        if g is not None:
            return g
    st = family.state(sigma)
    VJ = dir_deriv(lambda s: family.J_at(s), sigma, v, eps)
    from .geometry import inv2

    Gt = np.einsum("ac...,cb...->ab...", VJ, inv2(st.omega))
    return np.einsum("ac...,cd...,bd...->ab...", st.P, Gt, st.P)


def vj_of(family: Family, sigma: complex, v: complex, eps: float, exact: bool = False) -> Array:
    if exact:
        vj = family.vj_exact(sigma, v)
        if vj is not None:
            return vj
    return dir_deriv(lambda s: family.J_at(s), sigma, v, eps)


# ---------------------------------------------------------------------------
# pointwise helpers
# ---------------------------------------------------------------------------


def form_anti(st: KahlerState, alpha: Array) -> Array:
    """(0,1) part of a one-form: composition with the antiholomorphic projector."""
    return np.einsum("a...,ab...->b...", alpha, st.Q)


def form_holo(st: KahlerState, alpha: Array) -> Array:
    return np.einsum("a...,ab...->b...", alpha, st.P)


def dF_holo(st: KahlerState) -> Array:
    """(1,0) part of dF for the state's Ricci potential."""
    dF = np.stack([st.grid.deriv(st.F, -2), st.grid.deriv(st.F, -1)])
    return form_holo(st, dF)


def trace_nabla(st: KahlerState, T: Array) -> Array:
    r"""Divergence :math:`(\operatorname{Tr}\tilde\nabla T)^b = \tilde\nabla_a T^{ab}`."""
    nT = cov_deriv(st.grid, st.gamma, TensorField(T.astype(complex), "uu"))
    return np.einsum("aab...->b...", nT.comps)


def trace_nabla_endo(st: KahlerState, T: Array) -> Array:
    r"""One-form :math:`\tilde\nabla_a T^a{}_b` for an endomorphism-valued field."""
    nT = cov_deriv(st.grid, st.gamma, TensorField(T.astype(complex), "ud"))
    return np.einsum("aab...->b...", nT.comps)


# ---------------------------------------------------------------------------
# the second-order operator and the potential
# ---------------------------------------------------------------------------


def delta_G(bd: BundleData, G: Array, f: Array, plain: bool = False) -> Array:
    r"""Apply :math:`\Delta_G` to a section coefficient.

    ``plain`` applies the same composition on the untwisted level-``k``
    bundle (no half-form part in the connection).
    """
    st = bd.state
    grad_f = sec_grad_plain(bd, f) if plain else sec_grad(bd, f)
    t = np.einsum("ba...,a...->b...", G, grad_f)
    A = bd.A_L if plain else bd.A
    dt = np.stack([sec_deriv(st, bd.k, t, -2), sec_deriv(st, bd.k, t, -1)])
    dt = dt + np.einsum("bac...,c...->ab...", st.gamma, t) + A[:, None] * t
    return np.einsum("aa...->...", dt)


def grad_along(bd: BundleData, X: Array, f: Array, plain: bool = False) -> Array:
    """Directional covariant derivative along a vector field ``X``."""
    grad_f = sec_grad_plain(bd, f) if plain else sec_grad(bd, f)
    return np.einsum("a...,a...->...", X, grad_f)


def H_of(
    family: Family,
    sigma: complex,
    v: complex,
    eps: float,
    exact: bool = False,
    flip: str | None = None,
    potential: Callable[[complex], Array] | None = None,
) -> Array:
    r"""Divergence potential :math:`H(V)` from the closed form above.

    ``potential`` overrides the state's Ricci potential (used by the
    operator-pullback identity, which states ``H`` in terms of the
    reduction potential); ``flip`` in {'quad', 'div'} negates one term.
    """
    st = family.state(sigma)
    G = G_of(family, sigma, v, eps, exact)
    if potential is None:
        F = st.F
    else:
        F = potential(sigma)
    dF = np.stack([st.grid.deriv(F, -2), st.grid.deriv(F, -1)])
    pF = form_holo(st, dF)
    quad = np.einsum("a...,ab...,b...->...", pF, G, pF)
    GdF = np.einsum("ab...,b...->a...", G, pF)
    div = np.einsum("aa...->...", cov_deriv(st.grid, st.gamma, TensorField(GdF, "u")).comps)
    s_quad = -1.0 if flip != "quad" else 1.0
    s_div = -1.0 if flip != "div" else 1.0
    return s_quad * quad + s_div * div


def u_apply(
    family: Family,
    sigma: complex,
    k: float,
    v: complex,
    f: Array,
    eps: float,
    exact: bool = False,
    h_offset: complex = 0.0,
) -> Array:
    r""":math:`u(V)f = \tfrac{1}{4k}(\Delta_{G(V)} + H(V))f + \text{offset}\cdot f`.

    The offset realizes the uniqueness clause: the potential ``H`` is
    determined only up to a function of the parameter alone.
    """
    if k == 0:
        raise ValueError("the second-order correction needs a positive level")
    bd = bundle_data(family, sigma, k)
    G = G_of(family, sigma, v, eps, exact)
    H = H_of(family, sigma, v, eps, exact)
    return (delta_G(bd, G, f) + H * f) / (4.0 * k) + h_offset * f


# ---------------------------------------------------------------------------
# holomorphic test sections
# ---------------------------------------------------------------------------


@dataclass
class TestSections:
    """Numerically holomorphic section coefficients with their defects."""

    values: Array  # (count, n, n)
    defects: tuple[float, ...]  # relative (0,1)-derivative residuals
    coeff: Array | None = None  # chart Chebyshev coefficients (count, d+1, d+1)


def section_on(grid: ChartGrid, C: Array) -> Array:
    """Evaluate a Chebyshev coefficient matrix on another chart grid.

    Grid-refinement runs use this to compare residuals of the *same*
    section at two resolutions; rebuilt sections would differ by an
    arbitrary holomorphic mixture and hide the convergence order.
    """
    deg = C.shape[0] - 1
    u1 = (grid.x[:, 0] - grid.center[0]) / grid.half
    v1 = (grid.y[0, :] - grid.center[1]) / grid.half
    return _cheb.chebvander(u1, deg) @ C @ _cheb.chebvander(v1, deg).T


def torus_sections(bd: BundleData) -> TestSections:
    from .theta import theta_basis

    grid = bd.grid
    k = int(bd.k)
    if k >= 1:
        basis = theta_basis(grid, k, bd.state.sigma)
    else:
        basis = np.ones((1,) + grid.shape, dtype=complex)
    defects = []
    for s in basis:
        gr = sec_grad(bd, s)
        anti = form_anti(bd.state, gr)
        defects.append(max_norm(anti) / max(max_norm(s), 1e-300))
    return TestSections(values=basis, defects=tuple(defects))


def chart_sections(
    bd: BundleData,
    count: int = 2,
    deg: int | None = None,
    sub: int = 1,
    plain: bool = False,
) -> TestSections:
    r"""Numerically holomorphic sections by constrained least squares.

    The design operator evaluates the (0,1) covariant derivative of each
    tensor-Chebyshev basis element on every interior node.  Its
    numerical kernel is high-dimensional (any holomorphic factor below
    the basis degree), so the representative is pinned by anchor-value
    constraints (value 1 at one point; additionally a zero for the
    second section), and the minimum-coefficient-norm solution of the
    stacked system selects the smoothest such element.  Determinism and
    smoothness are what the finite-difference budgets of the identity
    runs rely on; defects are the measured (0,1)-derivative residuals
    of the result, not the optimizer's claim.
    """
    grid: ChartGrid = bd.grid
    st = bd.state
    if deg is None:
        # the sections decay like exp(-k w0 |z|^2 / 4); steeper levels
        # need more polynomial headroom before the defect floor is hit
        deg = min(14 + 2 * int(round(bd.k)), 26)
    u1 = (grid.x[:, 0] - grid.center[0]) / grid.half
    v1 = (grid.y[0, :] - grid.center[1]) / grid.half
    Vx = _cheb.chebvander(u1, deg)  # (n, deg+1)
    Vy = _cheb.chebvander(v1, deg)
    pairs = [(p, q) for p in range(deg + 1) for q in range(deg + 1 - p)]
    idx = np.arange(0, grid.n, sub)
    A = bd.A_L if plain else bd.A
    Q = st.Q
    rows = []
    dVx = np.stack([_cheb.chebval(u1, _cheb.chebder(np.eye(deg + 1)[:, p])) for p in range(deg + 1)], 1) / grid.half
    dVy = np.stack([_cheb.chebval(v1, _cheb.chebder(np.eye(deg + 1)[:, q])) for q in range(deg + 1)], 1) / grid.half
    Ax, Ay = A[0][np.ix_(idx, idx)], A[1][np.ix_(idx, idx)]
    Q_sub = Q[:, :, idx][:, :, :, idx]
    for p, q in pairs:
        s = np.outer(Vx[idx, p], Vy[idx, q])
        sx = np.outer(dVx[idx, p], Vy[idx, q]) + Ax * s
        sy = np.outer(Vx[idx, p], dVy[idx, q]) + Ay * s
        anti = np.stack([sx * Q_sub[0, 0] + sy * Q_sub[1, 0], sx * Q_sub[0, 1] + sy * Q_sub[1, 1]])
        rows.append(anti.ravel())
    D = np.stack(rows, axis=1)

    def value_row(a: complex) -> Array:
        tu = _cheb.chebvander(np.array([(a.real - grid.center[0]) / grid.half]), deg)[0]
        tv = _cheb.chebvander(np.array([(a.imag - grid.center[1]) / grid.half]), deg)[0]
        return np.array([tu[p] * tv[q] for p, q in pairs], dtype=complex)

    a0 = complex(grid.center[0] + 0.05 * grid.half, grid.center[1] + 0.02 * grid.half)
    a1 = a0 + grid.half * (0.15 + 0.1j)
    kappa = float(np.linalg.norm(D, 2))
    values = []
    defects = []
    coeffs = []
    for r in range(count):
        anchors = [(a0, 1.0)] if r == 0 else [(a0, 0.0), (a1, 1.0)]
        R = np.stack([value_row(a) for a, _ in anchors])
        t = np.array([val for _, val in anchors], dtype=complex)
        stacked = np.vstack([D, kappa * R])
        target = np.concatenate([np.zeros(D.shape[0], dtype=complex), kappa * t])
        c, *_ = np.linalg.lstsq(stacked, target, rcond=None)
        C = np.zeros((deg + 1, deg + 1), dtype=complex)
        for (p, q), cc in zip(pairs, c):
            C[p, q] = cc
        s_full = Vx @ C @ Vy.T
        scale = max(float(np.max(np.abs(s_full))), 1e-300)
        values.append(s_full / scale)
        defects.append(float(np.max(np.abs(D @ c))) / scale)
        coeffs.append(C / scale)
    return TestSections(values=np.stack(values), defects=tuple(defects), coeff=np.stack(coeffs))


def test_sections(bd: BundleData, plain: bool = False, count: int = 2) -> TestSections:
    if isinstance(bd.grid, TorusGrid):
        return torus_sections(bd)
    return chart_sections(bd, count=count, plain=plain)


# ---------------------------------------------------------------------------
# residuals of the defining and transfer identities
# ---------------------------------------------------------------------------


def _mask(st: KahlerState) -> Array | None:
    return st.grid.interior() if isinstance(st.grid, ChartGrid) else None


def eq_defining_residual(
    family: Family,
    sigma: complex,
    k: int,
    v: complex,
    s: Array,
    eps: float,
    exact: bool = False,
    flip: str | None = None,
) -> float:
    r"""Defining identity of the second-order correction on holomorphic ``s``:

    .. math::
        \nabla^{0,1}\big(u(V)s\big) = \tfrac{i}{2} V[J]\,\nabla s
        + \tfrac{i}{4}\operatorname{Tr}\tilde\nabla(G(V))\,\omega\; s .
    """
    st = family.state(sigma)
    bd = bundle_data(family, sigma, k)
    us = u_apply(family, sigma, k, v, s, eps, exact)
    lhs = form_anti(st, sec_grad(bd, us))
    VJ = vj_of(family, sigma, v, eps, exact)
    grad_s = sec_grad(bd, s)
    t1 = 0.5j * np.einsum("ba...,b...->a...", VJ, grad_s)
    G = G_of(family, sigma, v, eps, exact)
    trG = trace_nabla(st, G)
    t2 = 0.25j * np.einsum("b...,ba...->a...", trG, st.omega) * s
    if flip == "vj":
        t1 = -t1
    if flip == "trace":
        t2 = -t2
    scale = max(max_norm(s, _mask(st)), 1e-300)
    return max_norm(lhs - t1 - t2, _mask(st)) / scale


def eq_transfer_residual(
    family: Family,
    sigma: complex,
    k: float,
    v: complex,
    s: Array,
    eps: float,
    exact: bool = False,
    flip: str | None = None,
) -> float:
    r"""Holomorphy-transfer identity on holomorphic ``s``:

    .. math::
        \nabla^{0,1}\Delta_{G(V)} s = -2ik\,\omega G(V)\nabla s
        + ik\operatorname{Tr}\tilde\nabla(G(V))\,\omega\,s
        - \tfrac{i}{2}\operatorname{Tr}\tilde\nabla(G(V)\rho)\,s .
    """
    st = family.state(sigma)
    bd = bundle_data(family, sigma, k)
    G = G_of(family, sigma, v, eps, exact)
    lhs = form_anti(st, sec_grad(bd, delta_G(bd, G, s)))
    grad_s = sec_grad(bd, s)
    t1 = -2j * k * np.einsum("ab...,bc...,c...->a...", st.omega, G, grad_s)
    trG = trace_nabla(st, G)
    t2 = 1j * k * np.einsum("b...,ba...->a...", trG, st.omega) * s
    Grho = np.einsum("ac...,cb...->ab...", G, st.rho)
    t3 = -0.5j * trace_nabla_endo(st, Grho) * s
    if flip == "omega":
        t1 = -t1
    if flip == "trace":
        t2 = -t2
    if flip == "rho":
        t3 = -t3
    scale = max(max_norm(s, _mask(st)), 1e-300)
    return max_norm(lhs - t1 - t2 - t3, _mask(st)) / scale


def potential_variation_residual(
    family: Family, sigma: complex, v: complex, eps: float, exact: bool = False
) -> float:
    r"""Variation of the Ricci potential:

    .. math::
        \bar\partial_M V'[F] = -\tfrac{i}{4}\operatorname{Tr}
        \tilde\nabla(G(V))\,\omega - \tfrac{i}{2}\,\partial_M F\,G(V)\,\omega .
    """
    st = family.state(sigma)
    # V'[F] = (V[F] - i (iV)[F]) / 2 as a field over M
    f1 = dir_deriv(lambda s: family.state(s).F, sigma, v, eps)
    f2 = dir_deriv(lambda s: family.state(s).F, sigma, 1j * v, eps)
    vpf = 0.5 * (f1 - 1j * f2)
    dv = np.stack([st.grid.deriv(vpf, -2), st.grid.deriv(vpf, -1)])
    lhs = form_anti(st, dv)
    G = G_of(family, sigma, v, eps, exact)
    trG = trace_nabla(st, G)
    t1 = -0.25j * np.einsum("b...,ba...->a...", trG, st.omega)
    pF = dF_holo(st)
    t2 = -0.5j * np.einsum("b...,bc...,ca...->a...", pF, G, st.omega)
    scale = max(max_norm(G, _mask(st)), 1e-300)
    return max_norm(lhs - t1 - t2, _mask(st)) / scale


def potential_oneform_residual(
    family: Family,
    sigma: complex,
    v: complex,
    eps: float,
    exact: bool = False,
    flip: str | None = None,
) -> float:
    r"""The closed-form potential satisfies
    :math:`\bar\partial_M H(V) = \tfrac{i}{2}\operatorname{Tr}
    \tilde\nabla(G(V)\rho)`."""
    st = family.state(sigma)
    H = H_of(family, sigma, v, eps, exact, flip=flip)
    dH = np.stack([st.grid.deriv(H, -2), st.grid.deriv(H, -1)])
    lhs = form_anti(st, dH)
    G = G_of(family, sigma, v, eps, exact)
    Grho = np.einsum("ac...,cb...->ab...", G, st.rho)
    rhs = 0.5j * trace_nabla_endo(st, Grho)
    scale = max(max_norm(G, _mask(st)), 1e-300)
    return max_norm(lhs - rhs, _mask(st)) / scale


# ---------------------------------------------------------------------------
# geometry-variation identities
# ---------------------------------------------------------------------------


def metric_variation_residual(family: Family, sigma: complex, v: complex, eps: float) -> float:
    r"""Compatibility of the metric and structure variations:
    :math:`V[g] = \omega\,V[J]` (the symplectic form is parameter-fixed)."""
    st = family.state(sigma)
    vg = dir_deriv(lambda s: family.state(s).g, sigma, v, eps)
    VJ = vj_of(family, sigma, v, eps)
    rhs = np.einsum("ac...,cb...->ab...", st.omega, VJ)
    scale = max(max_norm(rhs, _mask(st)), 1e-300)
    return max_norm(vg - rhs, _mask(st)) / scale


def levicivita_variation_residual(family: Family, sigma: complex, v: complex, eps: float) -> float:
    r"""Variation of the Levi-Civita connection:

    .. math::
        g(V[\tilde\nabla]_X Y, Z) = \tfrac12\big(
        (\tilde\nabla_X V[g])(Y, Z) + (\tilde\nabla_Y V[g])(X, Z)
        - (\tilde\nabla_Z V[g])(X, Y)\big).
    """
    st = family.state(sigma)
    vgamma = dir_deriv(lambda s: family.state(s).gamma, sigma, v, eps)
    lhs = np.einsum("cd...,dab...->abc...", st.g, vgamma)
    vg = dir_deriv(lambda s: family.state(s).g, sigma, v, eps)
    D = cov_deriv(st.grid, st.gamma, TensorField(vg.astype(complex), "dd")).comps
    rhs = 0.5 * (
        D
        + np.einsum("bac...->abc...", D)
        - np.einsum("cab...->abc...", D)
    )
    scale = max(max_norm(rhs, _mask(st)), 1e-300)
    return max_norm(lhs - rhs, _mask(st)) / scale


def projector_commutator_residual(family: Family, sigma: complex, v: complex, eps: float) -> float:
    r"""Variation of the type projection on a parameter-fixed vector field:
    :math:`V[\pi^{0,1}X] = \tfrac{i}{2}V[J]\,X` for rigid families."""
    st = family.state(sigma)
    grid = st.grid
    # deterministic smooth test field; periodic so it works on both backends
    X = np.stack([
        np.cos(2 * np.pi * grid.x) + 0.3 * np.sin(2 * np.pi * grid.y),
        0.7 + 0.2 * np.sin(2 * np.pi * (grid.x + grid.y)),
    ]).astype(complex)

    def QX(s: complex) -> Array:
        return np.einsum("ab...,b...->a...", family.state(s).Q, X)

    lhs = dir_deriv(QX, sigma, v, eps)
    VJ = vj_of(family, sigma, v, eps)
    rhs = 0.5j * np.einsum("ab...,b...->a...", VJ, X)
    scale = max(max_norm(rhs, _mask(st)), 1e-300)
    return max_norm(lhs - rhs, _mask(st)) / scale


def frame_curvature_data(
    family: Family, sigma: complex, eps: float
) -> tuple[Array, Array, float]:
    r"""Parameter-direction curvature of the type-projected frame connection.

    The connection :math:`\hat\nabla^T_V Y = \pi^{1,0}V[Y]` on (1,0)
    fields has curvature along the two parameter coordinate directions

    .. math::
        R(\partial_1, \partial_2)\,Y
        = -\tfrac14\,[\partial_1 J, \partial_2 J]\; Y ,

    computed here by nested difference quotients (left) and from the
    structure derivatives (right); returns both endomorphisms restricted
    to the (1,0) subspace and their sup-norm mismatch relative to scale.
    """
    st = family.state(sigma)

    def proj(s: complex) -> Array:
        stt = family.state(s)
        return stt.P

    def covP(s: complex, d: complex) -> Array:
        # endomorphism E(s) with nabla_d (P Y0) = E(s) Y0 for constant Y0
        P = family.state(s).P
        dP = dir_deriv(proj, s, d, eps)
        return np.einsum("ab...,bc...->ac...", P, dP)

    P0 = st.P
    # nabla_1(nabla_2 (P Y0)) = P d1[A_2] Y0 for constant Y0, so
    # R = P (d1[A_2] - d2[A_1]) P with A_d(s) = P(s) d_d P(s)
    dA2 = dir_deriv(lambda s: covP(s, 1j), sigma, 1.0, eps)
    dA1 = dir_deriv(lambda s: covP(s, 1.0), sigma, 1j, eps)
    R = np.einsum("ab...,bc...,cd...->ad...", P0, dA2 - dA1, P0)
    d1J = vj_of(family, sigma, 1.0, eps)
    d2J = vj_of(family, sigma, 1j, eps)
    commJ = np.einsum("ab...,bc...->ac...", d1J, d2J) - np.einsum("ab...,bc...->ac...", d2J, d1J)
    target = -0.25 * np.einsum("ab...,bc...,cd...->ad...", P0, commJ, P0)
    scale = max(max_norm(target, _mask(st)), 1e-300)
    return R, target, max_norm(R - target, _mask(st)) / scale


def param_commutator_curvature(
    family: Family, sigma: complex, eps: float, exact: bool = False
) -> Array:
    r"""Trace form :math:`\tfrac18\operatorname{Tr}\big(\pi^{1,0}
    [\partial_1 J, \partial_2 J]\big)` of the parameter-direction
    curvature on the half-form factor (field over M)."""
    st = family.state(sigma)
    d1J = vj_of(family, sigma, 1.0, eps, exact)
    d2J = vj_of(family, sigma, 1j, eps, exact)
    commJ = np.einsum("ab...,bc...->ac...", d1J, d2J) - np.einsum("ab...,bc...->ac...", d2J, d1J)
    return 0.125 * np.einsum("ab...,ba...->...", st.P, commJ)


# ---------------------------------------------------------------------------
# parameter-space potential calculus
# ---------------------------------------------------------------------------


PotentialFn = Callable[[complex], Array]


def potential_fn(family: Family, which: str, base: complex | None = None, eps: float = 1e-4) -> PotentialFn:
    """Reduction-potential families by name.

    ``zero``      -- identically zero (the normalized torus convention);
    ``ricci``     -- the state's Ricci potential field;
    ``log-imtau`` -- ``(1/2) log Im sigma`` (constant over M), the
                     non-pluriharmonic repair that absorbs the
                     parameter-direction curvature on the torus;
    ``quadratic`` -- the Ricci potential plus ``c0 |sigma - base|^2``
                     with ``c0`` chosen so the parameter-parameter
                     curvature is absorbed at ``base`` on a chart.
    """
    if which == "zero":
        return lambda s: np.zeros(family.grid.shape, dtype=complex)
    if which == "ricci":
        return lambda s: family.state(s).F
    if which == "log-imtau":
        return lambda s: np.full(family.grid.shape, 0.5 * np.log(s.imag), dtype=complex)
    if which == "quadratic":
        if base is None:
            raise ValueError("quadratic potential needs a base point")
        from .bundle import curvature_tt

        rtt = curvature_tt(family, base, eps)
        ptt = pot_tt(family, lambda s: family.state(s).F, base, eps)
        field = rtt + ptt  # (d1, d2) components; must be absorbed by c0
        mask = family.grid.interior() if isinstance(family.grid, ChartGrid) else None
        if mask is None:
            c0 = complex(np.mean(field))
        else:
            c0 = complex(np.mean(field[mask]))
        # pot_tt of c|sigma-base|^2 equals -2i * dsigma dsigmabar (c |.|^2) = -2i c
        cc = c0 / (2j)

        def fn(s: complex) -> Array:
            return family.state(s).F + cc * abs(s - base) ** 2

        return fn
    raise ValueError(f"unknown potential family: {which}")


def pot_tt(family: Family, Ffn: PotentialFn, sigma: complex, eps: float) -> Array:
    r"""Parameter-parameter component
    :math:`\hat\partial\hat{\bar\partial}F(\partial_1, \partial_2)
    = \partial_1[\partial_2''F] - \partial_2[\partial_1''F]` as a field on M."""

    def w2(s: complex) -> Array:
        return 0.5 * (dir_deriv(Ffn, s, 1j, eps) - 1j * dir_deriv(Ffn, s, 1.0, eps))

    def v2(s: complex) -> Array:
        return 0.5 * (dir_deriv(Ffn, s, 1.0, eps) + 1j * dir_deriv(Ffn, s, 1j, eps))

    return dir_deriv(w2, sigma, 1.0, eps) - dir_deriv(v2, sigma, 1j, eps)


def pot_mixed(
    family: Family, Ffn: PotentialFn, sigma: complex, v: complex, eps: float
) -> Array:
    r"""Mixed component
    :math:`\hat\partial\hat{\bar\partial}F(V, e_a)
    = V[(\bar\partial_M F)_a] - \partial_a(V''[F])`."""

    def dbarF(s: complex) -> Array:
        st = family.state(s)
        F = Ffn(s)
        dF = np.stack([st.grid.deriv(F, -2), st.grid.deriv(F, -1)])
        return form_anti(st, dF)

    t1 = dir_deriv(dbarF, sigma, v, eps)
    vppF = 0.5 * (
        dir_deriv(Ffn, sigma, v, eps) + 1j * dir_deriv(Ffn, sigma, 1j * v, eps)
    )
    grid = family.grid
    t2 = np.stack([grid.deriv(vppF, -2), grid.deriv(vppF, -1)])
    return t1 - t2


def pot_mm(family: Family, Ffn: PotentialFn, sigma: complex, eps: float) -> Array:
    r"""Surface-surface (x, y) component of
    :math:`\hat\partial_M\hat{\bar\partial}_M F` for the member at ``sigma``."""
    st = family.state(sigma)
    F = Ffn(sigma)
    grid = st.grid
    dF = np.stack([grid.deriv(F, -2), grid.deriv(F, -1)])
    dbar = form_anti(st, dF)
    # d(dbar F) restricted to (x, y)
    return grid.deriv(dbar[1], -2) - grid.deriv(dbar[0], -1)


# ---------------------------------------------------------------------------
# comparison map and reduction identities
# ---------------------------------------------------------------------------


def comparison_multiplier(family: Family, Ffn: PotentialFn, sigma: complex) -> Array:
    r"""Isometry multiplier :math:`m = e^{\tilde F/2} (h_w/2)^{1/4}`.

    Constructed from the Hermitian data alone: the comparison carries the
    plain level bundle with metric weight :math:`e^{\tilde F}` to the
    half-form-corrected bundle, so :math:`|m|^2 h_\delta = e^{\tilde F}`
    with :math:`h_\delta = (2/h_w)^{1/2}`; the phase is fixed to one.
    """
    st = family.state(sigma)
    return np.exp(0.5 * Ffn(sigma)) * (st.h_w / 2.0) ** 0.25


def frame_comparison_residuals(
    family: Family,
    Ffn: PotentialFn,
    sigma: complex,
    v: complex,
    eps: float,
    exact: bool = False,
) -> tuple[float, float]:
    r"""Connection-form comparison under the multiplier ``m``:

    .. math::
        m^{-1}\circ\hat\nabla^r\circ m = \hat\nabla^{L} + \hat\partial\tilde F

    split into its M-part (half-form potential against
    :math:`\partial_M\tilde F`) and parameter part
    (:math:`A_T(V) + V[\log m]` against
    :math:`\hat\partial\tilde F(V) = v\,\partial_\sigma\tilde F`);
    returns the two sup-norm residuals, normalized by the natural scale
    ``1/(4 Im sigma)`` of the parameter coefficient on the torus and 1
    on charts.
    """
    st = family.state(sigma)
    grid = st.grid

    def logm(s: complex) -> Array:
        stt = family.state(s)
        return 0.5 * Ffn(s) + 0.25 * np.log(stt.h_w / 2.0)

    lm = logm(sigma)
    dlm = np.stack([grid.deriv(lm, -2), grid.deriv(lm, -1)])
    F = Ffn(sigma)
    dFfield = np.stack([grid.deriv(F, -2), grid.deriv(F, -1)])
    pF = form_holo(st, dFfield)
    from .bundle import halfform_potential

    a_d, _ = halfform_potential(st)
    res_m = max_norm(a_d + dlm - pF, _mask(st))

    aT = a_T(family, sigma, v, eps, exact=exact)
    vlm = dir_deriv(logm, sigma, v, eps)
    dsF = v * d_holo(Ffn, sigma, eps)
    res_t = max_norm(aT + vlm - dsF, _mask(st))
    return res_m, res_t


def operator_pullback_residual(
    family: Family,
    Ffn: PotentialFn,
    sigma: complex,
    k: float,
    v: complex,
    s: Array,
    eps: float,
    exact: bool = False,
    flip: str | None = None,
) -> float:
    r"""Pullback of the second-order operator through the comparison map:

    .. math::
        m^{-1}\Delta_{G(V)}(m\,s) = \Delta^{L}_{G(V)} s
        + 2\nabla^{L}_{G(V)\partial_M\tilde F}\,s - H(V)\,s
        - 2n\,V'[\tilde F]\,s \qquad (n = 0).
    """
    st = family.state(sigma)
    bd = bundle_data(family, sigma, k)
    G = G_of(family, sigma, v, eps, exact)
    m = comparison_multiplier(family, Ffn, sigma)
    lhs = delta_G(bd, G, m * s) / m
    F = Ffn(sigma)
    dFfield = np.stack([st.grid.deriv(F, -2), st.grid.deriv(F, -1)])
    pF = form_holo(st, dFfield)
    GdF = np.einsum("ab...,b...->a...", G, pF)
    t1 = delta_G(bd, G, s, plain=True)
    t2 = 2.0 * grad_along(bd, GdF, s, plain=True)
    H = H_of(family, sigma, v, eps, exact, potential=Ffn)
    t3 = -H * s
    if flip == "gradient":
        t2 = -t2
    if flip == "potential":
        t3 = -t3
    scale = max(max_norm(delta_G(bd, G, s, plain=True), _mask(st)), 1e-300)
    return max_norm(lhs - t1 - t2 - t3, _mask(st)) / scale


def connection_agreement_residual(
    family: Family,
    Ffn: PotentialFn,
    sigma: complex,
    k: float,
    v: complex,
    s: Array,
    eps: float,
    exact: bool = False,
) -> float:
    r"""Full-connection agreement through the comparison map:

    .. math::
        m^{-1}\nabla_V(m\,s) = V[s] + \tilde u(V)s, \qquad
        \tilde u(V) = \tfrac1{4k}\big(\Delta^{L}_{G(V)}
        + 2\nabla^{L}_{G(V)\partial_M\tilde F}\big) + V'[\tilde F]

    for a parameter-constant coefficient ``s`` (so ``V[s] = 0``).
    """
    st = family.state(sigma)
    bd = bundle_data(family, sigma, k)
    m = comparison_multiplier(family, Ffn, sigma)
    vm = dir_deriv(lambda t: comparison_multiplier(family, Ffn, t), sigma, v, eps)
    aT = a_T(family, sigma, v, eps, exact=exact)
    us = u_apply(family, sigma, k, v, m * s, eps, exact)
    lhs = (vm * s + aT * m * s + us) / m
    G = G_of(family, sigma, v, eps, exact)
    F = Ffn(sigma)
    dFfield = np.stack([st.grid.deriv(F, -2), st.grid.deriv(F, -1)])
    pF = form_holo(st, dFfield)
    GdF = np.einsum("ab...,b...->a...", G, pF)
    vpF = 0.5 * (
        dir_deriv(Ffn, sigma, v, eps) - 1j * dir_deriv(Ffn, sigma, 1j * v, eps)
    )
    rhs = (delta_G(bd, G, s, plain=True) + 2.0 * grad_along(bd, GdF, s, plain=True)) / (
        4.0 * k
    ) + vpF * s
    scale = max(max_norm(s, _mask(st)), 1e-300)
    return max_norm(lhs - rhs, _mask(st)) / scale
