r"""Families of complex structures compatible with a fixed symplectic surface.

A *family* assigns to each parameter :math:`\sigma` in a neighbourhood of
a base point a complex structure :math:`J_\sigma` on the fixed
symplectic surface :math:`(M, \omega_0\,dx\wedge dy)`, together with a
tracked :math:`J_\sigma`-holomorphic coordinate :math:`w_\sigma` whose
frame trivializes the canonical bundle.  Two constructions are provided:

* :class:`TorusFamily` -- the unit torus with
  :math:`w_\tau = x + \tau y`, parameter :math:`\tau` in the upper half
  plane, constant-coefficient :math:`J_\tau`; everything has a closed
  form, which the tests use as oracles.
* :class:`ChartFamily` -- a planar chart where
  :math:`J_\sigma` is encoded by a Beltrami coefficient
  :math:`\mu(\sigma)` through :math:`\eta = dz + \mu\,d\bar z`,
  :math:`E = (\partial_z - \bar\mu\partial_{\bar z})/(1-|\mu|^2)`,
  :math:`J = iE\otimes\eta - i\bar E\otimes\bar\eta`.
  :func:`rigid_family` builds :math:`\mu(\sigma), w(\sigma)` as exact
  polynomials in :math:`\sigma` so that the parameter variation
  :math:`G(V) = f(w)\,\partial_w\otimes\partial_w` is holomorphic in
  :math:`w` up to a controlled truncation order (the *rigidity* gate
  measures the defect rather than assuming it).

Variations are taken per the difference-quotient contract: a real
parameter direction is encoded as a unit complex number ``v`` and the
derivative of any :math:`\sigma`-dependent field is the central
difference with step ``eps * (1 + |sigma|)``.  Families additionally
expose closed-form variations (``exact=True``) used by the convergence
sweeps to separate the two discretization error sources.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fields import (
    Array,
    ChartGrid,
    Grid,
    TensorField,
    TorusGrid,
    mat_mul,
    max_norm,
    proj_anti,
    proj_holo,
    project_slot,
)
from .geometry import (
    christoffel,
    compatible_metric,
    cov_deriv,
    inv2,
    make_omega,
    ricci_form,
)

DEFAULT_OMEGA0 = 2.0 * np.pi


# ---------------------------------------------------------------------------
# polynomial helpers for the chart generator (coefficients of z^a zbar^b)
# ---------------------------------------------------------------------------


def _padd(p: dict, q: dict) -> dict:
    out = dict(p)
    for k, c in q.items():
        out[k] = out.get(k, 0.0) + c
    return out


def _pscale(p: dict, c: complex) -> dict:
    return {k: c * v for k, v in p.items()}


def _pmul(p: dict, q: dict) -> dict:
    out: dict = {}
    for (a, b), c in p.items():
        for (a2, b2), c2 in q.items():
            k = (a + a2, b + b2)
            out[k] = out.get(k, 0.0) + c * c2
    return out


def _pdz(p: dict) -> dict:
    return {(a - 1, b): a * c for (a, b), c in p.items() if a > 0}


def _pdzbar(p: dict) -> dict:
    return {(a, b - 1): b * c for (a, b), c in p.items() if b > 0}


def _pint_zbar(p: dict) -> dict:
    """A d/dzbar antiderivative (the primitive with no zbar-free part)."""
    return {(a, b + 1): c / (b + 1) for (a, b), c in p.items()}


def _peval(p: dict, z: Array) -> Array:
    zb = np.conj(z)
    out = np.zeros_like(z, dtype=complex)
    for (a, b), c in p.items():
        out = out + c * z**a * zb**b
    return out


def _series_mul(s: list[dict], t: list[dict], order: int) -> list[dict]:
    out = [dict() for _ in range(order + 1)]
    for i, p in enumerate(s):
        if i > order:
            break
        for j, q in enumerate(t):
            if i + j > order:
                break
            out[i + j] = _padd(out[i + j], _pmul(p, q))
    return out


def _series_inv(s: list[dict], order: int) -> list[dict]:
    """Reciprocal of a series with unit leading term."""
    out = [dict(s[0])] + [dict() for _ in range(order)]
    for j in range(1, order + 1):
        acc: dict = {}
        for i in range(1, j + 1):
            if i < len(s):
                acc = _padd(acc, _pmul(s[i], out[j - i]))
        out[j] = _pscale(acc, -1.0)
    return out


# ---------------------------------------------------------------------------
# pointwise complex-structure algebra
# ---------------------------------------------------------------------------

# real components of d/dz, d/dzbar and rows of dz, dzbar
_DZ_VEC = np.array([0.5, -0.5j])
_DZB_VEC = np.array([0.5, 0.5j])
_DZ_FORM = np.array([1.0, 1.0j])
_DZB_FORM = np.array([1.0, -1.0j])


def j_from_mu(mu: Array) -> Array:
    r"""Complex structure of the Beltrami coefficient, real frame components."""
    E, eta = frame_from_mu(mu)
    return -2.0 * np.imag(np.einsum("a...,b...->ab...", E, eta))


def frame_from_mu(mu: Array) -> tuple[Array, Array]:
    r"""(1,0) frame vector ``E`` and coframe ``eta`` of ``mu`` (real components)."""
    den = 1.0 - np.abs(mu) ** 2
    E = (
        _DZ_VEC[:, None, None] / den - np.conj(mu) * _DZB_VEC[:, None, None] / den
    )
    eta = _DZ_FORM[:, None, None] + mu * _DZB_FORM[:, None, None]
    return E, eta


def dj_from_mu(mu: Array, nu: Array) -> Array:
    r"""Closed-form variation of :func:`j_from_mu`.

    For a Beltrami path with :math:`\dot\mu = \nu` (and
    :math:`\dot{\bar\mu} = \bar\nu`):
    :math:`\dot J = \frac{2i\nu}{1-|\mu|^2} E\otimes\bar\eta + \text{c.c.}`
    """
    den = 1.0 - np.abs(mu) ** 2
    E, eta = frame_from_mu(mu)
    t = (2j * nu / den) * np.einsum("a...,b...->ab...", E, np.conj(eta))
    return np.real(t + np.conj(t)) * 1.0


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


@dataclass
class KahlerState:
    """All pointwise geometric data of one family member."""

    grid: Grid
    sigma: complex
    omega0: float
    J: Array
    omega: Array
    g: Array
    ginv: Array
    gamma: Array
    rho: Array
    dw: Array  # coframe components of the tracked holomorphic coordinate
    E: Array  # frame vector dual to dw within (1,0) vectors
    h_w: Array  # 2 g(d/dw, conj d/dw): metric coefficient in the w frame
    F: Array  # Ricci potential candidate -1/2 log h_w (normalized on the torus)

    @property
    def P(self) -> Array:
        return proj_holo(self.J)

    @property
    def Q(self) -> Array:
        return proj_anti(self.J)


def _holo_vector(dw: Array, J: Array) -> Array:
    """(1,0) vector E with dw(E) = 1, conj(dw)(E) = 0, solved pointwise."""
    a, b = dw[0], dw[1]
    ab, bb = np.conj(a), np.conj(b)
    det = a * bb - b * ab
    return np.stack([bb / det, -ab / det])


def make_state(family: "Family", sigma: complex) -> KahlerState:
    grid = family.grid
    J = family.J_at(sigma)
    omega = make_omega(grid, family.omega0)
    g = compatible_metric(omega, J)
    ginv = inv2(g)
    gamma = christoffel(grid, g)
    rho = ricci_form(grid, g, J)
    dw = family.dw_at(sigma)
    E = _holo_vector(dw, J)
    h_w = 2.0 * np.einsum("ab...,a...,b...->...", g, E, np.conj(E))
    if family.normalized_potential:
        F = np.zeros(grid.shape, dtype=complex)
    else:
        F = -0.5 * np.log(h_w)
    return KahlerState(
        grid=grid,
        sigma=sigma,
        omega0=family.omega0,
        J=J,
        omega=omega,
        g=g,
        ginv=ginv,
        gamma=gamma,
        rho=rho,
        dw=dw,
        E=E,
        h_w=h_w,
        F=F,
    )


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------


class Family:
    """Base class: subclasses provide ``J_at`` and ``dw_at``."""

    grid: Grid
    omega0: float
    label: str = "family"
    normalized_potential: bool = False

    def J_at(self, sigma: complex) -> Array:
        raise NotImplementedError

    def dw_at(self, sigma: complex) -> Array:
        raise NotImplementedError

    def state(self, sigma: complex) -> KahlerState:
        sigma = complex(sigma)
        lock = self.__dict__.setdefault("_state_lock", threading.Lock())
        with lock:
            cache = self.__dict__.setdefault("_states", OrderedDict())
            st = cache.get(sigma)
        if st is None:
            st = make_state(self, sigma)
            with lock:
                cache[sigma] = st
                while len(cache) > 48:
                    cache.popitem(last=False)
        return st

    # closed-form variations (optional; difference quotients are the default)
    def vj_exact(self, sigma: complex, v: complex) -> Array | None:
        return None

    def g_exact(self, sigma: complex, v: complex) -> Array | None:
        return None


class TorusFamily(Family):
    r"""Unit torus, :math:`\omega = 2\pi\,dx\wedge dy`, :math:`w = x + \tau y`."""

    def __init__(self, grid: TorusGrid, omega0: float = DEFAULT_OMEGA0):
        self.grid = grid
        self.omega0 = omega0
        self.label = "torus"
        self.normalized_potential = True

    def J_at(self, sigma: complex) -> Array:
        t1, t2 = sigma.real, sigma.imag
        J = np.empty((2, 2) + self.grid.shape)
        J[0, 0] = -t1 / t2
        J[0, 1] = -(t1 * t1 + t2 * t2) / t2
        J[1, 0] = 1.0 / t2
        J[1, 1] = t1 / t2
        return J

    def dw_at(self, sigma: complex) -> Array:
        dw = np.empty((2,) + self.grid.shape, dtype=complex)
        dw[0] = 1.0
        dw[1] = sigma
        return dw

    def vj_exact(self, sigma: complex, v: complex) -> Array:
        # directional derivative of J(tau) along the real direction v
        t1, t2 = sigma.real, sigma.imag
        d1 = np.zeros((2, 2))
        d1[0, 0] = -1.0 / t2
        d1[0, 1] = -2.0 * t1 / t2
        d1[1, 1] = 1.0 / t2
        J0 = np.array([[-t1 / t2, -(t1 * t1 + t2 * t2) / t2], [1.0 / t2, t1 / t2]])
        d2 = -J0 / t2
        d2[0, 1] += -2.0
        dj = v.real * d1 + v.imag * d2
        return np.broadcast_to(dj[:, :, None, None], (2, 2) + self.grid.shape).copy()

    def g_exact(self, sigma: complex, v: complex) -> Array:
        r""":math:`G(V) = v\,\frac{i}{\pi}\,\partial_z\otimes\partial_z` for all
        :math:`\tau` (with :math:`V = v\partial_\tau + \bar v\partial_{\bar\tau}`)."""
        t2 = sigma.imag
        dz = np.array([-np.conj(sigma), 1.0]) / (2j * t2)
        G = (1j / np.pi) * v * np.einsum("a,b->ab", dz, dz)
        return np.broadcast_to(G[:, :, None, None], (2, 2) + self.grid.shape).copy()


class ChartFamily(Family):
    """Beltrami family on a planar chart, built from callables."""

    def __init__(
        self,
        grid: ChartGrid,
        mu_at: Callable[[complex, Array], Array],
        w_at: Callable[[complex, Array], Array],
        dmu_at: Callable[[complex, complex, Array], Array] | None = None,
        omega0: float = DEFAULT_OMEGA0,
        label: str = "chart",
    ):
        self.grid = grid
        self._mu_at = mu_at
        self._w_at = w_at
        self._dmu_at = dmu_at
        self.omega0 = omega0
        self.label = label
        self.normalized_potential = False

    @property
    def z(self) -> Array:
        return self.grid.x + 1j * self.grid.y

    def mu(self, sigma: complex) -> Array:
        return self._mu_at(complex(sigma), self.z)

    def J_at(self, sigma: complex) -> Array:
        return j_from_mu(self.mu(sigma))

    def dw_at(self, sigma: complex) -> Array:
        wz, wzb = self._w_at(complex(sigma), self.z)
        return np.stack([wz + wzb, 1j * (wz - wzb)])

    def vj_exact(self, sigma: complex, v: complex) -> Array | None:
        if self._dmu_at is None:
            return None
        nu = self._dmu_at(complex(sigma), complex(v), self.z)
        return dj_from_mu(self.mu(sigma), nu)

    def g_exact(self, sigma: complex, v: complex) -> Array | None:
        r""":math:`G(V) = \frac{4\nu_V}{\omega_0}\,E\otimes E` where
        :math:`\nu_V` is the complex-linear part of the :math:`\mu`
        variation (so antiholomorphic tangents contribute nothing)."""
        if self._dmu_at is None:
            return None
        nu = self._dmu_at(complex(sigma), complex(v), self.z)
        E, _ = frame_from_mu(self.mu(sigma))
        return (4.0 / self.omega0) * nu * np.einsum("a...,b...->ab...", E, E)


# ---------------------------------------------------------------------------
# chart family constructors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorReport:
    """Construction record of the polynomial rigid-family generator."""

    order: int
    f_coeffs: tuple[tuple[int, complex], ...]
    radius: float
    mu_sup: float  # sup |mu| over the box at the stated radius


def _poly_series_family(
    grid: ChartGrid,
    mu_series: list[dict],
    w_series: list[dict],
    omega0: float,
    label: str,
) -> ChartFamily:
    wzs = [_pdz(p) for p in w_series]
    wzbs = [_pdzbar(p) for p in w_series]

    def mu_at(sigma: complex, z: Array) -> Array:
        out = np.zeros_like(z, dtype=complex)
        for j, p in enumerate(mu_series):
            if p:
                out = out + sigma**j * _peval(p, z)
        return out

    def w_at(sigma: complex, z: Array) -> tuple[Array, Array]:
        wz = np.zeros_like(z, dtype=complex)
        wzb = np.zeros_like(z, dtype=complex)
        for j in range(len(w_series)):
            if wzs[j]:
                wz = wz + sigma**j * _peval(wzs[j], z)
            if wzbs[j]:
                wzb = wzb + sigma**j * _peval(wzbs[j], z)
        return wz, wzb

    def dmu_at(sigma: complex, v: complex, z: Array) -> Array:
        # mu is a polynomial in sigma alone, so the directional derivative
        # along the real direction v is v * dmu/dsigma
        out = np.zeros_like(z, dtype=complex)
        for j, p in enumerate(mu_series):
            if p and j > 0:
                out = out + j * sigma ** (j - 1) * _peval(p, z)
        return v * out

    return ChartFamily(grid, mu_at, w_at, dmu_at, omega0=omega0, label=label)


def rigid_family(
    grid: ChartGrid,
    f_coeffs: dict[int, complex],
    order: int = 8,
    omega0: float = DEFAULT_OMEGA0,
    radius: float = 0.1,
) -> tuple[ChartFamily, GeneratorReport]:
    r"""Generate a family whose variation is :math:`f(w)\partial_w^{\otimes 2}`.

    Solves order by order in :math:`\sigma` the coupled system

    .. math::
        \partial_\sigma \mu = \tfrac{\omega_0}{4} f(w)\, w_z^{-2},
        \qquad
        \partial_{\bar z} w = \mu\, \partial_z w ,

    with :math:`\mu(0) = 0`, :math:`w(0) = z`; both unknowns are exact
    polynomials in :math:`(z, \bar z, \sigma)`.  The truncation at
    ``order`` leaves a rigidity defect ``O(radius**order)`` which the
    rigidity gate measures a posteriori (nothing here is assumed).
    """
    mu_series: list[dict] = [dict() for _ in range(order + 1)]
    w_series: list[dict] = [dict() for _ in range(order + 1)]
    w_series[0] = {(1, 0): 1.0}
    for j in range(1, order + 1):
        # w_series[0] = z, so wz has unit leading term; truncate at order j-1
        wz = [_pdz(w_series[i]) for i in range(j)]
        wpow: list[list[dict]] = [[{(0, 0): 1.0}] + [dict() for _ in range(j - 1)]]
        for _ in range(max(f_coeffs) if f_coeffs else 0):
            wpow.append(_series_mul(wpow[-1], w_series[:j], j - 1))
        rhs = [dict() for _ in range(j)]
        for c, fc in f_coeffs.items():
            for i in range(j):
                rhs[i] = _padd(rhs[i], _pscale(wpow[c][i], fc))
        wzinv = _series_inv(wz, j - 1)
        wzinv2 = _series_mul(wzinv, wzinv, j - 1)
        rhs = _series_mul(rhs, wzinv2, j - 1)
        mu_series[j] = _pscale(rhs[j - 1], omega0 / (4.0 * j))
        beltrami = dict(mu_series[j])
        for i in range(1, j):
            beltrami = _padd(beltrami, _pmul(mu_series[i], _pdz(w_series[j - i])))
        w_series[j] = _pint_zbar(beltrami)
    fam = _poly_series_family(grid, mu_series, w_series, omega0, label="chart-rigid")
    z = fam.z
    mu_sup = 0.0
    for phase in (1.0, 1j, (1 + 1j) / np.sqrt(2)):
        mu_sup = max(mu_sup, float(np.max(np.abs(fam.mu(radius * phase)))))
    report = GeneratorReport(
        order=order,
        f_coeffs=tuple(sorted((k, complex(v)) for k, v in f_coeffs.items())),
        radius=radius,
        mu_sup=mu_sup,
    )
    return fam, report


def nonrigid_family(grid: ChartGrid, omega0: float = DEFAULT_OMEGA0) -> ChartFamily:
    r"""Adversarial family with :math:`G(V) = \bar z\,\partial_z\otimes\partial_z`
    at the base point: the variation is antiholomorphic, so the rigidity
    gate must reject it."""

    def mu_at(sigma: complex, z: Array) -> Array:
        return sigma * (omega0 / 4.0) * np.conj(z)

    def w_at(sigma: complex, z: Array) -> tuple[Array, Array]:
        # w = z + sigma (omega0/4) zbar^2/2 solves the Beltrami equation exactly
        return np.ones_like(z), sigma * (omega0 / 4.0) * np.conj(z)

    def dmu_at(sigma: complex, v: complex, z: Array) -> Array:
        return v * (omega0 / 4.0) * np.conj(z)

    return ChartFamily(grid, mu_at, w_at, dmu_at, omega0=omega0, label="chart-nonrigid")


def nonholo_family(
    grid: ChartGrid, c: complex = 1.0, omega0: float = DEFAULT_OMEGA0
) -> ChartFamily:
    """Adversarial family depending on Re(sigma) only: not holomorphic."""

    def mu_at(sigma: complex, z: Array) -> Array:
        return sigma.real * (omega0 * c / 4.0) * np.ones_like(z)

    def w_at(sigma: complex, z: Array) -> tuple[Array, Array]:
        return np.ones_like(z), sigma.real * (omega0 * c / 4.0) * np.ones_like(z)

    return ChartFamily(grid, mu_at, w_at, None, omega0=omega0, label="chart-nonholo")


# ---------------------------------------------------------------------------
# difference-quotient variations and gates
# ---------------------------------------------------------------------------


def step_for(sigma: complex, eps: float) -> float:
    return eps * (1.0 + abs(sigma))


def dir_deriv(fieldfn: Callable[[complex], Array], sigma: complex, v: complex, eps: float) -> Array:
    """Central difference along the real parameter direction ``v``."""
    e = step_for(sigma, eps)
    return (fieldfn(sigma + e * v) - fieldfn(sigma - e * v)) / (2.0 * e)


def d_holo(fieldfn: Callable[[complex], Array], sigma: complex, eps: float) -> Array:
    r""":math:`\partial_\sigma f = \tfrac12(\partial_1 - i\partial_2)f`."""
    return 0.5 * (
        dir_deriv(fieldfn, sigma, 1.0, eps) - 1j * dir_deriv(fieldfn, sigma, 1j, eps)
    )


def d_anti(fieldfn: Callable[[complex], Array], sigma: complex, eps: float) -> Array:
    r""":math:`\partial_{\bar\sigma} f = \tfrac12(\partial_1 + i\partial_2)f`."""
    return 0.5 * (
        dir_deriv(fieldfn, sigma, 1.0, eps) + 1j * dir_deriv(fieldfn, sigma, 1j, eps)
    )


@dataclass
class Variation:
    r"""Parameter variation tensors at one (sigma, direction) pair.

    ``v`` encodes a real tangent direction of the parameter plane;
    ``VJ`` is the derivative of J along it; ``Gt = VJ . omega^{-1}``
    solves :math:`V[J] = \tilde G(V)\omega`, and ``G`` is its (2,0)
    part.  The residuals are the family gates: they are *measured*,
    and identity runs report them rather than assuming them.
    """

    sigma: complex
    v: complex
    eps: float
    VJ: Array
    Gt: Array
    G: Array
    anticommute_residual: float
    symmetry_residual: float
    holomorphy_residual: float
    rigidity_residual: float


def variation(
    family: Family,
    sigma: complex,
    v: complex = 1.0,
    eps: float = 1e-4,
    exact: bool = False,
) -> Variation:
    st = family.state(sigma)
    if exact:
        VJ = family.vj_exact(sigma, v)
        if VJ is None:
            raise ValueError(f"{family.label} has no closed-form variation")
    else:
        VJ = dir_deriv(lambda s: family.J_at(s), sigma, v, eps)
    winv = inv2(st.omega)
    Gt = np.einsum("ac...,cb...->ab...", VJ, winv)
    P = st.P
    G = np.einsum("ac...,cd...,bd...->ab...", P, Gt, P)
    mask = st.grid.interior() if isinstance(st.grid, ChartGrid) else None

    anti = max_norm(mat_mul(VJ, st.J) + mat_mul(st.J, VJ), mask)
    sym = max_norm(Gt - np.einsum("ab...->ba...", Gt), mask)

    # holomorphy gate: the (1,0) parameter part of V[J] must map (0,1) to (1,0)
    if exact:
        VJ_i = family.vj_exact(sigma, 1j * v)
    else:
        VJ_i = dir_deriv(lambda s: family.J_at(s), sigma, 1j * v, eps)
    VJ_holo = 0.5 * (VJ - 1j * VJ_i)
    VJ_anti = 0.5 * (VJ + 1j * VJ_i)
    Q = st.Q
    holo = max(
        max_norm(mat_mul(Q, mat_mul(VJ_holo, P)), mask),
        max_norm(mat_mul(P, mat_mul(VJ_anti, Q)), mask),
    )

    # rigidity gate: (0,1) covariant derivative of G
    nablaG = cov_deriv(st.grid, st.gamma, TensorField(G.astype(complex), "uu"))
    rig = max_norm(project_slot(nablaG, 0, st.J, "anti").comps, mask)

    return Variation(
        sigma=complex(sigma),
        v=complex(v),
        eps=eps,
        VJ=VJ,
        Gt=Gt,
        G=G,
        anticommute_residual=anti,
        symmetry_residual=sym,
        holomorphy_residual=holo,
        rigidity_residual=rig,
    )
