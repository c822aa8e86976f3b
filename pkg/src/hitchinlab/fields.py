"""Grids, derivative operators, and real-indexed tensor fields.

Two backends share one calculus interface:

* :class:`TorusGrid` -- uniform periodic grid on the unit square with
  spectral (FFT) differentiation; derivatives are exact to machine
  precision for smooth periodic data.
* :class:`ChartGrid` -- uniform closed box with 4th-order finite
  differences (central stencils in the interior, one-sided at the
  boundary); residual norms are evaluated on an interior mask.

Tensor fields carry *real* frame indices: component arrays of shape
``(2,)*rank + (n, n)`` over the coordinate frame ``(d/dx, d/dy)`` or its
dual, with a variance signature such as ``"ud"`` (up = vector slot,
down = covector slot).  Complex structures, projectors, metrics and
two-forms are rank-2 fields of this kind; all contractions are plain
``einsum`` calls over the leading index axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

Array = np.ndarray

# Slot index letters available to einsum-based contractions.
_LETTERS = "abcdefgh"


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic ``n x n`` grid on ``[0,1)^2`` with FFT calculus."""

    n: int

    @cached_property
    def x(self) -> Array:
        x = np.arange(self.n) / self.n
        return np.broadcast_to(x[:, None], (self.n, self.n)).copy()

    @cached_property
    def y(self) -> Array:
        y = np.arange(self.n) / self.n
        return np.broadcast_to(y[None, :], (self.n, self.n)).copy()

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def periodic(self) -> bool:
        return True

    @cached_property
    def _ik(self) -> Array:
        # 2*pi*i * integer wavenumbers, for unit period.
        return 2j * np.pi * np.fft.fftfreq(self.n, d=1.0 / self.n)

    def deriv(self, f: Array, axis: int) -> Array:
        """Spectral partial derivative along grid ``axis`` (-2 for x, -1 for y)."""
        fh = np.fft.fft(f, axis=axis)
        shape = [1] * fh.ndim
        shape[axis] = self.n
        fh *= self._ik.reshape(shape)
        return np.fft.ifft(fh, axis=axis)

    def interior(self) -> Array:
        return np.ones(self.shape, dtype=bool)

    def mean(self, f: Array) -> Array:
        """Grid mean == trapezoidal quadrature / area on a periodic grid."""
        return np.mean(f, axis=(-2, -1))


# 4th-order one-sided first-derivative stencils (rows: boundary point,
# next-to-boundary point), offsets 0..4 and -1..3 respectively.
_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


@dataclass(frozen=True)
class ChartGrid:
    """Uniform ``n x n`` grid on a closed box with 4th-order differences.

    The box is ``[cx-half, cx+half] x [cy-half, cy+half]`` including the
    endpoints; ``h = 2*half/(n-1)``.  Boundary derivatives use one-sided
    4th-order stencils so that composed operators remain well defined
    everywhere, but accuracy claims are made only on :meth:`interior`.
    """

    n: int
    half: float = 0.5
    center: tuple[float, float] = (0.0, 0.0)
    margin: int = 6

    @property
    def h(self) -> float:
        return 2.0 * self.half / (self.n - 1)

    @cached_property
    def x(self) -> Array:
        x = self.center[0] + np.linspace(-self.half, self.half, self.n)
        return np.broadcast_to(x[:, None], (self.n, self.n)).copy()

    @cached_property
    def y(self) -> Array:
        y = self.center[1] + np.linspace(-self.half, self.half, self.n)
        return np.broadcast_to(y[None, :], (self.n, self.n)).copy()

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def periodic(self) -> bool:
        return False

    def deriv(self, f: Array, axis: int) -> Array:
        """4th-order finite-difference partial derivative along ``axis``."""
        g = np.moveaxis(np.asarray(f, dtype=complex), axis, -1)
        out = np.empty_like(g)
        out[..., 2:-2] = (
            -g[..., 4:] + 8.0 * g[..., 3:-1] - 8.0 * g[..., 1:-3] + g[..., :-4]
        ) / 12.0
        for i, st in ((0, _EDGE0), (1, _EDGE1)):
            # one-sided stencil over the first five nodes, mirrored at the far edge
            out[..., i] = sum(c * g[..., j] for j, c in enumerate(st))
            out[..., -1 - i] = -sum(c * g[..., -1 - j] for j, c in enumerate(st))
        out /= self.h
        return np.moveaxis(out, -1, axis)

    def interior(self, margin: int | None = None) -> Array:
        m = self.margin if margin is None else margin
        mask = np.zeros(self.shape, dtype=bool)
        mask[m : self.n - m, m : self.n - m] = True
        return mask

    def mean(self, f: Array) -> Array:
        """Trapezoidal quadrature / area over the closed box."""
        w = np.ones(self.n)
        w[0] = w[-1] = 0.5
        ww = np.outer(w, w)
        return np.sum(f * ww, axis=(-2, -1)) / np.sum(ww)


Grid = TorusGrid | ChartGrid


def grad(grid: Grid, f: Array) -> Array:
    """Coordinate gradient ``(df/dx, df/dy)`` stacked on a new leading axis."""
    return np.stack([grid.deriv(f, -2), grid.deriv(f, -1)])


# ---------------------------------------------------------------------------
# tensor fields
# ---------------------------------------------------------------------------


@dataclass
class TensorField:
    """Tensor field in the real coordinate frame.

    ``comps`` has shape ``(2,)*rank + grid.shape``; ``variance`` holds one
    character per slot, ``'u'`` (vector) or ``'d'`` (covector).  Rank-0
    fields (``variance == ""``) wrap plain scalar grids.
    """

    comps: Array
    variance: str

    def __post_init__(self) -> None:
        if self.comps.shape[: len(self.variance)] != (2,) * len(self.variance):
            raise ValueError("component shape does not match variance signature")

    @property
    def rank(self) -> int:
        return len(self.variance)

    def conj(self) -> "TensorField":
        return TensorField(np.conj(self.comps), self.variance)

    def __add__(self, other: "TensorField") -> "TensorField":
        if self.variance != other.variance:
            raise ValueError("variance mismatch")
        return TensorField(self.comps + other.comps, self.variance)

    def __sub__(self, other: "TensorField") -> "TensorField":
        if self.variance != other.variance:
            raise ValueError("variance mismatch")
        return TensorField(self.comps - other.comps, self.variance)

    def __mul__(self, c) -> "TensorField":
        return TensorField(self.comps * c, self.variance)

    __rmul__ = __mul__


def _spec(rank: int, grid_rank: int = 2) -> str:
    return _LETTERS[:rank] + "..."


def contract(t1: TensorField, slot1: int, t2: TensorField, slot2: int) -> TensorField:
    """Natural pairing of an up slot of one field with a down slot of the other."""
    if {t1.variance[slot1], t2.variance[slot2]} != {"u", "d"}:
        raise ValueError("contraction needs one up and one down slot")
    s1 = list(_LETTERS[: t1.rank])
    s2 = list(_LETTERS[t1.rank : t1.rank + t2.rank])
    s2[slot2] = s1[slot1]
    out = [c for i, c in enumerate(s1) if i != slot1] + [
        c for i, c in enumerate(s2) if i != slot2
    ]
    comps = np.einsum(
        f"{''.join(s1)}...,{''.join(s2)}...->{''.join(out)}...", t1.comps, t2.comps
    )
    variance = (
        "".join(v for i, v in enumerate(t1.variance) if i != slot1)
        + "".join(v for i, v in enumerate(t2.variance) if i != slot2)
    )
    return TensorField(comps, variance)


def self_trace(t: TensorField, slot1: int, slot2: int) -> TensorField:
    """Trace an up slot against a down slot of the same field."""
    if {t.variance[slot1], t.variance[slot2]} != {"u", "d"}:
        raise ValueError("trace needs one up and one down slot")
    s = list(_LETTERS[: t.rank])
    s[slot2] = s[slot1]
    out = [c for i, c in enumerate(s) if i not in (slot1, slot2)]
    comps = np.einsum(f"{''.join(s)}...->{''.join(out)}...", t.comps)
    variance = "".join(v for i, v in enumerate(t.variance) if i not in (slot1, slot2))
    return TensorField(comps, variance)


def apply_matrix(m: Array, t: TensorField, slot: int) -> TensorField:
    """Apply an endomorphism field ``m[a, b]`` to one slot of ``t``.

    Up slots transform with ``m``, down slots with its transpose inverse
    convention ``(m^T)``: ``(m . t)_a = m[b, a] t_b`` so that natural
    pairings are preserved when ``m`` is a projector applied to both
    factors.
    """
    s = list(_LETTERS[: t.rank])
    new = "z"
    if t.variance[slot] == "u":
        sub = f"z{s[slot]}...,{''.join(s)}...->"
    else:
        sub = f"{s[slot]}z...,{''.join(s)}...->"
    out = s.copy()
    out[slot] = new
    comps = np.einsum(sub + "".join(out) + "...", m, t.comps)
    return TensorField(comps, t.variance)


def mat_mul(a: Array, b: Array) -> Array:
    """Pointwise product of endomorphism fields ``(2,2,n,n)``."""
    return np.einsum("ab...,bc...->ac...", a, b)


def mat_trace(a: Array) -> Array:
    return np.einsum("aa...->...", a)


def identity_like(g: Array) -> Array:
    eye = np.zeros_like(g)
    eye[0, 0] = 1.0
    eye[1, 1] = 1.0
    return eye


def proj_holo(J: Array) -> Array:
    r"""Type projector :math:`\pi^{1,0} = \tfrac12(\mathrm{Id} - iJ)` on vectors."""
    return 0.5 * (identity_like(J) - 1j * J)


def proj_anti(J: Array) -> Array:
    r"""Type projector :math:`\pi^{0,1} = \tfrac12(\mathrm{Id} + iJ)` on vectors."""
    return 0.5 * (identity_like(J) + 1j * J)


def project_slot(t: TensorField, slot: int, J: Array, kind: str) -> TensorField:
    """Project one slot onto its (1,0) (``kind='holo'``) or (0,1) part.

    For a covector slot the projector dualizes: the (1,0) part of a
    one-form annihilates antiholomorphic vectors, i.e. it is composition
    with :math:`\\pi^{1,0}` on the argument.
    """
    P = proj_holo(J) if kind == "holo" else proj_anti(J)
    return apply_matrix(P, t, slot)


def max_norm(f: Array, mask: Array | None = None) -> float:
    """Max absolute value, optionally restricted to a boolean grid mask."""
    a = np.abs(np.asarray(f))
    if mask is not None:
        # collapse leading tensor axes, mask the grid axes
        a = a.reshape((-1,) + a.shape[-2:])
        return float(np.max(a[:, mask])) if a.size else 0.0
    return float(np.max(a))
