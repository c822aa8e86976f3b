r"""Identity catalog: every checked identity as a budgeted residual row.

Each entry evaluates one identity of the corrected-connection calculus on
one backend and reports the worst residual over its case sweep together
with a budget, a verdict, and the *expected* verdict.  Expectations
encode the analytically derived status of each identity on the tested
models: most rows are expected to pass, a small documented set is
expected to fail (see ``docs/identities.md``), and the adversarial
family gates are expected to fail by construction.  A run is clean when
every verdict matches its expectation.

Budgets follow the two error models of the backends:

* torus rows use absolute budgets (spectral/termwise-exact evaluation,
  difference quotients only in the parameter direction);
* chart rows use ``C * (eps_eff**2 + h**4)`` with per-identity constants
  ``C`` calibrated at grid 64 and checked against the measured
  convergence orders (``sweep_orders``); ``eps_eff = eps * (1 + |sigma|)``.

Mutation hooks flip the sign of a single term inside a chosen identity
(`MUTATIONS`); a healthy harness must then report a failure.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .bundle import (
    bundle_data,
    curvature_mm,
    curvature_tm,
    curvature_tt,
    level_potential,
    mm_commutator_residual,
    sec_plain_curl,
)
from .families import (
    ChartFamily,
    Family,
    TorusFamily,
    nonholo_family,
    nonrigid_family,
    rigid_family,
    variation,
)
from .fields import Array, ChartGrid, TensorField, TorusGrid, max_norm
from .geometry import cov_deriv
from .operators import (
    TestSections,
    chart_sections,
    connection_agreement_residual,
    eq_defining_residual,
    eq_transfer_residual,
    frame_comparison_residuals,
    frame_curvature_data,
    levicivita_variation_residual,
    metric_variation_residual,
    operator_pullback_residual,
    param_commutator_curvature,
    pot_mixed,
    pot_mm,
    pot_tt,
    potential_fn,
    potential_oneform_residual,
    potential_variation_residual,
    projector_commutator_residual,
    torus_sections,
)
from .theta import (
    connection_matrix,
    dbar_residual,
    gram,
    gram_rank,
    heat_grid_residual,
    heat_mode_residual,
    loop_offscalar,
    multiplier_residual,
    theta_basis,
    transport,
)

# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

DIRS = (1.0, 1j)
CHART_COEFFS = {0: 0.1, 1: 0.15 + 0.1j}


@dataclass(frozen=True)
class RunConfig:
    backend: str = "both"  # "torus" | "chart" | "both"
    grid: int = 64
    eps: float = 1e-4
    levels: tuple[int, ...] = (1, 3)
    taus: tuple[complex, ...] = (1j, 1 + 1j)
    sigma: complex = 0.1 + 0.05j
    radius: float = 0.35
    steps: int = 200
    seed: int = 0
    mutate: str | None = None
    identities: tuple[str, ...] | None = None
    jobs: int = 4


# mutation name -> (identity, flip keyword)
MUTATIONS = {
    "defining-vj": ("defining_equation", "vj"),
    "defining-trace": ("defining_equation", "trace"),
    "transfer-omega": ("holomorphy_transfer", "omega"),
    "transfer-trace": ("holomorphy_transfer", "trace"),
    "transfer-rho": ("holomorphy_transfer", "rho"),
    "oneform-quad": ("potential_oneform", "quad"),
    "oneform-div": ("potential_oneform", "div"),
    "pullback-gradient": ("operator_pullback", "gradient"),
    "pullback-potential": ("operator_pullback", "potential"),
}


# ---------------------------------------------------------------------------
# evaluation environment (shared caches for one run)
# ---------------------------------------------------------------------------


class Env:
    """Caches families, bundle data and test sections across catalog rows."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._lock = threading.Lock()
        self._torus: TorusFamily | None = None
        self._chart: ChartFamily | None = None
        self._sections: dict = {}
        self._bundles: dict = {}

    # families -------------------------------------------------------------
    def torus(self) -> TorusFamily:
        with self._lock:
            if self._torus is None:
                self._torus = TorusFamily(TorusGrid(self.cfg.grid))
            return self._torus

    def chart(self) -> ChartFamily:
        with self._lock:
            if self._chart is None:
                fam, _ = rigid_family(
                    ChartGrid(self.cfg.grid), CHART_COEFFS, order=8, radius=self.cfg.radius
                )
                self._chart = fam
            return self._chart

    def family(self, backend: str) -> Family:
        return self.torus() if backend == "torus" else self.chart()

    # per-backend case axes --------------------------------------------------
    def params(self, backend: str) -> tuple[complex, ...]:
        return self.cfg.taus if backend == "torus" else (self.cfg.sigma,)

    def eps_at(self, sigma: complex) -> float:
        return self.cfg.eps * (1.0 + abs(sigma))

    def exact(self, backend: str) -> bool:
        return backend == "torus"

    # bundles / sections -----------------------------------------------------
    def bundle(self, backend: str, sigma: complex, k: float):
        key = (backend, complex(sigma), float(k))
        with self._lock:
            bd = self._bundles.get(key)
        if bd is None:
            bd = bundle_data(self.family(backend), sigma, k)
            with self._lock:
                self._bundles[key] = bd
        return bd

    def sections(self, backend: str, sigma: complex, k: int) -> TestSections:
        key = (backend, complex(sigma), int(k))
        with self._lock:
            ts = self._sections.get(key)
        if ts is None:
            bd = self.bundle(backend, sigma, k)
            ts = torus_sections(bd) if backend == "torus" else chart_sections(bd)
            with self._lock:
                self._sections[key] = ts
        return ts

    def potential(self, backend: str, which: str):
        fam = self.family(backend)
        base = self.params(backend)[0] if which == "quadratic" else None
        return potential_fn(fam, which, base=base, eps=self.cfg.eps)

    def mask(self, backend: str):
        return None if backend == "torus" else self.family(backend).grid.interior()

    def flip(self, identity: str) -> str | None:
        m = self.cfg.mutate
        if m is None:
            return None
        target, flip = MUTATIONS[m]
        return flip if target == identity else None


# ---------------------------------------------------------------------------
# budgets
# ---------------------------------------------------------------------------

# torus: absolute; chart: C in  C * (eps_eff^2 + h^4), calibrated at grid 64
# (three times the worst measured residual, rounded up; see docs/identities.md).
# Torus rows built from termwise-exact data carry the tight 1e-8 budget;
# rows requiring nested parameter difference quotients (frame curvature and
# the corrected comparison rows) sit at the eps^2 floor and carry 5e-7/1e-6.
BUDGETS: dict[str, dict[str, float]] = {
    "family_gates": {"torus": 1e-6, "chart": 30.0},
    "family_holomorphy_gate_adversarial": {"chart": 30.0},
    "family_rigidity_gate_adversarial": {"chart": 30.0},
    "metric_variation": {"torus": 1e-8, "chart": 10.0},
    "levicivita_variation": {"torus": 1e-8, "chart": 1.0},
    "projector_commutator": {"torus": 1e-8, "chart": 1.0},
    "prequantum_curvature": {"chart": 1.0},
    "curvature_base": {"torus": 1e-8, "chart": 1.0},
    "curvature_base_probe": {"torus": 1e-8, "chart": 210.0},
    "curvature_mixed_trace": {"torus": 1e-8, "chart": 1.0},
    "curvature_mixed_potential": {"torus": 1e-8, "chart": 1.0},
    "curvature_param_vanishing": {"torus": 1e-8, "chart": 10.0},
    "curvature_param_commutator": {"torus": 1e-6, "chart": 10.0},
    "frame_curvature": {"torus": 1e-6, "chart": 10.0},
    "halfform_trace": {"torus": 1e-6, "chart": 10.0},
    "potential_variation": {"torus": 1e-8, "chart": 1.0},
    "potential_oneform": {"torus": 1e-8, "chart": 10.0},
    "potential_constancy": {"torus": 1e-8, "chart": 10.0},
    "potential_constancy_corrected": {"torus": 1e-8, "chart": 10.0},
    "curvature_reduction": {"torus": 1e-8, "chart": 10.0},
    "curvature_reduction_corrected": {"torus": 5e-7},
    "defining_equation": {"torus": 1e-8, "chart": 60.0},
    "holomorphy_transfer": {"torus": 1e-8, "chart": 300.0},
    "divergence_closedness": {"torus": 1e-8, "chart": 8000.0},
    "frame_comparison": {"torus": 1e-8, "chart": 1.0},
    "frame_comparison_corrected": {"torus": 5e-7},
    "operator_pullback": {"torus": 1e-8, "chart": 10.0},
    "connection_agreement": {"torus": 1e-8, "chart": 10.0},
    "connection_agreement_corrected": {"torus": 5e-7},
    "basis_multiplier": {"torus": 1e-8},
    "basis_holomorphy": {"torus": 1e-8, "chart": 10.0},
    "gram_rank": {"torus": 1e-8},
    "heat_mode": {"torus": 1e-12},
    "projection_defect": {"torus": 1e-8},
    "transport_oracle": {"torus": 1e-6},
    "loop_offscalar": {"torus": 1e-6},
}

# rows whose failure is the analytically expected outcome on the tested
# models; everything else is expected to pass.
EXPECTED_FAIL: set[tuple[str, str]] = {
    ("family_holomorphy_gate_adversarial", "chart"),
    ("family_rigidity_gate_adversarial", "chart"),
    ("curvature_param_vanishing", "torus"),
    ("curvature_param_vanishing", "chart"),
    ("potential_constancy", "chart"),
    ("curvature_reduction", "torus"),
    ("frame_comparison", "torus"),
    ("connection_agreement", "torus"),
}

NOTES: dict[str, str] = {
    "curvature_param_vanishing": (
        "parameter-parameter curvature is measurably nonzero "
        "(torus: 1/(4 Im tau)^2 * Im tau^... see docs); "
        "the commutator form of the same block passes"
    ),
    "potential_constancy": (
        "the parameter-hessian of the potential family varies over the "
        "surface; adding the parameter-parameter curvature makes it "
        "constant (corrected row)"
    ),
    "curvature_reduction": (
        "with the pinned pluriharmonic potential the parameter-parameter "
        "block of the reduction fails by the nonzero parameter curvature; "
        "the corrected row absorbs it"
    ),
    "frame_comparison": (
        "with the flat potential the parameter part of the frame "
        "comparison misses the non-closed form i v/(4 Im tau); its curl "
        "is exactly the nonzero parameter-parameter curvature"
    ),
    "connection_agreement": (
        "same obstruction as frame_comparison: the operator difference "
        "equals |v|/(4 Im tau) on every section with the flat potential"
    ),
    "family_holomorphy_gate_adversarial": "deliberately broken family must be flagged",
    "family_rigidity_gate_adversarial": "deliberately broken family must be flagged",
}


# chart section-residual rows whose floor grows cubically with the level
# (calibrated: worst residual / k^3 is level-independent within a factor
# of a few for k = 1..5); their per-case budgets carry the k^3 weight.
K_CUBIC = {"defining_equation", "holomorphy_transfer", "curvature_base_probe"}


def budget_for(
    identity: str, backend: str, env: Env, k: int | None = None
) -> float:
    b = BUDGETS[identity][backend]
    if backend == "torus":
        return b
    grid = env.family("chart").grid
    eps_eff = env.eps_at(env.cfg.sigma)
    scale = eps_eff**2 + grid.h**4
    if identity in K_CUBIC and k:
        return b * max(int(k), 1) ** 3 * scale
    return b * scale


# ---------------------------------------------------------------------------
# runners (each returns the list of case residuals for one backend)
# ---------------------------------------------------------------------------


def _run_family_gates(env: Env, backend: str) -> list[float]:
    fam = env.family(backend)
    out = []
    for p in env.params(backend):
        for v in DIRS:
            var = variation(fam, p, v, env.eps_at(p))
            out += [
                var.anticommute_residual,
                var.symmetry_residual,
                var.holomorphy_residual,
                var.rigidity_residual,
            ]
    return out


def _run_holo_gate_adv(env: Env, backend: str) -> list[float]:
    fam = nonholo_family(ChartGrid(env.cfg.grid))
    var = variation(fam, env.cfg.sigma, 1.0, env.eps_at(env.cfg.sigma))
    return [var.holomorphy_residual]


def _run_rigid_gate_adv(env: Env, backend: str) -> list[float]:
    fam = nonrigid_family(ChartGrid(env.cfg.grid))
    var = variation(fam, env.cfg.sigma, 1.0, env.eps_at(env.cfg.sigma))
    return [var.rigidity_residual]


def _per_dir(fn) -> Callable[[Env, str], list[float]]:
    def run(env: Env, backend: str) -> list[float]:
        fam = env.family(backend)
        return [
            fn(fam, p, v, env.eps_at(p))
            for p in env.params(backend)
            for v in DIRS
        ]

    return run


def _run_prequantum_curvature(env: Env, backend: str) -> list[float]:
    # chart-only: the gauge potential there is a smooth numeric field whose
    # finite-difference curl genuinely re-derives the curvature; on the torus
    # the potential is linear in the fibre coordinate (not FD-differentiable
    # across the periodic wrap) and the same content is covered by
    # ``curvature_base``, whose correction term vanishes there.
    fam = env.family(backend)
    mask = env.mask(backend)
    out = []
    for p in env.params(backend):
        st = fam.state(p)
        for k in env.cfg.levels:
            curl = sec_plain_curl(st, level_potential(st, k))
            target = -1j * k * st.omega[0, 1]
            out.append(max_norm(curl - target, mask) / max_norm(target, mask))
    return out


def _run_curvature_base(env: Env, backend: str) -> list[float]:
    fam = env.family(backend)
    mask = env.mask(backend)
    out = []
    for p in env.params(backend):
        st = fam.state(p)
        for k in env.cfg.levels:
            bd = env.bundle(backend, p, k)
            val = curvature_mm(bd)
            target = -1j * k * st.omega[0, 1] + 0.5j * st.rho[0, 1]
            out.append(max_norm(val - target, mask) / max_norm(target, mask))
    return out


def _run_curvature_base_probe(env: Env, backend: str) -> list:
    fam = env.family(backend)
    out = []
    for p in env.params(backend):
        st = fam.state(p)
        for k in env.cfg.levels:
            if k < 1:
                continue
            bd = env.bundle(backend, p, k)
            target = -1j * k * st.omega[0, 1] + 0.5j * st.rho[0, 1]
            s = env.sections(backend, p, k).values[0]
            out.append((mm_commutator_residual(bd, s, target), k))
    return out


def _run_curvature_mixed_trace(env: Env, backend: str) -> list[float]:
    fam = env.family(backend)
    mask = env.mask(backend)
    out = []
    for p in env.params(backend):
        st = fam.state(p)
        for v in DIRS:
            eps = env.eps_at(p)
            ctm = curvature_tm(fam, p, v, eps)
            Gt = variation(fam, p, v, eps).Gt
            nGt = cov_deriv(fam.grid, st.gamma, TensorField(Gt.astype(complex), "uu"))
            trGt = np.einsum("aab...->b...", nGt.comps)
            rhs = 0.25j * np.einsum("b...,ba...->a...", trGt, st.omega)
            den = max(max_norm(rhs, mask), max_norm(ctm, mask), 1e-12)
            out.append(max_norm(ctm - rhs, mask) / den)
    return out


def _run_curvature_mixed_potential(env: Env, backend: str) -> list[float]:
    fam = env.family(backend)
    mask = env.mask(backend)
    Fr = env.potential(backend, "ricci")
    out = []
    for p in env.params(backend):
        for v in DIRS:
            eps = env.eps_at(p)
            ctm = curvature_tm(fam, p, v, eps)
            pm = pot_mixed(fam, Fr, p, v, eps)
            den = max(max_norm(ctm, mask), max_norm(pm, mask), 1e-12)
            out.append(max_norm(ctm + pm, mask) / den)
    return out


def _run_curvature_param_vanishing(env: Env, backend: str) -> list[float]:
    fam = env.family(backend)
    mask = env.mask(backend)
    return [
        max_norm(curvature_tt(fam, p, env.eps_at(p), exact=env.exact(backend)), mask)
        for p in env.params(backend)
    ]


def _run_curvature_param_commutator(env: Env, backend: str) -> list[float]:
    fam = env.family(backend)
    mask = env.mask(backend)
    out = []
    for p in env.params(backend):
        eps = env.eps_at(p)
        ctt = curvature_tt(fam, p, eps, exact=env.exact(backend))
        rhs = param_commutator_curvature(fam, p, eps, exact=env.exact(backend))
        den = max(max_norm(ctt, mask), 1e-12)
        out.append(max_norm(ctt - rhs, mask) / den)
    return out


def _run_frame_curvature(env: Env, backend: str) -> list[float]:
    fam = env.family(backend)
    return [frame_curvature_data(fam, p, env.eps_at(p))[2] for p in env.params(backend)]


def _run_halfform_trace(env: Env, backend: str) -> list[float]:
    fam = env.family(backend)
    mask = env.mask(backend)
    out = []
    for p in env.params(backend):
        eps = env.eps_at(p)
        R, _, _ = frame_curvature_data(fam, p, eps)
        tr = np.einsum("aa...->...", R)
        ctt = curvature_tt(fam, p, eps, exact=env.exact(backend))
        den = max(max_norm(ctt, mask), 1e-12)
        out.append(max_norm(-0.5 * tr - ctt, mask) / den)
    return out


def _run_potential_variation(env: Env, backend: str) -> list[float]:
    fam = env.family(backend)
    return [
        potential_variation_residual(fam, p, v, env.eps_at(p), exact=env.exact(backend))
        for p in env.params(backend)
        for v in DIRS
    ]


def _run_potential_oneform(env: Env, backend: str) -> list[float]:
    fam = env.family(backend)
    flip = env.flip("potential_oneform")
    return [
        potential_oneform_residual(
            fam, p, v, env.eps_at(p), exact=env.exact(backend), flip=flip
        )
        for p in env.params(backend)
        for v in DIRS
    ]


def _constancy_spread(vals: Array) -> float:
    return float(np.max(np.abs(vals - np.mean(vals))))


def _run_potential_constancy(env: Env, backend: str) -> list[float]:
    fam = env.family(backend)
    mask = env.mask(backend)
    Fr = env.potential(backend, "ricci")
    out = []
    for p in env.params(backend):
        ptt = pot_tt(fam, Fr, p, env.eps_at(p))
        vals = ptt if mask is None else ptt[mask]
        out.append(_constancy_spread(vals))
    return out


def _run_potential_constancy_corrected(env: Env, backend: str) -> list[float]:
    fam = env.family(backend)
    mask = env.mask(backend)
    Fr = env.potential(backend, "ricci")
    out = []
    for p in env.params(backend):
        eps = env.eps_at(p)
        total = pot_tt(fam, Fr, p, eps) + curvature_tt(fam, p, eps, exact=env.exact(backend))
        vals = total if mask is None else total[mask]
        out.append(_constancy_spread(vals))
    return out


def _reduction_cases(env: Env, backend: str, which: str) -> list[float]:
    fam = env.family(backend)
    mask = env.mask(backend)
    Ff = env.potential(backend, which)
    out = []
    for p in env.params(backend):
        st = fam.state(p)
        eps = env.eps_at(p)
        # surface-surface block (relative: the target grows with the level)
        pmm = pot_mm(fam, Ff, p, eps)
        for k in env.cfg.levels:
            bd = env.bundle(backend, p, k)
            val = curvature_mm(bd)
            target = -1j * k * st.omega[0, 1] - pmm
            out.append(max_norm(val - target, mask) / max_norm(target, mask))
        # mixed block (absolute)
        for v in DIRS:
            ctm = curvature_tm(fam, p, v, eps)
            pm = pot_mixed(fam, Ff, p, v, eps)
            out.append(max_norm(ctm + pm, mask))
        # parameter-parameter block (absolute)
        ctt = curvature_tt(fam, p, eps, exact=env.exact(backend))
        ptt = pot_tt(fam, Ff, p, eps)
        out.append(max_norm(ctt + ptt, mask))
    return out


def _run_curvature_reduction(env: Env, backend: str) -> list[float]:
    which = "ricci"  # on the torus this is the flat (pluriharmonic) choice
    return _reduction_cases(env, backend, which)


def _run_curvature_reduction_corrected(env: Env, backend: str) -> list[float]:
    return _reduction_cases(env, backend, "log-imtau")


def _run_defining(env: Env, backend: str) -> list:
    fam = env.family(backend)
    flip = env.flip("defining_equation")
    out = []
    for p in env.params(backend):
        eps = env.eps_at(p)
        for k in env.cfg.levels:
            if k < 1:
                continue
            ts = env.sections(backend, p, k)
            for v in DIRS:
                for s in ts.values:
                    r = eq_defining_residual(
                        fam, p, k, v, s, eps, exact=env.exact(backend), flip=flip
                    )
                    out.append((r, k))
    return out


def _run_transfer(env: Env, backend: str) -> list:
    fam = env.family(backend)
    flip = env.flip("holomorphy_transfer")
    out = []
    for p in env.params(backend):
        eps = env.eps_at(p)
        for k in env.cfg.levels:
            if k < 1:
                continue
            ts = env.sections(backend, p, k)
            for v in DIRS:
                for s in ts.values:
                    r = eq_transfer_residual(
                        fam, p, k, v, s, eps, exact=env.exact(backend), flip=flip
                    )
                    out.append((r, k))
    return out


def _run_divergence_closedness(env: Env, backend: str) -> list[float]:
    fam = env.family(backend)
    out = []
    for p in env.params(backend):
        eps = env.eps_at(p)
        ts = env.sections(backend, p, 0)
        for v in DIRS:
            for s in ts.values:
                out.append(
                    eq_transfer_residual(fam, p, 0, v, s, eps, exact=env.exact(backend))
                )
    return out


def _comparison_potential(backend: str) -> str:
    # torus rows pin the flat potential (the pluriharmonic representative);
    # chart rows use the canonical one solving the curvature equation.
    return "zero" if backend == "torus" else "ricci"


def _run_frame_comparison(env: Env, backend: str, which: str | None = None) -> list[float]:
    fam = env.family(backend)
    Ff = env.potential(backend, which or _comparison_potential(backend))
    out = []
    for p in env.params(backend):
        for v in DIRS:
            rm, rt = frame_comparison_residuals(
                fam, Ff, p, v, env.eps_at(p), exact=env.exact(backend)
            )
            out += [rm, rt]
    return out


def _run_operator_pullback(env: Env, backend: str) -> list[float]:
    fam = env.family(backend)
    Ff = env.potential(backend, _comparison_potential(backend))
    flip = env.flip("operator_pullback")
    out = []
    for p in env.params(backend):
        eps = env.eps_at(p)
        for k in env.cfg.levels:
            if k < 1:
                continue
            ts = env.sections(backend, p, k)
            for v in DIRS:
                out.append(
                    operator_pullback_residual(
                        fam, Ff, p, k, v, ts.values[0], eps,
                        exact=env.exact(backend), flip=flip,
                    )
                )
    return out


def _run_connection_agreement(env: Env, backend: str, which: str | None = None) -> list[float]:
    fam = env.family(backend)
    Ff = env.potential(backend, which or _comparison_potential(backend))
    out = []
    for p in env.params(backend):
        eps = env.eps_at(p)
        for k in env.cfg.levels:
            if k < 1:
                continue
            ts = env.sections(backend, p, k)
            for v in DIRS:
                out.append(
                    connection_agreement_residual(
                        fam, Ff, p, k, v, ts.values[0], eps, exact=env.exact(backend)
                    )
                )
    return out


def _run_basis_multiplier(env: Env, backend: str) -> list[float]:
    grid = env.torus().grid
    return [
        multiplier_residual(grid, k, tau, j)
        for tau in env.cfg.taus
        for k in env.cfg.levels
        if k >= 1
        for j in range(k)
    ]


def _run_basis_holomorphy(env: Env, backend: str) -> list[float]:
    out = []
    for p in env.params(backend):
        for k in env.cfg.levels:
            if k < 1:
                continue
            if backend == "torus":
                out.append(dbar_residual(env.torus(), p, k))
            else:
                out += list(env.sections(backend, p, k).defects)
    return out


def _run_gram_rank(env: Env, backend: str) -> list[float]:
    grid = env.torus().grid
    out = []
    for tau in env.cfg.taus:
        for k in env.cfg.levels:
            if k < 1:
                continue
            basis = theta_basis(grid, k, tau)
            G = gram(grid, k, tau, basis)
            golden = np.sqrt(2.0 * np.pi / k)
            out.append(0.0 if gram_rank(G) == k else 1.0)
            out.append(float(np.max(np.abs(G - golden * np.eye(k)))) / golden)
    return out


def _run_heat_mode(env: Env, backend: str) -> list[float]:
    grid = env.torus().grid
    out = []
    for tau in env.cfg.taus:
        for k in env.cfg.levels:
            if k < 1:
                continue
            out.append(heat_mode_residual(k, tau))
            out.append(heat_grid_residual(grid, k, tau))
    return out


def _run_projection_defect(env: Env, backend: str) -> list[float]:
    fam = env.torus()
    return [
        connection_matrix(fam, tau, k, v, eps=env.eps_at(tau), exact=True).defect
        for tau in env.cfg.taus
        for k in env.cfg.levels
        if k >= 1
        for v in DIRS
    ]


def _run_transport_oracle(env: Env, backend: str) -> list[float]:
    fam = env.torus()
    out = []
    for k in env.cfg.levels:
        if k < 1:
            continue
        res = transport(fam, k, (1j, 1 + 1j), np.eye(k), steps=env.cfg.steps)
        out.append(float(np.max(np.abs(res.end - res.start))))
        out.append(res.norm_drift)
    return out


def _run_loop_offscalar(env: Env, backend: str) -> list[float]:
    fam = env.torus()
    out = []
    for k in env.cfg.levels:
        if k < 1:
            continue
        off, _ = loop_offscalar(fam, k, 1j, 0.01, steps=max(env.cfg.steps // 2, 50))
        out.append(off)
    return out


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Entry:
    identity: str
    backend: str
    runner: Callable[[Env, str], list[float]]


def _registry() -> list[Entry]:
    both = lambda name, fn: [Entry(name, "torus", fn), Entry(name, "chart", fn)]
    torus = lambda name, fn: [Entry(name, "torus", fn)]
    chart = lambda name, fn: [Entry(name, "chart", fn)]
    entries: list[Entry] = []
    entries += both("family_gates", _run_family_gates)
    entries += chart("family_holomorphy_gate_adversarial", _run_holo_gate_adv)
    entries += chart("family_rigidity_gate_adversarial", _run_rigid_gate_adv)
    entries += both("metric_variation", _per_dir(metric_variation_residual))
    entries += both("levicivita_variation", _per_dir(levicivita_variation_residual))
    entries += both("projector_commutator", _per_dir(projector_commutator_residual))
    entries += chart("prequantum_curvature", _run_prequantum_curvature)
    entries += both("curvature_base", _run_curvature_base)
    entries += both("curvature_base_probe", _run_curvature_base_probe)
    entries += both("curvature_mixed_trace", _run_curvature_mixed_trace)
    entries += both("curvature_mixed_potential", _run_curvature_mixed_potential)
    entries += both("curvature_param_vanishing", _run_curvature_param_vanishing)
    entries += both("curvature_param_commutator", _run_curvature_param_commutator)
    entries += both("frame_curvature", _run_frame_curvature)
    entries += both("halfform_trace", _run_halfform_trace)
    entries += both("potential_variation", _run_potential_variation)
    entries += both("potential_oneform", _run_potential_oneform)
    entries += both("potential_constancy", _run_potential_constancy)
    entries += both("potential_constancy_corrected", _run_potential_constancy_corrected)
    entries += both("curvature_reduction", _run_curvature_reduction)
    entries += torus("curvature_reduction_corrected", _run_curvature_reduction_corrected)
    entries += both("defining_equation", _run_defining)
    entries += both("holomorphy_transfer", _run_transfer)
    entries += both("divergence_closedness", _run_divergence_closedness)
    entries += both("frame_comparison", _run_frame_comparison)
    entries += torus(
        "frame_comparison_corrected",
        lambda env, b: _run_frame_comparison(env, b, "log-imtau"),
    )
    entries += both("operator_pullback", _run_operator_pullback)
    entries += both("connection_agreement", _run_connection_agreement)
    entries += torus(
        "connection_agreement_corrected",
        lambda env, b: _run_connection_agreement(env, b, "log-imtau"),
    )
    entries += torus("basis_multiplier", _run_basis_multiplier)
    entries += both("basis_holomorphy", _run_basis_holomorphy)
    entries += torus("gram_rank", _run_gram_rank)
    entries += torus("heat_mode", _run_heat_mode)
    entries += torus("projection_defect", _run_projection_defect)
    entries += torus("transport_oracle", _run_transport_oracle)
    entries += torus("loop_offscalar", _run_loop_offscalar)
    return entries


REGISTRY = _registry()
IDENTITY_NAMES = tuple(sorted({e.identity for e in REGISTRY}))


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


def _row(entry: Entry, env: Env) -> dict:
    raw = entry.runner(env, entry.backend)
    cases = [
        item if isinstance(item, tuple) else (float(item), None) for item in raw
    ]
    pairs = [
        (r, budget_for(entry.identity, entry.backend, env, k)) for r, k in cases
    ]
    if pairs:
        residual, budget = max(pairs, key=lambda rb: rb[0] / rb[1])
    else:
        residual, budget = 0.0, budget_for(entry.identity, entry.backend, env)
    ratio = residual / budget
    verdict = "pass" if ratio <= 1.0 else "fail"
    expected = "fail" if (entry.identity, entry.backend) in EXPECTED_FAIL else "pass"
    return {
        "identity": entry.identity,
        "backend": entry.backend,
        "cases": len(pairs),
        "residual": float(residual),
        "budget": float(budget),
        "ratio": float(ratio),
        "verdict": verdict,
        "expected": expected,
        "status": "ok" if verdict == expected else "unexpected",
        "note": NOTES.get(entry.identity, ""),
    }


def select_entries(cfg: RunConfig) -> list[Entry]:
    backends = ("torus", "chart") if cfg.backend == "both" else (cfg.backend,)
    chosen = [e for e in REGISTRY if e.backend in backends]
    if cfg.identities:
        unknown = set(cfg.identities) - set(IDENTITY_NAMES)
        if unknown:
            raise ValueError(f"unknown identities: {sorted(unknown)}")
        chosen = [e for e in chosen if e.identity in cfg.identities]
    return chosen


def run_catalog(cfg: RunConfig) -> list[dict]:
    """Evaluate the selected catalog rows; deterministic, sorted output."""
    env = Env(cfg)
    entries = select_entries(cfg)
    rows: list[dict] = []
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as ex:
            rows = list(ex.map(lambda e: _row(e, env), entries))
    else:
        rows = [_row(e, env) for e in entries]
    rows.sort(key=lambda r: (r["identity"], r["backend"]))
    return rows


# ---------------------------------------------------------------------------
# convergence-order sweeps
# ---------------------------------------------------------------------------

SWEEPABLE = (
    "defining_equation",
    "holomorphy_transfer",
    "operator_pullback",
    "connection_agreement",
)


def _chart_residual_at(
    identity: str,
    n: int,
    eps: float,
    k: int,
    radius: float,
    sigma: complex,
    coeff: Array | None,
) -> tuple[float, Array]:
    """One chart residual with sections frozen across grids via ``coeff``."""
    from .operators import section_on

    fam, _ = rigid_family(ChartGrid(n), CHART_COEFFS, order=8, radius=radius)
    eps_eff = eps * (1.0 + abs(sigma))
    if coeff is None:
        bd = bundle_data(fam, sigma, k)
        ts = chart_sections(bd)
        coeff = ts.coeff[0]
    s = section_on(fam.grid, coeff)
    Ff = potential_fn(fam, "ricci")
    if identity == "defining_equation":
        r = eq_defining_residual(fam, sigma, k, 1.0, s, eps_eff)
    elif identity == "holomorphy_transfer":
        r = eq_transfer_residual(fam, sigma, k, 1.0, s, eps_eff)
    elif identity == "operator_pullback":
        r = operator_pullback_residual(fam, Ff, sigma, k, 1.0, s, eps_eff)
    elif identity == "connection_agreement":
        r = connection_agreement_residual(fam, Ff, sigma, k, 1.0, s, eps_eff)
    else:
        raise ValueError(f"identity {identity!r} is not sweepable")
    return r, coeff


def sweep_orders(
    identities: Iterable[str],
    grids: tuple[int, ...] = (64, 128),
    eps_pair: tuple[float, float] = (0.1, 0.05),
    k: int = 1,
    radius: float = 0.35,
    sigma: complex = 0.1 + 0.05j,
    eps: float = 1e-4,
) -> list[dict]:
    r"""Measured convergence orders on the chart backend.

    The grid sweep keeps one *frozen* section (polynomial coefficients
    built on the coarsest grid, re-evaluated exactly on the finer ones)
    so that the h-order is not masked by the section constructor picking
    a different kernel representative per grid.  The eps sweep uses
    parameter steps large enough that the :math:`\varepsilon^2`
    difference-quotient error dominates the :math:`h^4` floor.
    """
    rows: list[dict] = []
    for identity in identities:
        if identity not in SWEEPABLE:
            raise ValueError(f"identity {identity!r} is not sweepable")
        # h-order at fixed small eps
        res_h = []
        coeff = None
        for n in grids:
            r, coeff = _chart_residual_at(identity, n, eps, k, radius, sigma, coeff)
            res_h.append(r)
        for i in range(len(grids) - 1):
            ratio = (grids[i + 1] - 1) / (grids[i] - 1)
            order = float(np.log(res_h[i] / res_h[i + 1]) / np.log(ratio))
            rows.append(
                {
                    "identity": identity,
                    "axis": "h",
                    "pair": f"{grids[i]}->{grids[i+1]}",
                    "coarse": res_h[i],
                    "fine": res_h[i + 1],
                    "order": order,
                }
            )
        # eps-order on the finest grid, where the h^4 floor is smallest
        e0, e1 = eps_pair
        r0, coeff0 = _chart_residual_at(identity, grids[-1], e0, k, radius, sigma, coeff)
        r1, _ = _chart_residual_at(identity, grids[-1], e1, k, radius, sigma, coeff0)
        order = float(np.log(r0 / r1) / np.log(e0 / e1))
        rows.append(
            {
                "identity": identity,
                "axis": "eps",
                "pair": f"{e0}->{e1}",
                "coarse": r0,
                "fine": r1,
                "order": order,
            }
        )
    rows.sort(key=lambda r: (r["identity"], r["axis"], r["pair"]))
    return rows


# Below this residual an axis is considered resolved: the other error source
# dominates (or rounding does) and a convergence order cannot be measured.
SWEEP_FLOOR = 1e-8


def sweep_axis_ok(row: dict) -> bool:
    """Order threshold per axis, waived when the fine residual sits at the floor."""
    if row["fine"] <= SWEEP_FLOOR:
        return True
    threshold = 3.5 if row["axis"] == "h" else 1.9
    return row["order"] >= threshold
