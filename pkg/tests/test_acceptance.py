"""Acceptance gate: the primary criteria, one machine-checked test each.

Every test prints one ``[PASS]``/``[FAIL]`` line with the measured value
next to its budget.  Five tests assert statements that are mathematically
false as pinned (the claimed-zero parameter-parameter curvature and its
downstream comparison identities with the flat reduction potential); they
fail *by design* -- the failure is the finding, the exact red values are
closed forms, and each has a repaired twin asserted green.  See
docs/identities.md for the analysis.

Criteria covered, in order: the defining-identity sweep, the projection
residual, convergence orders of the variation identities, the curvature
catalog at per-identity budgets, the connection-agreement chain, the heat
oracle / transport / holonomy, the quantum-space dimension, and the
mutation self-test.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from hitchinlab.catalog import RunConfig, run_catalog, sweep_axis_ok, sweep_orders
from hitchinlab.families import TorusFamily
from hitchinlab.fields import TorusGrid
from hitchinlab.theta import loop_offscalar, transport

TAUS4 = (1j, 2j, 1 + 1j, 0.5 + 0.8j)
LEVELS5 = (1, 2, 3, 4, 5)

TORUS_SWEEP_IDS = (
    "defining_equation",
    "projection_defect",
    "holomorphy_transfer",
    "gram_rank",
    "heat_mode",
    "connection_agreement",
    "connection_agreement_corrected",
    "frame_comparison",
    "frame_comparison_corrected",
    "operator_pullback",
)

# curvature-catalog identities checked at their stated per-identity budgets
CURVATURE_CATALOG = (
    "prequantum_curvature",
    "curvature_base",
    "curvature_base_probe",
    "curvature_mixed_trace",
    "curvature_mixed_potential",
    "curvature_param_vanishing",
    "curvature_param_commutator",
    "frame_curvature",
    "halfform_trace",
    "metric_variation",
    "levicivita_variation",
    "projector_commutator",
    "potential_variation",
    "potential_oneform",
    "potential_constancy",
    "curvature_reduction",
    "divergence_closedness",
)


def _line(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


def _row_detail(row: dict) -> str:
    return (
        f"{row['backend']}: residual {row['residual']:.3e} vs budget "
        f"{row['budget']:.3e} over {row['cases']} cases"
    )


@pytest.fixture(scope="module")
def torus_sweep():
    cfg = RunConfig(backend="torus", levels=LEVELS5, taus=TAUS4, identities=TORUS_SWEEP_IDS)
    t0 = time.time()
    rows = run_catalog(cfg)
    elapsed = time.time() - t0
    return {r["identity"]: r for r in rows}, elapsed


@pytest.fixture(scope="module")
def full_catalog():
    rows = run_catalog(RunConfig())
    return {(r["identity"], r["backend"]): r for r in rows}


@pytest.fixture(scope="module")
def chart_orders():
    rows = sweep_orders(
        ("defining_equation", "holomorphy_transfer", "operator_pullback", "connection_agreement"),
        grids=(64, 128),
        eps_pair=(0.02, 0.01),
        k=1,
        radius=0.1,
        sigma=0.03 + 0.02j,
    )
    return {(r["identity"], r["axis"]): r for r in rows}


# -- 1: defining identity across levels and parameters ----------------------


def test_01_defining_identity_full_sweep(torus_sweep):
    rows, elapsed = torus_sweep
    r = rows["defining_equation"]
    ok = r["residual"] <= 1e-8 and elapsed <= 60.0
    _line(
        "defining identity, every basis element, k=1..5 x 4 parameters",
        ok,
        _row_detail(r) + f", sweep {elapsed:.1f}s (cap 60s)",
    )
    assert r["cases"] == 120  # 4 params x 2 directions x (1+2+3+4+5) elements
    assert r["residual"] <= 1e-8
    assert elapsed <= 60.0


# -- 2: projection residual --------------------------------------------------


def test_02_projection_residual_sweep(torus_sweep):
    rows, _ = torus_sweep
    r = rows["projection_defect"]
    ok = r["residual"] <= 1e-8
    _line("connection preserves the holomorphic subspace", ok, _row_detail(r))
    assert r["cases"] == 40
    assert ok


# -- 3: transfer identity -- exact on the torus, ordered on the chart --------


def test_03_transfer_identity_torus(torus_sweep):
    rows, _ = torus_sweep
    r = rows["holomorphy_transfer"]
    ok = r["residual"] <= 1e-8
    _line("holomorphy transfer on the torus", ok, _row_detail(r))
    assert ok


@pytest.mark.parametrize("identity", ("defining_equation", "holomorphy_transfer"))
def test_03_variation_orders_chart(chart_orders, identity):
    rh = chart_orders[(identity, "h")]
    re_ = chart_orders[(identity, "eps")]
    ok = rh["order"] >= 3.5 and re_["order"] >= 1.9
    _line(
        f"{identity} convergence orders (radius 0.1, 64->128)",
        ok,
        f"h-order {rh['order']:.2f} (>=3.5), eps-order {re_['order']:.2f} (>=1.9)",
    )
    assert rh["order"] >= 3.5
    assert re_["order"] >= 1.9


# -- 4: curvature catalog at stated budgets ----------------------------------


def test_04_family_gates(full_catalog):
    gates = full_catalog[("family_gates", "torus")], full_catalog[("family_gates", "chart")]
    adversarial = (
        full_catalog[("family_holomorphy_gate_adversarial", "chart")],
        full_catalog[("family_rigidity_gate_adversarial", "chart")],
    )
    ok = all(r["verdict"] == "pass" for r in gates) and all(
        r["verdict"] == "fail" for r in adversarial
    )
    _line(
        "family gates pass and planted defects are flagged",
        ok,
        "; ".join(f"{r['identity']}[{r['backend']}]={r['verdict']}" for r in gates + adversarial),
    )
    assert ok


@pytest.mark.parametrize("identity", CURVATURE_CATALOG)
def test_04_curvature_catalog(full_catalog, identity):
    rows = [r for (name, _), r in full_catalog.items() if name == identity]
    assert rows, f"no catalog rows for {identity}"
    ok = all(r["verdict"] == "pass" for r in rows)
    _line(f"curvature catalog: {identity}", ok, "; ".join(_row_detail(r) for r in rows))
    for r in rows:
        assert r["verdict"] == "pass", (
            f"{identity}[{r['backend']}] residual {r['residual']:.3e} "
            f"exceeds budget {r['budget']:.3e}"
            + (" (known-false statement; see docs/identities.md)" if r["expected"] == "fail" else "")
        )


def test_04_repaired_variants_pass(full_catalog):
    names = ("potential_constancy_corrected", "curvature_reduction_corrected")
    rows = [r for (name, _), r in full_catalog.items() if name in names]
    ok = rows and all(r["verdict"] == "pass" for r in rows)
    _line(
        "repaired curvature rows (parameter curvature absorbed)",
        bool(ok),
        "; ".join(f"{r['identity']}[{r['backend']}] {r['residual']:.2e}" for r in rows),
    )
    assert ok


# -- 5: connection agreement chain -------------------------------------------


def test_05_connection_agreement_pinned_flat_torus(torus_sweep):
    """Full agreement with the pinned flat reduction potential: the sharp
    obstruction ``1/(4 Im tau)`` makes this fail at every tolerance; the
    repaired potential (next test) passes exactly."""
    rows, _ = torus_sweep
    r = rows["connection_agreement"]
    ok = r["residual"] <= 1e-8
    _line("connection agreement, flat potential, torus k=1..5", ok, _row_detail(r))
    assert ok, (
        f"residual {r['residual']:.3e}: the comparison one-form is non-closed "
        "(its parameter curl is the nonzero parameter-parameter curvature); "
        "known-false as pinned, see docs/identities.md"
    )


def test_05_connection_agreement_repaired_torus(torus_sweep):
    rows, _ = torus_sweep
    r = rows["connection_agreement_corrected"]
    ok = r["verdict"] == "pass"
    _line("connection agreement, repaired potential, torus", ok, _row_detail(r))
    assert ok


def test_05_connection_agreement_chart_order(full_catalog, chart_orders):
    row = full_catalog[("connection_agreement", "chart")]
    re_ = chart_orders[("connection_agreement", "eps")]
    rh = chart_orders[("connection_agreement", "h")]
    ok = row["verdict"] == "pass" and re_["order"] >= 1.9 and sweep_axis_ok(rh)
    _line(
        "connection agreement on the generated chart family",
        ok,
        f"{_row_detail(row)}; eps-order {re_['order']:.2f} (>=1.9), "
        f"h fine residual {rh['fine']:.1e}",
    )
    assert ok


def test_05_frame_comparison_sub_check(torus_sweep, full_catalog):
    """Connection-form comparison with the flat potential (the first-order
    part of the agreement chain): same obstruction, fails by design."""
    rows, _ = torus_sweep
    r = rows["frame_comparison"]
    chart = full_catalog[("frame_comparison", "chart")]
    ok = r["residual"] <= 1e-8 and chart["verdict"] == "pass"
    _line(
        "frame comparison sub-check",
        ok,
        _row_detail(r) + "; " + _row_detail(chart),
    )
    assert chart["verdict"] == "pass"
    assert r["residual"] <= 1e-8, (
        f"residual {r['residual']:.3e} equals the closed form 1/(4 Im tau); "
        "known-false as pinned, see docs/identities.md"
    )


def test_05_operator_pullback_sub_check(torus_sweep, full_catalog, chart_orders):
    rows, _ = torus_sweep
    r = rows["operator_pullback"]
    chart = full_catalog[("operator_pullback", "chart")]
    rh = chart_orders[("operator_pullback", "h")]
    ok = r["verdict"] == "pass" and chart["verdict"] == "pass" and sweep_axis_ok(rh)
    _line(
        "second-order pullback sub-check (independent of the obstruction)",
        ok,
        _row_detail(r) + "; " + _row_detail(chart) + f"; h-order {rh['order']:.2f}",
    )
    assert ok


def test_05_frame_comparison_repaired_torus(torus_sweep):
    rows, _ = torus_sweep
    r = rows["frame_comparison_corrected"]
    ok = r["verdict"] == "pass"
    _line("frame comparison, repaired potential, torus", ok, _row_detail(r))
    assert ok


# -- 6: heat oracle, transport, holonomy -------------------------------------


def test_06_heat_identity_per_mode(torus_sweep):
    rows, _ = torus_sweep
    r = rows["heat_mode"]
    ok = r["residual"] <= 1e-12
    _line("parameter heat identity, per mode and on the grid", ok, _row_detail(r))
    assert ok


def test_06_transport_against_oracle(torus64):
    res = transport(torus64, 2, (1j, 1 + 1j), np.eye(2, dtype=complex), steps=1000)
    dev = float(np.max(np.abs(res.end - np.eye(2))))
    ok = dev <= 1e-6 and res.norm_drift <= 1e-6
    _line(
        "transport i -> 1+i (1000 steps, level 2) vs self-transport oracle",
        ok,
        f"endpoint dev {dev:.3e}, defect {res.max_defect:.3e}, drift {res.norm_drift:.3e}",
    )
    assert ok


def test_06_loop_holonomy_scalar_and_scaling(torus64):
    off200, _ = loop_offscalar(torus64, 2, 1j, 0.01, steps=200)
    off100, _ = loop_offscalar(torus64, 2, 1j, 0.01, steps=100)
    # 4th-order integrator: halving the step shrinks a genuine defect 8x;
    # the floor keeps the check meaningful when both values sit at rounding
    ok = off200 <= 1e-6 and off200 <= max(off100 / 8, 1e-12)
    _line(
        "loop holonomy off-scalar part at r=0.01",
        ok,
        f"steps=200: {off200:.3e} (<=1e-6), steps=100: {off100:.3e}",
    )
    assert ok


# -- 7: quantum-space dimension ----------------------------------------------


def test_07_dimension_equals_level(torus_sweep):
    rows, _ = torus_sweep
    r = rows["gram_rank"]
    ok = r["verdict"] == "pass"
    _line("Gram rank k and golden normalization, k=1..5 x 4 parameters", ok, _row_detail(r))
    assert r["cases"] == 40  # (rank + normalization) x 4 params x 5 levels
    assert ok


# -- 8: mutation self-test ----------------------------------------------------


@pytest.mark.parametrize(
    "mutation,identity",
    (
        ("defining-vj", "defining_equation"),
        ("transfer-rho", "holomorphy_transfer"),
        ("oneform-div", "potential_oneform"),
        ("pullback-gradient", "operator_pullback"),
    ),
)
def test_08_mutation_selftest(mutation, identity):
    cfg = RunConfig(backend="chart", identities=(identity,), levels=(1,), mutate=mutation)
    rows = run_catalog(cfg)
    hit = [r for r in rows if r["verdict"] == "fail" and r["status"] == "unexpected"]
    ok = bool(hit)
    _line(
        f"planted sign flip {mutation} is detected",
        ok,
        "; ".join(f"{r['identity']} ratio {r['ratio']:.1f}" for r in rows),
    )
    assert ok
