from __future__ import annotations

import dataclasses

import pytest

from hitchinlab.catalog import (
    BUDGETS,
    EXPECTED_FAIL,
    IDENTITY_NAMES,
    K_CUBIC,
    MUTATIONS,
    NOTES,
    REGISTRY,
    RunConfig,
    SWEEPABLE,
    Env,
    budget_for,
    run_catalog,
    select_entries,
    sweep_axis_ok,
)
from hitchinlab.reports import (
    CATALOG_COLUMNS,
    format_catalog,
    format_sweep,
    write_csv,
    write_jsonl,
)


def test_registry_is_consistent():
    pairs = {(e.identity, e.backend) for e in REGISTRY}
    assert len(pairs) == len(REGISTRY)  # no duplicate rows
    assert EXPECTED_FAIL <= pairs
    assert set(NOTES) <= set(IDENTITY_NAMES)
    assert set(SWEEPABLE) <= set(IDENTITY_NAMES)
    assert K_CUBIC <= set(IDENTITY_NAMES)
    for identity, backend in pairs:
        assert backend in BUDGETS[identity]
    for target, flip in MUTATIONS.values():
        assert target in set(IDENTITY_NAMES)
        assert isinstance(flip, str) and flip


def test_runconfig_is_frozen():
    cfg = RunConfig()
    with pytest.raises(dataclasses.FrozenInstanceError):
        cfg.grid = 128


def test_budget_model():
    env = Env(RunConfig(grid=48))
    # torus budgets are absolute
    assert budget_for("defining_equation", "torus", env) == 1e-8
    # chart budgets scale with the resolution model
    b1 = budget_for("defining_equation", "chart", env, k=1)
    b2 = budget_for("defining_equation", "chart", env, k=2)
    assert b2 == pytest.approx(8.0 * b1)  # k-cubed class
    f1 = budget_for("potential_oneform", "chart", env, k=1)
    f2 = budget_for("potential_oneform", "chart", env, k=2)
    assert f1 == pytest.approx(f2)  # flat in the level
    env_fine = Env(RunConfig(grid=96))
    assert budget_for("potential_oneform", "chart", env_fine) < f1


def test_sweep_axis_floor_waiver():
    assert sweep_axis_ok({"axis": "h", "fine": 1e-10, "order": 0.0})
    assert sweep_axis_ok({"axis": "h", "fine": 1e-6, "order": 3.7})
    assert not sweep_axis_ok({"axis": "h", "fine": 1e-6, "order": 3.2})
    assert sweep_axis_ok({"axis": "eps", "fine": 1e-6, "order": 1.95})
    assert not sweep_axis_ok({"axis": "eps", "fine": 1e-6, "order": 1.5})


def test_select_entries_filters():
    both = select_entries(RunConfig())
    assert len(both) == len(REGISTRY)
    torus_only = select_entries(RunConfig(backend="torus"))
    assert all(e.backend == "torus" for e in torus_only)
    subset = select_entries(RunConfig(identities=("gram_rank", "heat_mode")))
    assert {e.identity for e in subset} == {"gram_rank", "heat_mode"}


def test_catalog_rows_and_reports(tmp_path):
    cfg = RunConfig(
        backend="torus",
        identities=("gram_rank", "heat_mode", "basis_multiplier", "curvature_param_vanishing"),
    )
    rows = run_catalog(cfg)
    assert [r["identity"] for r in rows] == sorted(r["identity"] for r in rows)
    by_id = {r["identity"]: r for r in rows}
    # green rows
    for name in ("gram_rank", "heat_mode", "basis_multiplier"):
        assert by_id[name]["verdict"] == "pass"
        assert by_id[name]["status"] == "ok"
    # the claimed-zero parameter curvature fails, and is expected to fail
    red = by_id["curvature_param_vanishing"]
    assert red["verdict"] == "fail"
    assert red["expected"] == "fail"
    assert red["status"] == "ok"
    assert red["ratio"] > 1.0

    text = format_catalog(rows)
    assert "[PASS]" in text and "[FAIL]" in text
    assert "0 unexpected" in text

    jp, cp = tmp_path / "r.jsonl", tmp_path / "r.csv"
    write_jsonl(str(jp), rows)
    write_csv(str(cp), rows, CATALOG_COLUMNS)
    assert len(jp.read_text().splitlines()) == len(rows)
    header = cp.read_text().splitlines()[0]
    assert header.split(",") == list(CATALOG_COLUMNS)


def test_format_sweep_lists_orders():
    rows = [
        {
            "identity": "defining_equation",
            "axis": "h",
            "pair": "64->128",
            "coarse": 1e-6,
            "fine": 6.4e-8,
            "order": 3.97,
        }
    ]
    text = format_sweep(rows)
    assert "defining_equation" in text
    assert "3.97" in text
