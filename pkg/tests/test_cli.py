from __future__ import annotations

import json

import pytest

from hitchinlab.catalog import IDENTITY_NAMES, MUTATIONS, RunConfig, select_entries
from hitchinlab.cli import main
from hitchinlab.config import load_config

FAST_TORUS = "basis_multiplier,gram_rank,heat_mode,basis_holomorphy"


def _read(path):
    return path.read_bytes()


def test_default_config_roundtrip(tmp_path):
    assert load_config(None) == RunConfig()
    ini = tmp_path / "run.ini"
    ini.write_text(
        "[run]\n"
        "backend = torus\n"
        "grid = 32\n"
        "levels = 1,2\n"
        "taus = 1j, 1+1j\n"
        "eps = 2e-4\n"
        "seed = 7\n"
    )
    cfg = load_config(str(ini))
    assert cfg.backend == "torus"
    assert cfg.grid == 32
    assert cfg.levels == (1, 2)
    assert cfg.taus == (1j, 1 + 1j)
    assert cfg.eps == 2e-4
    assert cfg.seed == 7


def test_config_rejects_unknown_key(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[run]\nnot_a_key = 1\n")
    with pytest.raises(ValueError):
        load_config(str(ini))


def test_config_rejects_missing_file_and_section(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(str(tmp_path / "absent.ini"))
    ini = tmp_path / "nosec.ini"
    ini.write_text("[other]\ngrid = 8\n")
    with pytest.raises(ValueError):
        load_config(str(ini))


def test_select_entries_rejects_unknown_identity():
    with pytest.raises(ValueError):
        select_entries(RunConfig(identities=("no_such_identity",)))
    # every advertised name selects at least one entry
    for name in IDENTITY_NAMES:
        assert select_entries(RunConfig(identities=(name,)))


def test_verify_reports_are_deterministic(tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        code = main(
            [
                "verify",
                "--backend",
                "torus",
                "--identities",
                FAST_TORUS,
                "--out",
                str(out),
            ]
        )
        assert code == 0
    for name in ("report.jsonl", "report.csv"):
        assert _read(out1 / name) == _read(out2 / name)
    rows = [json.loads(line) for line in (out1 / "report.jsonl").read_text().splitlines()]
    assert all(r["status"] == "ok" for r in rows)
    assert {r["identity"] for r in rows} == set(FAST_TORUS.split(","))
    text = capsys.readouterr().out
    assert "[PASS]" in text


def test_verify_config_file_applies(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text(f"[run]\nbackend = torus\nidentities = {FAST_TORUS}\nlevels = 1,2\n")
    assert main(["verify", "--config", str(ini)]) == 0


def test_verify_mutation_flips_verdict(tmp_path):
    assert "transfer-rho" in MUTATIONS
    code = main(
        [
            "verify",
            "--backend",
            "chart",
            "--identities",
            "holomorphy_transfer",
            "--mutate",
            "transfer-rho",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 1
    rows = [json.loads(line) for line in (tmp_path / "report.jsonl").read_text().splitlines()]
    assert any(r["status"] == "unexpected" and r["verdict"] == "fail" for r in rows)


def test_sweep_subcommand(tmp_path):
    code = main(
        [
            "sweep",
            "--identities",
            "defining_equation",
            "--grids",
            "64,96",
            "--eps-pair",
            "0.1,0.05",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    rows = [json.loads(line) for line in (tmp_path / "sweep.jsonl").read_text().splitlines()]
    axes = {r["axis"] for r in rows}
    assert axes == {"h", "eps"}
    assert (tmp_path / "sweep.csv").exists()


def test_transport_subcommand(capsys):
    code = main(
        [
            "transport",
            "--grid",
            "32",
            "--k",
            "1",
            "--steps",
            "80",
            "--loop-radius",
            "0.05",
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "endpoint deviation" in out
    assert "loop off-scalar" in out


def test_basis_subcommand_torus(capsys):
    code = main(["basis", "--backend", "torus", "--k", "2", "--tau", "1j", "--grid", "64"])
    assert code == 0
    out = capsys.readouterr().out
    assert "rank 2/2" in out
    assert "golden" in out


def test_basis_subcommand_chart(capsys):
    code = main(["basis", "--backend", "chart", "--k", "1", "--grid", "48"])
    assert code == 0
    assert "section defects" in capsys.readouterr().out
