import csv
import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from torusdiff import serialize as ser
from torusdiff.cli import main

F = Fraction


def run(argv) -> int:
    try:
        return main(argv)
    except SystemExit as stop:  # argparse-level rejections
        return int(stop.code or 0)


@pytest.fixture()
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("TORUSDIFF_OUT", str(tmp_path))
    return tmp_path


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    """One shared depth-2 build artifact for the read-only subcommands."""
    out = tmp_path_factory.mktemp("artifacts") / "basis.json"
    code = main(
        ["build", "--p0", "2", "--variant", "geq", "--depth", "2", "--out", str(out)]
    )
    assert code == 0
    return out


# -- exit statuses ---------------------------------------------------------


def test_unknown_subcommand_exits_2(outdir):
    assert run(["frobnicate"]) == 2


def test_build_depth_zero_exits_2(outdir, capsys):
    assert run(["build", "--p0", "2", "--depth", "0"]) == 2
    assert "depth" in capsys.readouterr().err


def test_cover_invalid_eps_exits_2(outdir, capsys):
    assert run(["cover", "--eps", "3/5"]) == 2
    assert "invalid parameters" in capsys.readouterr().err


def test_cover_negative_rounds_exits_2(outdir):
    assert run(["cover", "--rounds", "-1"]) == 2


def test_cover_zero_rounds_reports_empty_cover(outdir, capsys):
    assert run(["cover", "--rounds", "0"]) == 0
    text = capsys.readouterr().out
    assert "covered measure 0/1" in text
    doc = ser.read_document(outdir / "plan.json", expect_kind="covering-plan")
    assert doc["payload"]["covered_by_round"] == ["0/1"]


def test_verify_fresh_build_passes(built, outdir, capsys):
    assert run(["verify", str(built)]) == 0
    text = capsys.readouterr().out
    assert "manifest reproduces the document" in text
    assert "axiom checks passed" in text


def test_verify_tampered_document_fails(built, tmp_path, outdir):
    doc = json.loads(built.read_text())
    target = doc["payload"]["ledger"]["core_measure"]
    mangled = built.read_text().replace(target, "1/2")
    bad = tmp_path / "tampered.json"
    bad.write_text(mangled)
    assert run(["verify", str(bad)]) == 1


def test_verify_missing_file_exits_2(outdir):
    assert run(["verify", str(outdir / "nope.json")]) == 2


# -- determinism -------------------------------------------------------------


def test_cover_rerun_is_byte_identical(outdir):
    a = outdir / "one.json"
    b = outdir / "two.json"
    argv = ["cover", "--eps", "1/4", "--d", "2", "--m", "1", "--rounds", "2"]
    assert run(argv + ["--out", str(a)]) == 0
    assert run(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


# -- experiment subcommands ----------------------------------------------------


def test_counterexample_ledger(built, outdir, capsys):
    assert run(["counterexample", str(built), "--p", "2", "--levels", "8"]) == 0
    out = capsys.readouterr().out
    assert "exceptional lower bound" in out
    rows = list(csv.DictReader((outdir / "counterexample.csv").open()))
    assert len(rows) == 8
    assert rows[0]["norm_term"] == "4/3"
    assert ser.parse_frac(rows[0]["selected_family_measure"]) == F(1, 2)
    doc = ser.read_document(
        outdir / "counterexample.json", expect_kind="counterexample-ledger"
    )
    bound = ser.parse_frac(doc["payload"]["exceptional_lower_bound"])
    assert float(bound) == pytest.approx(0.2202177729448821, rel=1e-12)


def test_probe_range_grid(outdir, capsys):
    code = run(
        ["probe-range", "--variant", "geq", "--p0", "2", "--grid", "1,3/2,2,3,inf"]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "p=1/1: out" in out
    assert "p=2/1: in" in out
    assert "p=inf: in" in out
    doc = ser.read_document(outdir / "probe.json", expect_kind="range-probe")
    verdicts = {row["p"]: row["inside"] for row in doc["payload"]["grid"]}
    assert verdicts == {"1/1": False, "3/2": False, "2/1": True, "3/1": True, "inf": True}


def test_norm_table_with_search(outdir):
    code = run(
        [
            "norm",
            "--eps", "1/4",
            "--d", "2",
            "--p", "2",
            "--search",
            "--budget", "8",
        ]
    )
    assert code == 0
    rows = list(csv.DictReader((outdir / "norm.csv").open()))
    assert len(rows) == 1
    assert float(rows[0]["search_value_dec"]) >= 1.0 - 1e-12
    doc = ser.read_document(outdir / "norm.json", expect_kind="norm-table")
    assert doc["payload"]["grid"][0]["d"] == 2


def test_fixture_e4(outdir, capsys):
    assert run(["fixture", "e4", "--rows", "8", "--threshold", "1"]) == 0
    out = capsys.readouterr().out
    assert "23/36" in out
    doc = ser.read_document(outdir / "fixture-e4.json", expect_kind="fixture-e4")
    assert doc["payload"]["deviations_bounded"] is True
    assert ser.parse_frac(doc["payload"]["truncated_limit"]) == F(23, 36)
    fitted = ser.parse_frac(doc["payload"]["fitted_deviation_constant"])
    assert 0 < fitted <= 4


def test_fixture_e1(outdir, capsys):
    assert run(["fixture", "e1", "--rows", "6"]) == 0
    assert "pair averages all equal 1" in capsys.readouterr().out
    doc = ser.read_document(outdir / "fixture-e1.json", expect_kind="fixture-e1")
    assert all(row["inside"] in (True, False) for row in doc["payload"]["probes"])


def test_glue_componentwise(outdir, capsys):
    code = run(["glue", "geq:2", "e1", "--grid", "1,3/2,2,3"])
    assert code == 0
    doc = ser.read_document(outdir / "glue.json", expect_kind="glued-range")
    for row in doc["payload"]["grid"]:
        assert row["componentwise_and"] is True
        assert row["inside"] == (row["first_inside"] and row["second_inside"])


def test_transfer(built, outdir, capsys):
    assert run(["transfer", str(built)]) == 0
    out = capsys.readouterr().out
    assert "lattices" in out
    doc = ser.read_document(outdir / "transfer.json", expect_kind="interval-union-basis")
    payload = doc["payload"]
    lattice_count = sum(
        len(cls["lattices"]) for depth in payload["depths"] for cls in depth["classes"]
    )
    assert lattice_count == 2887
    total = sum(
        (
            ser.parse_frac(cls["total_length"])
            for cls in payload["depths"][-1]["classes"]
        ),
        F(0),
    )
    assert total == 1


# -- installed entry point -----------------------------------------------------


def test_console_script_end_to_end(tmp_path):
    env_out = tmp_path / "artifacts"
    env_out.mkdir()
    proc = subprocess.run(
        [sys.executable, "-m", "torusdiff.cli", "probe-range", "--variant", "gt",
         "--p0", "2", "--grid", "2,201/100,3"],
        capture_output=True,
        text=True,
        env={"PATH": "/usr/bin:/bin", "TORUSDIFF_OUT": str(env_out)},
    )
    assert proc.returncode == 0, proc.stderr
    assert "p=2/1: out" in proc.stdout
    assert "p=201/100: in" in proc.stdout
