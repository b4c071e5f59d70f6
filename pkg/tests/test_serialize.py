import json
from fractions import Fraction
from pathlib import Path

import jsonschema
import pytest
from hypothesis import given
from hypothesis import strategies as st

import torusdiff
from torusdiff import serialize as ser
from torusdiff.basis import build_basis
from torusdiff.covering import CoverParams
from torusdiff.geometry import FULL, Box
from torusdiff.lattice import q_cube
from torusdiff.schedule import make_schedule

F = Fraction

SCHEMA_DIR = Path(torusdiff.__file__).parent / "schemas"


def _schema(name: str) -> dict:
    return json.loads((SCHEMA_DIR / name).read_text())


def _validate(payload_doc: dict, schema_name: str) -> None:
    jsonschema.Draft7Validator(_schema(schema_name)).validate(payload_doc)


# -- rational strings ---------------------------------------------------------


@given(st.fractions())
def test_frac_roundtrip(x):
    assert ser.parse_frac(ser.frac_str(x)) == x


def test_frac_str_always_carries_denominator():
    assert ser.frac_str(F(3)) == "3/1"
    assert ser.frac_str(F(-1, 2)) == "-1/2"


@pytest.mark.parametrize("bad", ["3", "1/0", "a/b", "1/-2", "", "1/2/3", 7])
def test_parse_frac_rejects(bad):
    with pytest.raises(ValueError):
        ser.parse_frac(bad)


# -- boxes ---------------------------------------------------------------------


@given(
    st.lists(
        st.tuples(
            st.integers(1, 6),
            st.integers(0, 15),
            st.integers(1, 16),
        ),
        max_size=3,
    )
)
def test_box_json_roundtrip(raw):
    items = []
    seen = set()
    for i, a, width in raw:
        if i in seen:
            continue
        seen.add(i)
        lo = F(a, 16)
        hi = min(lo + F(width, 16), F(1))
        items.append((i, lo, hi))
    box = Box.make(items)
    doc = ser.box_to_json(box)
    assert ser.box_from_json(doc) == box
    _validate(doc, "box.schema.json")
    assert ser.canonical_dumps(doc) == ser.canonical_dumps(ser.box_to_json(box))


# -- documents -------------------------------------------------------------------


def test_canonical_dumps_is_stable():
    a = ser.canonical_dumps({"b": 1, "a": [1, 2]})
    b = ser.canonical_dumps({"a": [1, 2], "b": 1})
    assert a == b
    assert a.endswith("\n")
    assert a.index('"a"') < a.index('"b"')


def test_document_roundtrip(tmp_path):
    payload = {"kind": "covering-plan", "value": ser.frac_str(F(5, 8))}
    doc = ser.wrap_document("cover", {"rounds": 2}, payload)
    path = tmp_path / "doc.json"
    ser.write_document(path, doc)
    back = ser.read_document(path, expect_kind="covering-plan")
    assert back == doc
    assert back["manifest"]["command"] == "cover"


def test_tampered_payload_detected(tmp_path):
    doc = ser.wrap_document("cover", {}, {"kind": "covering-plan", "x": "1/2"})
    path = tmp_path / "doc.json"
    text = ser.canonical_dumps(doc).replace('"1/2"', '"1/3"')
    path.write_text(text)
    with pytest.raises(ValueError, match="hash mismatch"):
        ser.read_document(path)


def test_wrong_kind_rejected(tmp_path):
    doc = ser.wrap_document("cover", {}, {"kind": "covering-plan"})
    path = tmp_path / "doc.json"
    ser.write_document(path, doc)
    with pytest.raises(ValueError, match="expected"):
        ser.read_document(path, expect_kind="leveled-basis")


def test_extra_top_level_keys_rejected(tmp_path):
    path = tmp_path / "doc.json"
    path.write_text(json.dumps({"manifest": {}, "payload": {}, "extra": 1}))
    with pytest.raises(ValueError, match="manifest and payload"):
        ser.read_document(path)


# -- payload builders ---------------------------------------------------------


def test_plan_payload_contents():
    params = CoverParams(F(1, 4), 2, 1)
    payload = ser.plan_payload(params, params.min_level, 2)
    assert payload["kind"] == "covering-plan"
    assert len(payload["covered_by_round"]) == 3
    assert payload["covered_by_round"][0] == "0/1"
    c = params.c
    expected = (1 - (1 - c) ** 2) * q_cube(params.min_level).measure()
    assert ser.parse_frac(payload["covered_measure"]) == expected
    template = payload["template"]
    mask = (1 << params.m) - 1
    for sib, row in enumerate(template["configurations"]):
        assert row["selected"] == ((sib & mask) == mask)
        assert row["group"] == sib >> params.m
    doc = ser.wrap_document("cover", {"eps": "1/4"}, payload)
    _validate(doc, "covering-plan.schema.json")


def test_plan_payload_deterministic():
    params = CoverParams(F(1, 2), 1, 1)
    one = ser.canonical_dumps(ser.plan_payload(params, 2, 1))
    two = ser.canonical_dumps(ser.plan_payload(params, 2, 1))
    assert one == two


def test_schedule_payload_fields():
    sched = make_schedule("geq", F(2), 3)
    payload = ser.schedule_payload(sched)
    assert payload["variant"] == "geq"
    assert payload["p0"] == "2/1"
    assert [row["m"] for row in payload["levels"]] == [1, 2, 3]
    assert all(
        ser.parse_frac(row["weight"]) == 1 + row["d"] * (1 - ser.parse_frac(row["eps"]))
        for row in payload["levels"]
    )


def test_basis_payload_roundtrips_ledger(depth2_basis):
    payload = ser.basis_payload(depth2_basis, config_cap=16, sample_limit=2)
    assert payload["kind"] == "leveled-basis"
    assert [len(layer) for layer in payload["classes"]] == [1, 13, 1261]
    assert [len(layer) for layer in payload["edges"]] == [13, 2873]
    ledger = payload["ledger"]
    assert ser.parse_frac(ledger["core_measure"]) == depth2_basis.core_measure
    assert (
        ser.parse_frac(ledger["exceptional_lower_bound"])
        == depth2_basis.exceptional_lower_bound()
    )
    # edge rows reference valid class positions and conserve atom counts
    for depth, rows in enumerate(payload["edges"], start=1):
        parents = payload["classes"][depth - 1]
        children = payload["classes"][depth]
        child_total = {i: 0 for i in range(len(children))}
        for p_idx, c_idx, count in rows:
            assert 0 <= p_idx < len(parents)
            assert 0 <= c_idx < len(children)
            child_total[c_idx] += count
        for c_idx, row in enumerate(children):
            assert child_total[c_idx] == row["count"]


def test_basis_document_validates_against_schema():
    basis = build_basis(FULL, make_schedule("geq", F(2), 1), rounds=2)
    payload = ser.basis_payload(basis, config_cap=8, sample_limit=2)
    doc = ser.wrap_document("build", {"depth": 1}, payload)
    _validate(doc, "basis.schema.json")
