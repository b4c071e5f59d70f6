"""Deterministic JSON documents with embedded manifests and content hashes.

Every artifact is a document {"manifest": {...}, "payload": {...}} where the
manifest records the producing command, its full parameter set, and the
sha256 of the canonically serialized payload. Identical parameters always
reproduce byte-identical files; rationals travel as exact "p/q" strings.
"""

from __future__ import annotations

import hashlib
import json
import re
from fractions import Fraction
from pathlib import Path
from typing import Any

from .basis import LeveledBasis
from .covering import CoverEngine, CoverParams
from .geometry import Box
from .schedule import Schedule

__all__ = [
    "frac_str",
    "parse_frac",
    "box_to_json",
    "box_from_json",
    "canonical_dumps",
    "content_sha256",
    "wrap_document",
    "write_document",
    "read_document",
    "plan_payload",
    "basis_payload",
    "schedule_payload",
]

_FRAC_RE = re.compile(r"^-?[0-9]+/[1-9][0-9]*$")


def frac_str(x: Fraction) -> str:
    """Exact "p/q" encoding (denominator always present, e.g. "3/1")."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_frac(s: str) -> Fraction:
    if not isinstance(s, str) or not _FRAC_RE.match(s):
        raise ValueError(f"not a p/q rational string: {s!r}")
    p, q = s.split("/")
    return Fraction(int(p), int(q))


def box_to_json(box: Box) -> dict:
    return {
        "coords": [
            {"i": i, "a": frac_str(a), "b": frac_str(b)} for i, a, b in box.coords
        ]
    }


def box_from_json(doc: dict) -> Box:
    return Box.make(
        (entry["i"], parse_frac(entry["a"]), parse_frac(entry["b"]))
        for entry in doc["coords"]
    )


def canonical_dumps(doc: Any) -> str:
    """The on-disk form: sorted keys, single-space indent, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def content_sha256(payload: Any) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def wrap_document(command: str, parameters: dict, payload: Any) -> dict:
    return {
        "manifest": {
            "command": command,
            "parameters": parameters,
            "content_sha256": content_sha256(payload),
        },
        "payload": payload,
    }


def write_document(path: str | Path, doc: dict) -> None:
    Path(path).write_text(canonical_dumps(doc), encoding="utf-8")


def read_document(path: str | Path, expect_kind: str | None = None) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if set(doc) != {"manifest", "payload"}:
        raise ValueError("document must carry exactly manifest and payload")
    recorded = doc["manifest"].get("content_sha256")
    actual = content_sha256(doc["payload"])
    if recorded != actual:
        raise ValueError(
            f"payload hash mismatch: manifest says {recorded}, content is {actual}"
        )
    if expect_kind is not None and doc["payload"].get("kind") != expect_kind:
        raise ValueError(
            f"expected a {expect_kind!r} document, found {doc['payload'].get('kind')!r}"
        )
    return doc


# ----------------------------------------------------------------------
# Covering plan documents
# ----------------------------------------------------------------------


def _template_configurations(
    engine: CoverEngine, k: int, config_cap: int
) -> dict:
    """The subcube-corner grid of one template, capped for deep levels.

    Corners are relative to the covered cube; an instance adds its absolute
    cube corner (a multiple of every grid step here), so the relative table
    is exact for all instances at once.
    """
    from .covering import _iter_subcube_corners

    p = engine.params
    g = engine.geometry(k)
    exponents = [k + 2] * p.d + [k + 1] * (k + 2 - p.d)
    rows = []
    for sib_index, corner in enumerate(_iter_subcube_corners(k)):
        if sib_index >= config_cap:
            break
        rows.append(
            {
                "corner": [frac_str(c) for c in corner],
                "side_exponents": exponents,
                "eps": frac_str(p.eps),
                "d": p.d,
                "group": sib_index >> p.m,
                "selected": (sib_index & ((1 << p.m) - 1)) == (1 << p.m) - 1,
            }
        )
    return {
        "cube_level": k,
        "sibling_count": g.sibling_count,
        "listed": len(rows),
        "configurations": rows,
        "residual_boxes": [box_to_json(b) for b in g.residual_boxes],
        "residual_level_counts": {
            str(level): count
            for level, count in sorted(g.residual_level_counts.items())
        },
    }


def plan_payload(
    params: CoverParams,
    cube_level: int,
    rounds: int,
    *,
    config_cap: int = 4096,
) -> dict:
    """One cube's covering plan: exact per-round ledgers plus the template."""
    engine = CoverEngine(params)
    cube_measure = Fraction(1, 2 ** (cube_level * (cube_level + 1)))
    per_round = [engine.covered(cube_level, t) for t in range(rounds + 1)]
    payload = {
        "kind": "covering-plan",
        "eps": frac_str(params.eps),
        "d": params.d,
        "m": params.m,
        "weight": frac_str(params.weight),
        "per_round_fraction": frac_str(params.c),
        "cube_level": cube_level,
        "cube_measure": frac_str(cube_measure),
        "rounds": rounds,
        "covered_by_round": [frac_str(x) for x in per_round],
        "covered_measure": frac_str(per_round[-1]),
        "template": _template_configurations(engine, cube_level, config_cap),
    }
    return payload


# ----------------------------------------------------------------------
# Basis documents
# ----------------------------------------------------------------------


def schedule_payload(schedule: Schedule) -> dict:
    return {
        "variant": schedule.variant,
        "p0": frac_str(schedule.p0),
        "depth": schedule.depth,
        "granularity": schedule.granularity,
        "levels": [
            {
                "level": spec.level,
                "eps": frac_str(spec.eps),
                "d": spec.d,
                "m": spec.m,
                "weight": frac_str(spec.weight),
            }
            for spec in schedule.levels
        ],
    }


def _flags_json(flags: tuple) -> list:
    return [list(entry) for entry in flags]


def _shape_id_json(shape_id: tuple) -> list:
    return list(shape_id)


def basis_payload(
    basis: LeveledBasis,
    *,
    config_cap: int = 256,
    sample_limit: int = 8,
) -> dict:
    """Class records, level ledgers, capped templates, and sample instances.

    Explicit per-instance enumeration is astronomically large beyond toy
    depths, so the document keeps the exact class/ledger view (counts are
    arbitrary-precision integers) and materializes only a handful of
    absolute member boxes per level as samples.
    """
    from .basis import sample_instances

    class_index: list[dict[tuple, int]] = []
    classes_json = []
    for depth, layer in enumerate(basis.atoms):
        index: dict[tuple, int] = {}
        rows = []
        for position, key in enumerate(sorted(layer)):
            cls = layer[key]
            index[key] = position
            rows.append(
                {
                    "flags": _flags_json(cls.flags),
                    "shape_id": _shape_id_json(cls.shape_id),
                    "count": cls.count,
                    "measure": frac_str(cls.shape.measure()),
                    "anchor": [frac_str(a) for a in cls.anchor],
                    "shape": box_to_json(cls.shape),
                }
            )
        class_index.append(index)
        classes_json.append(rows)

    edges_json = []
    for depth, level_edges in enumerate(basis.edges, start=1):
        parent_index = class_index[depth - 1]
        child_index = class_index[depth]
        rows = sorted(
            [parent_index[pkey], child_index[ckey], count]
            for (pkey, ckey), count in level_edges.items()
        )
        edges_json.append(rows)

    levels_json = []
    for rec in basis.levels:
        engine = rec.engine
        templates = [
            _template_configurations(engine, k, config_cap)
            for k in rec.piece_levels
        ]
        samples = []
        for placed in sample_instances(basis, rec.spec.level, limit=sample_limit):
            samples.append(
                {
                    "members": [box_to_json(b) for b in placed.config.members],
                    "selected": placed.selected,
                    "group": placed.block_index,
                }
            )
        levels_json.append(
            {
                "level": rec.spec.level,
                "eps": frac_str(rec.spec.eps),
                "d": rec.spec.d,
                "m": rec.spec.m,
                "weight": frac_str(rec.spec.weight),
                "gamma": frac_str(rec.gamma),
                "covered_measure": frac_str(rec.covered_measure),
                "selected_union_measure": frac_str(rec.selected_union_measure),
                "selected_central_measure": frac_str(rec.selected_central_measure),
                "config_count": rec.config_count,
                "selected_config_count": rec.selected_config_count,
                "piece_levels": list(rec.piece_levels),
                "deferred_count": rec.deferred_count,
                "deferred_measure": frac_str(rec.deferred_measure),
                "templates": templates,
                "sample_configurations": samples,
            }
        )

    return {
        "kind": "leveled-basis",
        "space": box_to_json(basis.space),
        "schedule": schedule_payload(basis.schedule),
        "rounds": basis.rounds,
        "levels": levels_json,
        "classes": classes_json,
        "edges": edges_json,
        "ledger": {
            "core_measure": frac_str(basis.core_measure),
            "union_of_selected_measure": frac_str(basis.union_of_selected_measure()),
            "exceptional_lower_bound": frac_str(basis.exceptional_lower_bound()),
        },
    }