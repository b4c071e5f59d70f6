"""Batch command-line front end with reproducible file outputs.

Subcommands: build, cover, verify, counterexample, probe-range, norm,
fixture, glue, transfer. Outputs are JSON documents (manifest + payload)
and CSV tables; stdout carries a short summary. Exit status: 0 when all
requested verifications pass, 1 on a verification failure (first failure
printed), 2 on invalid parameters.

The default output directory is the environment variable TORUSDIFF_OUT
(falling back to the current directory); --out overrides per run.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import serialize as ser
from .basis import build_basis, verify_axioms
from .configurations import (
    corner_configuration,
    norm_asymptotics_oracle,
    weak_type_lower_search,
)
from .covering import CoverParams
from .geometry import FULL
from .maximal import (
    comparison_bound_enclosure,
    exceptional_lower_bound,
    lp_ledger,
    norm_term_enclosure,
)
from .schedule import DEFAULT_GRANULARITY, make_schedule
from .spaces import (
    GluedSpace,
    RangeSource,
    e1_pair_average,
    e1_range_source,
    example_e1,
    example_e4,
    glue,
    schedule_range_source,
    transfer_to_interval,
    SpaceFunction,
)

OUTPUT_DIR_ENV = "TORUSDIFF_OUT"

__all__ = ["main"]


class ParamError(Exception):
    """Invalid run parameters (exit status 2)."""


class VerificationFailure(Exception):
    """A requested verification did not pass (exit status 1)."""


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as err:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from err


def _probe_grid(text: str) -> list[Fraction | None]:
    grid: list[Fraction | None] = []
    for part in text.split(","):
        part = part.strip()
        if part in ("inf", "infinity", "oo"):
            grid.append(None)
        else:
            try:
                grid.append(Fraction(part))
            except (ValueError, ZeroDivisionError) as err:
                raise argparse.ArgumentTypeError(
                    f"not a rational or inf: {part!r}"
                ) from err
    if not grid:
        raise argparse.ArgumentTypeError("empty probe grid")
    return grid


def _fraction_list(text: str) -> list[Fraction]:
    return [_fraction(part.strip()) for part in text.split(",")]


def _int_list(text: str) -> list[int]:
    try:
        return [int(part.strip()) for part in text.split(",")]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"not integers: {text!r}") from err


def _out_path(explicit: str | None, default_name: str) -> Path:
    if explicit:
        return Path(explicit)
    base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    return base / default_name


def _dec(x) -> str:
    return "%.12g" % float(x)


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _p_label(p: Fraction | None) -> str:
    return "inf" if p is None else ser.frac_str(p)


# ----------------------------------------------------------------------
# build / verify
# ----------------------------------------------------------------------


def _build_params(args) -> dict:
    return {
        "p0": ser.frac_str(args.p0),
        "variant": args.variant,
        "depth": args.depth,
        "rounds": args.rounds,
        "granularity": args.granularity,
        "config_cap": args.config_cap,
        "sample_limit": args.sample_limit,
    }


def _build_from_params(params: dict):
    schedule = make_schedule(
        params["variant"],
        ser.parse_frac(params["p0"]),
        params["depth"],
        params["granularity"],
    )
    basis = build_basis(FULL, schedule, rounds=params["rounds"])
    payload = ser.basis_payload(
        basis,
        config_cap=params["config_cap"],
        sample_limit=params["sample_limit"],
    )
    return basis, payload


def cmd_build(args) -> int:
    if args.depth < 1:
        raise ParamError("build needs --depth >= 1 (depth 0 exists only in the library API)")
    if args.rounds < 1:
        raise ParamError("build needs --rounds >= 1")
    params = _build_params(args)
    basis, payload = _build_from_params(params)
    doc = ser.wrap_document("build", params, payload)
    out = _out_path(args.out, "basis.json")
    ser.write_document(out, doc)
    print(f"built {args.variant}(p0={args.p0}) depth {args.depth}, rounds {args.rounds}")
    print(f"atom classes per depth: {[len(layer) for layer in basis.atoms]}")
    print(
        f"core measure {ser.frac_str(basis.core_measure)}"
        f" = {_dec(basis.core_measure)}"
    )
    bound = basis.exceptional_lower_bound()
    print(f"exceptional lower bound {ser.frac_str(bound)} = {_dec(bound)}")
    print(f"wrote {out}")
    return 0


def cmd_verify(args) -> int:
    try:
        doc = ser.read_document(args.basis, expect_kind="leveled-basis")
    except FileNotFoundError as err:
        raise ParamError(str(err)) from err
    except ValueError as err:
        raise VerificationFailure(f"document check failed: {err}") from err
    params = doc["manifest"]["parameters"]
    basis, payload = _build_from_params(params)
    rebuilt_hash = ser.content_sha256(payload)
    if rebuilt_hash != doc["manifest"]["content_sha256"]:
        raise VerificationFailure(
            "rebuild from the manifest does not reproduce the document "
            f"(got {rebuilt_hash}, file says {doc['manifest']['content_sha256']})"
        )
    print(f"manifest reproduces the document ({rebuilt_hash[:16]}...)")
    report = verify_axioms(basis, sample_limit=args.sample_limit)
    for failure in report.failures():
        raise VerificationFailure(f"{failure.name}: {failure.detail or 'failed'}")
    print(f"all {len(report.checks)} axiom checks passed")
    return 0


# ----------------------------------------------------------------------
# cover
# ----------------------------------------------------------------------


def cmd_cover(args) -> int:
    if args.rounds < 0:
        raise ParamError("--rounds must be >= 0")
    try:
        params = CoverParams(args.eps, args.d, args.m)
    except ValueError as err:
        raise ParamError(str(err)) from err
    cube_level = args.cube_level if args.cube_level is not None else params.min_level
    if cube_level < params.min_level:
        raise ParamError(
            f"--cube-level must be >= m + d = {params.min_level} for this template"
        )
    payload = ser.plan_payload(params, cube_level, args.rounds, config_cap=args.config_cap)
    run_params = {
        "eps": ser.frac_str(args.eps),
        "d": args.d,
        "m": args.m,
        "cube_level": cube_level,
        "rounds": args.rounds,
        "config_cap": args.config_cap,
    }
    doc = ser.wrap_document("cover", run_params, payload)
    out = _out_path(args.out, "plan.json")
    ser.write_document(out, doc)
    covered = ser.parse_frac(payload["covered_measure"])
    print(
        f"cover eps={args.eps} d={args.d} m={args.m} cube level {cube_level}, "
        f"rounds {args.rounds}"
    )
    print(f"covered measure {payload['covered_measure']} = {_dec(covered)}")
    print(f"wrote {out}")
    return 0


# ----------------------------------------------------------------------
# counterexample ledger
# ----------------------------------------------------------------------


def cmd_counterexample(args) -> int:
    if args.levels < 1:
        raise ParamError("--levels must be >= 1")
    if args.p < 1:
        raise ParamError("--p must be >= 1")
    try:
        doc = ser.read_document(args.basis, expect_kind="leveled-basis")
    except (FileNotFoundError, ValueError) as err:
        raise ParamError(f"cannot read basis document: {err}") from err
    params = doc["manifest"]["parameters"]
    schedule = make_schedule(
        params["variant"],
        ser.parse_frac(params["p0"]),
        args.levels,
        params["granularity"],
    )
    rows = lp_ledger(schedule.levels, args.p)
    integer_p = Fraction(args.p).denominator == 1

    csv_rows = []
    partial = Fraction(0)
    partial_enclosure = None
    for j, row in enumerate(rows, start=1):
        if integer_p:
            term_exact = row.norm_term_power
            partial += term_exact
            term_cols = [ser.frac_str(term_exact), _dec(term_exact)]
            partial_cols = [ser.frac_str(partial), _dec(partial)]
        else:
            enclosure = norm_term_enclosure(row, args.p)
            partial_enclosure = (
                enclosure if partial_enclosure is None else partial_enclosure + enclosure
            )
            term_cols = ["", _dec(enclosure)]
            partial_cols = ["", _dec(partial_enclosure)]
        bound = exceptional_lower_bound(rows[:j])
        csv_rows.append(
            [
                str(row.level),
                ser.frac_str(row.eps),
                str(row.d),
                str(row.m),
                ser.frac_str(row.selected_measure),
                _dec(row.selected_measure),
                ser.frac_str(row.central_measure),
                _dec(row.central_measure),
                *term_cols,
                *partial_cols,
                ser.frac_str(bound),
                _dec(bound),
            ]
        )
    header = [
        "level",
        "eps",
        "d",
        "m",
        "selected_family_measure",
        "selected_family_measure_dec",
        "central_family_measure",
        "central_family_measure_dec",
        "norm_term",
        "norm_term_dec",
        "partial_norm",
        "partial_norm_dec",
        "exceptional_lower_bound",
        "exceptional_lower_bound_dec",
    ]
    out_csv = _out_path(args.csv, "counterexample.csv")
    _write_csv(out_csv, header, csv_rows)

    reference, safe = comparison_bound_enclosure(args.p, ser.parse_frac(params["p0"]), args.levels)
    final_bound = exceptional_lower_bound(rows)
    run_params = {
        "basis": str(args.basis),
        "p": ser.frac_str(args.p),
        "levels": args.levels,
    }
    payload = {
        "kind": "counterexample-ledger",
        "p": ser.frac_str(args.p),
        "levels": args.levels,
        "rows": [
            dict(zip(header, row_values)) for row_values in csv_rows
        ],
        "comparison_bound_reference": _dec(reference.hi),
        "comparison_bound_safe": _dec(safe.hi),
        "exceptional_lower_bound": ser.frac_str(final_bound),
    }
    doc_out = ser.wrap_document("counterexample", run_params, payload)
    out_json = _out_path(args.out, "counterexample.json")
    ser.write_document(out_json, doc_out)
    print(f"ledger for {params['variant']}(p0={params['p0']}), p={args.p}, levels {args.levels}")
    if integer_p:
        print(f"partial norm {ser.frac_str(partial)} = {_dec(partial)}")
    else:
        print(f"partial norm ~= {_dec(partial_enclosure)} (certified enclosure)")
    print(
        f"exceptional lower bound {ser.frac_str(final_bound)} = {_dec(final_bound)}"
        + (" > 0" if final_bound > 0 else "")
    )
    print(f"wrote {out_csv} and {out_json}")
    return 0


# ----------------------------------------------------------------------
# probe-range
# ----------------------------------------------------------------------


def cmd_probe_range(args) -> int:
    if args.p0 < 1:
        raise ParamError("--p0 must be >= 1")
    try:
        schedule = make_schedule(args.variant, args.p0, args.depth, args.granularity)
    except ValueError as err:
        raise ParamError(str(err)) from err
    source = schedule_range_source(schedule)
    rows = []
    for p in args.grid:
        verdict = source.probe(p)
        rows.append(verdict)
        print(f"p={_p_label(p)}: {'in' if verdict.inside else 'out'} ({verdict.reason})")
    run_params = {
        "variant": args.variant,
        "p0": ser.frac_str(args.p0),
        "depth": args.depth,
        "granularity": args.granularity,
        "grid": [_p_label(p) for p in args.grid],
    }
    payload = {
        "kind": "range-probe",
        "source": source.name,
        "probes": [
            {
                "p": _p_label(v.p),
                "inside": v.inside,
                "exponent": ser.frac_str(v.exponent),
                "log_power": ser.frac_str(v.log_power),
                "reason": v.reason,
            }
            for v in rows
        ],
    }
    out = _out_path(args.out, "probe.json")
    ser.write_document(out, ser.wrap_document("probe-range", run_params, payload))
    print(f"wrote {out}")
    return 0


# ----------------------------------------------------------------------
# norm oracle / search
# ----------------------------------------------------------------------


def cmd_norm(args) -> int:
    header = [
        "eps",
        "d",
        "p",
        "a_p_dec",
        "p_star_dec",
        "regime",
        "oracle_dec",
        "attainable_floor_dec",
    ]
    if args.search:
        header += ["search_value_dec", "search_lambda", "candidates"]
    csv_rows: list[list[str]] = []
    for eps in args.eps:
        for d in args.d:
            for p in args.p:
                try:
                    estimate = norm_asymptotics_oracle(eps, d, p)
                except ValueError as err:
                    raise ParamError(str(err)) from err
                row = [
                    ser.frac_str(eps),
                    str(d),
                    ser.frac_str(p),
                    _dec(estimate.a_p),
                    _dec(estimate.p_star),
                    estimate.regime,
                    _dec(estimate.value),
                    _dec(estimate.lower_bound),
                ]
                if args.search:
                    config = corner_configuration(max(1, d - 1), d, eps)
                    found = weak_type_lower_search(config, p, budget=args.budget)
                    row += [
                        _dec(found.report),
                        ser.frac_str(found.report.best_lambda),
                        str(found.candidates_tried),
                    ]
                csv_rows.append(row)
    out_csv = _out_path(args.csv, "norm.csv")
    _write_csv(out_csv, header, csv_rows)
    run_params = {
        "eps": [ser.frac_str(e) for e in args.eps],
        "d": args.d,
        "p": [ser.frac_str(p) for p in args.p],
        "search": bool(args.search),
        "budget": args.budget,
    }
    payload = {
        "kind": "norm-table",
        "rows": [dict(zip(header, row_values)) for row_values in csv_rows],
    }
    out_json = _out_path(args.out, "norm.json")
    ser.write_document(out_json, ser.wrap_document("norm", run_params, payload))
    print(f"{len(csv_rows)} grid points; wrote {out_csv} and {out_json}")
    return 0


# ----------------------------------------------------------------------
# fixtures
# ----------------------------------------------------------------------


def cmd_fixture(args) -> int:
    if args.name == "e4":
        jmax = args.jmax if args.jmax is not None else 10
        try:
            report = example_e4(jmax, args.n)
        except ValueError as err:
            raise ParamError(str(err)) from err
        header = [
            "j",
            "block_average",
            "block_average_dec",
            "deviation_from_limit",
            "deviation_from_limit_dec",
            "deviation_bound",
            "truncated_average",
            "truncated_average_dec",
        ]
        csv_rows = []
        for j, avg, truncated in report.rows:
            deviation = abs(avg - report.reference_limit)
            csv_rows.append(
                [
                    str(j),
                    ser.frac_str(avg),
                    _dec(avg),
                    ser.frac_str(deviation),
                    _dec(deviation),
                    ser.frac_str(Fraction(4, 2**j)),
                    ser.frac_str(truncated) if truncated is not None else "",
                    _dec(truncated) if truncated is not None else "",
                ]
            )
        out_csv = _out_path(args.csv, "fixture-e4.csv")
        _write_csv(out_csv, header, csv_rows)
        run_params = {"name": "e4", "jmax": jmax, "n": args.n}
        payload = {
            "kind": "fixture-e4",
            "rows": [dict(zip(header, r)) for r in csv_rows],
            "reference_limit": ser.frac_str(report.reference_limit),
            "truncated_limit": (
                ser.frac_str(report.truncated_limit)
                if report.truncated_limit is not None
                else None
            ),
            "deviations_bounded": report.deviations_bounded,
            "fitted_deviation_constant": ser.frac_str(report.fitted_deviation_constant),
        }
        out_json = _out_path(args.out, "fixture-e4.json")
        ser.write_document(out_json, ser.wrap_document("fixture", run_params, payload))
        print(f"grid fixture rows 1..{jmax}; averages -> {ser.frac_str(report.reference_limit)}")
        print(
            "fitted deviation constant "
            f"{ser.frac_str(report.fitted_deviation_constant)}"
            f" = {_dec(report.fitted_deviation_constant)} (|avg_j - limit| <= C 2^-j)"
        )
        if report.truncated_limit is not None:
            print(
                f"threshold-{args.n} truncation -> {ser.frac_str(report.truncated_limit)}"
                f" = {_dec(report.truncated_limit)} (strictly below)"
            )
        if not report.deviations_bounded:
            raise VerificationFailure("block averages left the 2^(2-j) deviation band")
        print(f"wrote {out_csv} and {out_json}")
        return 0

    # e1: the ladder fixture
    rows = args.rows if args.rows is not None else 12
    space, sets = example_e1(rows)
    indicator = SpaceFunction(Fraction(0), Fraction(1))
    table = []
    for u in sorted({pid[1] for pid in space.atoms}):
        for j in range(1, rows + 1):
            table.append((u, j, e1_pair_average(space, indicator, u, j)))
    source = e1_range_source()
    probes = [source.probe(p) for p in (Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3), None)]
    run_params = {"name": "e1", "rows": rows}
    payload = {
        "kind": "fixture-e1",
        "rows": rows,
        "columns": sorted(ser.frac_str(pid[1]) for pid in {p[:2] for p in space.atoms}),
        "basis_sets": len(sets),
        "pair_averages_of_atom_indicator": [
            {"column": ser.frac_str(u), "row": j, "average": ser.frac_str(v)}
            for u, j, v in table
        ],
        "probes": [
            {"p": _p_label(v.p), "inside": v.inside, "reason": v.reason}
            for v in probes
        ],
    }
    out_json = _out_path(args.out, "fixture-e1.json")
    ser.write_document(out_json, ser.wrap_document("fixture", run_params, payload))
    constant = all(v == 1 for _, _, v in table)
    print(f"ladder fixture: {len(space.atoms)} atoms, {len(sets)} basis sets")
    print(f"atom-indicator pair averages all equal 1: {constant}")
    if not constant:
        raise VerificationFailure("pair averages of the atom indicator deviate from 1")
    print(f"wrote {out_json}")
    return 0


# ----------------------------------------------------------------------
# glue
# ----------------------------------------------------------------------


def _range_component(spec: str) -> RangeSource:
    if spec == "e1":
        return e1_range_source()
    if spec.startswith(("geq:", "gt:")):
        variant, _, p0_text = spec.partition(":")
        try:
            p0 = Fraction(p0_text)
            schedule = make_schedule(variant, p0, 1)
        except (ValueError, ZeroDivisionError) as err:
            raise ParamError(f"bad schedule component {spec!r}: {err}") from err
        return schedule_range_source(schedule)
    path = Path(spec)
    if not path.exists():
        raise ParamError(
            f"component {spec!r} is neither e1, geq:<p0>, gt:<p0>, nor a basis file"
        )
    try:
        doc = ser.read_document(path, expect_kind="leveled-basis")
    except ValueError as err:
        raise ParamError(f"cannot read basis document {spec!r}: {err}") from err
    params = doc["manifest"]["parameters"]
    schedule = make_schedule(
        params["variant"],
        ser.parse_frac(params["p0"]),
        params["depth"],
        params["granularity"],
    )
    return schedule_range_source(schedule)


def cmd_glue(args) -> int:
    first = _range_component(args.a)
    second = _range_component(args.b)
    glued: GluedSpace = glue(first, second)
    rows = []
    for p in args.probe:
        va, vb, vg = first.probe(p), second.probe(p), glued.probe(p)
        agrees = vg.inside == (va.inside and vb.inside)
        rows.append((p, va, vb, vg, agrees))
        print(
            f"p={_p_label(p)}: {first.name}={'in' if va.inside else 'out'} "
            f"{second.name}={'in' if vb.inside else 'out'} "
            f"glued={'in' if vg.inside else 'out'}"
        )
    run_params = {"a": args.a, "b": args.b, "probe": [_p_label(p) for p in args.probe]}
    payload = {
        "kind": "glued-range",
        "components": [first.name, second.name],
        "probes": [
            {
                "p": _p_label(p),
                "first": va.inside,
                "second": vb.inside,
                "glued": vg.inside,
                "componentwise_and": agrees,
                "reason": vg.reason,
            }
            for p, va, vb, vg, agrees in rows
        ],
    }
    out = _out_path(args.out, "glue.json")
    ser.write_document(out, ser.wrap_document("glue", run_params, payload))
    if not all(agrees for *_, agrees in rows):
        raise VerificationFailure("glued verdict deviates from the componentwise AND")
    print(f"wrote {out}")
    return 0


# ----------------------------------------------------------------------
# transfer
# ----------------------------------------------------------------------


def cmd_transfer(args) -> int:
    try:
        doc = ser.read_document(args.basis, expect_kind="leveled-basis")
    except (FileNotFoundError, ValueError) as err:
        raise ParamError(f"cannot read basis document: {err}") from err
    params = doc["manifest"]["parameters"]
    basis, _ = _build_from_params(params)
    try:
        interval_basis = transfer_to_interval(basis, lattice_cap=args.lattice_cap)
    except ValueError as err:
        raise ParamError(str(err)) from err

    totals = basis.leaf_totals()
    mismatched = [
        key
        for key in totals
        if interval_basis.lengths[-1][key] != totals[key]
    ]
    if mismatched:
        raise VerificationFailure(
            f"image length differs from source measure for {len(mismatched)} leaf classes"
        )

    depths_json = []
    for depth, layer in enumerate(interval_basis.lattices):
        ordered = sorted(layer)
        classes_json = []
        for position, key in enumerate(ordered):
            classes_json.append(
                {
                    "class_index": position,
                    "total_length": ser.frac_str(interval_basis.lengths[depth][key]),
                    "lattices": [
                        {
                            "start": ser.frac_str(lat.start),
                            "strides": [
                                [ser.frac_str(stride), count]
                                for stride, count in lat.strides
                            ],
                            "length": ser.frac_str(lat.length),
                        }
                        for lat in layer[key]
                    ],
                }
            )
        depths_json.append(classes_json)
    run_params = {"basis": str(args.basis), "lattice_cap": args.lattice_cap}
    payload = {
        "kind": "interval-union-basis",
        "source_sha256": doc["manifest"]["content_sha256"],
        "depths": depths_json,
    }
    out = _out_path(args.out, "transfer.json")
    ser.write_document(out, ser.wrap_document("transfer", run_params, payload))
    n_lat = sum(len(v) for layer in interval_basis.lattices for v in layer.values())
    print(
        f"transferred depth-{basis.depth} basis to [0,1]: "
        f"{n_lat} interval lattices, image lengths exact"
    )
    print(f"wrote {out}")
    return 0


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torusdiff",
        description="Finite-depth differentiation bases on the infinite torus: "
        "construction, verification, and experiments in exact arithmetic.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="construct a leveled basis and write basis.json")
    p.add_argument("--p0", type=_fraction, required=True, help="range parameter, e.g. 2 or 3/2")
    p.add_argument("--variant", choices=("geq", "gt"), default="geq")
    p.add_argument("--depth", type=int, required=True, help="number of levels (>= 1)")
    p.add_argument("--rounds", type=int, default=2, help="covering rounds per level")
    p.add_argument("--granularity", type=int, default=DEFAULT_GRANULARITY)
    p.add_argument("--config-cap", type=int, default=256, help="template configurations listed per level")
    p.add_argument("--sample-limit", type=int, default=8, help="sample instances stored per level")
    p.add_argument("--out", help="output path (default $TORUSDIFF_OUT/basis.json)")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("verify", help="rebuild from a basis document's manifest and verify the axioms")
    p.add_argument("basis", help="path to basis.json")
    p.add_argument("--sample-limit", type=int, default=30)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cover", help="exact covering plan for one cube")
    p.add_argument("--eps", type=_fraction, default=Fraction(1, 4))
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--cube-level", type=int, default=None, help="default: the template floor m + d")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--config-cap", type=int, default=4096)
    p.add_argument("--out", help="output path (default $TORUSDIFF_OUT/plan.json)")
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("counterexample", help="per-level norm/measure ledger of the failing function")
    p.add_argument("--basis", required=True, help="path to basis.json (schedule parameters are reused)")
    p.add_argument("--p", type=_fraction, required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--csv", help="CSV output path (default $TORUSDIFF_OUT/counterexample.csv)")
    p.add_argument("--out", help="JSON output path (default $TORUSDIFF_OUT/counterexample.json)")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("probe-range", help="classify exponents against a schedule's growth descriptor")
    p.add_argument("--variant", choices=("geq", "gt"), default="geq")
    p.add_argument("--p0", type=_fraction, required=True)
    p.add_argument("--depth", type=int, default=1, help="schedule depth (classification uses the descriptor only)")
    p.add_argument("--granularity", type=int, default=DEFAULT_GRANULARITY)
    p.add_argument("--grid", type=_probe_grid, default=[Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3)], help="comma-separated exponents; inf allowed")
    p.add_argument("--out", help="output path (default $TORUSDIFF_OUT/probe.json)")
    p.set_defaults(func=cmd_probe_range)

    p = sub.add_parser("norm", help="closed-form weak-norm oracle over a parameter grid")
    p.add_argument("--eps", type=_fraction_list, default=[Fraction(1, 8), Fraction(1, 4), Fraction(1, 2)])
    p.add_argument("--d", type=_int_list, default=[1, 2, 4, 8])
    p.add_argument("--p", type=_fraction_list, default=[Fraction(3, 2), Fraction(2), Fraction(3)])
    p.add_argument("--search", action="store_true", help="also run the exact lower-bound search per point")
    p.add_argument("--budget", type=int, default=32, help="random candidates per search")
    p.add_argument("--csv", help="CSV output path (default $TORUSDIFF_OUT/norm.csv)")
    p.add_argument("--out", help="JSON output path (default $TORUSDIFF_OUT/norm.json)")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("fixture", help="run a companion-space fixture")
    p.add_argument("name", choices=("e1", "e4"))
    p.add_argument("--jmax", type=int, default=None, help="e4: deepest row (<= 20)")
    p.add_argument("--n", type=int, default=None, help="e4: truncation threshold (1 <= n < jmax)")
    p.add_argument("--rows", type=int, default=None, help="e1: ladder rows per column")
    p.add_argument("--csv", help="CSV output path (e4)")
    p.add_argument("--out", help="JSON output path")
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("glue", help="combine two components and probe the differentiation range")
    p.add_argument("--a", required=True, help="basis.json path, e1, geq:<p0>, or gt:<p0>")
    p.add_argument("--b", required=True, help="basis.json path, e1, geq:<p0>, or gt:<p0>")
    p.add_argument("--probe", type=_probe_grid, default=[Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3)])
    p.add_argument("--out", help="output path (default $TORUSDIFF_OUT/glue.json)")
    p.set_defaults(func=cmd_glue)

    p = sub.add_parser("transfer", help="replay a basis as nested interval unions of [0,1]")
    p.add_argument("--basis", required=True, help="path to basis.json")
    p.add_argument("--lattice-cap", type=int, default=200_000)
    p.add_argument("--out", help="output path (default $TORUSDIFF_OUT/transfer.json)")
    p.set_defaults(func=cmd_transfer)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParamError as err:
        print(f"invalid parameters: {err}", file=sys.stderr)
        return 2
    except VerificationFailure as err:
        print(f"verification failed: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
