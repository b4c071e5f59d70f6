"""Recursive configuration covers of dyadic regions, computed by templates.

One round of the cover splits every level-k cube of the working region into
its 2^(2k+2) level-(k+1) subcubes and plants one (eps, d)-configuration in
the corner of each; the next round recurses into the uncovered rest. Each
round covers the fixed fraction c = 2^-d (1 + d - eps d) of what was left,
so after T rounds exactly (1 - (1-c)^T) of the region is covered.

Instance counts explode immediately (round two of a modest region already
needs billions of configurations), so nothing is materialized: the engine
computes one *template* per cube level — configuration, cells, residual,
and the residual's decomposition into deeper cubes — and every global
quantity is an exact class count times a template quantity. Representative
instances are enumerated lazily for desk-scale spot checks.

Cube arithmetic invariants (checked, not assumed): the corner configuration
center is a translated fundamental cell; residual pieces have level >=
m + d; sibling families split into blocks of 2^m congruent subcubes, of
which selection takes the last of each block.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

from .configurations import Cell, Configuration, configuration_cells, corner_configuration
from .geometry import (
    Box,
    CubeClass,
    box_set_measure,
    coalesce,
    cube_box,
    decompose_into_cubes,
    iter_cube_corners,
    pairwise_disjoint,
    piece_level_counts,
    subtract_many,
)
from .lattice import is_rdf0_element
from .rationals import is_dyadic

__all__ = [
    "CoverParams",
    "CoverEngine",
    "TemplateGeometry",
    "CoveringPlan",
    "PlacedConfiguration",
    "cover_rectangle",
    "verify_plan",
    "verify_template",
]

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class CoverParams:
    """Covering parameters: dyadic eps in (0,1/2], dimension d, gap m."""

    eps: Fraction
    d: int
    m: int

    def __post_init__(self) -> None:
        eps = Fraction(self.eps)
        if not (0 < eps <= Fraction(1, 2)):
            raise ValueError(f"eps must lie in (0, 1/2], got {eps}")
        if not is_dyadic(eps):
            raise ValueError(f"covering eps must be dyadic, got {eps}")
        if self.d < 1 or self.m < 1:
            raise ValueError("need d >= 1 and m >= 1")

    @property
    def weight(self) -> Fraction:
        return 1 + self.d - Fraction(self.eps) * self.d

    @property
    def c(self) -> Fraction:
        """Fraction of a cube covered by one round."""
        return self.weight / 2**self.d

    @property
    def min_level(self) -> int:
        return self.m + self.d


@dataclass(frozen=True)
class TemplateGeometry:
    """Everything one round does inside one level-(k+1) subcube, relatively.

    All boxes are positioned relative to the subcube corner; instances add
    an absolute corner, which is a multiple of every grid used here, so the
    relative picture is exact for every instance.

    ``residual_level_counts`` carries the residual's cube decomposition as
    exact per-level counts; the cube classes themselves (needed only for
    instance enumeration and deep template checks) are materialized lazily
    by :meth:`CoverEngine.residual_pieces`, because fine eps denominators
    make the class product combinatorially wide at deep levels.
    """

    k: int
    config: Configuration
    cells: tuple[Cell, ...]
    residual_boxes: tuple[Box, ...]
    residual_level_counts: dict[int, int]
    sibling_count: int
    subcube_measure: Fraction


class CoverEngine:
    """Exact template calculator for fixed covering parameters."""

    def __init__(self, params: CoverParams):
        self.params = params
        self._geometry = lru_cache(maxsize=None)(self._build_geometry)
        self.residual_pieces = lru_cache(maxsize=None)(self._residual_pieces)
        self.covered = lru_cache(maxsize=None)(self._covered)
        self.config_count = lru_cache(maxsize=None)(self._config_count)
        self.covered_rounds = lru_cache(maxsize=None)(self._covered_rounds)
        self.leaf_counts = lru_cache(maxsize=None)(self._leaf_counts)
        self.cell_counts = lru_cache(maxsize=None)(self._cell_counts)

    # -- geometry ----------------------------------------------------------

    def geometry(self, k: int) -> TemplateGeometry:
        if k < self.params.min_level:
            raise ValueError(f"cube level {k} below the floor m+d = {self.params.min_level}")
        return self._geometry(k)

    def _build_geometry(self, k: int) -> TemplateGeometry:
        p = self.params
        config = corner_configuration(k, p.d, Fraction(p.eps))
        cells = tuple(configuration_cells(config))
        subcube = cube_box(k + 1, (ZERO,) * (k + 2))
        residual = tuple(coalesce(subtract_many([subcube], list(config.members))))
        counts = piece_level_counts(list(residual), p.min_level)
        if any(level < k + 2 for level in counts):
            raise AssertionError("residual piece coarser than the configuration scale")
        return TemplateGeometry(
            k=k,
            config=config,
            cells=cells,
            residual_boxes=residual,
            residual_level_counts=counts,
            sibling_count=2 ** (2 * k + 2),
            subcube_measure=Fraction(1, 2 ** ((k + 1) * (k + 2))),
        )

    def _residual_pieces(self, k: int) -> tuple[CubeClass, ...]:
        """Materialized residual cube classes (instance enumeration only)."""
        g = self.geometry(k)
        pieces = tuple(decompose_into_cubes(list(g.residual_boxes), self.params.min_level))
        agg: dict[int, int] = {}
        for piece in pieces:
            agg[piece.level] = agg.get(piece.level, 0) + piece.count
        if agg != g.residual_level_counts:
            raise AssertionError("materialized residual disagrees with level counts")
        return pieces

    # -- exact ledgers (per one level-k cube) -------------------------------

    def _covered(self, k: int, t: int) -> Fraction:
        if t == 0:
            return ZERO
        g = self.geometry(k)
        per_subcube = self.params.c * g.subcube_measure
        for level, count in g.residual_level_counts.items():
            per_subcube += count * self.covered(level, t - 1)
        total = g.sibling_count * per_subcube
        closed = (1 - (1 - self.params.c) ** t) * Fraction(1, 2 ** (k * (k + 1)))
        if total != closed:
            raise AssertionError(f"covering law violated at (k={k}, t={t}): {total} != {closed}")
        return total

    def _config_count(self, k: int, t: int) -> int:
        if t == 0:
            return 0
        g = self.geometry(k)
        per_subcube = 1
        for level, count in g.residual_level_counts.items():
            per_subcube += count * self.config_count(level, t - 1)
        return g.sibling_count * per_subcube

    def _covered_rounds(self, k: int, t: int) -> tuple[Fraction, ...]:
        """Measure newly covered in each round, per one level-k cube."""
        if t == 0:
            return ()
        g = self.geometry(k)
        rounds = [g.sibling_count * self.params.c * g.subcube_measure]
        deeper = [ZERO] * (t - 1)
        for level, count in g.residual_level_counts.items():
            sub = self.covered_rounds(level, t - 1)
            for r, value in enumerate(sub):
                deeper[r] += g.sibling_count * count * value
        return tuple(rounds + deeper)

    def _leaf_counts(self, k: int, t: int) -> dict[int, int]:
        """Cubes left uncovered after t rounds, keyed by level (exact tiling)."""
        if t == 0:
            return {k: 1}
        g = self.geometry(k)
        out: dict[int, int] = {}
        for p_level, p_count in g.residual_level_counts.items():
            for level, count in self.leaf_counts(p_level, t - 1).items():
                out[level] = out.get(level, 0) + g.sibling_count * p_count * count
        return out

    def _cell_counts(self, k: int, t: int) -> dict[tuple[int, int, bool], int]:
        """Configuration cells per one level-k cube: (cube level, cell index,
        selected) -> count. Selection keeps the last subcube of every block
        of 2^m siblings, i.e. exactly a 2^-m fraction of each family."""
        if t == 0:
            return {}
        g = self.geometry(k)
        chosen = g.sibling_count >> self.params.m
        assert chosen << self.params.m == g.sibling_count
        out: dict[tuple[int, int, bool], int] = {}
        for idx in range(len(g.cells)):
            out[(k, idx, True)] = chosen
            out[(k, idx, False)] = g.sibling_count - chosen
        for p_level, p_count in g.residual_level_counts.items():
            for key, count in self.cell_counts(p_level, t - 1).items():
                out[key] = out.get(key, 0) + g.sibling_count * p_count * count
        return out


# ----------------------------------------------------------------------
# Plans over arbitrary dyadic regions
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class PlacedConfiguration:
    """A materialized configuration instance with its provenance labels."""

    round: int
    cube_level: int
    cube_corner: tuple[Fraction, ...]
    sibling_index: int
    block_index: int
    selected: bool
    config: Configuration


@dataclass
class CoveringPlan:
    """Exact account of a T-round cover of one dyadic box."""

    region: Box
    params: CoverParams
    rounds: int
    piece_classes: list[CubeClass]
    covered_measure: Fraction
    residual_measure: Fraction
    per_round_covered: tuple[Fraction, ...]
    config_count: int
    residual_leaf_counts: dict[int, int]
    engine: CoverEngine = field(repr=False)

    def region_measure(self) -> Fraction:
        return self.region.measure()

    def iter_configurations(self, limit: int = 1000) -> Iterator[PlacedConfiguration]:
        """Deterministic lazy enumeration of configuration instances."""
        yield from _iter_region_configs(
            self.engine, self.piece_classes, self.rounds, 1, _Budget(limit)
        )


class _Budget:
    def __init__(self, limit: int):
        self.left = limit

    def take(self) -> bool:
        if self.left <= 0:
            return False
        self.left -= 1
        return True


def _pad(corner: Sequence[Fraction], length: int) -> tuple[Fraction, ...]:
    return tuple(corner) + (ZERO,) * (length - len(corner))


def _iter_region_configs(
    engine: CoverEngine,
    pieces: Sequence[CubeClass],
    t: int,
    round_no: int,
    budget: _Budget,
) -> Iterator[PlacedConfiguration]:
    if t == 0:
        return
    m = engine.params.m
    for cls in pieces:
        g = engine.geometry(cls.level)
        for corner in iter_cube_corners(cls):
            if budget.left <= 0:
                return
            for sib_index, sib_corner in enumerate(_iter_subcube_corners(cls.level)):
                if not budget.take():
                    return
                absolute = tuple(
                    a + b for a, b in zip(_pad(corner, cls.level + 2), sib_corner)
                )
                config = corner_configuration(
                    cls.level, engine.params.d, Fraction(engine.params.eps), absolute
                )
                yield PlacedConfiguration(
                    round=round_no,
                    cube_level=cls.level,
                    cube_corner=tuple(corner),
                    sibling_index=sib_index,
                    block_index=sib_index >> m,
                    selected=(sib_index & ((1 << m) - 1)) == (1 << m) - 1,
                    config=config,
                )
                if t > 1:
                    shifted = [
                        CubeClass(
                            p.level,
                            p.count,
                            tuple(
                                a + b
                                for a, b in zip(_pad(absolute, p.level + 1), _pad(p.witness, p.level + 1))
                            ),
                            _shift_box(p.cell, absolute),
                        )
                        for p in engine.residual_pieces(cls.level)
                    ]
                    yield from _iter_region_configs(engine, shifted, t - 1, round_no + 1, budget)


def _iter_subcube_corners(k: int) -> Iterator[tuple[Fraction, ...]]:
    """Corners of the 2^(2k+2) level-(k+1) subcubes of the origin k-cube.

    Lazy in both axes groups: at deep levels the full enumeration is
    astronomically long and consumers only ever take a bounded prefix.
    """
    side = Fraction(1, 2 ** (k + 1))
    first = [(ZERO, side)] * (k + 1)  # two slots in each constrained coordinate
    for head in itertools.product(*first):
        for t in range(2 ** (k + 1)):  # new coordinate k+2
            yield head + (t * side,)


def _shift_box(box: Box, offset: Sequence[Fraction]) -> Box:
    items = []
    for i, a, b in box.coords:
        t = offset[i - 1] if i - 1 < len(offset) else ZERO
        items.append((i, a + t, b + t))
    return Box.make(items)


def cover_rectangle(
    region: Box, eps: Fraction, d: int, m: int, rounds: int
) -> CoveringPlan:
    """Cover a dyadic box with `rounds` rounds of configuration planting.

    rounds = 0 yields the empty plan (the region is its own residual).
    """
    params = CoverParams(Fraction(eps), d, m)
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    for _, a, b in region.coords:
        if not (is_dyadic(a) and is_dyadic(b)):
            raise ValueError("region endpoints must be dyadic")
    engine = CoverEngine(params)
    pieces = decompose_into_cubes([region], params.min_level)
    covered = ZERO
    count = 0
    per_round = [ZERO] * rounds
    leaves: dict[int, int] = {}
    for cls in pieces:
        covered += cls.count * engine.covered(cls.level, rounds)
        count += cls.count * engine.config_count(cls.level, rounds)
        for r, value in enumerate(engine.covered_rounds(cls.level, rounds)):
            per_round[r] += cls.count * value
        for level, n in engine.leaf_counts(cls.level, rounds).items():
            leaves[level] = leaves.get(level, 0) + cls.count * n
    plan = CoveringPlan(
        region=region,
        params=params,
        rounds=rounds,
        piece_classes=pieces,
        covered_measure=covered,
        residual_measure=region.measure() - covered,
        per_round_covered=tuple(per_round),
        config_count=count,
        residual_leaf_counts=leaves,
        engine=engine,
    )
    expected = (1 - (1 - params.c) ** rounds) * region.measure()
    if covered != expected:
        raise AssertionError("plan-level covering law violated")
    return plan


# ----------------------------------------------------------------------
# Verification
# ----------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _envelope(config: Configuration) -> dict[int, tuple[Fraction, Fraction]]:
    """Per-coordinate bounding interval of a configuration's union."""
    env: dict[int, tuple[Fraction, Fraction]] = {}
    for box in config.members:
        for i, a, b in box.coords:
            lo, hi = env.get(i, (a, b))
            env[i] = (min(lo, a), max(hi, b))
    return env


def _envelopes_overlap(
    x: dict[int, tuple[Fraction, Fraction]], y: dict[int, tuple[Fraction, Fraction]]
) -> bool:
    for i, (a, b) in x.items():
        other = y.get(i)
        if other is not None and (b <= other[0] or other[1] <= a):
            return False
    return True


def verify_template(engine: CoverEngine, k: int, rounds: int) -> list[CheckResult]:
    """Exact template-level checks for one cube level."""
    p = engine.params
    g = engine.geometry(k)
    results: list[CheckResult] = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        results.append(CheckResult(name, bool(ok), detail))

    subcube = cube_box(k + 1, (ZERO,) * (k + 2))
    members = list(g.config.members)
    check("members-inside-subcube", all(subcube.contains(b) for b in members))
    inter_ok = all(
        (q.intersect(g.config.center) or subcube).measure() == p.eps * g.config.center.measure()
        for q in g.config.translates
    )
    check("center-overlap-fraction", inter_ok)
    cell_boxes = [c.box for c in g.cells]
    check("cells-disjoint", pairwise_disjoint(cell_boxes))
    check(
        "cells-tile-union",
        box_set_measure(cell_boxes) == p.weight * g.config.center.measure(),
    )
    check(
        "residual-complements-union",
        box_set_measure(g.residual_boxes)
        == g.subcube_measure - p.weight * g.config.center.measure(),
    )
    check(
        "residual-disjoint-from-union",
        all(
            r.intersect(b) is None for r in g.residual_boxes for b in members
        ),
    )
    pieces = engine.residual_pieces(k)
    check(
        "residual-pieces-tile",
        sum(
            (cls.count * Fraction(1, 2 ** (cls.level * (cls.level + 1))) for cls in pieces),
            ZERO,
        )
        == box_set_measure(g.residual_boxes),
    )
    check(
        "residual-pieces-deep-enough",
        all(cls.level >= p.min_level for cls in pieces),
    )
    # Maximality is per source box: one level coarser would not fit inside
    # any single residual box (pieces straddling several boxes may still
    # have a coarser dyadic hull inside the union -- that is allowed).
    maximal_ok = True
    region = list(g.residual_boxes)
    for cls in pieces:
        if cls.level <= p.min_level:
            continue
        parent_level = cls.level - 1
        step = Fraction(1, 2**parent_level)
        parent_corner = [pos - (pos % step) for pos in cls.witness[: parent_level + 1]]
        parent = cube_box(parent_level, parent_corner)
        if any(r.contains(parent) for r in region):
            maximal_ok = False
    check("residual-pieces-maximal", maximal_ok)
    witness = is_rdf0_element(g.config.center)
    check(
        "center-in-base-family",
        witness is not None and witness.m == (k + 1) * (k + 2) + p.d,
        detail=f"witness step {witness.m if witness else None}",
    )
    closed = (1 - (1 - p.c) ** rounds) * Fraction(1, 2 ** (k * (k + 1)))
    check("covering-law", engine.covered(k, rounds) == closed)
    leaf_measure = sum(
        (Fraction(n, 2 ** (lvl * (lvl + 1))) for lvl, n in engine.leaf_counts(k, rounds).items()),
        ZERO,
    )
    check(
        "residual-leaves-account",
        leaf_measure == (1 - p.c) ** rounds * Fraction(1, 2 ** (k * (k + 1))),
    )
    return results


def verify_plan(plan: CoveringPlan, *, sample_limit: int = 600) -> list[CheckResult]:
    """All template checks plus plan aggregation and sampled instance checks."""
    results: list[CheckResult] = []
    p = plan.params

    def check(name: str, ok: bool, detail: str = "") -> None:
        results.append(CheckResult(name, bool(ok), detail))

    levels = sorted({cls.level for cls in plan.piece_classes})
    for k in levels:
        results.extend(verify_template(plan.engine, k, plan.rounds))
    tile = sum(
        (cls.count * Fraction(1, 2 ** (cls.level * (cls.level + 1))) for cls in plan.piece_classes),
        ZERO,
    )
    check("region-tiled-by-pieces", tile == plan.region.measure())
    check(
        "plan-covering-law",
        plan.covered_measure
        == (1 - (1 - p.c) ** plan.rounds) * plan.region.measure(),
    )
    check(
        "per-round-sums",
        sum(plan.per_round_covered, ZERO) == plan.covered_measure,
    )
    check(
        "residual-balance",
        plan.residual_measure + plan.covered_measure == plan.region.measure(),
    )

    if plan.rounds > 0:
        sample = list(plan.iter_configurations(limit=sample_limit))
        envelopes = [_envelope(inst.config) for inst in sample]
        disjoint = True
        for i in range(len(sample)):
            for j in range(i + 1, len(sample)):
                if not _envelopes_overlap(envelopes[i], envelopes[j]):
                    continue
                a, b = sample[i].config, sample[j].config
                if any(
                    x.intersect(y) is not None for x in a.members for y in b.members
                ):
                    disjoint = False
        check("sampled-instances-disjoint", disjoint, f"{len(sample)} instances")
        in_region = all(
            plan.region.contains(inst.config.center) for inst in sample
        )
        check("sampled-instances-inside-region", in_region)
        # One full sibling block of the first piece, enumerated directly.
        first = plan.piece_classes[0]
        block: list[tuple[int, Configuration]] = []
        for sib_index, sib_corner in enumerate(_iter_subcube_corners(first.level)):
            if sib_index >= 1 << p.m:
                break
            absolute = tuple(
                a + b for a, b in zip(_pad(first.witness, first.level + 2), sib_corner)
            )
            block.append(
                (sib_index, corner_configuration(first.level, p.d, Fraction(p.eps), absolute))
            )
        measures = {cfg.union_measure() for _, cfg in block}
        translate_ok = all(
            cfg.center.measure() == block[0][1].center.measure() for _, cfg in block
        )
        check(
            "first-block-congruent",
            len(block) == 1 << p.m and len(measures) == 1 and translate_ok,
            f"block of {len(block)} siblings",
        )
        last_selected = (block[-1][0] & ((1 << p.m) - 1)) == (1 << p.m) - 1
        check("block-selection-takes-last", last_selected)
    return results
