"""Leveled basis construction: recursive configuration covers, level by level.

Level j covers every level-(j-1) atom with T rounds of (eps_j, d_j)
configurations and then selects every 2^m_j-th configuration of each
congruent sibling block. Atoms of the next level are the configuration
cells plus the uncovered residual cubes.

Instance counts are astronomical from level one on, so the tree is kept as
*atom classes*: all atoms sharing the same per-level history flags and the
same shape relative to their anchor grid. Shapes decompose identically
across a class (anchors are multiples of every grid the shape uses), so
every measure below is an exact rational computed from class counts.

Per-level flags of an atom record how it sits in that level's cover:
("cell", selected, central) for a configuration cell -- selected means the
configuration belongs to the selection, central means the cell lies inside
the central box -- or ("residual",) for an uncovered cube. The flags drive
all derived set measures: with gamma = 1 - (1-c)^T per level,

* covered at level j:        gamma_j |U|
* selected unions  (starred family): 2^-m_j gamma_j |U|
* selected centrals (plain family):  2^-m_j gamma_j |U| / W_j
* the core (covered at all levels):  |U| prod gamma_j

and on the core the selected families of distinct levels are independent:
|intersection over j in S of starred_j, within the core| equals
|core| * prod_{j in S} 2^-m_j for every nonempty S -- verified by class
sums against the closed form, for all subsets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .covering import (
    CheckResult,
    CoverEngine,
    CoverParams,
    PlacedConfiguration,
    _Budget,
    _envelope,
    _envelopes_overlap,
    _iter_region_configs,
    _iter_subcube_corners,
    _pad,
    _shift_box,
    verify_template,
)
from .geometry import (
    Box,
    cube_box,
    decompose_into_cubes,
    dyadic_intervals_1d,
    iter_cube_corners,
    piece_level_counts,
)
from .lattice import is_rdf0_element
from .maximal import SimpleFunction
from .schedule import LevelSpec, Schedule

__all__ = [
    "AtomClass",
    "LevelRecord",
    "LeveledBasis",
    "build_basis",
    "verify_axioms",
    "AxiomReport",
    "independence_table",
    "sample_instances",
    "materialize_atoms",
    "counterexample_function",
]

ZERO = Fraction(0)
ONE = Fraction(1)

CELL = "cell"
RESIDUAL = "residual"

Flag = tuple
FlagVector = tuple[Flag, ...]


@dataclass(frozen=True)
class AtomClass:
    """All atoms of one level sharing history flags and relative shape.

    `shape_id` is a compact name for the shape within its level -- template
    cell ("c", cube_level, cell_index) or residual cube ("r", level) -- and
    doubles as the cheap dictionary key component (full geometric keys are
    60-coordinate tuples of rationals, far too heavy to hash per lookup).
    """

    level: int
    flags: FlagVector
    shape: Box
    count: int
    anchor: tuple[Fraction, ...]  # absolute anchor of one representative
    shape_id: tuple

    @property
    def key(self) -> tuple:
        return (self.flags, self.shape_id)

    def each_measure(self) -> Fraction:
        return self.shape.measure()

    def total_measure(self) -> Fraction:
        return self.count * self.shape.measure()

    def witness_box(self) -> Box:
        offsets = {i + 1: a for i, a in enumerate(self.anchor) if a}
        return self.shape.shifted(offsets) if offsets else self.shape

    def in_union(self, level: int) -> bool:
        return self.flags[level - 1][0] == CELL

    def in_selected_union(self, level: int) -> bool:
        f = self.flags[level - 1]
        return f[0] == CELL and f[1]

    def in_selected_central(self, level: int) -> bool:
        f = self.flags[level - 1]
        return f[0] == CELL and f[1] and f[2]

    def in_core(self) -> bool:
        return all(f[0] == CELL for f in self.flags)


@dataclass
class LevelRecord:
    """Exact per-level ledger of one construction level."""

    spec: LevelSpec
    rounds: int
    gamma: Fraction
    covered_measure: Fraction
    selected_union_measure: Fraction
    selected_central_measure: Fraction
    config_count: int
    selected_config_count: int
    piece_levels: tuple[int, ...]
    deferred_count: int
    deferred_measure: Fraction
    deferred_parents: frozenset
    engine: CoverEngine = field(repr=False)

    # duck-typed view for the L^p ledger helpers
    @property
    def level(self) -> int:
        return self.spec.level

    @property
    def eps(self) -> Fraction:
        return self.spec.eps

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def m(self) -> int:
        return self.spec.m

    @property
    def weight(self) -> Fraction:
        return self.spec.weight


@dataclass
class LeveledBasis:
    """A depth-J basis build: class tree, parent->child edges, ledgers."""

    space: Box
    schedule: Schedule
    rounds: int
    levels: list[LevelRecord]
    atoms: list[dict[tuple, AtomClass]]  # index = depth 0..J
    edges: list[dict[tuple[tuple, tuple], int]]  # edges[j]: (parent, child) -> atoms
    core_measure: Fraction
    core_witness_keys: list[tuple]  # one all-cell chain, per depth 1..J
    _leaf_totals: dict[tuple, Fraction] | None = field(
        default=None, repr=False, compare=False
    )

    @property
    def depth(self) -> int:
        return len(self.levels)

    def leaf_atoms(self) -> dict[tuple, AtomClass]:
        return self.atoms[-1]

    def class_count(self) -> int:
        return sum(len(layer) for layer in self.atoms)

    def leaf_totals(self) -> dict[tuple, Fraction]:
        """Total measure per leaf class, computed once (shapes are shared)."""
        if self._leaf_totals is None:
            measures: dict[tuple, Fraction] = {}
            totals: dict[tuple, Fraction] = {}
            for key, cls in self.atoms[-1].items():
                m = measures.get(cls.shape_id)
                if m is None:
                    m = measures[cls.shape_id] = cls.shape.measure()
                totals[key] = cls.count * m
            self._leaf_totals = totals
        return self._leaf_totals

    def union_of_selected_measure(self) -> Fraction:
        """|union of all selected starred families, within the core|."""
        totals = self.leaf_totals()
        total = ZERO
        for key, cls in self.atoms[-1].items():
            if cls.in_core() and any(
                cls.in_selected_union(j) for j in range(1, self.depth + 1)
            ):
                total += totals[key]
        return total

    def exceptional_lower_bound(self) -> Fraction:
        """max(0, |union of starred families on the core| - sum |F_j|)."""
        spill = sum((rec.selected_central_measure for rec in self.levels), ZERO)
        return max(ZERO, self.union_of_selected_measure() - spill)


def _add_offsets(
    base: Sequence[Fraction], extra: Sequence[Fraction]
) -> tuple[Fraction, ...]:
    n = max(len(base), len(extra))
    return tuple(
        (base[i] if i < len(base) else ZERO) + (extra[i] if i < len(extra) else ZERO)
        for i in range(n)
    )


def _level_representative(
    boxes: Sequence[Box], min_level: int, target: int
) -> tuple[Fraction, ...] | None:
    """Corner of one decomposition cube of `boxes` at exactly `target` level."""
    for box in boxes:
        pieces = {i: dyadic_intervals_1d(a, b) for i, a, b in box.coords}
        k0 = max(min_level, box.max_index - 1, 0)
        if target < k0:
            continue
        chosen: dict[int, Fraction] = {}
        ok = True
        need_exact = target > k0
        for i, plist in pieces.items():
            eligible = [(s, l) for s, l in plist if l <= target]
            if not eligible:
                ok = False
                break
            if need_exact:
                exact = [(s, l) for s, l in eligible if l == target]
                if exact:
                    chosen[i] = exact[0][0]
                    need_exact = False
                    continue
            chosen[i] = eligible[0][0]
        if not ok or need_exact:
            continue
        return tuple(chosen.get(i, ZERO) for i in range(1, target + 2))
    return None


class _WitnessFinder:
    """Deterministic representative offsets inside one covering template.

    Offsets are relative to the corner of the level-k cube being covered and
    point at the subcube corner hosting the representative instance; adding
    the cell shape (which is relative to that subcube corner) gives a
    genuine atom of the cover.
    """

    def __init__(self, engine: CoverEngine):
        self.engine = engine
        self.cell_offsets = lru_cache(maxsize=None)(self._cell_offsets)
        self.leaf_offsets = lru_cache(maxsize=None)(self._leaf_offsets)

    def _selected_corner(self, k: int) -> tuple[Fraction, ...]:
        index = (1 << self.engine.params.m) - 1
        return next(itertools.islice(_iter_subcube_corners(k), index, None))

    def _rep(self, k: int, level: int) -> tuple[Fraction, ...]:
        g = self.engine.geometry(k)
        corner = _level_representative(
            list(g.residual_boxes), self.engine.params.min_level, level
        )
        if corner is None:
            raise AssertionError(f"no residual representative at level {level} under {k}")
        return corner

    def _cell_offsets(self, k: int, t: int) -> dict[tuple[int, int, bool], tuple]:
        g = self.engine.geometry(k)
        origin = (ZERO,) * (k + 2)
        out: dict[tuple[int, int, bool], tuple] = {}
        selected = self._selected_corner(k)
        for idx in range(len(g.cells)):
            out[(k, idx, False)] = origin
            out[(k, idx, True)] = selected
        if t > 1:
            for p_level in sorted(g.residual_level_counts):
                sub = self.cell_offsets(p_level, t - 1)
                rep = None
                for key, offset in sub.items():
                    if key in out:
                        continue
                    if rep is None:
                        rep = self._rep(k, p_level)
                    out[key] = _add_offsets(rep, offset)
        return out

    def _leaf_offsets(self, k: int, t: int) -> dict[int, tuple]:
        if t == 0:
            return {k: (ZERO,) * (k + 1)}
        g = self.engine.geometry(k)
        out: dict[int, tuple] = {}
        for p_level in sorted(g.residual_level_counts):
            sub = self.leaf_offsets(p_level, t - 1)
            rep = None
            for level, offset in sub.items():
                if level in out:
                    continue
                if rep is None:
                    rep = self._rep(k, p_level)
                out[level] = _add_offsets(rep, offset)
        return out


def _check_template_accounting(engine: CoverEngine, k: int, rounds: int) -> None:
    """Derived exact identities tying class counts to the covering law."""
    p = engine.params
    cells = engine.cell_counts(k, rounds)
    families: dict[tuple[int, int], dict[bool, int]] = {}
    for (level, idx, sel), count in cells.items():
        families.setdefault((level, idx), {})[sel] = count
    for (level, idx), counts in families.items():
        total = counts.get(True, 0) + counts.get(False, 0)
        if counts.get(True, 0) << p.m != total:
            raise AssertionError(f"selection is not 1-in-2^m at ({level}, {idx})")
    covered = sum(
        (
            count * engine.geometry(level).cells[idx].box.measure()
            for (level, idx, _), count in cells.items()
        ),
        ZERO,
    )
    if covered != engine.covered(k, rounds):
        raise AssertionError(f"cell classes do not account the covered measure at {k}")
    leaves = engine.leaf_counts(k, rounds)
    leaf_measure = sum(
        (Fraction(n, 2 ** (lvl * (lvl + 1))) for lvl, n in leaves.items()), ZERO
    )
    residual = (1 - p.c) ** rounds * Fraction(1, 2 ** (k * (k + 1)))
    if leaf_measure != residual:
        raise AssertionError(f"leaf classes do not account the residual at {k}")
    if engine.config_count(k, rounds) % (1 << p.m):
        raise AssertionError(f"configuration families not block-divisible at {k}")


class _LevelTables:
    """Per-piece-level row tables of one covering engine, built once.

    A row is (flag suffix, shape id, offset key, per-cube atom count); the
    parent loop then only multiplies counts into dictionaries keyed by small
    tuples -- no geometry lookups or heavy hashing inside the hot path.
    """

    def __init__(self, engine: CoverEngine, rounds: int):
        self.engine = engine
        self.rounds = rounds
        self.shapes: dict[tuple, Box] = {}
        self.rows = lru_cache(maxsize=None)(self._rows)

    def _rows(self, piece_level: int) -> list[tuple[Flag, tuple, object, int]]:
        engine, rounds = self.engine, self.rounds
        _check_template_accounting(engine, piece_level, rounds)
        rows: list[tuple[Flag, tuple, object, int]] = []
        for (k_r, idx, sel), cnt in sorted(engine.cell_counts(piece_level, rounds).items()):
            cell = engine.geometry(k_r).cells[idx]
            sid = ("c", k_r, idx)
            self.shapes.setdefault(sid, cell.box)
            rows.append(((CELL, sel, cell.overlap is not None), sid, (k_r, idx, sel), cnt))
        for leaf_level, cnt in sorted(engine.leaf_counts(piece_level, rounds).items()):
            sid = ("r", leaf_level)
            self.shapes.setdefault(sid, cube_box(leaf_level, (ZERO,) * (leaf_level + 1)))
            rows.append(((RESIDUAL,), sid, leaf_level, cnt))
        return rows


def build_basis(
    space: Box,
    schedule: Schedule,
    rounds: int,
    *,
    class_cap: int = 200_000,
) -> LeveledBasis:
    """Run the level induction to the schedule's full depth.

    Exact per-parent identities (children tile the parent; covered, selected
    and residual parts have their closed-form fractions) are asserted during
    construction; `verify_axioms` re-derives them from the stored tree.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    root = AtomClass(0, (), space, 1, (), ("u",))
    atoms: list[dict[tuple, AtomClass]] = [{root.key: root}]
    edges: list[dict[tuple[tuple, tuple], int]] = []
    levels: list[LevelRecord] = []
    core_keys: list[tuple] = []
    space_measure = space.measure()

    for spec in schedule.levels:
        params = CoverParams(spec.eps, spec.d, spec.m)
        engine = CoverEngine(params)
        finder = _WitnessFinder(engine)
        tables = _LevelTables(engine, rounds)
        gamma = 1 - (1 - params.c) ** rounds
        # accumulator entries: key -> [count, anchor, flags, shape id]
        accum: dict[tuple, list] = {}
        level_edges: dict[tuple[tuple, tuple], int] = {}
        used_levels: set[int] = set()
        config_count = 0
        deferred_keys: set[tuple] = set()
        deferred_instances = 0
        deferred_measure = ZERO
        processed = ZERO

        for pkey, parent in atoms[-1].items():
            processed += parent.count * parent.shape.measure()
            counts = piece_level_counts([parent.shape], params.min_level)
            coarsest = min(counts)
            if (coarsest + 1) * (coarsest + 2) + params.d < (params.d - 1) ** 2 + 1:
                # The central box would be too large for a valid
                # configuration; park the whole atom in the residual.
                deferred_keys.add(pkey)
                deferred_instances += parent.count
                deferred_measure += parent.count * parent.shape.measure()
                flags = parent.flags + ((RESIDUAL,),)
                sid = ("d",) + parent.shape_id  # deferred body, kept whole
                tables.shapes.setdefault(sid, parent.shape)
                key = (flags, sid)
                slot = accum.get(key)
                if slot is None:
                    accum[key] = [parent.count, parent.anchor, flags, sid]
                else:
                    slot[0] += parent.count
                level_edges[(pkey, key)] = (
                    level_edges.get((pkey, key), 0) + parent.count
                )
                continue
            flag_cache: dict[Flag, FlagVector] = {}
            used_levels.update(counts)
            for piece_level, piece_count in sorted(counts.items()):
                rows = tables.rows(piece_level)
                mult = parent.count * piece_count
                config_count += mult * engine.config_count(piece_level, rounds)
                offsets_base = None
                for suffix, sid, offkey, cnt in rows:
                    flags = flag_cache.get(suffix)
                    if flags is None:
                        flags = flag_cache[suffix] = parent.flags + (suffix,)
                    key = (flags, sid)
                    n = mult * cnt
                    slot = accum.get(key)
                    if slot is None:
                        slot = accum[key] = [n, None, flags, sid]
                        if len(accum) > class_cap:
                            raise ValueError(
                                f"atom class count exceeded the cap {class_cap} "
                                f"at level {spec.level}"
                            )
                    else:
                        slot[0] += n
                    edge = (pkey, key)
                    level_edges[edge] = level_edges.get(edge, 0) + n
                    if slot[1] is None:
                        # First sighting: record one concrete representative
                        # (anchor of an actual atom inside this parent).
                        if offsets_base is None:
                            corner = _level_representative(
                                [parent.shape], params.min_level, piece_level
                            )
                            if corner is None:
                                raise AssertionError(
                                    "parent shape lost its piece level"
                                )
                            offsets_base = (
                                _add_offsets(parent.anchor, corner),
                                finder.cell_offsets(piece_level, rounds),
                                finder.leaf_offsets(piece_level, rounds),
                            )
                        base, cell_offs, leaf_offs = offsets_base
                        off = (
                            cell_offs[offkey]
                            if suffix[0] == CELL
                            else leaf_offs[offkey]
                        )
                        slot[1] = _add_offsets(base, off)

        if processed != space_measure:
            raise AssertionError("atoms stopped tiling the space")

        children: dict[tuple, AtomClass] = {}
        for key, (count, anchor, flags, sid) in accum.items():
            if anchor is None:
                raise AssertionError("atom class without a representative")
            children[key] = AtomClass(
                spec.level, flags, tables.shapes[sid], count, anchor, sid
            )
        shape_measures = {sid: box.measure() for sid, box in tables.shapes.items()}
        totals = {key: cls.count * shape_measures[key[1]] for key, cls in children.items()}

        # Per-parent exact identities, recomputed from the recorded edges.
        _check_parent_split(
            atoms[-1], children, level_edges, gamma, params, deferred_keys,
            measures=shape_measures,
        )

        covered = gamma * (space_measure - deferred_measure)
        selected_union = Fraction(1, 2**spec.m) * covered
        if config_count % (1 << spec.m):
            raise AssertionError("global configuration count not block-divisible")
        record = LevelRecord(
            spec=spec,
            rounds=rounds,
            gamma=gamma,
            covered_measure=covered,
            selected_union_measure=selected_union,
            selected_central_measure=selected_union / params.weight,
            config_count=config_count,
            selected_config_count=config_count >> spec.m,
            piece_levels=tuple(sorted(used_levels)),
            deferred_count=deferred_instances,
            deferred_measure=deferred_measure,
            deferred_parents=frozenset(deferred_keys),
            engine=engine,
        )
        # Ledger consistency against class sums: the selected unions are
        # tiled by the selected cells, the plain family by its central ones.
        sel_sum = sum(
            (totals[key] for key, c in children.items() if c.in_selected_union(spec.level)),
            ZERO,
        )
        cen_sum = sum(
            (totals[key] for key, c in children.items() if c.in_selected_central(spec.level)),
            ZERO,
        )
        if sel_sum != record.selected_union_measure:
            raise AssertionError("selected-union ledger mismatch")
        if cen_sum != record.selected_central_measure:
            raise AssertionError("selected-central ledger mismatch")
        levels.append(record)
        edges.append(level_edges)
        atoms.append(children)
        core_key = min((key for key, c in children.items() if c.in_core()), default=None)
        if core_key is None:
            raise AssertionError("no fully covered atom class survived")
        core_keys.append(core_key)

    if levels:
        leaf_totals = totals  # the last level's totals are the leaf totals
        core_measure = sum(
            (leaf_totals[key] for key, c in atoms[-1].items() if c.in_core()), ZERO
        )
        expected_core = space_measure
        for rec in levels:
            expected_core *= rec.gamma
        if core_measure != expected_core:
            raise AssertionError("core measure violates the per-level product law")
    else:
        leaf_totals = {root.key: space_measure}
        core_measure = space_measure
    return LeveledBasis(
        space=space,
        schedule=schedule,
        rounds=rounds,
        levels=levels,
        atoms=atoms,
        edges=edges,
        core_measure=core_measure,
        core_witness_keys=core_keys,
        _leaf_totals=leaf_totals,
    )


def _check_parent_split(
    parents: dict[tuple, AtomClass],
    children: dict[tuple, AtomClass],
    level_edges: dict[tuple[tuple, tuple], int],
    gamma: Fraction,
    params: CoverParams,
    deferred: frozenset | set,
    measures: dict[tuple, Fraction] | None = None,
) -> None:
    """Children tile each parent; covered/selected parts match closed forms."""
    if measures is None:
        measures = {}
        for cls in children.values():
            if cls.shape_id not in measures:
                measures[cls.shape_id] = cls.shape.measure()
    totals: dict[tuple, Fraction] = {}
    covered: dict[tuple, Fraction] = {}
    selected: dict[tuple, Fraction] = {}
    central: dict[tuple, Fraction] = {}
    for (pkey, ckey), count in level_edges.items():
        flag = ckey[0][-1]
        amount = count * measures[ckey[1]]
        totals[pkey] = totals.get(pkey, ZERO) + amount
        if flag[0] == CELL:
            covered[pkey] = covered.get(pkey, ZERO) + amount
            if flag[1]:
                selected[pkey] = selected.get(pkey, ZERO) + amount
                if flag[2]:
                    central[pkey] = central.get(pkey, ZERO) + amount
    frac = Fraction(1, 2**params.m)
    for pkey, parent in parents.items():
        body = parent.count * parent.shape.measure()
        if totals.get(pkey, ZERO) != body:
            raise AssertionError(
                f"children do not tile a parent atom (off by {totals.get(pkey, ZERO) - body})"
            )
        if pkey in deferred:
            continue
        if covered.get(pkey, ZERO) != gamma * body:
            raise AssertionError(
                "per-atom covered fraction violates the covering law "
                f"(off by {covered.get(pkey, ZERO) - gamma * body})"
            )
        if selected.get(pkey, ZERO) != frac * gamma * body:
            raise AssertionError(
                "per-atom selected fraction is not 2^-m of covered "
                f"(off by {selected.get(pkey, ZERO) - frac * gamma * body})"
            )
        if central.get(pkey, ZERO) != frac * gamma * body / params.weight:
            raise AssertionError(
                "per-atom central fraction is not 1/W of selected "
                f"(off by {central.get(pkey, ZERO) - frac * gamma * body / params.weight})"
            )


# ----------------------------------------------------------------------
# Derived tables and samples
# ----------------------------------------------------------------------


def independence_table(
    basis: LeveledBasis,
) -> list[tuple[tuple[int, ...], Fraction, Fraction]]:
    """(level subset, class-sum measure on the core, closed form) per subset.

    Classes are bucketed by their selection signature first (at most 2^J
    buckets), so every subset sum touches buckets, not the 10^4+ classes.
    """
    if not basis.levels:
        return []
    totals = basis.leaf_totals()
    level_ids = [rec.level for rec in basis.levels]
    buckets: dict[frozenset, Fraction] = {}
    for key, cls in basis.leaf_atoms().items():
        if not cls.in_core():
            continue
        sig = frozenset(j for j in level_ids if cls.in_selected_union(j))
        buckets[sig] = buckets.get(sig, ZERO) + totals[key]
    out = []
    for r in range(1, len(level_ids) + 1):
        for subset in itertools.combinations(level_ids, r):
            wanted = frozenset(subset)
            lhs = sum(
                (amount for sig, amount in buckets.items() if wanted <= sig), ZERO
            )
            rhs = basis.core_measure
            for j in subset:
                rhs *= Fraction(1, 2 ** basis.levels[level_ids.index(j)].m)
            out.append((subset, lhs, rhs))
    return out


def sample_instances(
    basis: LeveledBasis, level: int, limit: int = 40
) -> list[PlacedConfiguration]:
    """Absolute configuration instances of one level, inside a core chain.

    Level-j instances are taken over the witness atom of the level-(j-1)
    core chain class, so samples of successive levels genuinely nest.
    """
    rec = basis.levels[level - 1]
    if level == 1:
        region = basis.space
    else:
        region = basis.atoms[level - 1][basis.core_witness_keys[level - 2]].witness_box()
    pieces = decompose_into_cubes([region], rec.engine.params.min_level)
    return list(_iter_region_configs(rec.engine, pieces, basis.rounds, 1, _Budget(limit)))


# ----------------------------------------------------------------------
# Axiom verification
# ----------------------------------------------------------------------


@dataclass
class AxiomReport:
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def by_prefix(self, prefix: str) -> list[CheckResult]:
        return [c for c in self.checks if c.name.startswith(prefix)]


def verify_axioms(
    basis: LeveledBasis,
    *,
    sample_limit: int = 30,
    template_level_cap: int = 10,
) -> AxiomReport:
    """Exact verification of the four axioms on the built tree.

    Base-family membership and disjoint-union identities are checked at
    template level (all piece levels) and on sampled absolute instances;
    nesting on every cross-level member pair of the sample; per-atom
    fractions are re-derived from the stored edges, and the independence
    identity for every nonempty level subset.
    """
    checks: list[CheckResult] = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        checks.append(CheckResult(name, bool(ok), detail))

    samples = {
        rec.level: sample_instances(basis, rec.level, sample_limit)
        for rec in basis.levels
    }

    for rec in basis.levels:
        j = rec.level
        engine = rec.engine
        # Every configuration's central box belongs to the base family,
        # entered at the step the cube grading dictates.
        a1 = True
        for piece_level in rec.piece_levels:
            witness = is_rdf0_element(engine.geometry(piece_level).config.center)
            if witness is None or witness.m != (piece_level + 1) * (piece_level + 2) + rec.d:
                a1 = False
        for inst in samples[j]:
            found = is_rdf0_element(inst.config.center)
            if found is None:
                a1 = False
        check(f"base-family-membership-level-{j}", a1)
        shallow = [k for k in rec.piece_levels if k <= template_level_cap]
        for k in shallow:
            for result in verify_template(engine, k, basis.rounds):
                check(f"template-level-{j}-k{k}-{result.name}", result.passed, result.detail)
        # Sampled: distinct instance unions of one level are disjoint.
        sample = samples[j]
        envelopes = [_envelope(inst.config) for inst in sample]
        disjoint = True
        for a in range(len(sample)):
            for b in range(a + 1, len(sample)):
                if not _envelopes_overlap(envelopes[a], envelopes[b]):
                    continue
                if any(
                    x.intersect(y) is not None
                    for x in sample[a].config.members
                    for y in sample[b].config.members
                ):
                    disjoint = False
        check(f"sampled-unions-disjoint-level-{j}", disjoint, f"{len(sample)} instances")

    # Per-atom split identities from stored edges.
    for rec, level_edges in zip(basis.levels, basis.edges):
        parents = basis.atoms[rec.level - 1]
        children = basis.atoms[rec.level]
        try:
            _check_parent_split(
                parents,
                children,
                level_edges,
                rec.gamma,
                rec.engine.params,
                deferred=rec.deferred_parents,
            )
            check(f"per-atom-fractions-level-{rec.level}", True,
                  f"{len(parents)} atom classes")
        except AssertionError as err:
            check(f"per-atom-fractions-level-{rec.level}", False, str(err))

    # Cross-level member pairs are nested or disjoint.
    a3 = True
    bad = ""
    for (j1, s1), (j2, s2) in itertools.combinations(samples.items(), 2):
        for inst1 in s1:
            for inst2 in s2:
                for x in inst1.config.members:
                    for y in inst2.config.members:
                        hit = x.intersect(y)
                        if hit is None:
                            continue
                        if not (x.contains(y) or y.contains(x)):
                            a3 = False
                            bad = f"levels {j1}/{j2}"
    check("cross-level-nested-or-disjoint", a3, bad)

    # Global independence of the selected families on the core.
    table = independence_table(basis)
    ok = all(lhs == rhs for _, lhs, rhs in table)
    check("independence-all-subsets", ok, f"{len(table)} subsets")

    # Ledger consistency across depths: level quantities re-summed at leaves.
    totals = basis.leaf_totals()
    for rec in basis.levels:
        star = ZERO
        plain = ZERO
        for key, cls in basis.leaf_atoms().items():
            if cls.in_selected_union(rec.level):
                star += totals[key]
                if cls.in_selected_central(rec.level):
                    plain += totals[key]
        check(
            f"ledger-leaves-level-{rec.level}",
            star == rec.selected_union_measure
            and plain == rec.selected_central_measure,
        )
    return AxiomReport(checks)


# ----------------------------------------------------------------------
# Desk-scale materialization
# ----------------------------------------------------------------------


def materialize_atoms(
    basis: LeveledBasis, *, cap: int = 10**6
) -> list[tuple[Box, FlagVector]]:
    """Every atom of the basis as an explicit box, with its history flags.

    Residual parts are kept as the template's residual boxes (not refined
    into cubes), which keeps hand-scale spaces enumerable. Raises if the
    instance count would exceed `cap`; real builds are astronomically past
    it -- this exists for desk-scale spaces and tests.
    """
    regions: list[tuple[Box, FlagVector]] = [(basis.space, ())]
    for rec in basis.levels:
        engine = rec.engine
        params = engine.params
        next_regions: list[tuple[Box, FlagVector]] = []
        for region, flags in regions:
            pieces = decompose_into_cubes([region], params.min_level)
            stack: list[tuple[int, tuple[Fraction, ...], int]] = []
            for cls in pieces:
                for corner in iter_cube_corners(cls):
                    stack.append((cls.level, tuple(corner), basis.rounds))
                    if len(stack) > cap:
                        raise ValueError(f"materialization exceeds the cap {cap}")
            while stack:
                k, corner, t = stack.pop()
                g = engine.geometry(k)
                for sib_index, sib_corner in enumerate(_iter_subcube_corners(k)):
                    absolute = tuple(
                        a + b for a, b in zip(_pad(corner, k + 2), sib_corner)
                    )
                    selected = (sib_index & ((1 << params.m) - 1)) == (1 << params.m) - 1
                    for cell in g.cells:
                        next_regions.append(
                            (
                                _shift_box(cell.box, absolute),
                                flags + ((CELL, selected, cell.overlap is not None),),
                            )
                        )
                    if t > 1:
                        for piece in engine.residual_pieces(k):
                            for piece_corner in iter_cube_corners(piece):
                                shifted = tuple(
                                    a + b
                                    for a, b in zip(
                                        _pad(absolute, piece.level + 1), piece_corner
                                    )
                                )
                                stack.append((piece.level, shifted, t - 1))
                                if len(stack) + len(next_regions) > cap:
                                    raise ValueError(
                                        f"materialization exceeds the cap {cap}"
                                    )
                    else:
                        for box in g.residual_boxes:
                            next_regions.append(
                                (_shift_box(box, absolute), flags + ((RESIDUAL,),))
                            )
                    if len(next_regions) > cap:
                        raise ValueError(f"materialization exceeds the cap {cap}")
        regions = next_regions
    return regions


def counterexample_function(basis: LeveledBasis, *, cap: int = 10**6) -> SimpleFunction:
    """The extremal function: eps_j^-1 on the plain family of the deepest
    level containing the atom, zero elsewhere. Desk-scale only (see
    `materialize_atoms`)."""
    if not basis.levels:
        raise ValueError("basis has no levels")
    inverse = {rec.level: 1 / Fraction(rec.eps) for rec in basis.levels}
    pieces: list[tuple[Box, Fraction]] = []
    for box, flags in materialize_atoms(basis, cap=cap):
        value = ZERO
        for j, flag in enumerate(flags, start=1):
            if flag[0] == CELL and flag[1] and flag[2]:
                value = max(value, inverse[j])
        if value:
            pieces.append((box, value))
    return SimpleFunction(tuple(pieces))
