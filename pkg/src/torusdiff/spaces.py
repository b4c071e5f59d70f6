"""Companion measure spaces, the gluing combinator, and interval transfer.

Two hand-scale weighted spaces exercise differentiation behavior that the
torus construction cannot: a ladder space whose basis differentiates every
finite L^p but not L^infinity, and a weighted grid where truncating a
function strictly drops its lower derivate on the whole interval part.
`glue` combines range verdicts of two spaces with disjoint carriers, and
`transfer_to_interval` replays a leveled basis as nested subintervals of
[0,1], preserving all measures exactly.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from .basis import CELL, AtomClass, LeveledBasis
from .maximal import ratio_key
from .schedule import RangeVerdict, Schedule, classify_diff_range

__all__ = [
    "AtomPoint",
    "WeightedSpace",
    "SpaceSet",
    "SpaceFunction",
    "set_measure",
    "set_integral",
    "space_average",
    "example_e1",
    "e1_pair_average",
    "e1_derivates",
    "e1_window_bounds",
    "GridReport",
    "example_e4",
    "e4_weight",
    "e4_block_set",
    "e4_function_values",
    "e4_block_average",
    "e4_truncated_average",
    "e4_truncated_limit",
    "RangeSource",
    "schedule_range_source",
    "e1_range_source",
    "GluedSpace",
    "glue",
    "glued_basis",
    "glued_average",
    "IntervalLattice",
    "IntervalUnionBasis",
    "transfer_to_interval",
    "family_weak_type",
    "seeded_class_function",
]

ZERO = Fraction(0)
ONE = Fraction(1)
TWO_THIRDS = Fraction(2, 3)


# ----------------------------------------------------------------------
# Weighted point-and-interval spaces
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class AtomPoint:
    """A weighted atom of the discrete part, sitting at (u, v) in the plane."""

    point_id: tuple
    position: tuple[Fraction, Fraction]
    weight: Fraction


@dataclass(frozen=True)
class WeightedSpace:
    """An interval part plus finitely many weighted atoms.

    `interval_measure` is "lebesgue" (length) or "uncountable-infinite"
    (every uncountable subset of the interval part has infinite measure,
    every countable one measure zero). The metric tag is "columnar"
    (distance |v-v'| within a column, 1 across columns) or
    "euclidean-truncated".
    """

    name: str
    interval_measure: str
    atoms: dict[tuple, AtomPoint]
    metric: str

    def atom_mass(self) -> Fraction:
        return sum((a.weight for a in self.atoms.values()), ZERO)


@dataclass(frozen=True)
class SpaceSet:
    """A basis element: interval pieces, single interval points, atoms."""

    label: str
    interval_pieces: tuple[tuple[Fraction, Fraction], ...] = ()
    interval_points: tuple[Fraction, ...] = ()
    atom_ids: frozenset = frozenset()


@dataclass(frozen=True)
class SpaceFunction:
    """Constant on the interval part, explicit on atoms (with a default)."""

    interval_value: Fraction = ZERO
    atom_default: Fraction = ZERO
    atom_values: dict = field(default_factory=dict)

    def at_atom(self, point_id: tuple) -> Fraction:
        return self.atom_values.get(point_id, self.atom_default)


def set_measure(space: WeightedSpace, sset: SpaceSet) -> Fraction:
    """Exact measure; interval points are countable, hence never weigh."""
    total = ZERO
    if sset.interval_pieces:
        if space.interval_measure != "lebesgue":
            raise ValueError(
                "interval pieces are uncountable: measure is not a rational here"
            )
        total += sum((b - a for a, b in sset.interval_pieces), ZERO)
    for point_id in sset.atom_ids:
        total += space.atoms[point_id].weight
    return total


def set_integral(space: WeightedSpace, f: SpaceFunction, sset: SpaceSet) -> Fraction:
    total = ZERO
    if sset.interval_pieces and space.interval_measure == "lebesgue":
        total += f.interval_value * sum((b - a for a, b in sset.interval_pieces), ZERO)
    for point_id in sset.atom_ids:
        total += space.atoms[point_id].weight * f.at_atom(point_id)
    return total


def space_average(space: WeightedSpace, f: SpaceFunction, sset: SpaceSet) -> Fraction:
    return set_integral(space, f, sset) / set_measure(space, sset)


# ----------------------------------------------------------------------
# The ladder space: differentiates L^p for all finite p, fails at infinity
# ----------------------------------------------------------------------


def ladder_space(
    rows: int = 12,
    columns: Sequence[Fraction] = (Fraction(1, 3), Fraction(1, 2), Fraction(2, 3)),
) -> WeightedSpace:
    """Columns of unit-weight atoms at heights 2^-j over sampled interval points.

    The interval part carries the uncountable-infinite measure, so single
    interval points weigh nothing and every average over a {floor point,
    ladder point} pair reads off the ladder point's value alone.
    """
    atoms = {}
    for u in columns:
        for j in range(1, rows + 1):
            pid = ("K", u, j)
            atoms[pid] = AtomPoint(pid, (u, Fraction(1, 2**j)), ONE)
    return WeightedSpace("ladder", "uncountable-infinite", atoms, "columnar")


def example_e1(
    rows: int = 12,
    columns: Sequence[Fraction] = (Fraction(1, 3), Fraction(1, 2), Fraction(2, 3)),
) -> tuple[WeightedSpace, list[SpaceSet]]:
    """The ladder fixture: singleton sets plus {floor, ladder point} pairs."""
    space = ladder_space(rows, columns)
    sets: list[SpaceSet] = []
    for pid in space.atoms:
        _, u, j = pid
        sets.append(SpaceSet(f"point-{u}-{j}", atom_ids=frozenset({pid})))
        sets.append(
            SpaceSet(f"pair-{u}-{j}", interval_points=(u,), atom_ids=frozenset({pid}))
        )
    return space, sets


def e1_pair_average(space: WeightedSpace, f: SpaceFunction, u: Fraction, j: int) -> Fraction:
    """Average over {(u,0), (u,2^-j)}: the floor point carries no mass."""
    pair = SpaceSet("pair", interval_points=(u,), atom_ids=frozenset({("K", u, j)}))
    return space_average(space, f, pair)


def e1_derivates(
    f: SpaceFunction, point: tuple
) -> tuple[Fraction, Fraction]:
    """(upper, lower) derivate of f at a point of the ladder space.

    Closed form from the set structure: sequences contracting to a ladder
    point are eventually the singleton (both derivates = f there), and
    sequences contracting to a floor point are eventually pairs whose
    averages read the column values at heights 2^-j, j -> infinity; with
    finitely many explicit values the tail is the default.
    """
    if point[0] == "K":
        value = f.at_atom(point)
        return value, value
    # floor point: finitely many overrides perturb only finitely many pair
    # averages, so both derivates equal the default column tail value
    tail = f.atom_default
    return tail, tail


def e1_window_bounds(
    space: WeightedSpace,
    f: SpaceFunction,
    point: tuple,
    min_row: int,
) -> tuple[Fraction, Fraction]:
    """Min/max average over basis sets containing `point` of diameter <= 2^-min_row."""
    if point[0] == "K":
        _, u, j = point
        values = [f.at_atom(point)]  # the singleton
        if Fraction(1, 2**j) <= Fraction(1, 2**min_row):
            values.append(e1_pair_average(space, f, u, j))
    else:
        _, u = point
        rows = sorted(jj for (_, uu, jj) in space.atoms if uu == u and jj >= min_row)
        if not rows:
            raise ValueError("no sampled sets this deep; raise the row truncation")
        values = [e1_pair_average(space, f, u, jj) for jj in rows]
    return min(values), max(values)


# ----------------------------------------------------------------------
# The weighted grid: truncation strictly drops the lower derivate
# ----------------------------------------------------------------------


def e4_weight(i: int, j: int) -> Fraction:
    """Weight of the grid atom (i 2^-2j, 2^-j): 2^(-2j-r), r = 2^j ceil(i/2^j) - i."""
    if not (1 <= i <= 4**j):
        raise ValueError("need 1 <= i <= 2^(2j)")
    r = (2**j) * -(-i // (2**j)) - i
    return Fraction(1, 2 ** (2 * j + r))


def weighted_grid_space(j_max: int, *, atom_rows: int | None = None) -> WeightedSpace:
    """Rows j <= atom_rows of the grid with explicit atoms (4^j per row).

    The closed-form tables go deeper than the explicit atoms; rows above
    `atom_rows` (default min(j_max, 6)) are handled symbolically.
    """
    atom_rows = min(j_max, 6) if atom_rows is None else atom_rows
    atoms = {}
    for j in range(1, atom_rows + 1):
        for i in range(1, 4**j + 1):
            pid = ("K", i, j)
            atoms[pid] = AtomPoint(
                pid, (Fraction(i, 4**j), Fraction(1, 2**j)), e4_weight(i, j)
            )
    return WeightedSpace("weighted-grid", "lebesgue", atoms, "euclidean-truncated")


def e4_block_set(i: int, j: int) -> SpaceSet:
    """I_ij together with the whole 2^j-column block K*_ij containing atom i."""
    c = -(-i // (2**j))  # ceil(i / 2^j)
    lo = Fraction(i - 1, 4**j)
    hi = Fraction(i, 4**j)
    block = frozenset(("K", k, j) for k in range((c - 1) * 2**j + 1, c * 2**j + 1))
    return SpaceSet(f"block-{i}-{j}", interval_pieces=((lo, hi),), atom_ids=block)


def e4_function_values(space: WeightedSpace, threshold: int | None = None) -> SpaceFunction:
    """Explicit grid function on a space's atoms: value 2^-r at (i,j).

    With `threshold` = n, values below 2^-n are cut to zero (the truncated
    variant g_n; the interval value 2/3 survives every cut).
    """
    values = {}
    for pid in space.atoms:
        _, i, j = pid
        r = (2**j) * -(-i // (2**j)) - i
        value = Fraction(1, 2**r)
        if threshold is not None and value < Fraction(1, 2**threshold):
            value = ZERO
        values[pid] = value
    return SpaceFunction(TWO_THIRDS, ZERO, values)


def e4_block_average(j: int) -> Fraction:
    """Exact average of the reference function over any block set of row j.

    Closing the geometric sums: with B = 2^j block length,
    integral = 2^-2j (2/3 + (4/3)(1 - 4^-B)) over measure 2^-2j (3 - 2^(1-B)).
    """
    b = 2**j
    numerator = TWO_THIRDS + Fraction(4, 3) * (1 - Fraction(1, 4**b))
    denominator = 3 - Fraction(2, 2**b)
    return numerator / denominator


def e4_truncated_average(j: int, n: int) -> Fraction:
    """Average over a row-j block of the threshold-n truncation."""
    b = 2**j
    keep = min(n, b - 1)  # atom values 2^-r survive for r <= n
    numerator = TWO_THIRDS + Fraction(4, 3) * (1 - Fraction(1, 4 ** (keep + 1)))
    denominator = 3 - Fraction(2, 2**b)
    return numerator / denominator


def e4_truncated_limit(n: int) -> Fraction:
    """Deep-row limit of the truncated averages: strictly below 2/3."""
    return (TWO_THIRDS + Fraction(4, 3) * (1 - Fraction(1, 4 ** (n + 1)))) / 3


@dataclass
class GridReport:
    space: WeightedSpace
    rows: list[tuple[int, Fraction, Fraction | None]]  # (j, avg, truncated avg)
    reference_limit: Fraction
    truncated_limit: Fraction | None
    deviations_bounded: bool
    fitted_deviation_constant: Fraction  # max_j |avg_j - 2/3| 2^j


def example_e4(j_max: int, n: int | None = None) -> GridReport:
    """Exact block-average table of the grid fixture, rows 1..j_max.

    Row averages converge to 2/3; the threshold-n truncation converges to a
    strictly smaller limit although it agrees with the reference function
    ever more closely pointwise. The fitted constant C is the smallest one
    with |avg_j - 2/3| <= C 2^-j over the table (exact).
    """
    if not (1 <= j_max <= 20):
        raise ValueError("need 1 <= j_max <= 20 (denominators reach 2^(2^j))")
    if n is not None and not (1 <= n < j_max):
        raise ValueError("need 1 <= n < j_max")
    rows = []
    bounded = True
    fitted = ZERO
    for j in range(1, j_max + 1):
        avg = e4_block_average(j)
        truncated = e4_truncated_average(j, n) if n is not None else None
        deviation = abs(avg - TWO_THIRDS)
        fitted = max(fitted, deviation * 2**j)
        if deviation > Fraction(4, 2**j):
            bounded = False
        rows.append((j, avg, truncated))
    return GridReport(
        space=weighted_grid_space(j_max),
        rows=rows,
        reference_limit=TWO_THIRDS,
        truncated_limit=e4_truncated_limit(n) if n is not None else None,
        deviations_bounded=bounded,
        fitted_deviation_constant=fitted,
    )


# ----------------------------------------------------------------------
# Gluing: range probes of disjoint components intersect
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class RangeSource:
    """A named carrier exposing differentiation-range verdicts per exponent."""

    name: str
    probe: Callable[[Fraction | None], RangeVerdict] = field(compare=False)


def schedule_range_source(schedule: Schedule) -> RangeSource:
    name = f"torus-{schedule.variant}-p{schedule.p0}"
    return RangeSource(name, lambda p: classify_diff_range(schedule, p))


def e1_range_source() -> RangeSource:
    """The ladder space differentiates every finite L^p; infinity fails.

    The failure at infinity rests on an uncountability argument, so the
    verdict there is analytic rather than sampled -- flagged in the reason.
    """

    def probe(p: Fraction | None) -> RangeVerdict:
        if p is None:
            return RangeVerdict(
                p=None,
                inside=False,
                exponent=ZERO,
                log_power=ZERO,
                reason="indicator of the ladder has derivate 1 on the massless floor"
                " (analytic verdict, not probed numerically)",
            )
        p = Fraction(p)
        if p < 1:
            raise ValueError("exponents below 1 are not in scope")
        return RangeVerdict(
            p=p,
            inside=True,
            exponent=ZERO,
            log_power=ZERO,
            reason="pair averages of any p-integrable function vanish along columns",
        )

    return RangeSource("ladder", probe)


@dataclass(frozen=True)
class GluedSpace:
    """Two components at mutual distance 1; bases never mix components."""

    first: RangeSource
    second: RangeSource

    @property
    def name(self) -> str:
        return f"glue({self.first.name}, {self.second.name})"

    def probe(self, p: Fraction | None) -> RangeVerdict:
        a = self.first.probe(p)
        b = self.second.probe(p)
        return RangeVerdict(
            p=a.p,
            inside=a.inside and b.inside,
            exponent=max(a.exponent, b.exponent),
            log_power=max(a.log_power, b.log_power),
            reason=f"[{self.first.name}] {a.reason} AND [{self.second.name}] {b.reason}",
        )

    def as_source(self) -> RangeSource:
        return RangeSource(self.name, self.probe)


def glue(first: RangeSource, second: RangeSource) -> GluedSpace:
    """Components keep their own measure and metric; cross distance is 1,
    so no basis element meets both carriers and range verdicts intersect."""
    return GluedSpace(first, second)


def glued_basis(
    first_sets: Sequence[SpaceSet], second_sets: Sequence[SpaceSet]
) -> list[tuple[str, SpaceSet]]:
    """The combined basis: every element carries its component tag."""
    return [("first", s) for s in first_sets] + [("second", s) for s in second_sets]


def glued_average(
    first: tuple[WeightedSpace, SpaceFunction],
    second: tuple[WeightedSpace, SpaceFunction],
    element: tuple[str, SpaceSet],
) -> Fraction:
    """Average over one element of a glued basis.

    Components sit at mutual distance 1, so an element lies entirely in one
    carrier: the average uses that component's measure and function only.
    """
    tag, sset = element
    if tag == "first":
        space, f = first
    elif tag == "second":
        space, f = second
    else:
        raise ValueError(f"unknown component tag {tag!r}")
    return space_average(space, f, sset)


# ----------------------------------------------------------------------
# Transfer to interval unions on [0,1]
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class IntervalLattice:
    """An arithmetic family of equal-length intervals inside [0,1].

    Starts form the grid start + sum_i t_i * stride_i, 0 <= t_i < count_i;
    one lattice per ancestor chain keeps class images closed-form instead
    of materializing astronomically many intervals.
    """

    start: Fraction
    strides: tuple[tuple[Fraction, int], ...]
    length: Fraction

    def interval_count(self) -> int:
        n = 1
        for _, count in self.strides:
            n *= count
        return n

    def total_length(self) -> Fraction:
        return self.interval_count() * self.length

    def iter_starts(self, limit: int = 64) -> Iterator[Fraction]:
        axes = []
        for stride, count in self.strides:
            axes.append([stride * t for t in range(min(count, limit))])
        for combo in itertools.product(*axes):
            yield self.start + sum(combo, ZERO)

    def last_start(self) -> Fraction:
        return self.start + sum(
            (stride * (count - 1) for stride, count in self.strides), ZERO
        )


@dataclass
class IntervalUnionBasis:
    """A leveled basis replayed as nested interval unions of [0,1].

    `lattices[depth][class key]` lists one lattice per ancestor chain;
    `lengths[depth][class key]` is the total allocated length, and equals
    the source class measure exactly (asserted at construction).
    """

    source: LeveledBasis
    lattices: list[dict[tuple, list[IntervalLattice]]]
    lengths: list[dict[tuple, Fraction]]

    def member_length(self, predicate: Callable[[AtomClass], bool]) -> Fraction:
        """Total image length of the union of leaf classes matching `predicate`."""
        return sum(
            (
                self.lengths[-1][key]
                for key, cls in self.source.atoms[-1].items()
                if predicate(cls)
            ),
            ZERO,
        )


def transfer_to_interval(
    basis: LeveledBasis, *, lattice_cap: int = 200_000
) -> IntervalUnionBasis:
    """Allocate [0, |U|) to the atom tree, depth-first, children in key order.

    Each parent instance's interval is split among its child classes in
    deterministic order (per-instance child counts are the edge counts
    divided by the parent count -- whole numbers, since all instances of a
    class are congruent). Lengths equal source measures exactly; nesting
    and disjointness hold by construction and are re-asserted on samples.
    """
    root_key = next(iter(basis.atoms[0]))
    space_measure = basis.space.measure()
    lattices: list[dict[tuple, list[IntervalLattice]]] = [
        {root_key: [IntervalLattice(ZERO, (), space_measure)]}
    ]
    lengths: list[dict[tuple, Fraction]] = [{root_key: space_measure}]

    for depth, level_edges in enumerate(basis.edges, start=1):
        parents = basis.atoms[depth - 1]
        children = basis.atoms[depth]
        by_parent: dict[tuple, list[tuple[tuple, int]]] = {}
        for (pkey, ckey), count in level_edges.items():
            by_parent.setdefault(pkey, []).append((ckey, count))
        layer: dict[tuple, list[IntervalLattice]] = {}
        layer_lengths: dict[tuple, Fraction] = {}
        total = 0
        for pkey, edge_list in sorted(by_parent.items()):
            parent = parents[pkey]
            offset = ZERO
            for ckey, count in sorted(edge_list):
                child = children[ckey]
                per_instance, remainder = divmod(count, parent.count)
                if remainder:
                    raise AssertionError("edge count not congruent across instances")
                child_length = child.shape.measure()
                for lat in lattices[depth - 1][pkey]:
                    new = IntervalLattice(
                        lat.start + offset,
                        lat.strides + ((child_length, per_instance),),
                        child_length,
                    )
                    layer.setdefault(ckey, []).append(new)
                    layer_lengths[ckey] = layer_lengths.get(ckey, ZERO) + new.total_length()
                    total += 1
                    if total > lattice_cap:
                        raise ValueError(
                            f"interval lattice count exceeds the cap {lattice_cap}; "
                            "transfer shallower bases or raise the cap"
                        )
                offset += per_instance * child_length
            if offset != parent.shape.measure():
                raise AssertionError("child allocation does not fill the parent interval")
        for ckey, cls in children.items():
            if layer_lengths.get(ckey, ZERO) != cls.count * cls.shape.measure():
                raise AssertionError("image length differs from source measure")
        lattices.append(layer)
        lengths.append(layer_lengths)
    return IntervalUnionBasis(basis, lattices, lengths)


# ----------------------------------------------------------------------
# Weak-type ratios over a class partition (shared by both carriers)
# ----------------------------------------------------------------------


def seeded_class_function(keys: Sequence[tuple], seed: int) -> dict[tuple, Fraction]:
    """Deterministic nonnegative rational values on leaf classes."""
    rng = random.Random(seed)
    return {
        key: Fraction(rng.randrange(0, 9), rng.randrange(1, 5))
        for key in sorted(keys)
    }


def family_weak_type(
    sizes: dict[tuple, Fraction],
    classes: dict[tuple, AtomClass],
    values: dict[tuple, Fraction],
    levels: Sequence[int],
    p: Fraction,
) -> tuple[Fraction, Fraction, list[tuple[str, Fraction]]]:
    """sup over attained averages lam of lam^p mass{M > lam} / ||f||_p^p.

    The averaging family is the per-level covered sets and selected unions
    (all unions of whole leaf classes, so every quantity is a finite exact
    sum). Returns (best ratio key, ||f||_p^p, per-member averages).
    """
    p = Fraction(p)
    if p.denominator != 1:
        raise ValueError("exact ratios here need integer p")
    norm_p = sum((values[k] ** p * sizes[k] for k in sizes), ZERO)
    if norm_p == 0:
        raise ValueError("test function vanishes")
    members: list[tuple[str, Callable[[AtomClass], bool]]] = []
    for j in levels:
        members.append((f"covered-{j}", lambda c, j=j: c.in_union(j)))
        members.append((f"selected-{j}", lambda c, j=j: c.in_selected_union(j)))
    averages: list[tuple[str, Fraction]] = []
    for label, predicate in members:
        mass = ZERO
        integral = ZERO
        for key, cls in classes.items():
            if predicate(cls):
                mass += sizes[key]
                integral += values[key] * sizes[key]
        averages.append((label, integral / mass))
    best = ZERO
    for _, lam in averages:
        if lam == 0:
            continue
        mass = ZERO
        hit = [
            predicate
            for (label, predicate), (_, avg) in zip(members, averages)
            if avg >= lam
        ]
        for key, cls in classes.items():
            if any(pred(cls) for pred in hit):
                mass += sizes[key]
        best = max(best, ratio_key(lam, mass / norm_p, p))
    return best, norm_p, averages