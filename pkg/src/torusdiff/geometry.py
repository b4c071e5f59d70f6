"""Exact box algebra on the infinite-dimensional torus.

A *box* constrains finitely many coordinates (1-based indices) to half-open
rational intervals [a, b) inside [0, 1); every other coordinate is free.
Measure is the product of constrained side lengths. All arithmetic is
``fractions.Fraction`` — no floats enter any set computation.

The module also provides the dyadic machinery the covering engine is built
on: maximal dyadic interval decomposition in 1-D, and the decomposition of a
finite union of dyadic boxes into maximal half-open cubes of the graded
family (level-k cubes constrain coordinates 1..k+1 to sides 2^-k). Cube
classes are counted exactly and enumerated lazily, because realistic regions
tile into astronomically many congruent cubes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .rationals import dyadic_level, format_rational, is_dyadic, parse_rational

__all__ = [
    "Box",
    "FULL",
    "box_set_measure",
    "pairwise_disjoint",
    "subtract",
    "subtract_many",
    "coalesce",
    "translate_box",
    "torus_metric",
    "dyadic_intervals_1d",
    "CubeClass",
    "decompose_into_cubes",
    "piece_level_counts",
    "first_piece",
    "iter_cube_corners",
    "cube_box",
]

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


@dataclass(frozen=True)
class Box:
    """An axis-parallel box: finitely many coordinates pinned to [a, b).

    ``coords`` is a tuple of (index, a, b), sorted by index, with
    0 <= a < b <= 1. An interval equal to [0, 1) is normalized away (the
    coordinate is free). The empty set is not representable; operations
    that would produce it return ``None`` or drop the piece.
    """

    coords: tuple[tuple[int, Fraction, Fraction], ...]

    def __post_init__(self) -> None:
        seen = -1
        for i, a, b in self.coords:
            if i <= seen:
                raise ValueError("coordinates must be sorted and distinct")
            seen = i
            if not (0 <= a < b <= 1):
                raise ValueError(f"bad interval [{a}, {b}) on coordinate {i}")
            if a == 0 and b == 1:
                raise ValueError("full interval [0,1) must be left free")

    @staticmethod
    def make(intervals: Mapping[int, tuple[Fraction, Fraction]] | Iterable[tuple[int, Fraction, Fraction]]) -> "Box":
        """Build a box from {index: (a, b)} or an iterable of (index, a, b)."""
        if isinstance(intervals, Mapping):
            items = [(i, ab[0], ab[1]) for i, ab in intervals.items()]
        else:
            items = [(i, a, b) for i, a, b in intervals]
        norm = []
        for i, a, b in sorted(items):
            a, b = Fraction(a), Fraction(b)
            if a == 0 and b == 1:
                continue
            norm.append((int(i), a, b))
        return Box(tuple(norm))

    # -- basic queries -------------------------------------------------

    def interval(self, i: int) -> tuple[Fraction, Fraction]:
        for j, a, b in self.coords:
            if j == i:
                return (a, b)
        return (ZERO, ONE)

    def is_constrained(self, i: int) -> bool:
        return any(j == i for j, _, _ in self.coords)

    @property
    def constrained_indices(self) -> tuple[int, ...]:
        return tuple(i for i, _, _ in self.coords)

    @property
    def max_index(self) -> int:
        return self.coords[-1][0] if self.coords else 0

    def measure(self) -> Fraction:
        m = ONE
        for _, a, b in self.coords:
            m *= b - a
        return m

    def side(self, i: int) -> Fraction:
        a, b = self.interval(i)
        return b - a

    def diameter(self) -> Fraction:
        """Exact diameter in the weighted torus metric (see torus_metric)."""
        total = ZERO
        constrained_weight = ZERO
        for i, a, b in self.coords:
            w = Fraction(1, 2**i)
            total += min(b - a, HALF) * w
            constrained_weight += w
        return total + HALF * (ONE - constrained_weight)

    # -- set operations ------------------------------------------------

    def intersect(self, other: "Box") -> "Box | None":
        indices = sorted(set(self.constrained_indices) | set(other.constrained_indices))
        out = []
        for i in indices:
            a1, b1 = self.interval(i)
            a2, b2 = other.interval(i)
            a, b = max(a1, a2), min(b1, b2)
            if a >= b:
                return None
            if not (a == 0 and b == 1):
                out.append((i, a, b))
        return Box(tuple(out))

    def contains(self, other: "Box") -> bool:
        """True when `other` is a subset of this box."""
        for i, a, b in self.coords:
            a2, b2 = other.interval(i)
            if a2 < a or b2 > b:
                return False
        return True

    def with_interval(self, i: int, a: Fraction, b: Fraction) -> "Box":
        items = [(j, x, y) for j, x, y in self.coords if j != i]
        if not (a == 0 and b == 1):
            items.append((i, a, b))
        return Box(tuple(sorted(items)))

    def shifted(self, offsets: Mapping[int, Fraction]) -> "Box":
        """Translate without wrap; offsets must keep every interval in [0,1)."""
        items = []
        for i, a, b in self.coords:
            t = offsets.get(i, ZERO)
            if not (0 <= a + t and b + t <= 1):
                raise ValueError(f"shift wraps coordinate {i}")
            items.append((i, a + t, b + t))
        for i, t in offsets.items():
            if t != 0 and not self.is_constrained(i):
                raise ValueError(f"cannot shift free coordinate {i}")
        return Box(tuple(items))

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        return {
            "coords": [
                {"i": i, "a": format_rational(a), "b": format_rational(b)}
                for i, a, b in self.coords
            ]
        }

    @staticmethod
    def from_json(doc: dict) -> "Box":
        return Box.make(
            [(int(c["i"]), parse_rational(c["a"]), parse_rational(c["b"])) for c in doc["coords"]]
        )

    def key(self) -> tuple:
        """Hashable canonical key (used for congruence-class dedup)."""
        return self.coords


FULL = Box(())


def box_set_measure(boxes: Iterable[Box]) -> Fraction:
    return sum((b.measure() for b in boxes), ZERO)


def pairwise_disjoint(boxes: Sequence[Box]) -> bool:
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            if boxes[i].intersect(boxes[j]) is not None:
                return False
    return True


def subtract(minuend: Box, subtrahend: Box) -> list[Box]:
    """minuend \\ subtrahend as a list of pairwise-disjoint boxes.

    Peels coordinate by coordinate (sorted index order), so the output is
    canonical and at most 2 * (#cutting coordinates) pieces.
    """
    if minuend.intersect(subtrahend) is None:
        return [minuend]
    out: list[Box] = []
    current = minuend
    for i in subtrahend.constrained_indices:
        a_cur, b_cur = current.interval(i)
        a_s, b_s = subtrahend.interval(i)
        if a_cur < a_s:
            out.append(current.with_interval(i, a_cur, min(b_cur, a_s)))
        if b_s < b_cur:
            out.append(current.with_interval(i, max(a_cur, b_s), b_cur))
        current = current.with_interval(i, max(a_cur, a_s), min(b_cur, b_s))
    # `current` is now inside the subtrahend and is dropped.
    return out


def subtract_many(region: Sequence[Box], holes: Sequence[Box]) -> list[Box]:
    """Remove every hole from every region box (regions assumed disjoint)."""
    pieces = list(region)
    for hole in holes:
        pieces = [frag for piece in pieces for frag in subtract(piece, hole)]
    return pieces


def coalesce(boxes: Sequence[Box]) -> list[Box]:
    """Greedily merge boxes that differ in one abutting interval.

    Canonicalizes unions produced by `subtract` so that the dyadic
    decomposition below sees the true region, not an artifact of peel order.
    """
    pieces = list(boxes)
    merged = True
    while merged:
        merged = False
        for i in range(len(pieces)):
            for j in range(i + 1, len(pieces)):
                m = _merge_pair(pieces[i], pieces[j])
                if m is not None:
                    pieces[i] = m
                    del pieces[j]
                    merged = True
                    break
            if merged:
                break
    return pieces


def _merge_pair(x: Box, y: Box) -> Box | None:
    indices = sorted(set(x.constrained_indices) | set(y.constrained_indices))
    diff = None
    for i in indices:
        if x.interval(i) != y.interval(i):
            if diff is not None:
                return None
            diff = i
    if diff is None:
        return x  # identical boxes
    (a1, b1), (a2, b2) = x.interval(diff), y.interval(diff)
    if b1 == a2:
        return x.with_interval(diff, a1, b2)
    if b2 == a1:
        return x.with_interval(diff, a2, b1)
    return None


def translate_box(box: Box, offsets: Mapping[int, Fraction]) -> tuple[Box, ...]:
    """Translate modulo 1; each wrapping coordinate splits into two pieces.

    Returns a tuple of pairwise-disjoint boxes whose union is the translate
    (at most 2 per wrapped coordinate). Offsets on free coordinates are
    no-ops ([0,1) is shift-invariant).
    """
    variants: list[list[tuple[int, Fraction, Fraction]]] = [[]]
    for i, a, b in box.coords:
        t = Fraction(offsets.get(i, ZERO)) % 1
        a2 = (a + t) % 1
        length = b - a
        if a2 + length <= 1:
            parts = [(a2, a2 + length)]
        else:
            parts = [(a2, ONE), (ZERO, a2 + length - 1)]
        variants = [v + [(i, lo, hi)] for v in variants for (lo, hi) in parts]
    return tuple(Box.make(v) for v in variants)


def torus_metric(x: Sequence[Fraction], y: Sequence[Fraction]) -> tuple[Fraction, Fraction]:
    """Certified bounds for the metric sum_d circdist(x_d, y_d) / 2^d.

    Points are finite rational prefixes (coordinate d = position d+1 in the
    sequence); the unknown tail contributes at most (1/2) * 2^-D for D =
    the shorter prefix length, so the true distance lies in [lo, hi].
    """
    depth = min(len(x), len(y))
    lo = ZERO
    for d in range(depth):
        delta = abs(Fraction(x[d]) - Fraction(y[d])) % 1
        lo += min(delta, 1 - delta) / Fraction(2 ** (d + 1))
    return lo, lo + Fraction(1, 2 ** (depth + 1))


# ----------------------------------------------------------------------
# Dyadic decomposition
# ----------------------------------------------------------------------


def dyadic_intervals_1d(a: Fraction, b: Fraction) -> list[tuple[Fraction, int]]:
    """Maximal dyadic intervals tiling [a, b), left to right.

    Each entry is (start, level) for the piece [start, start + 2^-level).
    Endpoints must be dyadic; pieces are maximal: no dyadic interval inside
    [a, b) properly contains any of them.
    """
    a, b = Fraction(a), Fraction(b)
    if not (0 <= a < b <= 1):
        raise ValueError(f"bad interval [{a}, {b})")
    if not (is_dyadic(a) and is_dyadic(b)):
        raise ValueError(f"non-dyadic endpoints [{a}, {b})")
    out = []
    x = a
    while x < b:
        # Largest power of two that x is aligned to, capped by the room left.
        if x == 0:
            align = 0  # level 0 allowed: the full circle coordinate
        else:
            align = dyadic_level(x)
        level = align
        while Fraction(1, 2**level) > b - x:
            level += 1
        out.append((x, level))
        x += Fraction(1, 2**level)
    return out


@dataclass(frozen=True)
class CubeClass:
    """All level-`level` cubes tiling one product box of the decomposition.

    A level-k cube constrains coordinates 1..k+1 to consecutive sides 2^-k
    (free beyond). ``count`` is exact; ``witness`` is the corner of the
    lexicographically first member; ``cell`` is the product box this class
    tiles (used by maximality checks).
    """

    level: int
    count: int
    witness: tuple[Fraction, ...]
    cell: Box

    def witness_box(self) -> Box:
        return cube_box(self.level, self.witness)


def cube_box(level: int, corner: Sequence[Fraction]) -> Box:
    """The level-k cube with the given corner (coordinates 1..k+1)."""
    side = Fraction(1, 2**level)
    return Box.make([(i + 1, c, c + side) for i, c in enumerate(corner)])


def _cell_positions(piece_level: int, cube_level: int) -> int:
    """Number of level-`cube_level` slots inside a 1-D dyadic piece."""
    return 2 ** (cube_level - piece_level)


def decompose_into_cubes(
    region: Sequence[Box],
    min_level: int,
    *,
    class_cap: int = 500_000,
) -> list[CubeClass]:
    """Decompose a disjoint union of dyadic boxes into maximal graded cubes.

    Every output cube has level >= min_level; within that floor the
    decomposition is maximal (the level-(k-1) parent of any piece is not
    contained in the region). Levels are forced per product box by the
    finest side, the largest constrained index, and the floor.

    The result is a list of cube classes with exact counts; materialize
    members with :func:`iter_cube_corners`.
    """
    region = coalesce(region)
    out: list[CubeClass] = []
    for box in region:
        coord_pieces: list[tuple[int, list[tuple[Fraction, int]]]] = []
        for i, a, b in box.coords:
            coord_pieces.append((i, dyadic_intervals_1d(a, b)))
        combos = 1
        for _, pieces in coord_pieces:
            combos *= len(pieces)
        if combos > class_cap:
            raise ValueError(f"decomposition would produce {combos} cube classes (cap {class_cap})")
        idx_floor = box.max_index - 1
        for combo in itertools.product(*(pieces for _, pieces in coord_pieces)):
            natural = max((lvl for _, lvl in combo), default=0)
            k = max(min_level, natural, idx_floor)
            by_index = {i: piece for (i, _), piece in zip(coord_pieces, combo)}
            count = 1
            witness = []
            cell_items = []
            for i in range(1, k + 2):
                if i in by_index:
                    start, lvl = by_index[i]
                    count *= _cell_positions(lvl, k)
                    witness.append(start)
                    cell_items.append((i, start, start + Fraction(1, 2**lvl)))
                else:
                    count *= 2**k
                    witness.append(ZERO)
            out.append(CubeClass(k, count, tuple(witness), Box.make(cell_items)))
    out.sort(key=lambda c: (c.level, c.witness))
    return out


def piece_level_counts(region: Sequence[Box], min_level: int) -> dict[int, int]:
    """Cube counts per level of :func:`decompose_into_cubes`, without classes.

    Identical aggregation (level -> total cube count), but computed from the
    per-coordinate 1-D decompositions alone: the product over coordinates is
    collapsed by counting, so boxes whose class decomposition would explode
    combinatorially cost O(coords x levels). The tiling identity
    sum count * 2^(-k(k+1)) = measure is asserted before returning.
    """
    out: dict[int, int] = {}
    total = ZERO
    for box in coalesce(region):
        total += box.measure()
        pieces_by_coord = [dyadic_intervals_1d(a, b) for _, a, b in box.coords]
        k0 = max(min_level, box.max_index - 1, 0)
        n_constrained = len(pieces_by_coord)

        def slots(pieces: list[tuple[Fraction, int]], k: int) -> int:
            return sum(2 ** (k - lvl) for _, lvl in pieces if lvl <= k)

        def at_level(k: int, ceiling: int) -> int:
            prod = 1
            for pieces in pieces_by_coord:
                prod *= slots(pieces, ceiling)
                if prod == 0:
                    return 0
            return prod * 2 ** (k * (k + 1 - n_constrained))

        base = at_level(k0, k0)
        if base:
            out[k0] = out.get(k0, 0) + base
        finer = sorted(
            {lvl for pieces in pieces_by_coord for _, lvl in pieces if lvl > k0}
        )
        for k in finer:
            # Combos whose finest 1-D piece sits exactly at level k: all
            # pieces <= k, minus (all pieces <= k-1, each slot split in two).
            n = at_level(k, k) - (2**n_constrained) * at_level(k, k - 1)
            if n:
                out[k] = out.get(k, 0) + n
    if sum(Fraction(n, 2 ** (k * (k + 1))) for k, n in out.items()) != total:
        raise AssertionError("piece level counts do not tile the region")
    return out


def first_piece(box: Box, min_level: int) -> tuple[int, tuple[Fraction, ...]]:
    """(level, corner) of one representative decomposition cube of `box`.

    Deterministic: the combo of leftmost 1-D pieces in every constrained
    coordinate, taken at its corner. The result is a genuine member of
    ``decompose_into_cubes([box], min_level)``.
    """
    firsts = {i: dyadic_intervals_1d(a, b)[0] for i, a, b in box.coords}
    natural = max((lvl for _, lvl in firsts.values()), default=0)
    k = max(min_level, box.max_index - 1, natural, 0)
    corner = tuple(
        firsts[i][0] if i in firsts else ZERO for i in range(1, k + 2)
    )
    return k, corner


def iter_cube_corners(cls: CubeClass) -> Iterator[tuple[Fraction, ...]]:
    """Lazily enumerate member corners of a cube class in lexicographic order.

    Mixed-radix decoding keeps memory flat: at deep levels a single axis has
    2^level slots, far past anything a materialized product could hold, while
    consumers only ever read a bounded prefix.
    """
    step = Fraction(1, 2**cls.level)
    bases: list[Fraction] = []
    sizes: list[int] = []
    for i in range(1, cls.level + 2):
        a, b = cls.cell.interval(i)
        sizes.append(int((b - a) / step) if cls.cell.is_constrained(i) else 2**cls.level)
        bases.append(a if cls.cell.is_constrained(i) else ZERO)
    total = 1
    for s in sizes:
        total *= s
    for index in range(total):
        rem = index
        digits = []
        for s in reversed(sizes):
            rem, digit = divmod(rem, s)
            digits.append(digit)
        digits.reverse()
        yield tuple(base + t * step for base, t in zip(bases, digits))
