"""Overlapping box configurations and their maximal-operator asymptotics.

An (eps, d)-configuration is a small center box together with its d
one-coordinate translates: translate i shifts coordinate i by (1-eps) times
that side, so each translate overlaps the center in exactly an eps-fraction
and the translates meet each other only inside the center. The union
partitions into 2^d + d rectangular cells, which are the atoms every exact
computation runs on.

``norm_asymptotics_oracle`` is the closed-form reference point: the
weak-type L^p operator norm of the maximal operator over one configuration,
as a function of A_p = eps * d^(1/p), in three regimes (flat / logarithmic /
linear). The searches at the bottom produce certified *lower* witnesses for
that norm and minimal covering subfamilies; acceptance bands tie the two
together.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .enclosure import Enclosure, rational_pow_enclosure
from .geometry import Box, subtract_many
from .maximal import WeakTypeReport, ratio_key

__all__ = [
    "Configuration",
    "Cell",
    "make_configuration",
    "configuration_cells",
    "corner_configuration",
    "NormEstimate",
    "norm_asymptotics_oracle",
    "weak_type_lower_search",
    "covering_witness_search",
]

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class Configuration:
    """A center box and its d overlapping one-coordinate translates."""

    eps: Fraction
    d: int
    center: Box
    translates: tuple[Box, ...]

    @property
    def members(self) -> tuple[Box, ...]:
        return (self.center,) + self.translates

    def union_measure(self) -> Fraction:
        return (1 + self.d - self.eps * self.d) * self.center.measure()


@dataclass(frozen=True)
class Cell:
    """One atom of the configuration arrangement.

    ``overlap`` is the set of translate indices whose overlap slab the cell
    sits in (cells inside the center), or None for the d cells outside the
    center; ``outside`` names the unique translate containing such a cell.
    """

    box: Box
    overlap: frozenset[int] | None
    outside: int | None

    def measure(self) -> Fraction:
        return self.box.measure()


def make_configuration(center: Box, eps: Fraction, d: int) -> Configuration:
    """Validate parameters and build the d translates of the center.

    Requirements: 0 < eps <= 1/2; d >= 1; the center constrains coordinates
    1..d (at least); the center is small enough, |center| <= 2^-((d-1)^2+1);
    and no translate wraps around 1 (members must remain boxes).
    """
    eps = Fraction(eps)
    if not (0 < eps <= Fraction(1, 2)):
        raise ValueError(f"eps must lie in (0, 1/2], got {eps}")
    if d < 1:
        raise ValueError("d must be >= 1")
    for i in range(1, d + 1):
        if not center.is_constrained(i):
            raise ValueError(f"center must constrain coordinate {i} (shift direction)")
    bound_exp = (d - 1) ** 2 + 1
    if center.measure() > Fraction(1, 2**bound_exp):
        raise ValueError(
            f"center measure {center.measure()} exceeds 2^-((d-1)^2+1) = 2^-{bound_exp}"
        )
    translates = []
    for i in range(1, d + 1):
        a, b = center.interval(i)
        delta = (1 - eps) * (b - a)
        if b + delta > 1:
            raise ValueError(f"translate along coordinate {i} would wrap past 1")
        translates.append(center.shifted({i: delta}))
    return Configuration(eps, d, center, tuple(translates))


def corner_configuration(k: int, d: int, eps: Fraction, corner: Sequence[Fraction] = ()) -> Configuration:
    """The standard in-engine configuration inside a level-(k+1) subcube.

    Center = corner + [0, 2^-(k+2))^d x [0, 2^-(k+1))^(k+2-d); the center is
    a grid translate of a fundamental cell, which is what makes the whole
    construction a sub-family of the base basis.
    """
    if not (1 <= d <= k + 2):
        raise ValueError("need 1 <= d <= k+2")
    fine = Fraction(1, 2 ** (k + 2))
    coarse = Fraction(1, 2 ** (k + 1))
    corner = tuple(corner) if corner else (ZERO,) * (k + 2)
    items = []
    for i in range(1, k + 3):
        side = fine if i <= d else coarse
        items.append((i, corner[i - 1], corner[i - 1] + side))
    return make_configuration(Box.make(items), eps, d)


def configuration_cells(config: Configuration, *, cell_cap: int = 1 << 20) -> list[Cell]:
    """The 2^d + d rectangular atoms partitioning the configuration union.

    Inside the center, coordinate i splits at the translate's edge into a
    low part (not shared) and an eps-fraction overlap slab (shared with
    translate i); the 2^d sign patterns enumerate the inside cells. Each
    translate then contributes one cell outside the center.
    """
    d = config.d
    if 2**d + d > cell_cap:
        raise ValueError(f"2^{d} + {d} cells exceed the cap {cell_cap}")
    center = config.center
    splits = []
    for i in range(1, d + 1):
        a, b = center.interval(i)
        delta = (1 - config.eps) * (b - a)
        splits.append((i, a, a + delta, b))
    cells: list[Cell] = []
    for pattern in itertools.product((False, True), repeat=d):
        box = center
        members = frozenset(i + 1 for i, hot in enumerate(pattern) if hot)
        for (i, lo, mid, hi), hot in zip(splits, pattern):
            box = box.with_interval(i, mid if hot else lo, hi if hot else mid)
        cells.append(Cell(box, members, None))
    for i, lo, mid, hi in splits:
        shifted_hi = hi + (mid - lo)  # translate edge: b + (1-eps) s
        cells.append(Cell(center.with_interval(i, hi, shifted_hi), None, i))
    return cells


def cell_membership(cell: Cell) -> frozenset[int]:
    """Indices of configuration members containing the cell (0 = center)."""
    if cell.outside is not None:
        return frozenset({cell.outside})
    return frozenset({0}) | cell.overlap


# ----------------------------------------------------------------------
# Closed-form norm oracle
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class NormEstimate:
    """Three-regime weak-type norm value for one configuration."""

    eps: float
    d: int
    p: float
    a_p: float
    p_star: float
    regime: str  # "flat" | "log" | "linear"
    value: float
    lower_bound: float  # max(1, eps (1 + d - eps d)^(1/p)) — always attainable


def norm_asymptotics_oracle(eps: Fraction, d: int, p: Fraction) -> NormEstimate:
    """Closed-form asymptotic weak-L^p norm of the one-configuration maximal
    operator, as a function of A_p = eps d^(1/p) and p* = p/(p-1):

    * flat:    value 1            for 0 < A_p <= p* e^(-p*)
    * log:     p* / log(p*/A_p)   for p* e^(-p*) <= A_p <= p*/e
    * linear:  e A_p              for A_p >= p*/e

    (The three formulas agree at the regime boundaries.) This is the
    independent reference the acceptance bands compare searches against;
    it is the one deliberately float-valued computation in the package.
    """
    eps_f, p_f = float(Fraction(eps)), float(Fraction(p))
    if p_f <= 1:
        raise ValueError("the oracle needs p > 1 (p* = p/(p-1) must be finite)")
    if not (0 < eps_f <= 0.5) or d < 1:
        raise ValueError("need eps in (0,1/2] and d >= 1")
    a_p = eps_f * d ** (1 / p_f)
    p_star = p_f / (p_f - 1)
    if a_p <= p_star * math.exp(-p_star):
        regime, value = "flat", 1.0
    elif a_p <= p_star / math.e:
        regime, value = "log", p_star / math.log(p_star / a_p)
    else:
        regime, value = "linear", math.e * a_p
    weight = 1 + d - eps_f * d
    lower = max(1.0, eps_f * weight ** (1 / p_f))
    return NormEstimate(eps_f, d, p_f, a_p, p_star, regime, value, lower)


# ----------------------------------------------------------------------
# Exact searches
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LowerSearchReport:
    """Best exact weak-type witness found over indicator candidates."""

    report: WeakTypeReport
    support: tuple[Box, ...]
    candidates_tried: int

    def __float__(self) -> float:
        return float(self.report)


def weak_type_lower_search(
    config: Configuration,
    p: Fraction,
    *,
    budget: int = 32,
    seed: int = 0,
) -> LowerSearchReport:
    """Search indicator functions on configuration cells for the largest
    exact weak-type ratio of the restricted maximal operator.

    Deterministic candidates (each member, the center, the union, single
    cells while d is small) are always tried; `budget` seeded random cell
    subsets are added on top. Indicators keep every quantity rational for
    any rational p, so the comparison between candidates is exact.
    """
    p = Fraction(p)
    cells = configuration_cells(config)
    n_cells, n_boxes = len(cells), config.d + 1
    memberships = [cell_membership(c) for c in cells]
    measures = [c.measure() for c in cells]
    box_measure = config.center.measure()  # all members are congruent

    cell_sets: list[frozenset[int]] = []
    for member_idx in range(n_boxes):
        cell_sets.append(frozenset(i for i, mem in enumerate(memberships) if member_idx in mem))
    cell_sets.append(frozenset(i for i, c in enumerate(cells) if c.overlap is not None))
    cell_sets.append(frozenset(range(n_cells)))
    if config.d <= 4:
        cell_sets.extend(frozenset({i}) for i in range(n_cells))
    rng = random.Random(seed)
    for _ in range(budget):
        mask = frozenset(i for i in range(n_cells) if rng.random() < 0.5)
        if mask:
            cell_sets.append(mask)

    best_key: Fraction | None = None
    best: tuple[frozenset[int], Fraction, Fraction, Fraction] | None = None
    seen: set[frozenset[int]] = set()
    for mask in cell_sets:
        if not mask or mask in seen:
            continue
        seen.add(mask)
        integrals = [ZERO] * n_boxes
        norm_power = ZERO
        for c in mask:
            norm_power += measures[c]
            for b in memberships[c]:
                integrals[b] += measures[c]
        averages = [val / box_measure for val in integrals]
        cell_max = [max(averages[b] for b in memberships[c]) for c in range(n_cells)]
        for lam in sorted({a for a in averages if a > 0}, reverse=True):
            mass = sum((measures[c] for c in range(n_cells) if cell_max[c] >= lam), ZERO)
            key = ratio_key(lam, mass / norm_power, p)
            if best_key is None or key > best_key:
                best_key, best = key, (mask, lam, mass, norm_power)
    assert best is not None and best_key is not None
    mask, lam, mass, norm_power = best
    report = WeakTypeReport(p, lam, mass, norm_power, best_key)
    support = tuple(cells[i].box for i in sorted(mask))
    return LowerSearchReport(report, support, len(seen))


@dataclass(frozen=True)
class CoveringWitness:
    """A subfamily covering half the union with minimal overlap norm."""

    selected: tuple[int, ...]
    covered_measure: Fraction
    target_measure: Fraction
    norm_power: Fraction | None  # ||sum 1_B||_{p*}^{p*} when p* is an integer
    norm_enclosure: Enclosure
    exhaustive: bool


def _arrangement(boxes: Sequence[Box]) -> list[tuple[Box, frozenset[int]]]:
    """Atoms of the box arrangement with their membership sets."""
    atoms: list[tuple[list[Box], frozenset[int]]] = []
    remaining: list[Box] = []
    for idx, box in enumerate(boxes):
        new_atoms: list[tuple[list[Box], frozenset[int]]] = []
        carved = [box]
        for pieces, members in atoms:
            inside, outside = [], []
            for piece in pieces:
                hit = piece.intersect(box)
                if hit is None:
                    outside.append(piece)
                    continue
                inside.append(hit)
                outside.extend(subtract_many([piece], [box]))
            if inside:
                new_atoms.append((inside, members | {idx}))
            if outside:
                new_atoms.append((outside, members))
            carved = subtract_many(carved, pieces)
        if carved:
            new_atoms.append((carved, frozenset({idx})))
        atoms = new_atoms
    return [(piece, members) for pieces, members in atoms for piece in pieces]


def covering_witness_search(
    boxes: Sequence[Box],
    p_star: Fraction,
    *,
    exhaustive_limit: int = 20,
    bits: int = 96,
) -> CoveringWitness:
    """Minimize ||sum_F 1_B||_{p*} over subfamilies covering half the union.

    Exhaustive over all 2^n - 1 subfamilies up to `exhaustive_limit` boxes;
    greedy removal beyond. Integer p* compares exactly; otherwise each
    candidate norm is a certified enclosure and ties refine.
    """
    p_star = Fraction(p_star)
    n = len(boxes)
    if n == 0:
        raise ValueError("empty family")
    atoms = _arrangement(boxes)
    target = sum((b.measure() for b, _ in atoms), ZERO) / 2

    def covered(mask: int) -> Fraction:
        return sum((b.measure() for b, mem in atoms if any(i in mem for i in _bits(mask))), ZERO)

    def norm_state(mask: int) -> tuple[Fraction | None, Enclosure]:
        counts: dict[int, Fraction] = {}
        for b, mem in atoms:
            c = sum(1 for i in mem if mask >> i & 1)
            if c:
                counts[c] = counts.get(c, ZERO) + b.measure()
        if p_star.denominator == 1:
            exact = sum((Fraction(c) ** p_star * mu for c, mu in counts.items()), ZERO)
            return exact, Enclosure(exact, exact)
        total = Enclosure(ZERO, ZERO)
        for c, mu in counts.items():
            total = total + rational_pow_enclosure(Fraction(c), p_star, bits).scaled(mu)
        return None, total

    if n <= exhaustive_limit:
        best_mask, best_state = None, None
        for mask in range(1, 1 << n):
            if covered(mask) < target:
                continue
            state = norm_state(mask)
            if best_state is None or _encl_lt(state[1], best_state[1]):
                best_mask, best_state = mask, state
        assert best_mask is not None and best_state is not None
        return CoveringWitness(
            tuple(_bits(best_mask)), covered(best_mask), target, best_state[0], best_state[1], True
        )
    # Greedy: drop the box whose removal keeps the cover and shrinks the norm most.
    mask = (1 << n) - 1
    while True:
        best_drop, best_state = None, norm_state(mask)
        for i in _bits(mask):
            trial = mask & ~(1 << i)
            if trial == 0 or covered(trial) < target:
                continue
            state = norm_state(trial)
            if _encl_lt(state[1], best_state[1]):
                best_drop, best_state = trial, state
        if best_drop is None:
            state = norm_state(mask)
            return CoveringWitness(tuple(_bits(mask)), covered(mask), target, state[0], state[1], False)
        mask = best_drop


def _bits(mask: int) -> list[int]:
    out = []
    i = 0
    while mask >> i:
        if mask >> i & 1:
            out.append(i)
        i += 1
    return out


def _encl_lt(a: Enclosure, b: Enclosure) -> bool:
    """a < b for enclosures; overlapping enclosures count as not-less."""
    return a.hi < b.lo
