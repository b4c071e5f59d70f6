"""Averages, restricted maximal operators, and weak-type bookkeeping.

Functions here operate on *explicit* desk-scale data: a simple function is
a finite list of disjoint boxes with nonnegative rational values, and the
maximal operator is restricted to a finite collection of boxes. Everything
is exact: weak-type quantities are compared through integer powers, so a
rational exponent p = u/v never forces floating point into a decision.

The level-ledger functions (norms and exceptional-measure bounds of the
standard counterexample family) live at the bottom; they consume schedule
records and are pure closed-form arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .enclosure import BITS_LADDER, Enclosure, rational_pow_enclosure
from .geometry import Box, box_set_measure, pairwise_disjoint

__all__ = [
    "SimpleFunction",
    "average",
    "maximal_value",
    "WeakTypeReport",
    "weak_type_ratio",
    "ratio_key",
    "maximal_disjointness_check",
    "LevelLedgerRow",
    "lp_ledger",
    "exceptional_lower_bound",
    "norm_term_enclosure",
    "comparison_bound_enclosure",
]

ZERO = Fraction(0)


@dataclass(frozen=True)
class SimpleFunction:
    """A nonnegative simple function: disjoint box pieces with values.

    Off-piece the function is zero. Pieces with value zero are allowed (they
    matter for supports of averages).
    """

    pieces: tuple[tuple[Box, Fraction], ...]

    def __post_init__(self) -> None:
        boxes = [b for b, _ in self.pieces]
        if not pairwise_disjoint(boxes):
            raise ValueError("simple-function pieces must be pairwise disjoint")
        if any(v < 0 for _, v in self.pieces):
            raise ValueError("simple-function values must be nonnegative")

    def integral_over(self, box: Box) -> Fraction:
        total = ZERO
        for piece, value in self.pieces:
            if value == 0:
                continue
            overlap = piece.intersect(box)
            if overlap is not None:
                total += value * overlap.measure()
        return total

    def lp_power(self, p: int) -> Fraction:
        """||f||_p^p for integer p (exact)."""
        return sum((v**p * b.measure() for b, v in self.pieces), ZERO)


def average(f: SimpleFunction, box: Box) -> Fraction:
    """The mean of f over a box (exact)."""
    return f.integral_over(box) / box.measure()


def maximal_value(f: SimpleFunction, cell: Box, boxes: Sequence[Box]) -> Fraction:
    """Restricted maximal function at a cell: max average over covering boxes.

    The cell must be nested: contained in or disjoint from every box of the
    collection (this is what the nesting axiom guarantees for basis atoms).
    """
    best = ZERO
    for box in boxes:
        if box.contains(cell):
            best = max(best, average(f, box))
        elif box.intersect(cell) is not None:
            raise ValueError("cell straddles a collection box; nesting violated")
    return best


def ratio_key(lam: Fraction, mass_over_norm: Fraction, p: Fraction) -> Fraction:
    """Monotone exact key for the weak-type ratio lam * (mass/norm)^(1/p).

    Comparing ratios r = lam * (mu/N)^(1/p) across candidates is done via
    r^(p*v) = lam^u * (mu/N)^v for p = u/v, which is rational. Larger key
    means larger ratio (everything is positive).
    """
    p = Fraction(p)
    return lam ** p.numerator * mass_over_norm ** p.denominator


@dataclass(frozen=True)
class WeakTypeReport:
    """Outcome of an exact weak-type evaluation sup_lam lam mu{Mf>=lam}^(1/p)/||f||_p."""

    p: Fraction
    best_lambda: Fraction
    level_mass: Fraction  # mu{Mf >= best_lambda}
    norm_power: Fraction  # ||f||_p^p (exact; requires indicator or integer p)
    key: Fraction  # ratio^(p * denominator(p)) — exact comparison handle

    def ratio_power(self) -> Fraction:
        """ratio^p when that is rational (integer p); raises otherwise."""
        if self.p.denominator != 1:
            raise ValueError("ratio^p is irrational for non-integer p; use key")
        return self.best_lambda**self.p * self.level_mass / self.norm_power

    def ratio_enclosure(self, bits: int = 64) -> Enclosure:
        return rational_pow_enclosure(self.key, 1 / (self.p * self.p.denominator), bits)

    def __float__(self) -> float:
        return float(self.ratio_enclosure())


def _norm_power_exact(f: SimpleFunction, p: Fraction) -> Fraction:
    """||f||_p^p, exact; demands indicator values unless p is an integer."""
    p = Fraction(p)
    if p.denominator == 1:
        return f.lp_power(p.numerator)
    total = ZERO
    for box, value in f.pieces:
        if value not in (0, 1):
            raise ValueError(
                "exact weak-type evaluation with non-integer p requires an indicator function"
            )
        if value == 1:
            total += box.measure()
    return total


def weak_type_ratio(f: SimpleFunction, boxes: Sequence[Box], p: Fraction) -> WeakTypeReport:
    """Exact sup over attained levels of lam * mu{Mf >= lam}^(1/p) / ||f||_p.

    M is the maximal operator restricted to `boxes`; the simple function's
    pieces must be nested in the collection. The supremum over lam > 0 of
    lam^p mu{Mf >= lam} is attained at one of the finitely many attained
    values of Mf, which is where we evaluate.
    """
    p = Fraction(p)
    if p < 1:
        raise ValueError("weak-type exponent must be >= 1")
    norm_power = _norm_power_exact(f, p)
    if norm_power == 0:
        raise ValueError("zero function has no weak-type ratio")
    cell_values = [(maximal_value(f, cell, boxes), cell.measure()) for cell, _ in f.pieces]
    levels = sorted({v for v, _ in cell_values if v > 0}, reverse=True)
    best: WeakTypeReport | None = None
    for lam in levels:
        mass = sum((m for v, m in cell_values if v >= lam), ZERO)
        key = ratio_key(lam, mass / norm_power, p)
        if best is None or key > best.key:
            best = WeakTypeReport(p, lam, mass, norm_power, key)
    if best is None:
        raise ValueError("maximal function vanishes on the partition")
    return best


def maximal_disjointness_check(
    f: SimpleFunction,
    boxes: Sequence[Box],
    lam: Fraction,
    *,
    nesting_verified: bool,
) -> list[Box]:
    """Boxes with average > lam that are maximal under inclusion.

    Verifies the defining property of a differentiation basis built from
    nested generations: maximal super-level boxes are pairwise disjoint.
    Raises if the collection was not certified nested (the property is
    simply false without the nesting axiom) or if disjointness fails.
    """
    if not nesting_verified:
        raise ValueError("maximal disjointness requires a nesting-verified collection")
    lam = Fraction(lam)
    hot = [b for b in boxes if average(f, b) > lam]
    maximal = [b for b in hot if not any(o is not b and o.contains(b) and o != b for o in hot)]
    if not pairwise_disjoint(maximal):
        raise AssertionError("maximal super-level boxes overlap; collection is not nested")
    return maximal


# ----------------------------------------------------------------------
# Level ledgers for the standard counterexample family
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LevelLedgerRow:
    """Closed-form per-level quantities, normalized per unit of carrier."""

    level: int
    eps: Fraction
    d: int
    m: int
    weight: Fraction  # 1 + d - eps*d
    selected_measure: Fraction  # 2^-m
    central_measure: Fraction  # 2^-m / weight
    norm_term_power: Fraction | None  # eps^-p * central_measure when p is an integer
    norm_term_key: tuple[Fraction, Fraction]  # (eps^-1, central_measure) for rational p


def lp_ledger(levels: Iterable, p: Fraction) -> list[LevelLedgerRow]:
    """Per-level ||f_j||_p^p terms of the counterexample ledger.

    `levels` yields objects with attributes level, eps, d, m (schedule
    entries or built-basis level records). Terms are exact Fractions when p
    is an integer; otherwise the (eps^-1, measure) pair supports certified
    comparisons downstream.
    """
    p = Fraction(p)
    rows = []
    for entry in levels:
        eps, d, m = Fraction(entry.eps), int(entry.d), int(entry.m)
        weight = 1 + d - eps * d
        selected = Fraction(1, 2**m)
        central = selected / weight
        term = eps ** (-p) * central if p.denominator == 1 else None
        rows.append(
            LevelLedgerRow(
                level=int(entry.level),
                eps=eps,
                d=d,
                m=m,
                weight=weight,
                selected_measure=selected,
                central_measure=central,
                norm_term_power=term,
                norm_term_key=(1 / eps, central),
            )
        )
    return rows


def exceptional_lower_bound(rows: Sequence[LevelLedgerRow]) -> Fraction:
    """(1 - prod(1 - 2^-m_j)) - sum |F_j|, per unit carrier (exact).

    Lower bound for the measure of the set where differentiation fails for
    the counterexample built from the first len(rows) levels; positivity is
    the whole point.
    """
    missed = Fraction(1)
    for row in rows:
        missed *= 1 - row.selected_measure
    return (1 - missed) - sum((row.central_measure for row in rows), ZERO)


def norm_term_enclosure(row: LevelLedgerRow, p: Fraction, bits: int = 96) -> Enclosure:
    """Certified enclosure of eps_j^-p |F_j| for rational p."""
    p = Fraction(p)
    inv_eps, central = row.norm_term_key
    return rational_pow_enclosure(inv_eps, p, bits).scaled(central)


def comparison_bound_enclosure(
    p: Fraction, p0: Fraction, levels: int, bits: int = 96
) -> tuple[Enclosure, Enclosure]:
    """Reference and safe closed-form bounds for sum_j eps_j^-p |F_j|.

    Returns (reference, safe): the unquantized-schedule bound
    2^(p-1) sum j^(p/p0 - 2) and its quantization-safe counterpart with
    prefactor 2^(2p-1) (schedule eps_j may sit as low as half the target).
    """
    p, p0 = Fraction(p), Fraction(p0)
    total = Enclosure(ZERO, ZERO)
    expo = p / p0 - 2
    for j in range(1, levels + 1):
        total = total + rational_pow_enclosure(Fraction(j), expo, bits)
    ref = rational_pow_enclosure(Fraction(2), p - 1, bits) * total
    safe = rational_pow_enclosure(Fraction(2), 2 * p - 1, bits) * total
    return ref, safe
