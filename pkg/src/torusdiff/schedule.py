"""Level schedules: how (eps_j, d_j, m_j) decay as the level j grows.

Two variants are built in. For a rational exponent p0 >= 1:

* ``geq``: eps target j^(-1/p0) / 2 — differentiation succeeds exactly for
  p >= p0 (and at infinity);
* ``gt``: eps target j^(-1/p0) log^(2/p0)(j+1) / 2 — the extra slowly
  varying factor pushes p0 itself out, leaving p > p0.

Dimensions are d_j = j. Targets are usually irrational; they are quantized
onto a dyadic grid (floor at granularity max(g, target-driven floor)) so
that eps_j always lands in [target/2, target] and the covering engine's
dyadic requirement holds. All comparisons against irrational targets run
through certified enclosures and refine until unambiguous.

m_j is the unique integer with 2^-m_j in (W_j/(4 j^2), W_j/(2 j^2)] for
W_j = 1 + d_j - eps_j d_j; the half-open factor-two band always contains
exactly one power of two.

The growth descriptor (a, b) — eps_j comparable to j^-a log^b(j+1) —
drives range classification: the basis differentiates at exponent p iff
sup_j eps_j d_j^(1/p) is finite iff 1/p - a < 0, or = 0 with b <= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .enclosure import BITS_LADDER, Enclosure, int_nthroot, log_enclosure, rational_pow_enclosure
from .rationals import ceil_log2

__all__ = [
    "LevelSpec",
    "Schedule",
    "level_target",
    "quantize_eps",
    "solve_m",
    "schedule_geq",
    "schedule_gt",
    "make_schedule",
    "RangeVerdict",
    "classify_diff_range",
]

HALF = Fraction(1, 2)
DEFAULT_GRANULARITY = 16


@dataclass(frozen=True)
class LevelSpec:
    """Resolved parameters of one level."""

    level: int
    eps: Fraction
    d: int
    m: int
    target_window: tuple[Fraction, Fraction]  # certified window for the raw target

    @property
    def weight(self) -> Fraction:
        return 1 + self.d - self.eps * self.d


@dataclass(frozen=True)
class Schedule:
    """A resolved level schedule plus its growth descriptor."""

    p0: Fraction
    variant: str  # "geq" | "gt"
    granularity: int
    levels: tuple[LevelSpec, ...]
    growth: tuple[Fraction, Fraction]  # (a, b): eps_j ~ j^-a log^b(j+1)
    degenerate: bool = False

    @property
    def depth(self) -> int:
        return len(self.levels)


def level_target(variant: str, p0: Fraction, j: int, bits: int = 128) -> Fraction | Enclosure:
    """The unquantized eps target for level j; exact Fraction when rational."""
    p0 = Fraction(p0)
    if variant == "geq":
        u, v = p0.numerator, p0.denominator
        root, exact = int_nthroot(j**v, u)
        if exact:
            return Fraction(1, 2 * root)
        return rational_pow_enclosure(Fraction(j), -1 / p0, bits).scaled(HALF)
    if variant == "gt":
        log = log_enclosure(Fraction(j + 1), bits)
        ratio = log * log / Fraction(j)
        return rational_pow_enclosure(ratio, 1 / p0, bits).scaled(HALF)
    raise ValueError(f"unknown schedule variant {variant!r}")


def _window(x: Fraction | Enclosure) -> tuple[Fraction, Fraction]:
    if isinstance(x, Enclosure):
        return x.lo, x.hi
    return Fraction(x), Fraction(x)


def quantize_eps(
    variant: str, p0: Fraction, j: int, granularity: int
) -> tuple[Fraction, tuple[Fraction, Fraction]]:
    """Floor the level-j target onto the dyadic grid, certified.

    Returns (eps_j, target window). The grid exponent is
    max(granularity, smallest K with 2^-K <= target/2), so the floor error
    never exceeds half the target and eps_j lies in [target/2, target].
    """
    for bits in BITS_LADDER:
        target = level_target(variant, p0, j, bits)
        lo, hi = _window(target)
        if lo <= 0:
            continue
        k_floor_lo = ceil_log2(2 / hi)
        k_floor_hi = ceil_log2(2 / lo)
        if k_floor_lo != k_floor_hi:
            continue  # grid exponent undecided; refine
        grid = 1 << max(granularity, k_floor_lo)
        floor_lo = (lo.numerator * grid) // lo.denominator
        floor_hi = (hi.numerator * grid) // hi.denominator
        if floor_lo != floor_hi:
            continue  # floor undecided; refine
        eps = Fraction(floor_lo, grid)
        if not (lo / 2 <= eps <= hi and 0 < eps <= HALF):
            raise AssertionError(
                f"quantization left the certified band at level {j}: eps={eps}, target~[{lo},{hi}]"
            )
        return eps, (lo, hi)
    raise AssertionError(f"target comparison at level {j} undecided at maximum precision")


def solve_m(j: int, d: int, eps: Fraction) -> int:
    """The unique m with 2^-m in (W/(4 j^2), W/(2 j^2)], W = 1 + d - eps d."""
    if j < 1 or d < 1:
        raise ValueError("need j >= 1 and d >= 1")
    weight = 1 + d - Fraction(eps) * d
    m = ceil_log2(Fraction(2 * j * j) / weight)
    band_lo, band_hi = weight / (4 * j * j), weight / (2 * j * j)
    power = Fraction(1, 2**m) if m >= 0 else Fraction(2 ** (-m))
    if not (band_lo < power <= band_hi):
        raise AssertionError(f"no power of two in ({band_lo}, {band_hi}]")
    return m


def make_schedule(
    variant: str,
    p0: Fraction,
    depth: int,
    granularity: int = DEFAULT_GRANULARITY,
) -> Schedule:
    """Resolve a full schedule of the given depth."""
    p0 = Fraction(p0)
    if p0 < 1:
        raise ValueError("p0 must be >= 1")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if granularity < 1:
        raise ValueError("granularity must be >= 1")
    if variant == "geq" and p0 == 1:
        # The base family alone differentiates everything from L^1 up; there
        # is nothing to schedule.
        return Schedule(p0, variant, granularity, (), (Fraction(1), Fraction(0)), degenerate=True)
    a = 1 / p0
    b = Fraction(0) if variant == "geq" else 2 / p0
    levels = []
    for j in range(1, depth + 1):
        eps, window = quantize_eps(variant, p0, j, granularity)
        d = j
        levels.append(LevelSpec(j, eps, d, solve_m(j, d, eps), window))
    return Schedule(p0, variant, granularity, tuple(levels), (a, b))


def schedule_geq(p0: Fraction, depth: int, granularity: int = DEFAULT_GRANULARITY) -> Schedule:
    return make_schedule("geq", p0, depth, granularity)


def schedule_gt(p0: Fraction, depth: int, granularity: int = DEFAULT_GRANULARITY) -> Schedule:
    return make_schedule("gt", p0, depth, granularity)


@dataclass(frozen=True)
class RangeVerdict:
    """Whether differentiation holds at exponent p for a schedule."""

    p: Fraction | None  # None encodes p = infinity
    inside: bool
    exponent: Fraction  # 1/p - a (0 at p = infinity boundary handling)
    log_power: Fraction
    reason: str


def classify_diff_range(schedule: Schedule, p: Fraction | float | None) -> RangeVerdict:
    """Exact classification of one exponent against the growth descriptor.

    `p` may be a rational >= 1 or None / math.inf for the supremum norm.
    sup_j eps_j d_j^(1/p) is finite iff the polynomial exponent 1/p - a is
    negative, or zero with the log power b <= 0.
    """
    a, b = schedule.growth
    if p is None or (isinstance(p, float) and math.isinf(p)):
        recip: Fraction = Fraction(0)
        p_repr = None
    else:
        p_frac = Fraction(p)
        if p_frac < 1:
            raise ValueError("p must be >= 1 (or infinity)")
        recip = 1 / p_frac
        p_repr = p_frac
    if schedule.degenerate:
        return RangeVerdict(p_repr, True, Fraction(0), Fraction(0), "degenerate: base family differentiates everywhere")
    exponent = recip - a
    if exponent < 0:
        inside, reason = True, "eps_j d_j^(1/p) decays polynomially"
    elif exponent == 0 and b <= 0:
        inside, reason = True, "critical exponent with non-growing slowly varying factor"
    elif exponent == 0:
        inside, reason = False, "critical exponent with growing logarithmic factor"
    else:
        inside, reason = False, "eps_j d_j^(1/p) grows polynomially"
    return RangeVerdict(p_repr, inside, exponent, b, reason)
