"""Certified rational enclosures for the few irrational quantities we need.

Schedule targets involve j^(-1/p0) and log(j+1); comparisons and floors of
those values must be decided exactly. Every function here returns a closed
interval [lo, hi] of Fractions that provably contains the true value, with
width controlled by a ``bits`` argument. Callers refine (double ``bits``)
until the decision at hand is unambiguous; the quantities are irrational
whenever the exact path does not apply, so refinement terminates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "Enclosure",
    "int_nthroot",
    "nthroot_enclosure",
    "rational_pow_enclosure",
    "log_enclosure",
    "BITS_LADDER",
]

#: Refinement schedule for undecided comparisons.
BITS_LADDER = (32, 64, 128, 256, 512, 1024)


@dataclass(frozen=True)
class Enclosure:
    """A closed rational interval certified to contain a real value."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"inverted enclosure [{self.lo}, {self.hi}]")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def __contains__(self, x: Fraction) -> bool:
        return self.lo <= x <= self.hi

    # Interval arithmetic (only the operations the schedules use).

    def __add__(self, other: "Enclosure | Fraction | int") -> "Enclosure":
        other = _as_enclosure(other)
        return Enclosure(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other: "Enclosure | Fraction | int") -> "Enclosure":
        other = _as_enclosure(other)
        return Enclosure(self.lo - other.hi, self.hi - other.lo)

    def __mul__(self, other: "Enclosure | Fraction | int") -> "Enclosure":
        other = _as_enclosure(other)
        corners = [a * b for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        return Enclosure(min(corners), max(corners))

    def __truediv__(self, other: "Enclosure | Fraction | int") -> "Enclosure":
        other = _as_enclosure(other)
        if other.lo <= 0 <= other.hi:
            raise ZeroDivisionError("enclosure divisor straddles zero")
        inv = Enclosure(1 / other.hi, 1 / other.lo)
        return self * inv

    def scaled(self, c: Fraction) -> "Enclosure":
        c = Fraction(c)
        if c >= 0:
            return Enclosure(self.lo * c, self.hi * c)
        return Enclosure(self.hi * c, self.lo * c)

    def definitely_lt(self, x: Fraction) -> bool:
        return self.hi < x

    def definitely_gt(self, x: Fraction) -> bool:
        return self.lo > x

    def __float__(self) -> float:
        return float((self.lo + self.hi) / 2)


def _as_enclosure(x) -> Enclosure:
    if isinstance(x, Enclosure):
        return x
    x = Fraction(x)
    return Enclosure(x, x)


def int_nthroot(n: int, k: int) -> tuple[int, bool]:
    """floor(n^(1/k)) for integers n >= 0, k >= 1, plus exactness flag."""
    if n < 0 or k < 1:
        raise ValueError("int_nthroot requires n >= 0 and k >= 1")
    if n in (0, 1) or k == 1:
        return n, True
    # Newton iteration on integers, seeded from the bit length.
    x = 1 << -(-n.bit_length() // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    return x, x**k == n


def nthroot_enclosure(x: Fraction, k: int, bits: int = 64) -> Enclosure:
    """Enclose x^(1/k) for rational x > 0 with width <= 2^(1-bits)."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("nthroot_enclosure requires x > 0")
    scale = 1 << bits
    num = x.numerator << (k * bits)
    lo_int, exact = int_nthroot(num // x.denominator, k)
    if exact and num % x.denominator == 0:
        r = Fraction(lo_int, scale)
        return Enclosure(r, r)
    hi_int, exact = int_nthroot(-(-num // x.denominator), k)
    hi = Fraction(hi_int if exact else hi_int + 1, scale)
    return Enclosure(Fraction(lo_int, scale), hi)


def rational_pow_enclosure(x, e: Fraction, bits: int = 64) -> Enclosure:
    """Enclose x^e for x a positive Fraction or Enclosure, e rational.

    Exact when the result is rational (integer e, or a perfect root).
    """
    e = Fraction(e)
    box = _as_enclosure(x)
    if box.lo <= 0:
        raise ValueError("rational_pow_enclosure requires x > 0")
    if e < 0:
        pos = rational_pow_enclosure(box, -e, bits)
        return Enclosure(1 / pos.hi, 1 / pos.lo)
    if e == 0:
        return Enclosure(Fraction(1), Fraction(1))
    u, v = e.numerator, e.denominator
    lo_pow, hi_pow = box.lo**u, box.hi**u
    if v == 1:
        return Enclosure(lo_pow, hi_pow)
    lo = nthroot_enclosure(lo_pow, v, bits).lo
    hi = nthroot_enclosure(hi_pow, v, bits).hi
    return Enclosure(lo, hi)


def _atanh_enclosure(z: Fraction, bits: int) -> Enclosure:
    """atanh(z) for |z| < 1 via the odd power series with a tail bound."""
    if z < 0:
        pos = _atanh_enclosure(-z, bits)
        return Enclosure(-pos.hi, -pos.lo)
    if z == 0:
        return Enclosure(Fraction(0), Fraction(0))
    tol = Fraction(1, 1 << bits)
    total = Fraction(0)
    power = z
    z2 = z * z
    n = 1
    while True:
        total += power / n
        power *= z2
        n += 2
        tail = power / (n * (1 - z2))
        if tail <= tol:
            return Enclosure(total, total + tail)


_LOG2_CACHE: dict[int, Enclosure] = {}


def _log2_enclosure(bits: int) -> Enclosure:
    if bits not in _LOG2_CACHE:
        _LOG2_CACHE[bits] = _atanh_enclosure(Fraction(1, 3), bits + 4).scaled(2)
    return _LOG2_CACHE[bits]


def log_enclosure(x: Fraction, bits: int = 64) -> Enclosure:
    """Enclose the natural log of a rational x > 0.

    Reduces x into [3/4, 3/2) by powers of two, then log y = 2 atanh((y-1)/(y+1)).
    """
    x = Fraction(x)
    if x <= 0:
        raise ValueError("log_enclosure requires x > 0")
    e = 0
    y = x
    while y >= Fraction(3, 2):
        y /= 2
        e += 1
    while y < Fraction(3, 4):
        y *= 2
        e -= 1
    core = _atanh_enclosure((y - 1) / (y + 1), bits + 4).scaled(2)
    if e == 0:
        return core
    return core + _log2_enclosure(bits + max(8, e.bit_length() + 4)).scaled(e)
