"""Exact rational helpers shared across the package.

Every quantity that enters set algebra is a :class:`fractions.Fraction`;
floats appear only in report formatting. Rationals serialize as canonical
``"p/q"`` strings (always with the slash, always in lowest terms, e.g.
``"0/1"``, ``"1/2"``), which round-trip bit-exactly.
"""

from __future__ import annotations

from fractions import Fraction

__all__ = [
    "parse_rational",
    "format_rational",
    "format_decimal",
    "is_dyadic",
    "dyadic_level",
    "floor_log2",
    "ceil_log2",
]


def parse_rational(text: str) -> Fraction:
    """Parse a canonical ``"p/q"`` string (or a bare integer) to a Fraction."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(int(text))


def format_rational(x: Fraction) -> str:
    """Canonical ``"p/q"`` form, always with an explicit denominator."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def format_decimal(x, digits: int = 12) -> str:
    """12-significant-digit decimal rendering used next to exact values."""
    return f"{float(x):.{digits}g}"


def is_dyadic(x: Fraction) -> bool:
    """True when x = p / 2^k in lowest terms."""
    den = Fraction(x).denominator
    return den & (den - 1) == 0


def dyadic_level(x: Fraction) -> int:
    """The exponent k with denominator(x) = 2^k; raises on non-dyadic input."""
    den = Fraction(x).denominator
    if den & (den - 1) != 0:
        raise ValueError(f"not a dyadic rational: {x}")
    return den.bit_length() - 1


def _pow2_le(e: int, num: int, den: int) -> bool:
    """2^e <= num/den using only integer shifts."""
    if e >= 0:
        return den << e <= num
    return den <= num << (-e)


def floor_log2(q: Fraction) -> int:
    """Largest integer e with 2^e <= q (q > 0)."""
    q = Fraction(q)
    if q <= 0:
        raise ValueError("floor_log2 requires a positive argument")
    num, den = q.numerator, q.denominator
    e = num.bit_length() - den.bit_length()
    while not _pow2_le(e, num, den):
        e -= 1
    while _pow2_le(e + 1, num, den):
        e += 1
    return e


def ceil_log2(q: Fraction) -> int:
    """Smallest integer e with 2^e >= q (q > 0)."""
    q = Fraction(q)
    e = floor_log2(q)
    return e if Fraction(2) ** e == q else e + 1
