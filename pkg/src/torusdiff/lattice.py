"""The graded family of fundamental cells and their translation grids.

The construction walks an infinite staircase of exponent vectors: step m
has a cell V_m = prod_i [0, 2^-e_i(m)) on coordinates 1..C(m) (free beyond)
with |V_{m+1}| = |V_m| / 2, and a finite translation grid H_m whose
translates of V_m tile the torus. Cubic milestones Q_k = V_{k^2+k} have
k+1 coordinates all at side 2^-k.

Exponent pattern, in blocks indexed by k >= 0 starting from Q_k =
(k, ..., k) on k+1 coordinates:

* steps k^2+k+1 .. k^2+2k+1 raise coordinates 1..k+1 from k to k+1,
  left to right;
* steps k^2+2k+2 .. k^2+3k+2 append coordinate k+2 and raise it 1..k+1,

arriving at Q_{k+1}. The base translation family consists of all grid
translates of all cells; membership is decidable with an explicit witness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .geometry import Box, CubeClass, decompose_into_cubes
from .rationals import is_dyadic

__all__ = [
    "exponent_vector",
    "v_cell",
    "q_cube",
    "grid_size",
    "iter_grid_corners",
    "split_into_qcubes",
    "is_rdf0_element",
]


def exponent_vector(m: int) -> tuple[int, ...]:
    """Exponents (e_1, ..., e_C) of the step-m cell; m = 0 is the full torus."""
    if m < 0:
        raise ValueError("step index must be >= 0")
    if m == 0:
        return ()
    k = 0
    while (k + 1) ** 2 + (k + 1) < m:
        k += 1
    base = k * k + k
    if m <= base + k + 1:  # raise phase
        f = m - base
        return (k + 1,) * f + (k,) * (k + 1 - f)
    s = m - (base + k + 1)  # append phase
    return (k + 1,) * (k + 1) + (s,)


def v_cell(m: int) -> Box:
    """The step-m fundamental cell [0,2^-e_1) x ... x [0,2^-e_C) x T^(C,inf)."""
    return Box.make(
        [(i + 1, Fraction(0), Fraction(1, 2**e)) for i, e in enumerate(exponent_vector(m))]
    )


def q_cube(k: int) -> Box:
    """The cubic milestone: side 2^-k on coordinates 1..k+1."""
    if k < 0:
        raise ValueError("cube level must be >= 0")
    return v_cell(k * k + k)


def grid_size(m: int) -> int:
    """Cardinality of the step-m translation grid (2^(sum of exponents))."""
    return 2 ** sum(exponent_vector(m))


def iter_grid_corners(m: int) -> Iterator[tuple[Fraction, ...]]:
    """Lazily enumerate the translation grid of step m in lexicographic order.

    The grid for Q_k has 2^(k(k+1)) members; never materialize it eagerly.
    """
    axes = [
        [Fraction(t, 2**e) for t in range(2**e)] for e in exponent_vector(m)
    ]
    for combo in itertools.product(*axes):
        yield tuple(combo)


def split_into_qcubes(region: Box, k: int) -> list[CubeClass]:
    """Tile a box exactly by level-k cubes; error if it is not so tileable."""
    classes = decompose_into_cubes([region], k)
    for cls in classes:
        if cls.level != k:
            raise ValueError(
                f"region is not a union of level-{k} cubes "
                f"(a maximal piece has level {cls.level})"
            )
    return classes


@dataclass(frozen=True)
class CellWitness:
    """Evidence that a box is a grid translate of the step-m cell."""

    m: int
    corner: tuple[Fraction, ...]


def is_rdf0_element(box: Box) -> CellWitness | None:
    """Decide membership in the base translation family, with a witness.

    A member is t + V_m with t on the step-m grid: the box must constrain
    exactly coordinates 1..C with power-of-two sides matching the step-m
    exponent staircase, each corner aligned to its own side. Returns the
    witness (m, corner) or None.
    """
    coords = box.coords
    if not coords:
        return CellWitness(0, ())
    indices = [i for i, _, _ in coords]
    if indices != list(range(1, len(coords) + 1)):
        return None
    exponents = []
    corner = []
    for _, a, b in coords:
        side = b - a
        if side.numerator != 1 or not is_dyadic(side):
            return None
        e = side.denominator.bit_length() - 1
        if e < 1:
            return None
        if (a * side.denominator).denominator != 1:
            return None  # corner not aligned to the side grid
        exponents.append(e)
        corner.append(a)
    m = _invert_exponents(tuple(exponents))
    if m is None or exponent_vector(m) != tuple(exponents):
        return None
    return CellWitness(m, tuple(corner))


def _invert_exponents(e: tuple[int, ...]) -> int | None:
    """Recover the step index whose exponent vector is `e`, if any."""
    c = len(e)
    v = e[0]
    f = 0
    while f < c and e[f] == v:
        f += 1
    tail = e[f:]
    if not tail:
        if c == v:  # end of the raise phase of block v-1
            return v * v
        if c == v + 1:  # cubic milestone Q_v
            return v * v + v
        return None
    w = tail[0]
    if any(t != w for t in tail):
        return None
    if w == v - 1 and c == v:
        return (v - 1) ** 2 + (v - 1) + f  # raise phase of block v-1
    if f == c - 1 and c == v + 1 and 1 <= w < v:
        return v * v + w  # append phase of block v-1
    return None
