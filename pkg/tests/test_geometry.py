import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torusdiff.geometry import (
    FULL,
    Box,
    box_set_measure,
    coalesce,
    cube_box,
    decompose_into_cubes,
    dyadic_intervals_1d,
    first_piece,
    iter_cube_corners,
    pairwise_disjoint,
    piece_level_counts,
    subtract,
    subtract_many,
    torus_metric,
    translate_box,
)

F = Fraction


@st.composite
def dyadic_intervals(draw, level=5):
    denom = 2**level
    a = draw(st.integers(0, denom - 1))
    b = draw(st.integers(a + 1, denom))
    return F(a, denom), F(b, denom)


@st.composite
def boxes(draw, max_index=5, level=4):
    indices = draw(st.lists(st.integers(1, max_index), unique=True, max_size=3))
    items = []
    for i in indices:
        a, b = draw(dyadic_intervals(level))
        items.append((i, a, b))
    return Box.make(items)


# -- construction and basic queries -----------------------------------


def test_make_normalizes_and_sorts():
    b = Box.make([(3, F(0), F(1, 2)), (1, F(1, 4), F(3, 4)), (2, F(0), F(1))])
    assert b.constrained_indices == (1, 3)
    assert b.interval(2) == (F(0), F(1))
    assert b.interval(3) == (F(0), F(1, 2))
    assert b.measure() == F(1, 4)


def test_make_accepts_mapping():
    b = Box.make({2: (F(0), F(1, 4))})
    assert b == Box.make([(2, F(0), F(1, 4))])


def test_bad_interval_rejected():
    with pytest.raises(ValueError):
        Box(((1, F(1, 2), F(1, 2)),))
    with pytest.raises(ValueError):
        Box(((1, F(0), F(1)),))  # full circle must be left free
    with pytest.raises(ValueError):
        Box(((2, F(0), F(1, 2)), (1, F(0), F(1, 2))))  # unsorted


def test_full_torus():
    assert FULL.measure() == 1
    assert FULL.max_index == 0
    assert FULL.diameter() == F(1, 2)
    assert FULL.contains(Box.make([(1, F(0), F(1, 8))]))


def test_diameter_weights_coordinates():
    # Coordinate i contributes at weight 2^-i; free tail adds half the rest.
    b = Box.make([(1, F(0), F(1, 4)), (2, F(0), F(1, 2))])
    assert b.diameter() == F(1, 4) / 2 + F(1, 2) / 4 + F(1, 2) * (1 - F(1, 2) - F(1, 4))


@given(boxes(), boxes())
def test_intersection_bounded_by_factors(x, y):
    hit = x.intersect(y)
    if hit is None:
        return
    assert hit.measure() <= min(x.measure(), y.measure())
    assert x.contains(hit) and y.contains(hit)
    assert y.intersect(x) == hit


@given(boxes())
def test_self_intersection_identity(x):
    assert x.intersect(x) == x
    assert x.contains(x)


# -- subtraction -------------------------------------------------------


@given(boxes(), boxes())
def test_subtract_measure_additivity(minuend, subtrahend):
    pieces = subtract(minuend, subtrahend)
    hit = minuend.intersect(subtrahend)
    hit_measure = hit.measure() if hit is not None else F(0)
    assert box_set_measure(pieces) + hit_measure == minuend.measure()
    assert pairwise_disjoint(pieces)
    for piece in pieces:
        assert minuend.contains(piece)
        assert piece.intersect(subtrahend) is None


@given(boxes(), boxes(), boxes())
def test_subtract_many_removes_all_holes(region, h1, h2):
    pieces = subtract_many([region], [h1, h2])
    for piece in pieces:
        assert piece.intersect(h1) is None
        assert piece.intersect(h2) is None
        assert region.contains(piece)


@given(boxes(), boxes())
def test_coalesce_preserves_disjoint_unions(minuend, subtrahend):
    pieces = subtract(minuend, subtrahend)
    merged = coalesce(pieces)
    assert box_set_measure(merged) == box_set_measure(pieces)
    assert pairwise_disjoint(merged)
    assert len(merged) <= len(pieces)


# -- translation on the torus -------------------------------------------


def test_translate_wraps_and_splits():
    b = Box.make([(1, F(3, 4), F(1))])
    pieces = translate_box(b, {1: F(1, 2)})
    assert box_set_measure(pieces) == b.measure()
    assert len(pieces) == 1
    assert pieces[0].interval(1) == (F(1, 4), F(1, 2))
    straddle = translate_box(Box.make([(1, F(1, 2), F(7, 8))]), {1: F(1, 4)})
    assert len(straddle) == 2
    assert box_set_measure(straddle) == F(3, 8)


def test_translation_preserves_measure_seeded():
    rng = random.Random(93)
    denom = 2**6
    for _ in range(1000):
        items = []
        for i in rng.sample(range(1, 7), rng.randint(1, 3)):
            a = rng.randrange(denom)
            b = rng.randrange(a + 1, denom + 1)
            items.append((i, F(a, denom), F(b, denom)))
        box = Box.make(items)
        offsets = {i: F(rng.randrange(denom), denom) for i, _, _ in box.coords}
        pieces = translate_box(box, offsets)
        assert box_set_measure(pieces) == box.measure()
        assert pairwise_disjoint(pieces)


def test_shifted_rejects_wrap():
    b = Box.make([(1, F(1, 2), F(3, 4))])
    assert b.shifted({1: F(1, 4)}).interval(1) == (F(3, 4), F(1))
    with pytest.raises(ValueError):
        b.shifted({1: F(1, 2)})


# -- dyadic decomposition ------------------------------------------------


def test_dyadic_intervals_basic():
    assert dyadic_intervals_1d(F(0), F(1)) == [(F(0), 0)]
    assert dyadic_intervals_1d(F(1, 4), F(1, 2)) == [(F(1, 4), 2)]
    got = dyadic_intervals_1d(F(1, 8), F(1, 2))
    assert got == [(F(1, 8), 3), (F(1, 4), 2)]


@given(dyadic_intervals(level=6))
def test_dyadic_intervals_tile(iv):
    a, b = iv
    x = a
    for start, level in dyadic_intervals_1d(a, b):
        assert start == x
        x += F(1, 2**level)
    assert x == b


@given(dyadic_intervals(level=6))
def test_dyadic_intervals_maximal(iv):
    a, b = iv
    for start, level in dyadic_intervals_1d(a, b):
        if level == 0:
            continue
        parent_side = F(1, 2 ** (level - 1))
        parent = (start // parent_side) * parent_side
        assert not (a <= parent and parent + parent_side <= b)


def test_cube_box_measure():
    c = cube_box(2, (F(0), F(1, 4), F(1, 2)))
    assert c.measure() == F(1, 4) ** 3
    assert c.constrained_indices == (1, 2, 3)


@given(boxes(max_index=3, level=3), st.integers(2, 4))
def test_decomposition_tiles_the_region(box, min_level):
    classes = decompose_into_cubes([box], min_level)
    total = sum(
        (cls.count * F(1, 2**cls.level) ** (cls.level + 1) for cls in classes),
        F(0),
    )
    assert total == box.measure()
    for cls in classes:
        assert cls.level >= min_level
        assert box.contains(cls.witness_box())


@given(boxes(max_index=3, level=3), st.integers(2, 4))
def test_piece_level_counts_agree_with_decomposition(box, min_level):
    classes = decompose_into_cubes([box], min_level)
    direct: dict[int, int] = {}
    for cls in classes:
        direct[cls.level] = direct.get(cls.level, 0) + cls.count
    assert piece_level_counts([box], min_level) == direct


def test_iter_cube_corners_matches_count():
    box = Box.make([(1, F(0), F(1, 2)), (3, F(1, 4), F(1, 2))])
    for cls in decompose_into_cubes([box], 2):
        corners = list(iter_cube_corners(cls))
        assert len(corners) == cls.count
        assert len(set(corners)) == cls.count
        assert corners[0] == cls.witness
        for corner in corners[:32]:
            assert box.contains(cube_box(cls.level, corner))


def test_first_piece_matches_decomposition():
    box = Box.make([(1, F(1, 8), F(1, 2))])
    level, corner = first_piece(box, 3)
    classes = decompose_into_cubes([box], 3)
    assert (level, corner) == (classes[0].level, classes[0].witness)


# -- metric ---------------------------------------------------------------


def test_torus_metric_enclosure():
    lo, hi = torus_metric((F(0), F(1, 2)), (F(1, 2), F(1, 2)))
    assert lo == F(1, 4)
    assert hi - lo == F(1, 8)
    # circular distance: 7/8 vs 0 is 1/8 apart, not 7/8
    lo2, _ = torus_metric((F(7, 8),), (F(0),))
    assert lo2 == F(1, 16)
