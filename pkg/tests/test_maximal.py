from fractions import Fraction

import pytest

from torusdiff.geometry import FULL, Box
from torusdiff.maximal import (
    SimpleFunction,
    average,
    comparison_bound_enclosure,
    exceptional_lower_bound,
    lp_ledger,
    maximal_disjointness_check,
    maximal_value,
    norm_term_enclosure,
    ratio_key,
    weak_type_ratio,
)
from torusdiff.schedule import make_schedule

F = Fraction

HALF_LINE = Box.make([(1, F(0), F(1, 2))])
QUARTER = Box.make([(1, F(0), F(1, 4))])


def test_simple_function_guards():
    with pytest.raises(ValueError):
        SimpleFunction(((HALF_LINE, F(1)), (QUARTER, F(2))))  # overlap
    with pytest.raises(ValueError):
        SimpleFunction(((HALF_LINE, F(-1)),))


def test_integrals_and_norms():
    f = SimpleFunction(
        ((QUARTER, F(2)), (Box.make([(1, F(1, 2), F(3, 4))]), F(1)),)
    )
    assert f.integral_over(FULL) == 2 * F(1, 4) + F(1, 4)
    assert f.integral_over(HALF_LINE) == F(1, 2)
    assert f.lp_power(1) == F(3, 4)
    assert f.lp_power(2) == 4 * F(1, 4) + F(1, 4)
    assert average(f, FULL) == F(3, 4)


def test_maximal_value_requires_nesting():
    f = SimpleFunction(((QUARTER, F(1)),))
    boxes = [FULL, HALF_LINE, QUARTER]
    assert maximal_value(f, QUARTER, boxes) == 1
    straddler = Box.make([(1, F(1, 8), F(5, 8))])
    with pytest.raises(ValueError):
        maximal_value(f, straddler, [HALF_LINE])


def test_ratio_key_orders_like_the_ratio():
    p = F(3, 2)
    pairs = [(F(2), F(1, 8)), (F(1), F(1, 2)), (F(3), F(1, 27))]
    keys = [ratio_key(lam, t, p) for lam, t in pairs]
    floats = [float(lam) * float(t) ** (1 / float(p)) for lam, t in pairs]
    assert sorted(range(3), key=keys.__getitem__) == sorted(
        range(3), key=floats.__getitem__
    )


def test_weak_type_ratio_hand_example():
    f = SimpleFunction(((QUARTER, F(1)),))
    boxes = [FULL, HALF_LINE, QUARTER]
    report = weak_type_ratio(f, boxes, F(2))
    # best level is the cell average 1 with mass 1/4, ratio^2 = 1/4 / (1/4) = 1
    assert report.best_lambda == 1
    assert report.level_mass == F(1, 4)
    assert report.ratio_power() == 1
    enc = report.ratio_enclosure()
    assert enc.lo <= 1 <= enc.hi


def test_weak_type_non_integer_p_needs_indicator():
    f = SimpleFunction(((QUARTER, F(2)),))
    with pytest.raises(ValueError):
        weak_type_ratio(f, [FULL], F(3, 2))
    g = SimpleFunction(((QUARTER, F(1)),))
    report = weak_type_ratio(g, [FULL, QUARTER], F(3, 2))
    assert report.norm_power == F(1, 4)


def test_maximal_disjointness_needs_certificate():
    f = SimpleFunction(((QUARTER, F(1)),))
    with pytest.raises(ValueError):
        maximal_disjointness_check(f, [FULL], F(0), nesting_verified=False)
    nested = [
        FULL,
        HALF_LINE,
        QUARTER,
        Box.make([(1, F(1, 2), F(1))]),
    ]
    everything = maximal_disjointness_check(f, nested, F(1, 8), nesting_verified=True)
    assert everything == [FULL]  # the whole space is hot and swallows the rest
    maximal = maximal_disjointness_check(f, nested, F(3, 8), nesting_verified=True)
    assert maximal == [HALF_LINE]


def test_maximal_disjointness_detects_overlap():
    f = SimpleFunction(((QUARTER, F(1)),))
    overlapping = [HALF_LINE, Box.make([(1, F(1, 8), F(5, 8))])]
    with pytest.raises(AssertionError):
        maximal_disjointness_check(f, overlapping, F(0), nesting_verified=True)


# -- the counterexample ledger (oracle values frozen before any build) -------


def test_ledger_level_one():
    rows = lp_ledger(make_schedule("geq", F(2), 1).levels, F(2))
    (row,) = rows
    assert row.selected_measure == F(1, 2)
    assert row.central_measure == F(1, 3)
    assert row.norm_term_power == F(4, 3)
    assert row.norm_term_key == (F(2), F(1, 3))
    assert exceptional_lower_bound(rows) == F(1, 6)


def test_ledger_depth_eight():
    rows = lp_ledger(make_schedule("geq", F(2), 8).levels, F(2))
    total_central = sum((r.central_measure for r in rows), F(0))
    assert total_central < 1
    bound = exceptional_lower_bound(rows)
    assert bound == F(
        28162616594107305334628857375322692117,
        127885302886775058171934658071143383040,
    )
    assert bound > 0
    assert float(bound) == pytest.approx(0.2202177729448821, rel=1e-12)


def test_ledger_non_integer_p_has_no_power():
    rows = lp_ledger(make_schedule("geq", F(2), 2).levels, F(3, 2))
    assert all(r.norm_term_power is None for r in rows)
    for row in rows:
        enc = norm_term_enclosure(row, F(3, 2))
        assert 0 < enc.lo <= enc.hi


def test_norm_term_enclosure_contains_exact_value():
    rows = lp_ledger(make_schedule("geq", F(2), 4).levels, F(2))
    for row in rows:
        enc = norm_term_enclosure(row, F(2))
        assert enc.lo <= row.norm_term_power <= enc.hi


def test_comparison_bound_dominates_ledger_sum():
    rows = lp_ledger(make_schedule("geq", F(2), 8).levels, F(2))
    partial = sum((r.norm_term_power for r in rows), F(0))
    reference, safe = comparison_bound_enclosure(F(2), F(2), 8)
    assert reference.hi <= safe.hi
    # the quantization-safe closed form dominates the exact partial sum
    assert partial <= safe.hi
    # each term obeys term_j <= 2^(2p-1) j^(p/p0 - 2)
    for j, row in enumerate(rows, start=1):
        assert row.norm_term_power <= F(8, j)
