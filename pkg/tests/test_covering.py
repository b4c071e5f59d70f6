from fractions import Fraction

import pytest

from torusdiff.covering import (
    CoverEngine,
    CoverParams,
    cover_rectangle,
    verify_plan,
    verify_template,
)
from torusdiff.geometry import FULL, box_set_measure, pairwise_disjoint
from torusdiff.lattice import q_cube

F = Fraction


def test_params_validation():
    good = CoverParams(F(1, 4), 2, 1)
    assert good.weight == F(5, 2)
    assert good.c == F(5, 8)
    assert good.min_level == 3
    for bad in (
        (F(3, 4), 2, 1),  # eps > 1/2
        (F(1, 3), 2, 1),  # eps not dyadic
        (F(0), 2, 1),
        (F(1, 4), 0, 1),
        (F(1, 4), 2, 0),
    ):
        with pytest.raises(ValueError):
            CoverParams(*bad)


@pytest.mark.parametrize(
    "eps,d,m",
    [(F(1, 4), 2, 1), (F(1, 2), 1, 1), (F(1, 8), 3, 2)],
)
def test_covered_measure_closed_form(eps, d, m):
    params = CoverParams(eps, d, m)
    engine = CoverEngine(params)
    k = params.min_level
    cube = q_cube(k).measure()
    for rounds in range(1, 4):
        expected = (1 - (1 - params.c) ** rounds) * cube
        assert engine.covered(k, rounds) == expected


def test_selection_is_one_per_block():
    params = CoverParams(F(1, 4), 2, 2)
    plan = cover_rectangle(q_cube(params.min_level), F(1, 4), 2, 2, 1)
    mask = (1 << params.m) - 1
    seen_groups = set()
    for placed in plan.iter_configurations(limit=300):
        assert placed.selected == ((placed.sibling_index & mask) == mask)
        assert placed.block_index == placed.sibling_index >> params.m
        seen_groups.add(placed.block_index)
    assert len(seen_groups) >= 2


def test_template_geometry_partition():
    params = CoverParams(F(1, 4), 2, 1)
    engine = CoverEngine(params)
    k = params.min_level
    g = engine.geometry(k)
    assert g.sibling_count == 2 ** (2 * k + 2)
    union = g.config.union_measure()
    residual = box_set_measure(g.residual_boxes)
    assert union + residual == g.subcube_measure
    assert pairwise_disjoint([c.box for c in g.cells] + list(g.residual_boxes))


def test_verify_template_passes():
    for eps, d, m in ((F(1, 4), 2, 1), (F(1, 2), 1, 1)):
        params = CoverParams(eps, d, m)
        engine = CoverEngine(params)
        results = verify_template(engine, params.min_level, rounds=2)
        assert results
        failed = [r for r in results if not r.passed]
        assert failed == []


def test_cover_rounds_zero_is_empty_plan():
    region = q_cube(3)
    plan = cover_rectangle(region, F(1, 4), 2, 1, 0)
    assert plan.covered_measure == 0
    assert plan.residual_measure == region.measure()
    assert plan.config_count == 0
    assert plan.per_round_covered == ()


def test_cover_full_torus_multiple_rounds():
    plan = cover_rectangle(FULL, F(1, 2), 1, 1, 3)
    c = F(3, 4)
    assert plan.covered_measure == 1 - (1 - c) ** 3
    assert sum(plan.per_round_covered, F(0)) == plan.covered_measure
    # successive rounds shrink geometrically by the residual factor
    assert plan.per_round_covered[1] == plan.per_round_covered[0] * (1 - c)


def test_cover_rejects_bad_input():
    with pytest.raises(ValueError):
        cover_rectangle(FULL, F(1, 4), 2, 1, -1)
    from torusdiff.geometry import Box

    with pytest.raises(ValueError):
        cover_rectangle(Box.make([(1, F(0), F(1, 3))]), F(1, 4), 2, 1, 1)


def test_verify_plan_passes():
    plan = cover_rectangle(q_cube(3), F(1, 4), 2, 1, 2)
    results = verify_plan(plan, sample_limit=200)
    assert all(r.passed for r in results), [r for r in results if not r.passed]


def test_leaf_counts_consistent_with_residual():
    params = CoverParams(F(1, 4), 2, 1)
    engine = CoverEngine(params)
    k = params.min_level
    for rounds in (1, 2):
        leaves = engine.leaf_counts(k, rounds)
        total = sum(
            count * q_cube(level).measure() for level, count in leaves.items()
        )
        assert total == q_cube(k).measure() - engine.covered(k, rounds)
