import json
import math
import random
from fractions import Fraction as Fr

import pytest

from fracdim.acceptance import random_line_instance
from fracdim.covers import (
    EXACT,
    INFEASIBLE,
    INFEASIBLE_WITHIN_BUDGET,
    UPPER_BOUND,
    CoverInstance,
    brute_force_cover,
    canonical_cost,
    explain_json,
    scaling_inequality_holds,
    min_cover,
    min_cover_1d,
    min_cover_bb,
)
from fracdim.geometry import INF, AxisBox
from fracdim.querysets import Box, FinitePoints
from fracdim.structures import Cell, make_natural_euclidean

UNIT = AxisBox.of((0, 1))
SQUARE = AxisBox.of((0, 1), (0, 1))


def cell(a, b, i=0):
    return Cell(AxisBox.of((Fr(a), Fr(b))), (i,), 0)


def level_cells(fs, n):
    return tuple(fs.level(n).all_cells())


def test_full_dyadic_cover_at_s_one_costs_one():
    fs = make_natural_euclidean(1, UNIT)
    inst = CoverInstance(Box(UNIT), level_cells(fs, 3), 1.0)
    sol = min_cover_1d(inst)
    # lengths of any dyadic partition of [0,1] sum to 1
    assert sol.cost == pytest.approx(1.0, abs=1e-14)
    assert sol.optimality == EXACT


def test_forced_full_square_cover():
    fs = make_natural_euclidean(2, SQUARE)
    inst = CoverInstance(Box(SQUARE), level_cells(fs, 2), 2.0)
    sol = min_cover_bb(inst)
    # 16 cells of diameter sqrt(2)/4 are all needed
    assert len(sol.chosen) == 16
    assert sol.cost == pytest.approx(16 * (math.sqrt(2) / 4) ** 2)
    assert sol.feasible


def test_singleton_candidate():
    inst = CoverInstance(Box(AxisBox.of((Fr(1, 4), Fr(1, 2)))), (cell(0, 1),), 0.7)
    for engine in (min_cover_1d, brute_force_cover, min_cover_bb):
        sol = engine(inst)
        assert sol.chosen == (0,) and sol.cost == 1.0


def test_two_halves_beat_the_fine_cover_below_one():
    # halves cost 2/2^s; the other option is one half plus 2^m pieces of the other
    pool = [cell(0, Fr(1, 2), 0), cell(Fr(1, 2), 1, 1)]
    pool += [cell(Fr(k, 8), Fr(k + 1, 8), 2 + k) for k in range(4)]
    inst = CoverInstance(Box(UNIT), tuple(pool), 0.5)
    sol = brute_force_cover(inst)
    assert sol.chosen == (0, 1)
    assert sol.cost == pytest.approx(2 / 2**0.5)
    assert sol.cost < 1 / 2**0.5 + 4 / 8**0.5
    assert min_cover_1d(inst).chosen == (0, 1)


def test_touching_endpoints_suffice_and_gaps_are_infeasible():
    ok = CoverInstance(Box(UNIT), (cell(0, Fr(1, 3), 0), cell(Fr(1, 3), 1, 1)), 1.0)
    assert min_cover_1d(ok).chosen == (0, 1)
    gap = CoverInstance(Box(UNIT), (cell(0, Fr(1, 3), 0), cell(Fr(1, 2), 1, 1)), 1.0)
    for engine in (min_cover_1d, brute_force_cover, min_cover_bb):
        sol = engine(gap)
        assert sol.optimality == INFEASIBLE and sol.cost == INF and not sol.feasible


def test_point_targets_use_zero_diameter_cells():
    pts = FinitePoints(((Fr(1, 3),), (Fr(2, 3),)))
    inst = CoverInstance(pts, (cell(0, 1, 0), cell(Fr(1, 3), Fr(1, 3), 1), cell(Fr(2, 3), Fr(2, 3), 2)), 0.0)
    # 0**0 = 1 so two points cost 2 against 1 for the unit interval
    assert min_cover(inst).cost == 1.0
    assert min_cover(inst.with_exponent(1.0)).cost == 0.0


def test_empty_pool():
    assert min_cover(CoverInstance(Box(UNIT), (), 1.0)).optimality == INFEASIBLE


def test_budget_exhaustion_is_flagged_separately():
    fs = make_natural_euclidean(2, SQUARE)
    inst = CoverInstance(Box(SQUARE), level_cells(fs, 1) + level_cells(fs, 2), 1.0)
    sol = min_cover_bb(inst, node_budget=1)
    assert sol.optimality in (UPPER_BOUND, INFEASIBLE_WITHIN_BUDGET)
    full = min_cover_bb(inst)
    assert full.optimality == EXACT
    assert full.cost == pytest.approx(4 * math.sqrt(2) / 2)


def test_bb_matches_brute_force_in_two_dimensions():
    fs = make_natural_euclidean(2, SQUARE)
    pool = level_cells(fs, 1) + tuple(level_cells(fs, 2)[:6])
    target = Box(AxisBox.of((0, Fr(1, 2)), (0, 1)))
    for s in (0.0, 0.5, 1.0, 2.0, 3.0):
        inst = CoverInstance(target, pool, s)
        a, b = min_cover_bb(inst), brute_force_cover(inst)
        assert a.cost == pytest.approx(b.cost, rel=1e-12)


def test_brute_force_refuses_large_pools():
    inst = CoverInstance(Box(UNIT), tuple(cell(0, 1, i) for i in range(21)), 1.0)
    with pytest.raises(ValueError):
        brute_force_cover(inst)


def test_dp_equals_brute_force_on_random_instances():
    rng = random.Random(11)
    for _ in range(200):
        inst = random_line_instance(rng, rng.randint(1, 12))
        a, b = min_cover_1d(inst), brute_force_cover(inst)
        assert a.chosen == b.chosen
        assert a.cost == b.cost or abs(a.cost - b.cost) <= 1e-12 * max(1.0, b.cost)


def test_adding_candidates_never_raises_the_cost():
    rng = random.Random(5)
    for _ in range(50):
        inst = random_line_instance(rng, 10)
        less = CoverInstance(inst.target, inst.candidates[:6], inst.exponent)
        assert min_cover_1d(inst).cost <= min_cover_1d(less).cost


def test_scaling_inequality_helper():
    assert scaling_inequality_holds(0.25, 1.0, 0.5, 3.0, 1.0)
    assert not scaling_inequality_holds(0.3, 1.0, 0.5, 3.0, 1.0)
    assert scaling_inequality_holds(5.0, INF, 0.5, 2.0, 1.0)
    with pytest.raises(ValueError):
        scaling_inequality_holds(1.0, 1.0, 0.5, 1.0, 2.0)


def test_invalid_instances():
    with pytest.raises(ValueError):
        CoverInstance(Box(UNIT), (cell(0, 1),), -1.0)


def test_explain_json_is_deterministic():
    fs = make_natural_euclidean(1, UNIT)
    inst = CoverInstance(Box(UNIT), level_cells(fs, 1) + level_cells(fs, 2), 0.5)
    sol = min_cover(inst)
    text = explain_json(inst, sol)
    assert text == explain_json(inst, min_cover(inst))
    rec = json.loads(text)
    assert rec["optimality"] == EXACT and len(rec["cells"]) == len(sol.chosen)
    assert canonical_cost(inst.weights, sol.chosen) == sol.cost
