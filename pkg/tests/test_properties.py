"""Property-based checks (Hypothesis, at least 100 cases each)."""

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction as Fr

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracdim.covers import CoverInstance, brute_force_cover, canonical_cost, scaling_inequality_holds, min_cover_1d
from fracdim.dimensions import (
    box_dimension,
    cover_premeasure,
    dim1,
    dim2,
    dim3,
    dim4,
    dim5,
    mesh_box,
    premeasure_level_sum,
)
from fracdim.geometry import AxisBox
from fracdim.ifs import ContractionMap, IFSystem, make_natural_ifs_structure, moran_solve, uniform_moran
from fracdim.querysets import AttractorSet, Box, FinitePoints, HarmonicPoints, RationalPoints
from fracdim.scenarios import RunConfig, build_scenario, run_scenario
from fracdim.spaces import cantor_family_ifs, cantor_ifs
from fracdim.structures import Cell, check_refinement, count_touching, delta, make_natural_euclidean

UNIT = AxisBox.of((0, 1))
NAT = make_natural_euclidean(1, UNIT)

dyadic = st.builds(lambda k, e: Fr(k, 2**e), st.integers(-8, 8), st.integers(0, 3))
unit_rational = st.builds(lambda a, b: Fr(min(a, b), max(a, b, 1)), st.integers(0, 60), st.integers(1, 60))


@st.composite
def unit_boxes(draw):
    a, b = sorted((draw(unit_rational), draw(unit_rational)))
    return AxisBox.of((a, b))


@st.composite
def nested_boxes(draw):
    a, b = sorted((draw(unit_rational), draw(unit_rational)))
    t = [draw(st.integers(0, 8)) for _ in range(2)]
    lo = a + (b - a) * Fr(min(t), 8)
    hi = a + (b - a) * Fr(max(t), 8)
    return AxisBox.of((lo, hi)), AxisBox.of((a, b))


# --- structures -------------------------------------------------------------------------------


@given(lo=dyadic, width=st.integers(1, 8), extra=st.integers(1, 3), dim=st.integers(1, 2))
def test_random_natural_structures_refine(lo, width, extra, dim):
    hull = AxisBox(((lo, lo + Fr(width, 4)),) * dim)
    fs = make_natural_euclidean(dim, hull)
    rep = check_refinement(fs, fs.first_level + (extra if dim == 1 else 1))
    assert rep.ok, rep.violations[:2]


@given(boxes=nested_boxes(), n=st.integers(1, 9))
def test_counts_and_deltas_are_monotone(boxes, n):
    small, big = boxes
    assert count_touching(NAT, n, Box(small)) <= count_touching(NAT, n, Box(big))
    assert delta(NAT, n, Box(small)) <= delta(NAT, n, Box(big))


@pytest.mark.parametrize("n", range(1, 6))
@pytest.mark.parametrize("d", [1, 2])
def test_whole_hull_counts_closed_form(d, n):
    fs = make_natural_euclidean(d, AxisBox(((Fr(0), Fr(1)),) * d))
    F = Box(AxisBox(((Fr(0), Fr(1)),) * d))
    assert count_touching(fs, n, F) == 2 ** (n * d)
    assert delta(fs, n, F) == math.sqrt(d) * 2.0**-n


QUERIES = st.sampled_from([
    Box(AxisBox.of((Fr(1, 3), Fr(2, 5)))),
    FinitePoints(((Fr(1, 3),), (Fr(5, 8),))),
    RationalPoints(AxisBox.of((Fr(1, 5), Fr(1, 4)))),
    AttractorSet(cantor_ifs()),
    HarmonicPoints(),
])


@given(F=QUERIES, n=st.integers(1, 7), k=st.integers(0, 10**6))
def test_intersects_is_monotone_from_child_to_parent(F, n, k):
    parents = NAT.level(n).all_cells()
    parent = parents[k % len(parents)]
    children = [c for c in NAT.level(n + 1).all_cells() if parent.geometry.contains(c.geometry)]
    assert len(children) == 2
    for c in children:
        if F.intersects(c):
            assert F.intersects(parent)


# --- dimensions -------------------------------------------------------------------------------


@given(box=unit_boxes(), n=st.integers(1, 8), s=st.floats(0, 3), t=st.floats(0, 3))
def test_level_sum_nonincreasing_in_s(box, n, s, t):
    s, t = sorted((s, t))
    a = premeasure_level_sum(NAT, Box(box), s, n)
    b = premeasure_level_sum(NAT, Box(box), t, n)
    assert b <= a * (1 + 1e-12)


@given(box=unit_boxes(), n=st.integers(2, 9))
def test_dim1_counts_equal_box_counts(box, n):
    F = Box(box)
    fs = make_natural_euclidean(1, mesh_box(F))
    a = [c for _, c, _ in dim1(fs, F, n).sequence]
    b = [c for _, c, _ in box_dimension(F, n).sequence]
    assert a == b


@given(c=st.builds(Fr, st.integers(20, 499), st.just(1000)))
def test_uniform_pair_dim2_is_exact_per_level(c):
    est = dim2(make_natural_ifs_structure(cantor_family_ifs(c)), AttractorSet(cantor_family_ifs(c)), 8)
    exact = math.log(2) / -math.log(c)
    assert all(abs(r - exact) < 1e-12 for _, _, r in est.sequence)


@given(scale=st.builds(Fr, st.integers(1, 512), st.just(64)))
def test_rescaled_cantor_keeps_ratio_limits(scale):
    maps = [ContractionMap.from_matrix([[Fr(1, 3)]], [Fr(0)]),
            ContractionMap.from_matrix([[Fr(1, 3)]], [2 * scale / 3])]
    ifs = IFSystem(maps, AxisBox.of((0, scale)))
    fs, K = make_natural_ifs_structure(ifs), AttractorSet(ifs)
    base = make_natural_ifs_structure(cantor_ifs())
    # counts do not see the scale, so D1 ratios agree exactly
    assert dim1(fs, K, 10).sequence == dim1(base, AttractorSet(cantor_ifs()), 10).sequence
    assert abs(dim2(fs, K, 10).value - math.log(2) / math.log(3)) < 1e-2


@given(c=st.builds(Fr, st.integers(100, 450), st.just(1000)))
def test_dim3_bracket_contains_its_value(c):
    ifs = cantor_family_ifs(c)
    est = dim3(make_natural_ifs_structure(ifs), AttractorSet(ifs), 8, method="numeric")
    assert est.lower <= est.value <= est.upper
    assert abs(est.value - uniform_moran(2, float(c))) < 2e-2


@settings(max_examples=100)
@given(box=unit_boxes(), n=st.integers(1, 3))
def test_dim4_and_dim5_agree_on_compact_sets(box, n):
    a = dim4(NAT, Box(box), n + 1, 1, 1e-2)
    b = dim5(NAT, Box(box), n + 1, 1, 1e-2)
    assert a.value == b.value


@given(box=unit_boxes(), n=st.integers(1, 4), s=st.floats(0, 2))
def test_cover_cost_nonincreasing_in_depth_cap(box, n, s):
    costs = [cover_premeasure(NAT, Box(box), s, n, cap)[0] for cap in range(4)]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(costs, costs[1:]))


# --- covers -----------------------------------------------------------------------------------


@st.composite
def line_instances(draw, max_k=20):
    den = 2 ** draw(st.integers(2, 5))
    a = draw(st.integers(0, den - 1))
    b = draw(st.integers(a, den))
    k = draw(st.integers(1, max_k))
    cells = []
    for i in range(k):
        dn = 2 ** draw(st.integers(1, 5))
        lo = draw(st.integers(0, dn - 1))
        hi = draw(st.integers(lo + 1, min(dn, lo + 1 + dn // 2)))
        cells.append(Cell(AxisBox.of((Fr(lo, dn), Fr(hi, dn))), (i,), 0))
    s = draw(st.floats(0, 3))
    return CoverInstance(Box(AxisBox.of((Fr(a, den), Fr(b, den)))), tuple(cells), s)


@settings(max_examples=250)
@given(inst=line_instances())
def test_dp_equals_brute_force(inst):
    a, b = min_cover_1d(inst), brute_force_cover(inst)
    assert a.optimality == b.optimality
    assert a.chosen == b.chosen
    assert a.cost == b.cost or abs(a.cost - b.cost) <= 1e-12 * max(1.0, b.cost)


@given(inst=line_instances(), dt=st.floats(0.01, 2))
def test_scaling_inequality_on_optimizer_outputs(inst, dt):
    s, t = inst.exponent, inst.exponent + dt
    dmax = max(inst.diameters)
    cs, ct = min_cover_1d(inst).cost, min_cover_1d(inst.with_exponent(t)).cost
    assert scaling_inequality_holds(ct, cs, dmax, t, s)


@given(inst=line_instances(), dt=st.floats(0, 2))
def test_fixed_cover_cost_monotone_in_s(inst, dt):
    sol = min_cover_1d(inst)
    if not sol.feasible:
        return
    later = inst.with_exponent(inst.exponent + dt)
    assert canonical_cost(later.weights, sol.chosen) <= sol.cost * (1 + 1e-12)


@given(inst=line_instances(), keep=st.integers(0, 20))
def test_more_candidates_never_cost_more(inst, keep):
    fewer = CoverInstance(inst.target, inst.candidates[: min(keep, len(inst.candidates))], inst.exponent)
    assert min_cover_1d(inst).cost <= min_cover_1d(fewer).cost


# --- Moran ------------------------------------------------------------------------------------


@given(cs=st.lists(st.floats(0.05, 0.45), min_size=2, max_size=5), i=st.integers(0, 4), bump=st.floats(0.01, 0.3))
def test_moran_increases_with_any_factor(cs, i, bump):
    # one factor always has root 0, so at least two are drawn
    i %= len(cs)
    up = list(cs)
    up[i] = min(0.95, up[i] + bump)
    assert moran_solve(up) > moran_solve(cs)


@given(k=st.integers(2, 6), c=st.floats(0.02, 0.95))
def test_moran_uniform_matches_closed_form(k, c):
    assert abs(moran_solve([c] * k, 1e-13) - uniform_moran(k, c)) <= 2e-13 + 1e-15 * k


# --- determinism ------------------------------------------------------------------------------

CHEAP = ["cantor_ifs", "three_map_unit", "overlap_triple", "cantor_family:1/3", "cantor_family:2/5",
         "cantor_family:9/20", "cantor_family:49/100", "cantor_family:499/1000"]
CONFIG = RunConfig(depth=8, depth_cap=2)


def _key(name):
    rep = run_scenario(build_scenario(name), CONFIG)
    return tuple((c.query, c.model, repr(c.value), repr(c.lower), repr(c.upper), c.status) for c in rep.comparisons)


SERIAL = {}


@given(pick=st.lists(st.sampled_from(CHEAP), min_size=2, max_size=4))
def test_scenario_runs_are_deterministic_under_threads(pick):
    for name in pick:
        if name not in SERIAL:
            SERIAL[name] = _key(name)
    with ThreadPoolExecutor(max_workers=len(pick)) as pool:
        got = list(pool.map(_key, pick))
    assert got == [SERIAL[n] for n in pick]
