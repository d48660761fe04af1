import math
from fractions import Fraction as Fr

import pytest

from fracdim.dimensions import (
    CONVERGED,
    INFINITE,
    UNDEFINED,
    DimensionEstimate,
    box_dimension,
    critical_exponent,
    curve_dimension,
    delta_schedule,
    dim1,
    dim2,
    dim3,
    dim4,
    dim5,
    dim6,
    mesh_box,
    premeasure_inf,
    premeasure_level_sum,
)
from fracdim.geometry import INF, AxisBox
from fracdim.ifs import make_natural_ifs_structure
from fracdim.querysets import AttractorSet, Box, CombOpenIntervals, FinitePoints, HarmonicPoints, RationalPoints
from fracdim.spaces import (
    cantor_ifs,
    constant_curve,
    golden_ifs,
    hilbert5_curve,
    identity_curve,
    make_comb_space,
    make_stuck_half,
    three_map_unit_ifs,
)
from fracdim.structures import make_natural_euclidean

from conftest import LOG2_3, LOG3_2, LOG5_2

UNIT = AxisBox.of((0, 1))
NAT = make_natural_euclidean(1, UNIT)


@pytest.fixture(scope="module")
def cantor():
    ifs = cantor_ifs()
    return make_natural_ifs_structure(ifs), AttractorSet(ifs)


def test_dim1_and_dim2_per_level_on_cantor(cantor):
    fs, K = cantor
    e1, e2 = dim1(fs, K, 10), dim2(fs, K, 10)
    # known value: ratio 1 for I and log 2/log 3 for II at every level
    assert all(r == pytest.approx(1.0, abs=1e-14) for _, _, r in e1.sequence)
    assert all(r == pytest.approx(LOG2_3, abs=1e-14) for _, _, r in e2.sequence)
    assert e1.status == e2.status == CONVERGED
    assert [c for _, c, _ in e1.sequence] == [2**n for n in range(1, 11)]


def test_dim3_similarity_and_numeric_routes_agree(cantor):
    fs, K = cantor
    sim = dim3(fs, K, 10)
    num = dim3(fs, K, 10, method="numeric")
    assert sim.method == "similarity-equation" and num.method == "level-sum"
    assert abs(sim.value - LOG2_3) < 1e-12
    assert abs(num.value - LOG2_3) < 1e-2
    assert num.lower <= LOG2_3 <= num.upper + 1e-3


def test_dim3_similarity_route_needs_the_attractor():
    with pytest.raises(ValueError):
        dim3(NAT, Box(UNIT), 8, method="similarity")
    with pytest.raises(ValueError):
        dim3(NAT, Box(UNIT), 8, method="bogus")


def test_three_map_unit_separates_I_II_from_III():
    ifs = three_map_unit_ifs()
    fs, K = make_natural_ifs_structure(ifs), AttractorSet(ifs)
    # known value: 3^n cells, largest of diameter 2^-n; the attractor is [0,1]
    assert dim1(fs, K, 10).value == pytest.approx(LOG3_2, abs=1e-12)
    assert dim2(fs, K, 10).value == pytest.approx(LOG3_2, abs=1e-12)
    assert dim3(fs, K, 10).value == pytest.approx(1.0, abs=1e-10)
    assert abs(dim3(fs, K, 10, method="numeric").value - 1.0) < 1e-2


def test_golden_pair_box_and_dim2():
    ifs = golden_ifs()
    fs, K = make_natural_ifs_structure(ifs), AttractorSet(ifs)
    gold = math.log((1 + math.sqrt(5)) / 2) / math.log(2)
    assert abs(box_dimension(K, 14).value - gold) < 5e-2
    assert abs(dim2(fs, K, 14).value - 1.0) < 1e-2


def test_box_dimension_of_simple_sets():
    assert abs(box_dimension(Box(UNIT), 10).value - 1) < 1e-2
    assert box_dimension(FinitePoints(((Fr(1, 3),),)), 10).value == 0
    assert abs(box_dimension(HarmonicPoints(), 14).value - 0.5) < 5e-2
    assert mesh_box(Box(UNIT)) == AxisBox.of((-1, 2))


def test_comb_values():
    fs = make_comb_space()
    F = CombOpenIntervals()
    assert dim1(fs, F, 8).value == 1.0
    assert dim1(fs, F.closure(), 8).status == INFINITE
    assert dim2(fs, F.closure(), 8).value == INF
    assert dim3(fs, F.closure(), 8).status == INFINITE


def test_stuck_half_preconditions():
    fs = make_stuck_half()
    X = Box(UNIT)
    for est in (dim3(fs, X, 8), dim4(fs, X, 5, 2), dim5(fs, X, 5, 2)):
        assert est.status == UNDEFINED
        assert math.isnan(est.value)
    d6 = dim6(fs, X, 5, 2)
    assert d6.status == INFINITE and d6.extra["witness"] < 0.5


@pytest.mark.parametrize("s", [0.25, 0.5, 1.0, 1.5, 2.0])
@pytest.mark.parametrize("n", [1, 3, 5])
def test_stuck_half_premeasure_closed_form(s, n):
    # independent oracle: the level sum 2/2^s + (2^m - 1)/2^(ms) is monotone in m on each side of s = 1
    exact = 2 * 2.0**-s + (2**n - 1) * 2.0 ** (-n * s) if s <= 1 else 2.0 ** (1 - s)
    got = premeasure_inf(make_stuck_half(), Box(UNIT), s, n)
    assert got == pytest.approx(exact, rel=1e-12)


def test_premeasure_level_sum_unit_interval():
    for n in range(1, 8):
        assert premeasure_level_sum(NAT, Box(UNIT), 1.0, n) == pytest.approx(1.0, rel=1e-13)
        assert premeasure_level_sum(NAT, Box(UNIT), 0.0, n) == pytest.approx(2**n)


def test_cover_models_on_unit_interval():
    F = Box(UNIT)
    d4 = dim4(NAT, F, 6, 3)
    d5 = dim5(NAT, F, 6, 3)
    d6 = dim6(NAT, F, 6, 3)
    for est in (d4, d5, d6):
        assert abs(est.value - 1) < 1e-2
        assert est.method == "cover"
    assert d4.model == "D4" and d5.model == "D5"
    # the shared computation hands out independent copies
    d5.notes.append("x")
    assert "x" not in dim4(NAT, F, 6, 3).notes


def test_dim4_uses_the_closure_of_the_rationals():
    est = dim4(NAT, RationalPoints(UNIT), 6, 3)
    assert abs(est.value - 1) < 1e-2
    assert any("closure" in n for n in est.notes)
    # countable covers are not searched for non-compact sets
    assert dim5(NAT, RationalPoints(UNIT), 6, 3).status == UNDEFINED
    assert dim6(NAT, RationalPoints(UNIT), 6, 3).status == UNDEFINED


def test_points_have_dimension_zero():
    P = FinitePoints(((Fr(1, 3),), (Fr(3, 4),)))
    for est in (dim1(NAT, P, 8), dim2(NAT, P, 8), dim3(NAT, P, 8), dim4(NAT, P, 5, 2), dim6(NAT, P, 5, 2)):
        assert est.value == pytest.approx(0.0, abs=1e-2)


def test_delta_schedule_falls_back_when_deltas_stick():
    assert delta_schedule(NAT, Box(UNIT), 3) == [0.5, 0.25, 0.125]
    assert delta_schedule(make_stuck_half(), Box(UNIT), 3) == [0.5, 0.25, 0.125]


def test_curves():
    assert abs(curve_dimension(identity_curve(), 8).value - 1) < 1e-2
    c = curve_dimension(constant_curve(), 8)
    assert abs(c.value) < 1e-2 and any("degenerate" in n for n in c.notes)
    h = hilbert5_curve()
    assert abs(curve_dimension(h, 8).value - LOG5_2) < 1e-2
    fs = h.induced_structure()
    for s in (1.0, 2.0, LOG5_2, 3.0):
        for n in (1, 4, 8):
            # known value: 5^n image squares of diameter sqrt(2)/2^n
            exact = math.sqrt(2) ** s * (5 / 2**s) ** n
            assert premeasure_level_sum(fs, h.image, s, n) == pytest.approx(exact, rel=1e-12)


def test_critical_exponent_bisection():
    # independent oracle: tail logs n (log 2 - s log 2) switch sign at s = 1
    tail = lambda s: [n * (1 - s) * math.log(2) for n in (6, 7, 8, 9)]  # noqa: E731
    c = critical_exponent(tail, 2.0, 1e-6)
    assert abs(c.value - 1) < 1e-6
    assert c.lower <= 1 <= c.upper
    with pytest.raises(ValueError):
        critical_exponent(tail, 2.0, 0)


def test_estimate_invariants_and_records():
    with pytest.raises(ValueError):
        DimensionEstimate("D9", 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        DimensionEstimate("D1", 1.0, 1.0, 1.0, status=INFINITE)
    rec = DimensionEstimate("D1", INF, INF, INF, status=INFINITE).to_record()
    assert rec["value"] == "inf"
    est = dim1(NAT, Box(UNIT), 4)
    assert est.csv_rows()[0] == (1, 2, 1.0)
