import math
from fractions import Fraction as Fr

import mpmath
import pytest

from fracdim.geometry import AxisBox
from fracdim.ifs import (
    ContractionMap,
    IFSystem,
    compose_word,
    make_natural_ifs_structure,
    moran_solve,
    uniform_moran,
    verify_osc_witness,
)
from fracdim.querysets import AttractorSet, Box
from fracdim.spaces import (
    affine_rectangles_ifs,
    cantor_family_ifs,
    cantor_ifs,
    golden_ifs,
    overlap_triple_ifs,
    rotated_squares_ifs,
    three_map_unit_ifs,
)
from fracdim.structures import count_touching, delta

from conftest import LOG2_3, LOG3_2


def mp_moran(factors):
    # independent oracle: independent root finder in 50-digit arithmetic
    mpmath.mp.dps = 50
    return float(mpmath.findroot(lambda s: sum(mpmath.mpf(c) ** s for c in factors) - 1, 0.7))


@pytest.mark.parametrize("factors", [(Fr(1, 3), Fr(1, 3)), (Fr(1, 2), Fr(1, 4)), (0.3, 0.2, 0.45), (Fr(1, 2),) * 3])
def test_moran_matches_high_precision_root(factors):
    assert moran_solve(factors) == pytest.approx(mp_moran([float(c) for c in factors]), abs=1e-12)


def test_moran_closed_forms():
    # known value: values quoted for the middle-third set and the 1/2, 1/4 pair
    assert abs(moran_solve([Fr(1, 3)] * 2) - LOG2_3) < 1e-12
    assert abs(moran_solve([Fr(1, 2), Fr(1, 4)]) - math.log((1 + math.sqrt(5)) / 2) / math.log(2)) < 1e-12
    # 2 (1/2)^1 = 1
    assert moran_solve([0.5, 0.5]) == pytest.approx(1.0, abs=1e-13)
    assert uniform_moran(3, 0.5) == pytest.approx(LOG3_2)


@pytest.mark.parametrize("bad", [[], [1.0], [0.0], [1.5, 0.5]])
def test_moran_rejects_bad_factors(bad):
    with pytest.raises(ValueError):
        moran_solve(bad)


def test_contraction_factors():
    assert ContractionMap.scalar(Fr(1, 3), 0).factor == pytest.approx(1 / 3)
    assert affine_rectangles_ifs().maps[0].factor == pytest.approx(0.5)
    assert not affine_rectangles_ifs().is_strict_self_similar
    assert not rotated_squares_ifs().is_strict_self_similar
    assert golden_ifs().is_strict_self_similar


def test_ifs_rejects_expanding_map():
    with pytest.raises(ValueError):
        IFSystem([ContractionMap.scalar(2, 0)], AxisBox.of((0, 1)))


def test_attractor_kind_is_derived():
    assert cantor_ifs().kind == "cantor"
    assert three_map_unit_ifs().kind == "box"
    assert affine_rectangles_ifs().kind == "box"


def test_osc_witness_checks():
    assert verify_osc_witness(cantor_ifs()).ok
    assert verify_osc_witness(golden_ifs()).ok
    assert verify_osc_witness(affine_rectangles_ifs()).ok
    rep = verify_osc_witness(overlap_triple_ifs())
    assert rep.contained and not rep.disjoint
    assert not verify_osc_witness(rotated_squares_ifs()).declared


def test_compose_word():
    ifs = cantor_ifs()
    f = compose_word(ifs, (2, 1))
    # f_2(f_1(x)) = (x/3)/3 + 2/3
    assert f((Fr(0),)) == (Fr(2, 3),)
    assert f((Fr(1),)) == (Fr(7, 9),)
    with pytest.raises(IndexError):
        compose_word(ifs, (3,))


def test_attractor_membership():
    K = AttractorSet(cantor_ifs())
    assert K.contains_point((Fr(1, 4),))  # 0.0202... in base 3
    assert not K.contains_point((Fr(1, 2),))
    assert K.meets_interval(Fr(2, 9), Fr(1, 3))
    assert not K.meets_interval(Fr(4, 10), Fr(6, 10))


def test_natural_structure_counts_and_deltas():
    ifs = cantor_ifs()
    fs = make_natural_ifs_structure(ifs)
    K = AttractorSet(ifs)
    for n in range(1, 9):
        assert count_touching(fs, n, K) == 2**n
        assert delta(fs, n, K) == pytest.approx(3.0**-n, rel=1e-14)
    # the left half [0, 1/2] only meets words starting with 1
    assert count_touching(fs, 4, Box(AxisBox.of((0, Fr(1, 2))))) == 8


def test_attractors_compare_by_value():
    assert AttractorSet(cantor_ifs()).contains_attractor(cantor_ifs())


def test_cantor_family_range():
    with pytest.raises(ValueError):
        cantor_family_ifs(Fr(1, 2))
    fs = make_natural_ifs_structure(cantor_family_ifs(Fr(2, 5)))
    assert delta(fs, 3, AttractorSet(cantor_family_ifs(Fr(2, 5)))) == pytest.approx(0.4**3)


def test_rotated_squares_alternate_shapes():
    # independent oracle: the product of the linear parts squared is diag(1/8, 1/8)
    fs = make_natural_ifs_structure(rotated_squares_ifs())
    K = AttractorSet(rotated_squares_ifs())
    assert delta(fs, 2, K) == pytest.approx(math.sqrt(2) / 8)
    assert delta(fs, 1, K) == pytest.approx(math.hypot(1 / 2, 1 / 4))
