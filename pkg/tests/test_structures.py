import math
from fractions import Fraction as Fr

import pytest

from fracdim.geometry import INF, AxisBox
from fracdim.querysets import Box, CombOpenIntervals, FinitePoints
from fracdim.spaces import make_comb_space, make_horizontal_lines, make_stuck_half, make_unbounded_level
from fracdim.structures import (
    EVERYTHING,
    Cell,
    FractalStructure,
    GridFamily,
    InfiniteFamilyError,
    Level,
    NoCountableCover,
    check_refinement,
    count_touching,
    delta,
    level_profile,
    make_natural_euclidean,
    validate_family,
)

UNIT = AxisBox.of((0, 1))


def brute_count(n, a, b):
    # independent oracle: enumerate every dyadic interval of [0,1] and test overlap directly
    h = Fr(1, 2**n)
    return sum(1 for k in range(2**n) if k * h <= b and (k + 1) * h >= a)


@pytest.mark.parametrize("n", [1, 3, 6])
@pytest.mark.parametrize("ab", [(Fr(0), Fr(1)), (Fr(1, 3), Fr(2, 3)), (Fr(1, 2), Fr(1, 2)), (Fr(1, 7), Fr(1, 5))])
def test_natural_counts_match_enumeration(n, ab):
    fs = make_natural_euclidean(1, UNIT)
    assert count_touching(fs, n, Box(AxisBox.of(ab))) == brute_count(n, *ab)


def test_natural_square_counts():
    fs = make_natural_euclidean(2, AxisBox.of((0, 1), (0, 1)))
    assert count_touching(fs, 3, Box(AxisBox.of((0, 1), (0, 1)))) == 64
    assert delta(fs, 3, EVERYTHING) == pytest.approx(math.sqrt(2) / 8)


def test_natural_structure_starts_where_the_hull_is_on_the_grid():
    fs = make_natural_euclidean(1, AxisBox.of((Fr(1, 4), Fr(3, 2))))
    assert fs.first_level == 2
    assert check_refinement(fs, 5).ok
    with pytest.raises(ValueError):
        make_natural_euclidean(1, AxisBox.of((Fr(1, 3), 1)))


def test_grid_family_profile_matches_touching_cells():
    fam = GridFamily(Fr(1, 8), ((0, 7), (0, 7)), 3)
    F = Box(AxisBox.of((Fr(1, 10), Fr(1, 2)), (Fr(3, 8), Fr(3, 8))))
    cells = list(fam.touching_cells(F))
    assert fam.profile(F).count == len(cells)
    assert all(F.intersects(c) for c in cells)
    assert validate_family(fam, F) == []


def test_refinement_detects_a_broken_structure():
    def gen(n):
        h = Fr(1, 2**n)
        shift = h / 3 if n == 2 else 0  # level 2 is misaligned
        cells = tuple(Cell(AxisBox.of((k * h + shift, (k + 1) * h + shift)), (k,), n) for k in range(2**n))
        return Level(n, cells)

    rep = check_refinement(FractalStructure("broken", 1, gen), 3)
    assert not rep.ok
    assert rep.violations


def test_stuck_half_deltas_do_not_vanish():
    fs = make_stuck_half()
    X = Box(UNIT)
    assert [delta(fs, n, X) for n in range(1, 6)] == [0.5] * 5
    assert check_refinement(fs, 6).ok


def test_unbounded_level():
    fs = make_unbounded_level()
    assert all(delta(fs, n, EVERYTHING) == INF for n in range(1, 5))
    # known value: the unbounded cell misses [0,1] from level 2 on
    assert [delta(fs, n, Box(UNIT)) for n in range(1, 5)] == [INF, 0.25, 0.125, 0.0625]


def test_comb_counts():
    fs = make_comb_space()
    F = CombOpenIntervals()
    for n in range(1, 7):
        assert count_touching(fs, n, F) == 2**n
        assert count_touching(fs, n, F.closure()) == INF
    # a point on a tooth meets the base cell and the tooth cells through it
    pt = FinitePoints(((Fr(1, 4), Fr(0)),))
    assert count_touching(fs, 2, pt) == 3
    with pytest.raises(InfiniteFamilyError):
        fs.level(2).touching(F.closure())


def test_horizontal_lines_have_no_countable_cover_of_a_vertical_segment():
    fs = make_horizontal_lines()
    V = Box(AxisBox.of((0, 0), (0, 1)))
    assert count_touching(fs, 3, V) == INF
    with pytest.raises(NoCountableCover):
        fs.level(3).cover_pool(V)
    H = Box(AxisBox.of((0, 1), (0, 0)))
    assert count_touching(fs, 3, H) == 10  # 8 cells inside plus the two neighbours touching the ends


def test_level_profile_log_sum():
    fs = make_natural_euclidean(1, UNIT)
    p = level_profile(fs, 4, Box(UNIT))
    assert math.exp(p.log_sum(1.0)) == pytest.approx(1.0, rel=1e-14)
    assert math.exp(p.log_sum(0.0)) == pytest.approx(16, rel=1e-14)


def test_level_generator_must_return_its_index():
    fs = FractalStructure("bad", 1, lambda n: Level(n + 1))
    with pytest.raises(ValueError):
        fs.level(1)


def _constructors():
    from fracdim.ifs import make_natural_ifs_structure
    from fracdim import spaces as sp

    yield "natural 1-d", make_natural_euclidean(1, UNIT)
    yield "natural 2-d", make_natural_euclidean(2, AxisBox.of((0, 1), (0, 1)))
    yield "comb", make_comb_space()
    yield "horizontal lines", make_horizontal_lines()
    yield "stuck half", make_stuck_half()
    yield "unbounded level", make_unbounded_level()
    yield "cantor union", sp.make_cantor_union()
    for f in (sp.cantor_ifs, sp.golden_ifs, sp.three_map_unit_ifs, sp.overlap_triple_ifs,
              sp.affine_rectangles_ifs, sp.rotated_squares_ifs):
        yield f.__name__, make_natural_ifs_structure(f())
    yield "hilbert curve", sp.hilbert5_curve().induced_structure()
    yield "identity curve", sp.identity_curve().induced_structure()


def test_every_constructor_refines_through_depth_eight():
    for name, fs in _constructors():
        rep = check_refinement(fs, 8)
        assert rep.ok, (name, rep.violations[:3])
        # whatever was not checked must say why
        assert rep.checked_pairs or rep.notices, name
