"""Concrete fractal structures used by the scenario registry.

Each constructor returns a :class:`~fracdim.structures.FractalStructure`;
families that are infinite answer counts and diameters in closed form.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .geometry import INF, AxisBox, Geometry, Point, UnboundedComplement, _log_sqrt
from .ifs import ContractionMap, IFSWordFamily, IFSystem, make_natural_ifs_structure
from .querysets import Box, CombOpenIntervals, FinitePoints
from .structures import (
    Cell,
    DiameterProfile,
    FractalStructure,
    GridFamily,
    InfiniteFamilyError,
    Level,
    NoCountableCover,
    ParamFamily,
    QuerySet,
    check_refinement,
    profile_of_cells,
)

HALF = Fraction(1, 2)


def _one_size_profile(count, side: Fraction) -> DiameterProfile:
    if count == 0:
        return DiameterProfile(0, 0.0)
    ld = _log_sqrt(side * side)
    if count == INF:
        return DiameterProfile(INF, float(side))
    return DiameterProfile(count, float(side), (ld,), (math.log(count),))


def _dyadic_hits(a: Fraction, b: Fraction, h: Fraction, kmin=None, kmax=None) -> tuple[int, int]:
    """Inclusive range of ``k`` with ``[k h, (k+1) h]`` meeting ``[a, b]``."""
    lo = math.ceil(a / h) - 1
    hi = math.floor(b / h)
    if kmin is not None:
        lo = max(lo, kmin)
    if kmax is not None:
        hi = min(hi, kmax)
    return lo, hi


# ---------------------------------------------------------------------------
# the comb: a horizontal segment with vertical teeth at x = 2^-m


class VerticalTeeth(ParamFamily):
    """Cells ``{2^-m} x [k 2^-n, (k+1) 2^-n]`` for ``m >= 1`` and ``0 <= k < 2^n``."""

    def __init__(self, n: int):
        self.level = n
        self.h = Fraction(1, 2**n)
        self.description = f"vertical teeth cells at level {n}"

    def cell_at(self, params) -> Cell:
        m, k = params
        x = Fraction(1, 2**m)
        return Cell(AxisBox(((x, x), (k * self.h, (k + 1) * self.h))), ("tooth", m, k), self.level)

    def _ranges(self, F: QuerySet):
        """``(m-range or 'all-large', k-range)`` for a closed box ``F``."""
        (a, b), (c, d) = F.box.bounds
        klo, khi = _dyadic_hits(c, d, self.h, 0, 2**self.level - 1)
        if b <= 0 or a > HALF or klo > khi:
            return None, (klo, khi)
        m_lo = max(1, math.ceil(-math.log2(b)) - 1)
        while Fraction(1, 2**m_lo) > b:
            m_lo += 1
        if a <= 0:
            return (m_lo, None), (klo, khi)
        m_hi = m_lo
        while Fraction(1, 2 ** (m_hi + 1)) >= a:
            m_hi += 1
        if Fraction(1, 2**m_hi) < a:
            return None, (klo, khi)
        return (m_lo, m_hi), (klo, khi)

    def profile(self, F: QuerySet) -> DiameterProfile:
        if isinstance(F, CombOpenIntervals):
            # F avoids every x = 2^-m, so no tooth touches it
            return DiameterProfile(0, 0.0)
        if isinstance(F, FinitePoints):
            return profile_of_cells(list(self.touching_cells(F)))
        if isinstance(F, Box) and F.dim == 2:
            mr, (klo, khi) = self._ranges(F)
            if mr is None or klo > khi:
                return DiameterProfile(0, 0.0)
            if mr[1] is None:
                return _one_size_profile(INF, self.h)
            return _one_size_profile((mr[1] - mr[0] + 1) * (khi - klo + 1), self.h)
        raise NotImplementedError(f"no closed form for {F!r} on the comb")

    def touching_cells(self, F: QuerySet):
        if isinstance(F, CombOpenIntervals):
            return iter(())
        if isinstance(F, FinitePoints):
            out = []
            for x, y in F.points:
                if x > 0 and x.numerator == 1 and x.denominator & (x.denominator - 1) == 0 and x <= HALF:
                    m = x.denominator.bit_length() - 1
                    klo, khi = _dyadic_hits(y, y, self.h, 0, 2**self.level - 1)
                    out.extend(self.cell_at((m, k)) for k in range(klo, khi + 1))
            return iter(sorted(set(out), key=lambda c: c.address))
        if isinstance(F, Box):
            mr, (klo, khi) = self._ranges(F)
            if mr is None or klo > khi:
                return iter(())
            if mr[1] is None:
                raise InfiniteFamilyError(self.description)
            return iter([self.cell_at((m, k)) for m in range(mr[0], mr[1] + 1) for k in range(klo, khi + 1)])
        raise NotImplementedError(f"no enumeration for {F!r} on the comb")

    def sample_params(self, rng: random.Random, k: int) -> list:
        return [(rng.randint(1, 40), rng.randint(0, 2**self.level - 1)) for _ in range(k)]


def make_comb_space() -> FractalStructure:
    """Horizontal unit segment plus vertical unit teeth at ``x = 2^-m``, ``m >= 1``."""

    def gen(n: int) -> Level:
        base = GridFamily(Fraction(1, 2**n), ((0, 2**n - 1), Fraction(0)), n, "base")
        return Level(n, (), (base, VerticalTeeth(n)))

    return FractalStructure("comb space", 2, gen, claims={"locally_finite", "diameters_vanish"})


# ---------------------------------------------------------------------------
# horizontal lines: dyadic segments on every line y = x


class HorizontalSegments(ParamFamily):
    """Cells ``[k 2^-n, (k+1) 2^-n] x {y}`` for every integer ``k`` and real ``y``."""

    def __init__(self, n: int):
        self.level = n
        self.h = Fraction(1, 2**n)
        self.description = f"horizontal dyadic segments at level {n} on every line"

    def cell_at(self, params) -> Cell:
        k, y = params
        y = Fraction(y)
        return Cell(AxisBox(((k * self.h, (k + 1) * self.h), (y, y))), ("line", k, y), self.level)

    def _box(self, F: QuerySet) -> AxisBox:
        if isinstance(F, Box) and F.dim == 2:
            return F.box
        raise NotImplementedError(f"no closed form for {F!r} on the horizontal-lines structure")

    def profile(self, F: QuerySet) -> DiameterProfile:
        if isinstance(F, FinitePoints):
            return profile_of_cells(list(self.touching_cells(F)))
        (a, b), (c, d) = self._box(F).bounds
        klo, khi = _dyadic_hits(a, b, self.h)
        count = khi - klo + 1
        # a box of positive height meets uncountably many lines
        return _one_size_profile(INF if c < d else count, self.h)

    def touching_cells(self, F: QuerySet):
        if isinstance(F, FinitePoints):
            out = []
            for x, y in F.points:
                klo, khi = _dyadic_hits(x, x, self.h)
                out.extend(self.cell_at((k, y)) for k in range(klo, khi + 1))
            return iter(sorted(set(out), key=lambda c: c.address))
        (a, b), (c, d) = self._box(F).bounds
        if c < d:
            raise InfiniteFamilyError(self.description)
        klo, khi = _dyadic_hits(a, b, self.h)
        return iter([self.cell_at((k, c)) for k in range(klo, khi + 1)])

    def cover_pool(self, F: QuerySet) -> list[Cell]:
        if isinstance(F, Box) and F.box.bounds[1][0] < F.box.bounds[1][1]:
            raise NoCountableCover(
                "the cells are horizontal segments; a set of positive height meets "
                "uncountably many lines, so no countable subfamily covers it"
            )
        return list(self.touching_cells(F))

    def sample_params(self, rng: random.Random, k: int) -> list:
        return [(rng.randint(-2**self.level, 2**self.level), Fraction(rng.randint(-64, 64), 32)) for _ in range(k)]


def make_horizontal_lines() -> FractalStructure:
    def gen(n: int) -> Level:
        return Level(n, (), (HorizontalSegments(n),))

    return FractalStructure("horizontal lines", 2, gen, claims={"diameters_vanish"})


# ---------------------------------------------------------------------------
# levels with a stuck coarse cell, and levels with an unbounded cell


def make_stuck_half() -> FractalStructure:
    """``{[0,1/2], [1/2,1]}`` kept at every level plus dyadic cells ``k >= 1``."""
    halves = ((Fraction(0), HALF), (HALF, Fraction(1)))

    def gen(n: int) -> Level:
        fixed = tuple(Cell(AxisBox((iv,)), ("half", i), n) for i, iv in enumerate(halves))
        return Level(n, fixed, (GridFamily(Fraction(1, 2**n), ((1, 2**n - 1),), n, "dyadic"),))

    return FractalStructure("stuck half", 1, gen, claims={"locally_finite", "finite_levels"}, first_level=1)


def make_unbounded_level(d: int = 1) -> FractalStructure:
    """Dyadic cubes in ``[-n, n]^d`` plus the unbounded cell ``R^d \\ (-n, n)^d``."""

    def gen(n: int) -> Level:
        grid = GridFamily(Fraction(1, 2**n), ((-n * 2**n, n * 2**n - 1),) * d, n, "dyadic")
        outer = Cell(UnboundedComplement(AxisBox(((Fraction(-n), Fraction(n)),) * d)), ("outer",), n)
        return Level(n, (outer,), (grid,))

    return FractalStructure(f"dyadic cubes with an unbounded cell in R^{d}", d, gen,
                            claims={"finite_levels"}, first_level=1)


# ---------------------------------------------------------------------------
# a Cantor set next to an interval with finer cells


def cantor_ifs() -> IFSystem:
    return IFSystem(
        [ContractionMap.scalar(Fraction(1, 3), 0), ContractionMap.scalar(Fraction(1, 3), Fraction(2, 3))],
        AxisBox.of((0, 1)),
        osc_witness=AxisBox.of((0, 1)),
        name="middle-third Cantor",
    )


def golden_ifs() -> IFSystem:
    """``x/2`` and ``(x+3)/4``: unequal ratios under the open set condition."""
    return IFSystem(
        [ContractionMap.scalar(HALF, 0), ContractionMap.scalar(Fraction(1, 4), Fraction(3, 4))],
        AxisBox.of((0, 1)), osc_witness=AxisBox.of((0, 1)), name="golden pair",
    )


def cantor_family_ifs(c) -> IFSystem:
    """Two maps of ratio ``c < 1/2`` fixing the ends of ``[0,1]``."""
    c = Fraction(c)
    if not 0 < c < HALF:
        raise ValueError("the ratio must lie in (0, 1/2)")
    return IFSystem(
        [ContractionMap.scalar(c, 0), ContractionMap.scalar(c, 1 - c)],
        AxisBox.of((0, 1)), osc_witness=AxisBox.of((0, 1)), name=f"Cantor ratio {c}",
    )


def three_map_unit_ifs() -> IFSystem:
    """``x/2``, ``(x+2)/4`` and ``(x+3)/4`` tile ``[0,1]``."""
    q = Fraction(1, 4)
    return IFSystem(
        [ContractionMap.scalar(HALF, 0), ContractionMap.scalar(q, HALF), ContractionMap.scalar(q, 3 * q)],
        AxisBox.of((0, 1)), osc_witness=AxisBox.of((0, 1)), name="three maps on [0,1]",
    )


def overlap_triple_ifs() -> IFSystem:
    """``x/2``, ``(x+1)/2`` and ``(2x+1)/4``: ratio 1/2 three times, overlapping."""
    return IFSystem(
        [ContractionMap.scalar(HALF, 0), ContractionMap.scalar(HALF, HALF),
         ContractionMap.scalar(HALF, Fraction(1, 4))],
        AxisBox.of((0, 1)), osc_witness=AxisBox.of((0, 1)), name="overlapping triple",
    )


def affine_rectangles_ifs() -> IFSystem:
    """Eight maps ``(x/2, y/4) + t`` tiling the unit square by rectangles."""
    lin = ((HALF, 0), (0, Fraction(1, 4)))
    maps = [ContractionMap.from_matrix(lin, (Fraction(i // 4, 2), Fraction(i % 4, 4))) for i in range(8)]
    return IFSystem(maps, AxisBox.of((0, 1), (0, 1)), osc_witness=AxisBox.of((0, 1), (0, 1)),
                    name="affine rectangles")


def rotated_squares_ifs() -> IFSystem:
    """Eight maps ``(-y/2, x/4) + t``: a quarter turn composed with unequal scalings."""
    lin = ((0, -HALF), (Fraction(1, 4), 0))
    maps = [ContractionMap.from_matrix(lin, (Fraction(i // 4 + 1, 2), Fraction(i % 4, 4))) for i in range(8)]
    return IFSystem(maps, AxisBox.of((0, 1), (0, 1)), name="rotated rectangles")


def make_cantor_union() -> FractalStructure:
    """Cantor IFS cells on ``[0,1]`` together with ``4^-n`` cells on ``[2,3]``."""
    ifs = cantor_ifs()

    def gen(n: int) -> Level:
        q = 4**n
        grid = GridFamily(Fraction(1, q), ((2 * q, 3 * q - 1),), n, "quaternary")
        return Level(n, (), (IFSWordFamily(ifs, n), grid))

    return FractalStructure("Cantor set and [2,3]", 1, gen,
                            claims={"locally_finite", "finite_levels", "diameters_vanish"})


# ---------------------------------------------------------------------------
# curves given by their level images


@dataclass(frozen=True)
class LevelwiseCurve:
    """A curve ``alpha: [0,1] -> Y`` given by the images of its base cells.

    ``induced_level(n)`` returns the level ``Delta_n = alpha(Gamma_n)`` and
    ``image`` is the query set ``alpha([0,1])``.
    """

    name: str
    base: FractalStructure
    induced_level: Callable[[int], Level]
    image: QuerySet
    space_dimension: int

    def induced_structure(self) -> FractalStructure:
        return FractalStructure(f"structure induced by {self.name}", self.space_dimension, self.induced_level,
                                claims={"finite_levels"})

    def check(self, up_to: int = 4):
        """Refinement report of the induced structure."""
        return check_refinement(self.induced_structure(), up_to)


def _five_adic_base() -> FractalStructure:
    def gen(n: int) -> Level:
        return Level(n, (), (GridFamily(Fraction(1, 5**n), ((0, 5**n - 1),), n, "5-adic"),))

    return FractalStructure("5-adic structure on [0,1]", 1, gen, claims={"locally_finite", "finite_levels", "diameters_vanish"})


def hilbert5_ifs() -> IFSystem:
    """Five half-scale copies of the unit square, the lower-left one twice.

    Word ``w`` of length ``n`` is the base cell ``[k/5^n, (k+1)/5^n]`` whose
    base-5 digits (plus one) are ``w``; its image is ``f_w([0,1]^2)``.
    """
    shifts = [(0, 0), (0, 0), (HALF, 0), (HALF, HALF), (0, HALF)]
    maps = [ContractionMap.from_matrix([[HALF, 0], [0, HALF]], t) for t in shifts]
    return IFSystem(maps, AxisBox.of((0, 1), (0, 1)), attractor_known="box", name="five-piece square")


def base_word(k: int, n: int) -> tuple[int, ...]:
    """Digits of ``k`` in base 5, padded to length ``n``, counted from 1."""
    out = []
    for _ in range(n):
        k, r = divmod(k, 5)
        out.append(r + 1)
    return tuple(reversed(out))


def hilbert5_curve() -> LevelwiseCurve:
    ifs = hilbert5_ifs()

    def gen(n: int) -> Level:
        return Level(n, (), (IFSWordFamily(ifs, n),))

    return LevelwiseCurve("five-piece square-filling curve", _five_adic_base(), gen, Box(ifs.hull), 2)


def _dyadic_base() -> FractalStructure:
    from .structures import make_natural_euclidean

    return make_natural_euclidean(1, AxisBox.of((0, 1)), "natural structure on [0,1]")


def identity_curve() -> LevelwiseCurve:
    base = _dyadic_base()
    return LevelwiseCurve("identity", base, base.level, Box(AxisBox.of((0, 1))), 1)


def constant_curve(p=(HALF, HALF)) -> LevelwiseCurve:
    """Every base cell maps to the single point ``p``."""
    base = _dyadic_base()
    pt = tuple(Fraction(c) for c in p)

    def gen(n: int) -> Level:
        cells = tuple(Cell(Point(pt), ("const", k), n) for k in range(2**n))
        return Level(n, cells)

    return LevelwiseCurve("constant", base, gen, FinitePoints((pt,)), len(pt))


def image_cell(curve: LevelwiseCurve, n: int, k: int) -> Geometry:
    """Geometry of ``alpha([k h, (k+1) h])`` for the level-``n`` base cell ``k``."""
    lvl = curve.induced_level(n)
    for fam in lvl.symbolic_families:
        if isinstance(fam, IFSWordFamily):
            return fam.cell_at(base_word(k, n)).geometry
    cells = lvl.all_cells()
    return cells[k].geometry
