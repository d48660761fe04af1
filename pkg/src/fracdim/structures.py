"""Cells, levels, fractal structures and the level statistics ``N_n``, ``delta``.

A level is a finite list of explicit cells plus any number of
:class:`ParamFamily` objects describing (possibly infinite) families through
closed-form callbacks.  Every statistic is computed per query set ``F``.
"""

from __future__ import annotations


import functools
import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .geometry import (
    INF,
    AxisBox,
    Geometry,
    Mapped,
    Point,
    Segment,
    UnboundedComplement,
    _log_sqrt,
    _sqrt,
    as_fraction,
    union_volume,
)


class InfiniteFamilyError(ValueError):
    """Raised when an infinite family of cells would have to be enumerated."""


class NoCountableCover(ValueError):
    """Raised when no countable subfamily of a level family can cover ``F``."""


# ---------------------------------------------------------------------------
# query sets (base class; concrete sets live in ``querysets``)


class QuerySet:
    """A subset ``F`` of Euclidean space seen only through intersection tests.

    Subclasses implement :meth:`meets_box`; the remaining predicates have
    generic fallbacks built on it.  ``hull`` is a closed box containing ``F``
    (``None`` for unbounded sets).
    """

    hull: AxisBox | None = None
    traits: frozenset = frozenset()
    dim: int = 1

    # -- core predicates -------------------------------------------------
    def meets_box(self, box: AxisBox) -> bool:
        raise NotImplementedError

    def covers_region(self, box: AxisBox) -> bool:
        """True when every closed sub-box of ``box`` meets ``F``.

        Only a sufficient test; ``False`` means "not certified".
        """
        return False

    def contains_point(self, p: Sequence[Fraction]) -> bool:
        return self.meets_box(AxisBox(tuple((x, x) for x in p)))

    def closure(self) -> "QuerySet":
        return self

    def contains_attractor(self, ifs) -> bool:
        """True when every cell ``f_w(K)`` of ``ifs`` is known to meet ``F``."""
        return self.covers_region(ifs.hull)

    # -- dispatch on cell geometry ---------------------------------------
    def intersects(self, item) -> bool:
        g = item.geometry if isinstance(item, Cell) else item
        if isinstance(g, AxisBox):
            return self.meets_box(g)
        if isinstance(g, Point):
            return self.meets_box(g.bbox)
        if isinstance(g, Segment):
            bb = g.bbox
            if len(bb.free_axes()) <= 1:
                return self.meets_box(bb)
            return self.meets_segment(g)
        if isinstance(g, UnboundedComplement):
            return self.meets_complement(g)
        if isinstance(g, Mapped):
            if g.attractor is not None:
                return self.meets_attractor_cell(g)
            return self.meets_parallelogram(g)
        raise TypeError(f"unsupported geometry {type(g).__name__}")

    def meets_segment(self, seg: Segment) -> bool:
        raise NotImplementedError(f"{type(self).__name__} cannot test oblique segments")

    def meets_parallelogram(self, g: Mapped) -> bool:
        if not self.meets_box(g.bbox):
            return False
        raise NotImplementedError(f"{type(self).__name__} cannot test affine images of boxes")

    def meets_complement(self, g: UnboundedComplement) -> bool:
        if self.hull is None:
            return True
        for i, (a, b) in enumerate(g.hole.bounds):
            lo, hi = self.hull.bounds[i]
            if lo <= a:
                part = list(self.hull.bounds)
                part[i] = (lo, min(hi, a))
                if self.meets_box(AxisBox(tuple(part))):
                    return True
            if hi >= b:
                part = list(self.hull.bounds)
                part[i] = (max(lo, b), hi)
                if self.meets_box(AxisBox(tuple(part))):
                    return True
        return False

    def meets_attractor_cell(self, g: Mapped, max_depth: int = 64) -> bool:
        """Generic test against ``f_w(K)`` for a one-dimensional attractor ``K``.

        Refines the cell into its sub-cells; endpoints of every sub-cell lie in
        ``K``, so an endpoint inside ``F`` certifies intersection.
        """
        ifs = g.attractor
        stack = [(g.amap, 0)]
        while stack:
            amap, depth = stack.pop()
            (lo, hi), = g.inner.bounds
            u, v = amap((lo,))[0], amap((hi,))[0]
            box = AxisBox(((min(u, v), max(u, v)),))
            if not self.meets_box(box):
                continue
            if self.covers_region(box) or self.contains_point((u,)) or self.contains_point((v,)):
                return True
            if depth >= max_depth:
                raise RuntimeError("attractor intersection test did not terminate")
            for f in reversed(ifs.maps):
                stack.append((amap.compose(f.amap), depth + 1))
        return False

    # -- one-dimensional helpers used by the cover engine ----------------
    def next_point(self, x: Fraction) -> Fraction | None:
        """``inf (F ∩ (x, oo))`` for one-dimensional sets, ``None`` if empty."""
        raise NotImplementedError(f"{type(self).__name__} has no next_point oracle")

    def first_point(self) -> Fraction | None:
        """``min F`` for closed one-dimensional sets."""
        raise NotImplementedError(f"{type(self).__name__} has no first_point oracle")

    def uncovered_witness(self, boxes: Sequence[AxisBox]) -> tuple[Fraction, ...] | None:
        """A point of ``F`` outside every box, or ``None`` if covered."""
        raise NotImplementedError(f"{type(self).__name__} has no coverage oracle")

    def line_projection(self):
        """``(axis, fixed, F')`` when ``F`` lies on a coordinate line, else ``None``."""
        return None

    def grid_hits(self, h: Fraction, kmin: int, kmax: int) -> set[int] | None:
        """Fast path for one-dimensional meshes: indices ``kmin <= k <= kmax``
        of the closed cells ``[k h, (k+1) h]`` meeting ``F``, or ``None``."""
        return None

    def grid_span(self, h: Fraction, kmin: int, kmax: int) -> tuple[int, int] | None:
        """Like :meth:`grid_hits` for sets meeting one contiguous run of cells:
        ``(lo, hi)`` with ``lo > hi`` when nothing is hit, or ``None``."""
        return None


# ---------------------------------------------------------------------------
# cells and families


@dataclass(frozen=True)
class Cell:
    geometry: Geometry
    address: tuple
    level: int

    @property
    def diameter(self) -> float:
        return self.geometry.diameter

    @property
    def log_diameter(self) -> float:
        return self.geometry.log_diameter


@dataclass(frozen=True)
class DiameterProfile:
    """Diameters of the touching cells grouped as ``(log diam, log multiplicity)``.

    ``count`` may be ``inf``; then the profile carries no groups and every
    positive-diameter sum diverges.  Cells of diameter zero and of infinite
    diameter are counted separately.
    """

    count: float
    delta: float
    log_diams: tuple[float, ...] = ()
    log_mults: tuple[float, ...] = ()
    zero_diameter_count: int = 0
    inf_diameter_count: int = 0

    def log_sum(self, s: float) -> float:
        """``log sum diam(A)**s`` with ``0**0 = 1``."""
        if self.count == 0:
            return -INF
        if self.count == INF:
            return INF if (self.delta > 0 or s == 0) else -INF
        if self.inf_diameter_count and s > 0:
            return INF
        terms = [lm + s * ld for ld, lm in zip(self.log_diams, self.log_mults)]
        if s == 0:
            extra = self.zero_diameter_count + self.inf_diameter_count
            if extra:
                terms.append(math.log(extra))
        if not terms:
            return -INF
        m = max(terms)
        return m + math.log(math.fsum(math.exp(t - m) for t in terms))


def merge_profiles(profiles: Iterable[DiameterProfile]) -> DiameterProfile:
    count, delta = 0, 0.0
    groups: dict[float, list[float]] = {}
    zeros = infs = 0
    for p in profiles:
        count = INF if (count == INF or p.count == INF) else count + p.count
        delta = max(delta, p.delta)
        zeros += p.zero_diameter_count
        infs += p.inf_diameter_count
        for ld, lm in zip(p.log_diams, p.log_mults):
            groups.setdefault(ld, []).append(lm)
    if count == INF:
        return DiameterProfile(INF, delta)
    keys = sorted(groups)
    mults = []
    for k in keys:
        lms = sorted(groups[k])
        m = lms[-1]
        mults.append(m + math.log(math.fsum(math.exp(x - m) for x in lms)))
    return DiameterProfile(count, delta, tuple(keys), tuple(mults), zeros, infs)


def profile_of_cells(cells: Sequence[Cell]) -> DiameterProfile:
    counts: dict[float, int] = {}
    zeros = infs = 0
    delta = 0.0
    for c in cells:
        ld = c.log_diameter
        if ld == INF:
            infs += 1
            delta = INF
        elif ld == -INF:
            zeros += 1
        else:
            counts[ld] = counts.get(ld, 0) + 1
            delta = max(delta, c.diameter)
    keys = sorted(counts)
    return DiameterProfile(len(cells), delta, tuple(keys), tuple(math.log(counts[k]) for k in keys), zeros, infs)


class ParamFamily:
    """A parametrised family of cells answered through closed forms.

    Subclasses provide :meth:`cell_at`, :meth:`profile` (count, sup diameter,
    diameter groups of the cells meeting ``F``) and, when finite,
    :meth:`touching_cells`.
    """

    description: str = ""
    level: int = 0

    def cell_at(self, params) -> Cell:
        raise NotImplementedError

    def profile(self, F: QuerySet) -> DiameterProfile:
        return profile_of_cells(list(self.touching_cells(F)))

    def count_touching(self, F: QuerySet) -> float:
        return self.profile(F).count

    def sup_diameter_touching(self, F: QuerySet) -> float:
        return self.profile(F).delta

    def log_sum_diam_pow(self, F: QuerySet, s: float) -> float:
        return self.profile(F).log_sum(s)

    def touching_cells(self, F: QuerySet) -> Iterator[Cell]:
        raise InfiniteFamilyError(self.description)

    def all_cells(self) -> Iterator[Cell]:
        raise InfiniteFamilyError(self.description)

    def cover_pool(self, F: QuerySet) -> list[Cell]:
        """Cells usable in a countable cover of ``F``."""
        return list(self.touching_cells(F))

    def is_finite(self) -> bool:
        return False

    def sample_params(self, rng: random.Random, k: int) -> list:
        raise NotImplementedError


def validate_family(family: ParamFamily, F: QuerySet, samples: int = 32, seed: int = 0) -> list[str]:
    """Cross-check the closed-form callbacks against sampled cells.

    Returns a list of inconsistencies (empty when none are found).
    """
    problems = []
    prof = family.profile(F)
    rng = random.Random(seed)
    for params in family.sample_params(rng, samples):
        cell = family.cell_at(params)
        if F.intersects(cell):
            if prof.count < 1:
                problems.append(f"{params}: touches F but count is {prof.count}")
            if cell.diameter > prof.delta * (1 + 1e-12):
                problems.append(f"{params}: diameter {cell.diameter} exceeds sup {prof.delta}")
    if family.is_finite():
        cells = [c for c in family.all_cells() if F.intersects(c)]
        if len(cells) != prof.count:
            problems.append(f"enumerated {len(cells)} touching cells, closed form says {prof.count}")
        d = max((c.diameter for c in cells), default=0.0)
        if not math.isclose(d, prof.delta, rel_tol=1e-12, abs_tol=0.0):
            problems.append(f"enumerated sup diameter {d}, closed form says {prof.delta}")
    return problems


class GridFamily(ParamFamily):
    """Cells ``prod [k_i h, (k_i + 1) h]`` for integer ``k_i`` in inclusive ranges.

    An axis given as a single rational instead of a range is degenerate: all
    cells sit at that coordinate (used for segments lying on lines).
    """

    def __init__(self, step: Fraction, ranges: Sequence, level: int, tag: str = "grid"):
        self.step = as_fraction(step)
        self.ranges = tuple(r if isinstance(r, tuple) else as_fraction(r) for r in ranges)
        self.level = level
        self.tag = tag
        self.description = f"{tag} cells of side {self.step} at level {level}"
        free = sum(1 for r in self.ranges if isinstance(r, tuple))
        self._diam_sq = free * self.step * self.step

    @property
    def dim(self) -> int:
        return len(self.ranges)

    def is_finite(self) -> bool:
        return True

    def size(self) -> int:
        n = 1
        for r in self.ranges:
            if isinstance(r, tuple):
                n *= max(0, r[1] - r[0] + 1)
        return n

    def _region(self, idx) -> AxisBox:
        h = self.step
        out = []
        for r, kr in zip(self.ranges, idx):
            if isinstance(r, tuple):
                out.append((kr[0] * h, (kr[1] + 1) * h))
            else:
                out.append((r, r))
        return AxisBox(tuple(out))

    def cell_at(self, params) -> Cell:
        it = iter(params)
        idx = [((k := next(it)), k) if isinstance(r, tuple) else None for r in self.ranges]
        return Cell(self._region(idx), (self.tag,) + tuple(params), self.level)

    def _walk(self, F: QuerySet):
        """Pruned bisection of the index box; yields ``(index box, cell count)``.

        Relies on ``F.meets_box`` being monotone under inclusion.
        """
        root = [r if isinstance(r, tuple) else None for r in self.ranges]
        if any(r is not None and r[0] > r[1] for r in root):
            return
        if len(root) == 1 and root[0] is not None:
            lo, hi = root[0]
            span = F.grid_span(self.step, lo, hi)
            if span is not None:
                if span[0] <= span[1]:
                    yield [span], span[1] - span[0] + 1
                return
            hits = F.grid_hits(self.step, lo, hi)
            if hits is not None:
                for k in sorted(hits):
                    yield [(k, k)], 1
                return
        stack = [root]
        while stack:
            idx = stack.pop()
            region = self._region(idx)
            if not F.meets_box(region):
                continue
            sizes = [(r[1] - r[0] + 1) if r is not None else 1 for r in idx]
            total = math.prod(sizes)
            if total == 1 or F.covers_region(region):
                yield idx, total
                continue
            axis = max(range(len(idx)), key=lambda i: sizes[i])
            lo, hi = idx[axis]
            mid = (lo + hi) // 2
            right = list(idx)
            right[axis] = (mid + 1, hi)
            left = list(idx)
            left[axis] = (lo, mid)
            stack.append(right)
            stack.append(left)

    def profile(self, F: QuerySet) -> DiameterProfile:
        count = sum(c for _, c in self._walk(F))
        if count == 0:
            return DiameterProfile(0, 0.0)
        if self._diam_sq == 0:
            return DiameterProfile(count, 0.0, (), (), count)
        ld = _log_sqrt(self._diam_sq)
        return DiameterProfile(count, _sqrt(self._diam_sq), (ld,), (math.log(count),))

    def _expand(self, idx) -> Iterator[tuple[int, ...]]:
        axes = [range(r[0], r[1] + 1) for r in idx if r is not None]
        return itertools.product(*axes)

    def touching_cells(self, F: QuerySet) -> Iterator[Cell]:
        for idx, _ in self._walk(F):
            for ks in self._expand(idx):
                yield self.cell_at(ks)

    def all_cells(self) -> Iterator[Cell]:
        root = [r if isinstance(r, tuple) else None for r in self.ranges]
        if any(r is not None and r[0] > r[1] for r in root):
            return
        for ks in self._expand(root):
            yield self.cell_at(ks)

    def sample_params(self, rng: random.Random, k: int) -> list:
        out = []
        for _ in range(k):
            out.append(tuple(rng.randint(r[0], r[1]) for r in self.ranges if isinstance(r, tuple) and r[0] <= r[1]))
        return out


# ---------------------------------------------------------------------------
# levels and structures


@dataclass(frozen=True)
class Level:
    index: int
    explicit_cells: tuple[Cell, ...] = ()
    symbolic_families: tuple[ParamFamily, ...] = ()

    def __post_init__(self):
        for c in self.explicit_cells:
            if c.level != self.index:
                raise ValueError(f"cell {c.address} carries level {c.level}, expected {self.index}")

    def profile(self, F: QuerySet) -> DiameterProfile:
        explicit = profile_of_cells([c for c in self.explicit_cells if F.intersects(c)])
        return merge_profiles([explicit] + [fam.profile(F) for fam in self.symbolic_families])

    def touching(self, F: QuerySet) -> list[Cell]:
        cells = [c for c in self.explicit_cells if F.intersects(c)]
        for fam in self.symbolic_families:
            cells.extend(fam.touching_cells(F))
        return cells

    def cover_pool(self, F: QuerySet) -> list[Cell]:
        cells = [c for c in self.explicit_cells if F.intersects(c)]
        for fam in self.symbolic_families:
            cells.extend(fam.cover_pool(F))
        return cells

    def cell_count(self) -> float:
        """Number of cells in the level; ``inf`` when infinite or not known in closed form."""
        try:
            return len(self.explicit_cells) + sum(fam.count_touching(EVERYTHING) for fam in self.symbolic_families)
        except NotImplementedError:
            return INF

    def all_cells(self) -> list[Cell]:
        cells = list(self.explicit_cells)
        for fam in self.symbolic_families:
            cells.extend(fam.all_cells())
        return cells

    def sup_diameter(self) -> float:
        """``delta(Gamma_n)``: the sup over the whole level."""
        d = max((c.diameter for c in self.explicit_cells), default=0.0)
        for fam in self.symbolic_families:
            d = max(d, fam.sup_diameter_touching(EVERYTHING))
        return d


class _Everything(QuerySet):
    """The whole space; used for level-wide statistics."""

    traits = frozenset({"unbounded"})

    def meets_box(self, box):
        return True

    def covers_region(self, box):
        return True

    def meets_complement(self, g):
        return True

    def meets_attractor_cell(self, g, max_depth=64):
        return True

    def meets_parallelogram(self, g):
        return True

    def meets_segment(self, seg):
        return True

    def __repr__(self):
        return "Everything()"


EVERYTHING = _Everything()

CLAIMS = frozenset({"locally_finite", "finite_levels", "diameters_vanish"})


class FractalStructure:
    """A sequence of levels produced on demand by ``level_generator(n)``.

    Levels are cached; the generator must be a pure function of ``n``.
    """

    def __init__(
        self,
        name: str,
        space_dimension: int,
        level_generator: Callable[[int], Level],
        claims: Iterable[str] = (),
        first_level: int = 0,
        self_similar: bool = False,
    ):
        claims = frozenset(claims)
        unknown = claims - CLAIMS
        if unknown:
            raise ValueError(f"unknown claims {sorted(unknown)}")
        self.name = name
        self.space_dimension = space_dimension
        self._gen = level_generator
        self.claims = claims
        self.first_level = first_level
        self.self_similar = self_similar
        self.ifs = None  # set for natural structures of an IFS
        self.level = functools.lru_cache(maxsize=256)(self._make_level)

    def _make_level(self, n: int) -> Level:
        if n < self.first_level:
            raise ValueError(f"level {n} is below the first level {self.first_level}")
        lvl = self._gen(n)
        if lvl.index != n:
            raise ValueError(f"generator returned level {lvl.index} for n={n}")
        return lvl

    def __repr__(self) -> str:
        return f"FractalStructure({self.name!r})"


@functools.lru_cache(maxsize=8192)
def level_profile(fs: FractalStructure, n: int, F: QuerySet) -> DiameterProfile:
    return fs.level(n).profile(F)


def touching_family(fs: FractalStructure, n: int, F: QuerySet) -> list[Cell]:
    """Cells of level ``n`` meeting ``F``; raises for infinite families."""
    return fs.level(n).touching(F)


def count_touching(fs: FractalStructure, n: int, F: QuerySet) -> float:
    """``N_n(F)``; ``inf`` for infinitely many touching cells."""
    return level_profile(fs, n, F).count


def delta(fs: FractalStructure, n: int, F: QuerySet) -> float:
    """``delta(F, Gamma_n)``; zero for an empty touching family."""
    return level_profile(fs, n, F).delta


def make_natural_euclidean(d: int, hull: AxisBox, name: str | None = None) -> FractalStructure:
    """Natural structure of closed dyadic cubes of side ``2**-n`` over ``hull``.

    Level ``n`` holds the cubes of side ``2**-n`` tiling ``hull``.  The first
    level is the coarsest one whose grid contains the endpoints of ``hull``
    (level 0 for integer endpoints), so every level tiles ``hull`` exactly.
    """
    if d < 1:
        raise ValueError("dimension must be positive")
    if hull.dim != d:
        raise ValueError(f"hull has dimension {hull.dim}, expected {d}")
    for lo, hi in hull.bounds:
        for x in (lo, hi):
            q = x.denominator
            if q & (q - 1):
                raise ValueError(f"hull endpoint {x} is not a dyadic rational")
        if not lo < hi:
            raise ValueError("hull must have positive extent on every axis")
    first = max(x.denominator.bit_length() - 1 for b in hull.bounds for x in b)

    def gen(n: int) -> Level:
        scale = 2**n
        ranges = tuple((math.floor(lo * scale), math.ceil(hi * scale) - 1) for lo, hi in hull.bounds)
        return Level(n, (), (GridFamily(Fraction(1, scale), ranges, n, "dyadic"),))

    return FractalStructure(
        name or f"natural dyadic structure on {hull}",
        d,
        gen,
        claims={"locally_finite", "finite_levels", "diameters_vanish"},
        first_level=first,
    )


# ---------------------------------------------------------------------------
# refinement check


@dataclass
class RefinementReport:
    checked_pairs: list[tuple[int, int]] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    notices: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _cell_box(cell: Cell, window: AxisBox | None) -> AxisBox | None:
    g = cell.geometry
    if isinstance(g, AxisBox):
        return g
    if isinstance(g, (Point, Segment)):
        bb = g.bbox
        return bb if len(bb.free_axes()) <= 1 else None
    return None


def _complement_pieces(g: UnboundedComplement, window: AxisBox) -> list[AxisBox]:
    """Closed boxes whose union is ``g`` intersected with ``window``."""
    pieces = []
    for i, (a, b) in enumerate(g.hole.bounds):
        lo, hi = window.bounds[i]
        if lo <= a:
            part = list(window.bounds)
            part[i] = (lo, min(hi, a))
            pieces.append(AxisBox(tuple(part)))
        if hi >= b:
            part = list(window.bounds)
            part[i] = (max(lo, b), hi)
            pieces.append(AxisBox(tuple(part)))
    return pieces


def check_refinement(fs: FractalStructure, up_to: int, cell_budget: int = 20000) -> RefinementReport:
    """Check ``Gamma_{n+1} ≺≺ Gamma_n`` for consecutive levels up to ``up_to``.

    Axis-box cells are checked geometrically: every child must lie in some
    parent, and every parent must equal the union of the children it
    contains (compared by exact measure on its non-degenerate axes).  Affine
    images of attractor cells are checked by address prefix.  Symbolic
    families that cannot be enumerated are skipped with a notice.
    """
    rep = RefinementReport()
    for n in range(fs.first_level, up_to):
        size = fs.level(n).cell_count() + fs.level(n + 1).cell_count()
        if size > cell_budget and math.isfinite(size):
            rep.notices.append(f"levels {n}->{n + 1}: {size:.0f} cells exceed the budget, skipped")
            continue
        try:
            parents = fs.level(n).all_cells()
            children = fs.level(n + 1).all_cells()
        except InfiniteFamilyError as exc:
            rep.notices.append(f"levels {n}->{n + 1}: symbolic family skipped ({exc})")
            continue
        if len(parents) + len(children) > cell_budget:
            rep.notices.append(f"levels {n}->{n + 1}: {len(parents) + len(children)} cells exceed the budget, skipped")
            continue
        rep.checked_pairs.append((n, n + 1))
        _check_pair(parents, children, rep, n)
    return rep


def _check_pair(parents: list[Cell], children: list[Cell], rep: RefinementReport, n: int) -> None:
    mapped_p = [c for c in parents if isinstance(c.geometry, Mapped)]
    mapped_c = [c for c in children if isinstance(c.geometry, Mapped)]
    if mapped_p or mapped_c:
        heads = {c.address for c in mapped_p}
        for c in mapped_c:
            if c.address[:-1] not in heads:
                rep.violations.append(f"level {n + 1} cell {c.address} has no parent with its address prefix")
        kids = {c.address[:-1] for c in mapped_c}
        for p in mapped_p:
            if p.address not in kids:
                rep.violations.append(f"level {n} cell {p.address} has no children")
        parents = [c for c in parents if not isinstance(c.geometry, Mapped)]
        children = [c for c in children if not isinstance(c.geometry, Mapped)]
        if not parents and not children:
            return

    boxes = [_cell_box(c, None) for c in parents + children]
    finite = [b for b in boxes if b is not None]
    if not finite:
        rep.notices.append(f"levels {n}->{n + 1}: no axis-box cells to check")
        return
    d = finite[0].dim
    lo = [min(b.bounds[i][0] for b in finite) for i in range(d)]
    hi = [max(b.bounds[i][1] for b in finite) for i in range(d)]
    window = AxisBox(tuple((l - 1, h + 1) for l, h in zip(lo, hi)))

    def pieces(cell: Cell) -> list[AxisBox] | None:
        g = cell.geometry
        if isinstance(g, UnboundedComplement):
            return _complement_pieces(g, window)
        b = _cell_box(cell, window)
        return None if b is None else [b]

    child_pieces = [(c, pieces(c)) for c in children]
    parent_pieces = [(p, pieces(p)) for p in parents]
    parent_index = _BoxIndex([pp for _, pp in parent_pieces if pp is not None])
    child_index = _BoxIndex([cp for _, cp in child_pieces if cp is not None])
    for c, cp in child_pieces:
        if cp is None:
            rep.notices.append(f"level {n + 1} cell {c.address}: geometry not checkable")
            continue
        if not any(_pieces_within(cp, pp) for pp in parent_index.meeting(cp)):
            rep.violations.append(f"level {n + 1} cell {c.address} is contained in no level {n} cell")
    for p, pp in parent_pieces:
        if pp is None:
            continue
        inside = [b for cp in child_index.meeting(pp) if _pieces_within(cp, pp) for b in cp]
        if not _union_equals(pp, inside):
            rep.violations.append(f"level {n} cell {p.address} is not the union of its level {n + 1} subcells")


def _hull_of(boxes: list[AxisBox]) -> AxisBox:
    d = boxes[0].dim
    return AxisBox(tuple((min(b.bounds[i][0] for b in boxes), max(b.bounds[i][1] for b in boxes)) for i in range(d)))


class _BoxIndex:
    """Piece lists with float hulls, sorted along the axis that separates them best.

    :meth:`meeting` is a conservative prefilter (hulls are widened slightly),
    the exact tests happen afterwards.
    """

    def __init__(self, items: list[list[AxisBox]]):
        self.items = items
        keep = [i for i, it in enumerate(items) if it]
        hulls = [_hull_of(items[i]) for i in keep]
        d = hulls[0].dim if hulls else 1
        lo = np.array([[float(h.bounds[k][0]) for k in range(d)] for h in hulls]).reshape(len(hulls), d)
        hi = np.array([[float(h.bounds[k][1]) for k in range(d)] for h in hulls]).reshape(len(hulls), d)
        span = (hi.max(axis=0) - lo.min(axis=0)) if hulls else np.ones(d)
        width = (hi - lo).max(axis=0) if hulls else np.zeros(d)
        self.axis = int(np.argmin(width / np.where(span > 0, span, 1.0)))
        order = np.lexsort((np.array(keep), lo[:, self.axis])) if hulls else np.array([], dtype=int)
        self.index = np.array(keep, dtype=int)[order]
        self.lo, self.hi = lo[order], hi[order]
        self.width = float(width[self.axis]) if hulls else 0.0

    def meeting(self, pieces: list[AxisBox]) -> list[list[AxisBox]]:
        """Entries, in input order, whose hull may meet the hull of ``pieces``."""
        if not pieces or not len(self.index):
            return []
        h = _hull_of(pieces)
        qlo = np.array([float(a) for a, _ in h.bounds])
        qhi = np.array([float(b) for _, b in h.bounds])
        eps = 1e-9 * (1 + np.abs(qlo) + np.abs(qhi))
        ax = self.axis
        a = np.searchsorted(self.lo[:, ax], qlo[ax] - self.width - eps[ax], side="left")
        b = np.searchsorted(self.lo[:, ax], qhi[ax] + eps[ax], side="right")
        ok = np.all((self.lo[a:b] <= qhi + eps) & (self.hi[a:b] >= qlo - eps), axis=1)
        return [self.items[i] for i in np.sort(self.index[a:b][ok])]


def _pieces_within(inner: list[AxisBox], outer: list[AxisBox]) -> bool:
    """Containment of unions of boxes (each inner box must be covered)."""
    for b in inner:
        if any(o.contains(b) for o in outer):
            continue
        meeting = [o for o in outer if o.meets(b)]
        axes = b.free_axes()
        clipped = [m.intersection(b) for m in meeting]
        if union_volume([c for c in clipped if c is not None], axes) != b.volume(axes) or not axes:
            return False
    return True


def _union_equals(target: list[AxisBox], parts: list[AxisBox]) -> bool:
    for t in target:
        axes = t.free_axes()
        if not axes:
            if not any(p.contains(t) for p in parts):
                return False
            continue
        clipped = [p.intersection(t) for p in parts]
        if union_volume([c for c in clipped if c is not None], axes) != t.volume(axes):
            return False
    return True
