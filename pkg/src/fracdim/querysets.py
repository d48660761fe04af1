"""Concrete query sets ``F``: boxes, attractors, point sets, unions and the comb."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .geometry import AffineMap, AxisBox, Mapped, UnboundedComplement, as_fraction, parallelogram_meets_box
from .ifs import IFSystem, compose_word
from .structures import QuerySet

_STATE_BUDGET = 200_000


def _box_witness(pieces) -> tuple[Fraction, ...] | None:
    """A point of the first nonempty piece (pieces carry open/closed flags)."""
    for piece in pieces:
        pt = []
        for lo, hi, lo_closed, hi_closed in piece:
            if lo < hi:
                # off-centre so the point avoids dyadic and triadic grid lines
                pt.append(lo + (hi - lo) * Fraction(1, 1000003))
            elif lo == hi and lo_closed and hi_closed:
                pt.append(lo)
            else:
                break
        else:
            return tuple(pt)
    return None


def _subtract(piece, box: AxisBox):
    """Pieces of ``piece`` minus the closed ``box``; each axis is ``(lo, hi, lc, hc)``."""
    out = []
    rest = list(piece)
    for i, (c, d) in enumerate(box.bounds):
        lo, hi, lc, hc = rest[i]
        if lo < c:
            below = list(rest)
            below[i] = (lo, min(hi, c), lc, hc if hi < c else False)
            if _nonempty(below[i]):
                out.append(below)
        if hi > d:
            above = list(rest)
            above[i] = (max(lo, d), hi, lc if lo > d else False, hc)
            if _nonempty(above[i]):
                out.append(above)
        rest[i] = (max(lo, c), min(hi, d), True if lo < c else lc, True if hi > d else hc)
        if not _nonempty(rest[i]):
            break
    return out


def _nonempty(iv) -> bool:
    lo, hi, lc, hc = iv
    return lo < hi or (lo == hi and lc and hc)


def box_remainder(target: AxisBox, boxes: Sequence[AxisBox]):
    """Exact pieces of ``target`` not covered by the closed ``boxes``."""
    pieces = [[(lo, hi, True, True) for lo, hi in target.bounds]]
    for b in boxes:
        nxt = []
        for p in pieces:
            if all(_overlaps(iv, bd) for iv, bd in zip(p, b.bounds)):
                nxt.extend(_subtract(p, b))
            else:
                nxt.append(p)
        pieces = nxt
        if not pieces:
            break
    return pieces


def _overlaps(iv, bd) -> bool:
    lo, hi, lc, hc = iv
    c, d = bd
    if hi < c or lo > d:
        return False
    if hi == c and not hc:
        return False
    if lo == d and not lc:
        return False
    return True


@dataclass(frozen=True)
class Box(QuerySet):
    """A closed axis box (possibly degenerate: segments and points)."""

    box: AxisBox
    label: str = ""

    @property
    def hull(self) -> AxisBox:
        return self.box

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def traits(self) -> frozenset:
        return frozenset({"compact"})

    def meets_box(self, box: AxisBox) -> bool:
        return self.box.meets(box)

    def covers_region(self, box: AxisBox) -> bool:
        return self.box.contains(box)

    def contains_point(self, p) -> bool:
        return self.box.contains_point(p)

    def meets_segment(self, seg) -> bool:
        return seg.clip(self.box) is not None

    def meets_parallelogram(self, g: Mapped) -> bool:
        if g.dim == 1:
            return self.box.meets(g.bbox)
        return parallelogram_meets_box(g.vertices(), self.box)

    def meets_complement(self, g: UnboundedComplement) -> bool:
        return g.meets_box(self.box)

    def meets_attractor_cell(self, g: Mapped, max_depth: int = 64) -> bool:
        (lo, hi), = self.box.bounds
        inv = g.amap.inverse_1d()
        a, b = inv((lo,))[0], inv((hi,))[0]
        return AttractorSet(g.attractor).meets_interval(min(a, b), max(a, b))

    def contains_attractor(self, ifs: IFSystem) -> bool:
        return self.box.contains(ifs.hull)

    def next_point(self, x):
        (a, b), = self.box.bounds
        if x < a:
            return a
        if x < b:
            return x
        return None

    def first_point(self):
        return self.box.bounds[0][0]

    def uncovered_witness(self, boxes):
        return _box_witness(box_remainder(self.box, boxes))

    def grid_span(self, h, kmin, kmax):
        if self.box.dim != 1:
            return None
        (a, b), = self.box.bounds
        # [k h, (k+1) h] meets [a, b] iff k <= b/h and k >= a/h - 1
        lo = max(kmin, math.ceil(a / h) - 1)
        hi = min(kmax, math.floor(b / h))
        return lo, hi

    def line_projection(self):
        free = self.box.free_axes()
        if len(free) != 1 or self.box.dim == 1:
            return None
        axis = free[0]
        fixed = tuple(lo for i, (lo, _) in enumerate(self.box.bounds) if i != axis)
        return axis, fixed, Box(AxisBox((self.box.bounds[axis],)))

    def __repr__(self) -> str:
        return f"Box({self.box})"


@dataclass(frozen=True)
class AttractorSet(QuerySet):
    """The attractor ``K`` of an IFS.

    For Cantor-type attractors in one dimension every test is decided exactly:
    endpoints of the cells ``f_w(hull)`` belong to ``K``, and point membership
    follows the finite graph of pulled-back rational points.
    """

    ifs: IFSystem

    @property
    def hull(self) -> AxisBox:
        return self.ifs.hull

    @property
    def dim(self) -> int:
        return self.ifs.dim

    @property
    def traits(self) -> frozenset:
        return frozenset({"compact"})

    def _as_box(self) -> Box | None:
        return Box(self.ifs.hull) if self.ifs.kind == "box" else None

    def contains_attractor(self, ifs: IFSystem) -> bool:
        # equal map sets and hulls give the same attractor
        same = ifs is self.ifs or (ifs.hull == self.ifs.hull and set(ifs.maps) == set(self.ifs.maps))
        return same or self.covers_region(ifs.hull)

    def covers_region(self, box: AxisBox) -> bool:
        b = self._as_box()
        return b is not None and b.covers_region(box)

    def meets_box(self, box: AxisBox) -> bool:
        b = self._as_box()
        if b is not None:
            return b.meets_box(box)
        (lo, hi), = box.bounds
        return self.meets_interval(lo, hi)

    def meets_parallelogram(self, g):
        b = self._as_box()
        if b is None:
            return super().meets_parallelogram(g)
        return b.meets_parallelogram(g)

    def meets_segment(self, seg):
        b = self._as_box()
        if b is None:
            return super().meets_segment(seg)
        return b.meets_segment(seg)

    def meets_attractor_cell(self, g: Mapped, max_depth: int = 64) -> bool:
        if g.attractor is self.ifs:
            return True
        return super().meets_attractor_cell(g, max_depth)

    # -- exact one-dimensional oracle ----------------------------------
    def _cell(self, amap):
        (a, b), = self.ifs.hull.bounds
        u, v = amap((a,))[0], amap((b,))[0]
        return (u, v) if u <= v else (v, u)

    def meets_interval(self, lo: Fraction, hi: Fraction) -> bool:
        if lo == hi:
            return self.contains_point((lo,))
        (a, b), = self.ifs.hull.bounds
        if hi < a or lo > b:
            return False
        stack = [AffineMap.identity(1)]
        while stack:
            amap = stack.pop()
            u, v = self._cell(amap)
            if lo <= u <= hi or lo <= v <= hi:
                return True
            if hi < u or lo > v:
                continue
            for f in self.ifs.maps:
                stack.append(amap.compose(f.amap))
        return False

    def grid_hits(self, h: Fraction, kmin: int, kmax: int) -> set[int] | None:
        """Indices ``kmin <= k <= kmax`` of the closed mesh cells ``[k h, (k+1) h]`` meeting ``K``.

        A cell ``f_w(hull)`` shorter than ``h`` meets exactly the mesh cells
        containing one of its endpoints, and both endpoints lie in ``K``.
        """
        if self._as_box() is not None:
            return None
        (a, b), = self.ifs.hull.bounds
        wlo, whi = kmin * h, (kmax + 1) * h
        maps = [(f.linear[0][0], f.translation[0]) for f in self.ifs.maps]
        hits: set[int] = set()
        stack = [(Fraction(1), Fraction(0))]
        while stack:
            c, t = stack.pop()
            u, v = c * a + t, c * b + t
            if u > v:
                u, v = v, u
            if v < wlo or u > whi:
                continue
            if v - u < h:
                for x in (u, v):
                    q = x / h
                    k = math.floor(q)
                    for j in ((k, k - 1) if q == k else (k,)):
                        if kmin <= j <= kmax:
                            hits.add(j)
                continue
            for c2, t2 in maps:
                stack.append((c * c2, c * t2 + t))
        return hits

    def contains_point(self, p) -> bool:
        b = self._as_box()
        if b is not None:
            return b.contains_point(p)
        (x,) = p
        (a, hb), = self.ifs.hull.bounds
        if x < a or x > hb:
            return False
        inverses = [f.amap.inverse_1d() for f in self.ifs.maps]
        succ: dict[Fraction, list[Fraction]] = {}
        frontier = [as_fraction(x)]
        while frontier:
            y = frontier.pop()
            if y in succ:
                continue
            if y == a or y == hb:
                return True
            nxt = []
            for inv in inverses:
                z = inv((y,))[0]
                if a <= z <= hb:
                    nxt.append(z)
            succ[y] = nxt
            frontier.extend(nxt)
            if len(succ) > _STATE_BUDGET:
                raise RuntimeError("point membership search exceeded its state budget")
        # keep only states with an infinite forward path
        alive = set(succ)
        changed = True
        while changed:
            changed = False
            for y in list(alive):
                if not any(z in alive for z in succ[y]):
                    alive.discard(y)
                    changed = True
        return as_fraction(x) in alive

    def next_point(self, x):
        b = self._as_box()
        if b is not None:
            return b.next_point(x)
        if any(f.linear[0][0] < 0 for f in self.ifs.maps):
            raise NotImplementedError("next_point needs increasing maps")
        return self._next(as_fraction(x), set(), {})

    def _next(self, y, on_stack: set, memo: dict):
        (a, b), = self.ifs.hull.bounds
        if y < a:
            return a
        if y >= b:
            return None
        if y in memo:
            return memo[y]
        if y in on_stack:
            return y
        if len(on_stack) > 400:
            raise RuntimeError("next_point recursion too deep")
        on_stack.add(y)
        best = None
        for f in self.ifs.maps:
            u, v = self._cell(f.amap)
            if y < u:
                cand = u
            elif y >= v:
                continue
            else:
                inner = self._next(f.amap.inverse_1d()((y,))[0], on_stack, memo)
                cand = f.amap((inner,))[0] if inner is not None else None
            if cand is not None and (best is None or cand < best):
                best = cand
        on_stack.discard(y)
        memo[y] = best
        return best

    def first_point(self):
        return self.ifs.hull.bounds[0][0]

    def uncovered_witness(self, boxes):
        b = self._as_box()
        if b is None:
            raise NotImplementedError("coverage witness needs a box attractor")
        return b.uncovered_witness(boxes)

    def __repr__(self) -> str:
        return f"AttractorSet({self.ifs!r})"


@dataclass(frozen=True)
class RationalPoints(QuerySet):
    """``Q^d`` intersected with a closed box; dense and countable."""

    box: AxisBox

    @property
    def hull(self):
        return self.box

    @property
    def dim(self):
        return self.box.dim

    @property
    def traits(self):
        return frozenset({"countable", "dense_in_hull"})

    def meets_box(self, box):
        # a nonempty intersection of rational boxes contains its rational corner
        return self.box.meets(box)

    def covers_region(self, box):
        return self.box.contains(box)

    def contains_attractor(self, ifs):
        return self.box.contains(ifs.hull)

    def meets_attractor_cell(self, g, max_depth=64):
        # cell endpoints are rational points of the attractor
        return Box(self.box).meets_attractor_cell(g, max_depth)

    def meets_parallelogram(self, g):
        return Box(self.box).meets_parallelogram(g)

    def meets_complement(self, g):
        return g.meets_box(self.box)

    def contains_point(self, p):
        return self.box.contains_point(p)

    def closure(self):
        return Box(self.box)

    def __repr__(self):
        return f"RationalPoints({self.box})"


@dataclass(frozen=True)
class FinitePoints(QuerySet):
    points: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        pts = tuple(sorted({tuple(as_fraction(c) for c in p) for p in self.points}))
        if not pts:
            raise ValueError("use at least one point")
        object.__setattr__(self, "points", pts)

    @property
    def dim(self):
        return len(self.points[0])

    @property
    def hull(self):
        d = self.dim
        return AxisBox(tuple((min(p[i] for p in self.points), max(p[i] for p in self.points)) for i in range(d)))

    @property
    def traits(self):
        return frozenset({"countable", "compact"})

    def meets_box(self, box):
        return any(box.contains_point(p) for p in self.points)

    def contains_point(self, p):
        return tuple(as_fraction(c) for c in p) in self.points

    def contains_attractor(self, ifs):
        return False

    def meets_attractor_cell(self, g, max_depth=64):
        for (x,) in self.points:
            y = g.amap.inverse_1d()((x,))[0]
            if AttractorSet(g.attractor).contains_point((y,)):
                return True
        return False

    def meets_parallelogram(self, g):
        return any(parallelogram_meets_box(g.vertices(), AxisBox(tuple((c, c) for c in p))) for p in self.points)

    def next_point(self, x):
        xs = [p[0] for p in self.points]
        i = bisect.bisect_right(xs, x)
        return xs[i] if i < len(xs) else None

    def first_point(self):
        return self.points[0][0]

    def uncovered_witness(self, boxes):
        for p in self.points:
            if not any(b.contains_point(p) for b in boxes):
                return p
        return None

    def __repr__(self):
        return f"FinitePoints({len(self.points)} points)"


@dataclass(frozen=True)
class HarmonicPoints(QuerySet):
    """``{0} ∪ {1/k : k >= 1}`` on the line."""

    dim: int = 1

    @property
    def hull(self):
        return AxisBox(((Fraction(0), Fraction(1)),))

    @property
    def traits(self):
        return frozenset({"countable", "compact"})

    def meets_box(self, box):
        (a, b), = box.bounds
        if a <= 0 <= b:
            return True
        if b < 0 or a > 1:
            return False
        kmax = math.floor(1 / a)
        kmin = max(1, math.ceil(1 / b))
        return kmin <= kmax

    def contains_attractor(self, ifs):
        return False

    def contains_point(self, p):
        (x,) = p
        x = as_fraction(x)
        return x == 0 or (0 < x <= 1 and x.numerator == 1)

    def next_point(self, x):
        x = as_fraction(x)
        if x < 0:
            return Fraction(0)
        if x >= 1:
            return None
        if x == 0:
            return Fraction(0)
        k = math.floor(1 / x)
        if Fraction(1, k) == x:
            k -= 1
        return Fraction(1, k)

    def first_point(self):
        return Fraction(0)

    def __repr__(self):
        return "HarmonicPoints()"


@dataclass(frozen=True)
class UnionSet(QuerySet):
    parts: tuple[QuerySet, ...]

    @property
    def dim(self):
        return self.parts[0].dim

    @property
    def hull(self):
        hulls = [p.hull for p in self.parts]
        if any(h is None for h in hulls):
            return None
        d = self.dim
        return AxisBox(tuple((min(h.bounds[i][0] for h in hulls), max(h.bounds[i][1] for h in hulls)) for i in range(d)))

    @property
    def traits(self):
        common = frozenset.intersection(*[p.traits for p in self.parts])
        return common - {"dense_in_hull"}

    def meets_box(self, box):
        return any(p.meets_box(box) for p in self.parts)

    def covers_region(self, box):
        return any(p.covers_region(box) for p in self.parts)

    def contains_attractor(self, ifs):
        return any(p.contains_attractor(ifs) for p in self.parts)

    def intersects(self, item):
        return any(p.intersects(item) for p in self.parts)

    def contains_point(self, p):
        return any(q.contains_point(p) for q in self.parts)

    def closure(self):
        return UnionSet(tuple(p.closure() for p in self.parts))

    def grid_hits(self, h, kmin, kmax):
        out = set()
        for p in self.parts:
            hits = p.grid_hits(h, kmin, kmax)
            if hits is None:
                return None
            out |= hits
        return out

    def next_point(self, x):
        cands = [c for c in (p.next_point(x) for p in self.parts) if c is not None]
        return min(cands) if cands else None

    def first_point(self):
        return min(p.first_point() for p in self.parts)

    def uncovered_witness(self, boxes):
        for p in self.parts:
            w = p.uncovered_witness(boxes)
            if w is not None:
                return w
        return None

    def __repr__(self):
        return "UnionSet(" + ", ".join(map(repr, self.parts)) + ")"


def _is_power_of_half(x: Fraction) -> bool:
    return x.numerator == 1 and x.denominator & (x.denominator - 1) == 0


@dataclass(frozen=True)
class CombOpenIntervals(QuerySet):
    """``F = ∪_{k>=0} (2^-(k+1), 2^-k) × {0}`` in the plane.

    Its closure is the horizontal unit segment.
    """

    dim: int = 2

    @property
    def hull(self):
        return AxisBox(((Fraction(0), Fraction(1)), (Fraction(0), Fraction(0))))

    @property
    def traits(self):
        return frozenset()

    def meets_box(self, box):
        (a, b), (c, d) = box.bounds
        if not c <= 0 <= d:
            return False
        lo, hi = max(a, Fraction(0)), min(b, Fraction(1))
        if lo > hi or hi <= 0 or lo >= 1:
            return False
        if lo < hi:
            return True
        return not _is_power_of_half(lo)

    def contains_attractor(self, ifs):
        return False

    def closure(self):
        return Box(self.hull)

    def __repr__(self):
        return "CombOpenIntervals()"

