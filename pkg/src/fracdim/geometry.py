"""Exact cell geometry.

Every coordinate is a :class:`fractions.Fraction`; floating point only appears
when a diameter is finally turned into a float for logs and powers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

INF = math.inf

Number = int | Fraction | float | str


def as_fraction(x: Number) -> Fraction:
    """Convert ``x`` to an exact rational.

    Strings are parsed by :class:`Fraction` (``"1/3"``, ``"0.25"``); floats are
    read through their shortest decimal repr so ``0.4`` becomes ``2/5``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"cannot convert {x!r} to a rational")
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def _sqrt(q: Fraction) -> float:
    if q == 0:
        return 0.0
    r = q.numerator / q.denominator  # correctly rounded for big integers
    if 0.0 < r < math.inf:
        return math.sqrt(r)
    return math.exp(0.5 * (math.log(q.numerator) - math.log(q.denominator)))


def _log_sqrt(q: Fraction) -> float:
    if q == 0:
        return -INF
    return 0.5 * (math.log(q.numerator) - math.log(q.denominator))


class Geometry:
    """Base class for cell geometries."""

    dim: int

    @property
    def diameter_sq(self) -> Fraction | float:
        raise NotImplementedError

    @property
    def diameter(self) -> float:
        d2 = self.diameter_sq
        if d2 == INF:
            return INF
        return _sqrt(d2)

    @property
    def log_diameter(self) -> float:
        d2 = self.diameter_sq
        if d2 == INF:
            return INF
        return _log_sqrt(d2)

    @property
    def bbox(self) -> "AxisBox | None":
        """Smallest closed axis box containing the set, ``None`` if unbounded."""
        raise NotImplementedError


@dataclass(frozen=True)
class AxisBox(Geometry):
    """Closed axis-aligned box ``[lo_1, hi_1] x ... x [lo_d, hi_d]``.

    Degenerate axes (``lo == hi``) are allowed, so segments lying on a
    coordinate line and single points are boxes too.
    """

    bounds: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        fixed = tuple((as_fraction(lo), as_fraction(hi)) for lo, hi in self.bounds)
        for lo, hi in fixed:
            if lo > hi:
                raise ValueError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "bounds", fixed)

    @classmethod
    def of(cls, *intervals: Sequence[Number]) -> "AxisBox":
        return cls(tuple((as_fraction(lo), as_fraction(hi)) for lo, hi in intervals))

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def lo(self) -> tuple[Fraction, ...]:
        return tuple(b[0] for b in self.bounds)

    @property
    def hi(self) -> tuple[Fraction, ...]:
        return tuple(b[1] for b in self.bounds)

    @property
    def sides(self) -> tuple[Fraction, ...]:
        return tuple(hi - lo for lo, hi in self.bounds)

    @property
    def diameter_sq(self) -> Fraction:
        return sum((s * s for s in self.sides), Fraction(0))

    @property
    def bbox(self) -> "AxisBox":
        return self

    def free_axes(self) -> tuple[int, ...]:
        return tuple(i for i, (lo, hi) in enumerate(self.bounds) if lo < hi)

    def volume(self, axes: Iterable[int] | None = None) -> Fraction:
        axes = range(self.dim) if axes is None else axes
        v = Fraction(1)
        for i in axes:
            v *= self.bounds[i][1] - self.bounds[i][0]
        return v

    def contains_point(self, p: Sequence[Fraction]) -> bool:
        return all(lo <= x <= hi for (lo, hi), x in zip(self.bounds, p))

    def contains(self, other: "AxisBox") -> bool:
        return all(a <= c and d <= b for (a, b), (c, d) in zip(self.bounds, other.bounds))

    def meets(self, other: "AxisBox") -> bool:
        """Closed intersection test: touching boundaries count."""
        return all(c <= b and a <= d for (a, b), (c, d) in zip(self.bounds, other.bounds))

    def interiors_meet(self, other: "AxisBox") -> bool:
        return all(c < b and a < d for (a, b), (c, d) in zip(self.bounds, other.bounds))

    def intersection(self, other: "AxisBox") -> "AxisBox | None":
        out = []
        for (a, b), (c, d) in zip(self.bounds, other.bounds):
            lo, hi = max(a, c), min(b, d)
            if lo > hi:
                return None
            out.append((lo, hi))
        return AxisBox(tuple(out))

    def corners(self) -> list[tuple[Fraction, ...]]:
        return [tuple(c) for c in itertools.product(*self.bounds)]

    def center(self) -> tuple[Fraction, ...]:
        return tuple((lo + hi) / 2 for lo, hi in self.bounds)

    def __str__(self) -> str:
        return " x ".join(f"[{lo}, {hi}]" for lo, hi in self.bounds)


@dataclass(frozen=True)
class Point(Geometry):
    coords: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(as_fraction(c) for c in self.coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def diameter_sq(self) -> Fraction:
        return Fraction(0)

    @property
    def bbox(self) -> AxisBox:
        return AxisBox(tuple((c, c) for c in self.coords))


@dataclass(frozen=True)
class Segment(Geometry):
    """Closed straight segment between two rational points."""

    start: tuple[Fraction, ...]
    end: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(as_fraction(c) for c in self.start))
        object.__setattr__(self, "end", tuple(as_fraction(c) for c in self.end))
        if len(self.start) != len(self.end):
            raise ValueError("segment endpoints differ in dimension")

    @property
    def dim(self) -> int:
        return len(self.start)

    @property
    def diameter_sq(self) -> Fraction:
        return sum(((b - a) ** 2 for a, b in zip(self.start, self.end)), Fraction(0))

    @property
    def bbox(self) -> AxisBox:
        return AxisBox(tuple((min(a, b), max(a, b)) for a, b in zip(self.start, self.end)))

    def clip(self, box: AxisBox) -> tuple[Fraction, Fraction] | None:
        """Parameter range ``[t0, t1]`` of the part inside ``box`` (Liang-Barsky)."""
        t0, t1 = Fraction(0), Fraction(1)
        for a, b, (lo, hi) in zip(self.start, self.end, box.bounds):
            d = b - a
            if d == 0:
                if a < lo or a > hi:
                    return None
                continue
            ta, tb = (lo - a) / d, (hi - a) / d
            if ta > tb:
                ta, tb = tb, ta
            t0, t1 = max(t0, ta), min(t1, tb)
            if t0 > t1:
                return None
        return t0, t1


@dataclass(frozen=True)
class UnboundedComplement(Geometry):
    """``R^d`` minus the open box ``(lo_1, hi_1) x ... x (lo_d, hi_d)``."""

    hole: AxisBox

    @property
    def dim(self) -> int:
        return self.hole.dim

    @property
    def diameter_sq(self) -> float:
        return INF

    @property
    def bbox(self) -> None:
        return None

    def contains_box(self, box: AxisBox) -> bool:
        return any(d <= a or c >= b for (a, b), (c, d) in zip(self.hole.bounds, box.bounds))

    def meets_box(self, box: AxisBox) -> bool:
        return any(c <= a or d >= b for (a, b), (c, d) in zip(self.hole.bounds, box.bounds))


@dataclass(frozen=True)
class AffineMap:
    """Exact affine map ``x -> linear @ x + translation``."""

    linear: tuple[tuple[Fraction, ...], ...]
    translation: tuple[Fraction, ...]

    def __post_init__(self):
        lin = tuple(tuple(as_fraction(v) for v in row) for row in self.linear)
        tr = tuple(as_fraction(v) for v in self.translation)
        d = len(tr)
        if len(lin) != d or any(len(row) != d for row in lin):
            raise ValueError("linear part must be a square matrix matching the translation")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", tr)

    @classmethod
    def identity(cls, d: int) -> "AffineMap":
        return cls(
            tuple(tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d)),
            tuple(Fraction(0) for _ in range(d)),
        )

    @classmethod
    def scalar(cls, c: Number, t: Number) -> "AffineMap":
        """One-dimensional ``x -> c x + t``."""
        return cls(((as_fraction(c),),), (as_fraction(t),))

    @property
    def dim(self) -> int:
        return len(self.translation)

    def __call__(self, p: Sequence[Fraction]) -> tuple[Fraction, ...]:
        return tuple(
            sum((a * x for a, x in zip(row, p)), Fraction(0)) + t
            for row, t in zip(self.linear, self.translation)
        )

    def apply_linear(self, v: Sequence[Fraction]) -> tuple[Fraction, ...]:
        return tuple(sum((a * x for a, x in zip(row, v)), Fraction(0)) for row in self.linear)

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """Return ``self o inner``."""
        d = self.dim
        lin = tuple(
            tuple(sum((self.linear[i][k] * inner.linear[k][j] for k in range(d)), Fraction(0)) for j in range(d))
            for i in range(d)
        )
        return AffineMap(lin, self(inner.translation))

    def is_monomial(self) -> bool:
        """True when each row and column has exactly one nonzero entry.

        Such maps send axis boxes to axis boxes.
        """
        d = self.dim
        rows = [sum(1 for v in row if v != 0) for row in self.linear]
        cols = [sum(1 for i in range(d) if self.linear[i][j] != 0) for j in range(d)]
        return all(r == 1 for r in rows) and all(c == 1 for c in cols)

    def gram(self) -> tuple[tuple[Fraction, ...], ...]:
        d = self.dim
        return tuple(
            tuple(sum((self.linear[k][i] * self.linear[k][j] for k in range(d)), Fraction(0)) for j in range(d))
            for i in range(d)
        )

    def similarity_ratio_sq(self) -> Fraction | None:
        """``c**2`` if the linear part is ``c`` times an orthogonal matrix."""
        g = self.gram()
        lam = g[0][0]
        d = self.dim
        for i in range(d):
            for j in range(d):
                if g[i][j] != (lam if i == j else 0):
                    return None
        return lam

    def operator_norm(self) -> float:
        return float(np.linalg.norm(np.array(self.linear, dtype=float), ord=2))

    def inverse_1d(self) -> "AffineMap":
        (a,), = self.linear
        if a == 0:
            raise ZeroDivisionError("singular map")
        return AffineMap.scalar(1 / a, -self.translation[0] / a)

    def image_box(self, box: AxisBox) -> AxisBox:
        """Exact image of a box under a monomial map."""
        if not self.is_monomial():
            raise ValueError("image of a box is an axis box only for monomial maps")
        out = []
        for i, row in enumerate(self.linear):
            j = next(k for k, v in enumerate(row) if v != 0)
            a = row[j]
            lo, hi = box.bounds[j]
            u, v = a * lo + self.translation[i], a * hi + self.translation[i]
            out.append((min(u, v), max(u, v)))
        return AxisBox(tuple(out))


def image_diameter_sq(linear: AffineMap | tuple, box: AxisBox) -> Fraction:
    """Squared diameter of the affine image of ``box`` (exact).

    The diameter of a parallelotope is attained between opposite vertices,
    i.e. at ``L (sigma * sides)`` for a sign vector ``sigma``.
    """
    amap = linear if isinstance(linear, AffineMap) else AffineMap(linear, (0,) * len(linear))
    sides = box.sides
    best = Fraction(0)
    for signs in itertools.product((1, -1), repeat=max(box.dim - 1, 0)):
        v = (sides[0],) + tuple(s * x for s, x in zip(signs, sides[1:]))
        w = amap.apply_linear(v)
        best = max(best, sum((x * x for x in w), Fraction(0)))
    return best


@dataclass(frozen=True)
class Mapped(Geometry):
    """Affine image ``amap(inner)`` of another geometry.

    ``attractor`` marks cells of the form ``f_w(K)`` where ``K`` is the
    attractor of that IFS and ``inner`` is its convex hull box; the set is then
    a proper (Cantor-type) subset of ``amap(inner)``.
    """

    inner: AxisBox
    amap: AffineMap
    attractor: object = field(default=None, compare=False)
    word: tuple[int, ...] = ()

    @property
    def dim(self) -> int:
        return self.inner.dim

    @property
    def diameter_sq(self) -> Fraction:
        lam = self.amap.similarity_ratio_sq()
        if lam is not None:
            return lam * self.inner.diameter_sq
        return image_diameter_sq(self.amap, self.inner)

    @property
    def bbox(self) -> AxisBox:
        pts = [self.amap(c) for c in self.inner.corners()]
        return AxisBox(tuple((min(p[i] for p in pts), max(p[i] for p in pts)) for i in range(self.dim)))

    def vertices(self) -> list[tuple[Fraction, ...]]:
        return [self.amap(c) for c in self.inner.corners()]


def map_geometry(amap: AffineMap, inner: AxisBox, attractor=None, word=()) -> Geometry:
    """Image of ``inner`` under ``amap``; plain boxes stay boxes when possible."""
    if attractor is None and amap.is_monomial():
        return amap.image_box(inner)
    return Mapped(inner, amap, attractor, tuple(word))


def union_volume(boxes: Sequence[AxisBox], axes: Sequence[int]) -> Fraction:
    """Exact Lebesgue measure of a union of boxes restricted to ``axes``."""
    boxes = [b for b in boxes if all(b.bounds[i][0] < b.bounds[i][1] for i in axes)]
    if not boxes:
        return Fraction(0)
    if not axes:
        return Fraction(1)
    if len(axes) == 1:
        i = axes[0]
        ivs = sorted(b.bounds[i] for b in boxes)
        total = Fraction(0)
        cur_lo, cur_hi = ivs[0]
        for lo, hi in ivs[1:]:
            if lo > cur_hi:
                total += cur_hi - cur_lo
                cur_lo, cur_hi = lo, hi
            else:
                cur_hi = max(cur_hi, hi)
        return total + cur_hi - cur_lo
    first, rest = axes[0], list(axes[1:])
    cuts = sorted({b.bounds[first][0] for b in boxes} | {b.bounds[first][1] for b in boxes})
    total = Fraction(0)
    for a, b in zip(cuts, cuts[1:]):
        slab = [bx for bx in boxes if bx.bounds[first][0] <= a and bx.bounds[first][1] >= b]
        if slab:
            total += (b - a) * union_volume(slab, rest)
    return total


def parallelogram_meets_box(vertices: Sequence[Sequence[Fraction]], box: AxisBox) -> bool:
    """Separating-axis test between a planar convex polygon and a closed box."""
    if box.dim != 2:
        raise NotImplementedError("only planar parallelograms are supported")
    poly = list(vertices)
    corners = box.corners()
    # box axes
    for i in range(2):
        if max(p[i] for p in poly) < box.bounds[i][0] or min(p[i] for p in poly) > box.bounds[i][1]:
            return False
    # polygon edge normals; vertices of a parallelotope image come in product order
    hull = _convex_hull(poly)
    for a, b in zip(hull, hull[1:] + hull[:1]):
        n = (a[1] - b[1], b[0] - a[0])
        pp = [n[0] * p[0] + n[1] * p[1] for p in hull]
        pb = [n[0] * p[0] + n[1] * p[1] for p in corners]
        if max(pp) < min(pb) or max(pb) < min(pp):
            return False
    return True


def _convex_hull(points):
    pts = sorted(set(tuple(p) for p in points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]
