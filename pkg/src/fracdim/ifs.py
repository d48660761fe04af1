"""Affine contraction systems, their natural fractal structure and Moran's equation."""

from __future__ import annotations

import functools
import itertools
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .geometry import (
    AffineMap,
    AxisBox,
    Mapped,
    _convex_hull,
    _log_sqrt,
    _sqrt,
    as_fraction,
    image_diameter_sq,
    map_geometry,
    union_volume,
)
from .structures import (
    Cell,
    DiameterProfile,
    FractalStructure,
    Level,
    ParamFamily,
    QuerySet,
    merge_profiles,
    profile_of_cells,
)


@dataclass(frozen=True)
class ContractionMap:
    """An affine contraction with exact rational coefficients.

    ``factor`` is the Lipschitz constant (operator norm of the linear part);
    for similarities it is the exact ratio.
    """

    amap: AffineMap

    @classmethod
    def from_matrix(cls, linear, translation) -> "ContractionMap":
        return cls(AffineMap(tuple(tuple(r) for r in linear), tuple(translation)))

    @classmethod
    def scalar(cls, c, t) -> "ContractionMap":
        """One-dimensional ``x -> c x + t``."""
        return cls(AffineMap.scalar(c, t))

    @property
    def linear(self):
        return self.amap.linear

    @property
    def translation(self):
        return self.amap.translation

    @property
    def dim(self) -> int:
        return self.amap.dim

    @functools.cached_property
    def ratio_sq(self) -> Fraction | None:
        return self.amap.similarity_ratio_sq()

    @property
    def is_similarity(self) -> bool:
        return self.ratio_sq is not None

    @functools.cached_property
    def factor(self) -> float:
        if self.ratio_sq is not None:
            return math.sqrt(self.ratio_sq)
        return self.amap.operator_norm()

    def __call__(self, p):
        return self.amap(p)

    def compose(self, inner: "ContractionMap") -> "ContractionMap":
        return ContractionMap(self.amap.compose(inner.amap))


def _image_region(f: ContractionMap, box: AxisBox):
    return map_geometry(f.amap, box)


class IFSystem:
    """A finite list of contractions together with an exact attractor description.

    Parameters
    ----------
    maps : sequence of ContractionMap
        The contractions ``f_1, ..., f_k``.
    hull : AxisBox
        A closed box with ``conv K = hull`` (one dimension) or ``K = hull``.
    osc_witness : AxisBox, optional
        Declared open set ``V`` for the open set condition (read as the open
        box with these bounds).  It is checked, never searched for.
    attractor_known : {"box", "cantor"}, optional
        Declared attractor type.  When omitted it is derived exactly:
        ``"box"`` when the images of ``hull`` tile it, ``"cantor"`` (one
        dimension only) when they merely span it.
    """

    def __init__(
        self,
        maps: Sequence[ContractionMap],
        hull: AxisBox,
        osc_witness: AxisBox | None = None,
        attractor_known: str | None = None,
        name: str = "",
    ):
        if not maps:
            raise ValueError("an IFS needs at least one map")
        self.maps = tuple(maps)
        self.hull = hull
        self.osc_witness = osc_witness
        self.name = name
        d = hull.dim
        for i, f in enumerate(self.maps, 1):
            if f.dim != d:
                raise ValueError(f"map {i} acts on dimension {f.dim}, hull has {d}")
            if not 0 < f.factor < 1:
                raise ValueError(f"map {i} has contraction factor {f.factor}, not in (0, 1)")
        derived = self._derive_kind()
        if attractor_known is None:
            if derived is None:
                raise ValueError(
                    "the attractor is not derivable: the images of the hull neither tile it nor span it"
                )
            attractor_known = derived
        elif attractor_known not in ("box", "cantor"):
            raise ValueError(f"unknown attractor type {attractor_known!r}")
        elif derived is not None and derived != attractor_known:
            raise ValueError(f"declared attractor type {attractor_known!r} but the maps give {derived!r}")
        if attractor_known == "cantor" and d != 1:
            raise ValueError("Cantor-type attractors are supported in one dimension only")
        self.kind = attractor_known
        self._counters: dict[int, Counter] = {}

    def _derive_kind(self) -> str | None:
        if not all(f.amap.is_monomial() for f in self.maps):
            return None
        images = [f.amap.image_box(self.hull) for f in self.maps]
        if not all(self.hull.contains(b) for b in images):
            return None
        axes = list(range(self.hull.dim))
        if union_volume(images, axes) == self.hull.volume():
            return "box"
        if self.hull.dim == 1:
            lo = min(b.bounds[0][0] for b in images)
            hi = max(b.bounds[0][1] for b in images)
            if (lo, hi) == self.hull.bounds[0]:
                return "cantor"
        return None

    @property
    def k(self) -> int:
        return len(self.maps)

    @property
    def dim(self) -> int:
        return self.hull.dim

    @property
    def factors(self) -> list[float]:
        return [f.factor for f in self.maps]

    @property
    def is_strict_self_similar(self) -> bool:
        return all(f.is_similarity for f in self.maps)

    def linear_counter(self, n: int) -> Counter:
        """Multiset of linear parts of ``f_w`` over all words of length ``n``."""
        if n in self._counters:
            return self._counters[n]
        if n == 0:
            ident = AffineMap.identity(self.dim).linear
            c = Counter({ident: 1})
        else:
            prev = self.linear_counter(n - 1)
            c = Counter()
            zero = (Fraction(0),) * self.dim
            for lin, m in sorted(prev.items()):
                outer = AffineMap(lin, zero)
                for f in self.maps:
                    c[outer.compose(AffineMap(f.linear, zero)).linear] += m
        self._counters[n] = c
        return c

    def __repr__(self) -> str:
        return f"IFSystem({self.name or self.k})"


def compose_word(ifs: IFSystem, word: Sequence[int]) -> ContractionMap:
    """``f_w = f_{w_1} o ... o f_{w_n}`` with indices counted from 1."""
    out = AffineMap.identity(ifs.dim)
    for i in word:
        if not 1 <= i <= ifs.k:
            raise IndexError(f"word index {i} outside 1..{ifs.k}")
        out = out.compose(ifs.maps[i - 1].amap)
    return ContractionMap(out)


def moran_solve(factors: Sequence, tol: float = 1e-13) -> float:
    """Root ``s`` of ``sum c_i**s = 1`` by bisection.

    The bracket ``[0, log k / -log max c_i]`` always contains the root since
    the sum is strictly decreasing in ``s``.
    """
    cs = [float(as_fraction(c)) if isinstance(c, str) else float(c) for c in factors]
    if not cs:
        raise ValueError("at least one factor is required")
    for c in cs:
        if not 0 < c < 1:
            raise ValueError(f"factor {c} is not in (0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    k = len(cs)
    if k == 1:
        return 0.0
    lo, hi = 0.0, math.log(k) / -math.log(max(cs))
    logs = [math.log(c) for c in cs]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if math.fsum(math.exp(mid * l) for l in logs) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def uniform_moran(k: int, c: float) -> float:
    """Similarity dimension ``-log k / log c`` of ``k`` maps with common ratio ``c``."""
    if k < 1 or not 0 < c < 1:
        raise ValueError("need k >= 1 and c in (0, 1)")
    return -math.log(k) / math.log(c)


@dataclass
class OSCReport:
    declared: bool
    contained: bool = False
    disjoint: bool = False
    exact: bool = True
    details: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.declared and self.contained and self.disjoint


def _interiors_disjoint(p, q) -> bool:
    """Separating-axis test for convex polygons or intervals (exact)."""
    if len(p[0]) == 1:
        (a,), (b,) = min(p), max(p)
        (c,), (d,) = min(q), max(q)
        return b <= c or d <= a
    for poly in (p, q):
        hull = _convex_hull(poly)
        for u, v in zip(hull, hull[1:] + hull[:1]):
            nrm = (u[1] - v[1], v[0] - u[0])
            pp = [nrm[0] * x[0] + nrm[1] * x[1] for x in p]
            qq = [nrm[0] * x[0] + nrm[1] * x[1] for x in q]
            if max(pp) <= min(qq) or max(qq) <= min(pp):
                return True
    return False


def verify_osc_witness(ifs: IFSystem) -> OSCReport:
    """Check a declared open-set-condition witness ``V``.

    Verifies ``f_i(V) ⊆ V`` and that the images are pairwise disjoint.  Every
    test is exact in rational arithmetic (boxes, intervals and planar
    parallelograms).
    """
    V = ifs.osc_witness
    if V is None:
        return OSCReport(False, details=["no witness declared"])
    if ifs.dim > 2:
        raise NotImplementedError("witness checks are implemented up to dimension 2")
    rep = OSCReport(True)
    images = [[f(c) for c in V.corners()] for f in ifs.maps]
    rep.contained = all(V.contains_point(p) for img in images for p in img)
    if not rep.contained:
        rep.details.append("some image f_i(V) leaves V")
    rep.disjoint = True
    for (i, p), (j, q) in itertools.combinations(enumerate(images, 1), 2):
        if not _interiors_disjoint(p, q):
            rep.disjoint = False
            rep.details.append(f"f_{i}(V) and f_{j}(V) overlap")
    return rep


# ---------------------------------------------------------------------------
# natural fractal structure on the attractor


class IFSWordFamily(ParamFamily):
    """Level ``n`` of the natural structure: the cells ``f_w(K)`` for ``|w| = n``."""

    def __init__(self, ifs: IFSystem, n: int):
        self.ifs = ifs
        self.level = n
        self.description = f"images f_w(K) for words of length {n}"

    def is_finite(self) -> bool:
        return True

    def _geometry(self, amap: AffineMap, word):
        if self.ifs.kind == "cantor":
            return Mapped(self.ifs.hull, amap, self.ifs, tuple(word))
        return map_geometry(amap, self.ifs.hull, None, word)

    def cell_at(self, word) -> Cell:
        word = tuple(word)
        if len(word) != self.level:
            raise ValueError(f"word {word} does not have length {self.level}")
        return Cell(self._geometry(compose_word(self.ifs, word).amap, word), word, self.level)

    def _counter_profile(self, counter: Counter, prefix=None) -> DiameterProfile:
        groups: dict[Fraction, int] = {}
        zero = (Fraction(0),) * self.ifs.dim
        for lin, m in sorted(counter.items()):
            if prefix is not None:
                lin = AffineMap(prefix, zero).compose(AffineMap(lin, zero)).linear
            d2 = image_diameter_sq(lin, self.ifs.hull)
            groups[d2] = groups.get(d2, 0) + m
        count = sum(groups.values())
        keys = sorted(k for k in groups if k != 0)
        zeros = groups.get(Fraction(0), 0)
        delta = _sqrt(keys[-1]) if keys else 0.0
        return DiameterProfile(
            count, delta, tuple(_log_sqrt(k) for k in keys), tuple(math.log(groups[k]) for k in keys), zeros
        )

    def profile(self, F: QuerySet) -> DiameterProfile:
        n = self.level
        if F.contains_attractor(self.ifs):
            return self._counter_profile(self.ifs.linear_counter(n))
        if not F.meets_box(self.ifs.hull):
            return DiameterProfile(0, 0.0)
        parts = []
        explicit = []
        for word, amap, whole in self._walk(F):
            if whole:
                parts.append(self._counter_profile(self.ifs.linear_counter(n - len(word)), amap.linear))
            else:
                explicit.append(Cell(self._geometry(amap, word), word, n))
        parts.append(profile_of_cells(explicit))
        return merge_profiles(parts)

    def _walk(self, F: QuerySet):
        """Depth-first search over word prefixes pruned by intersection tests.

        Yields ``(word, f_w, whole)``; ``whole`` marks a prefix whose every
        extension touches ``F``.
        """
        n = self.level
        stack = [((), AffineMap.identity(self.ifs.dim))]
        while stack:
            word, amap = stack.pop()
            g = self._geometry(amap, word)
            if not F.intersects(g):
                continue
            if len(word) == n:
                yield word, amap, False
                continue
            if F.covers_region(g.bbox):
                yield word, amap, True
                continue
            for i in range(self.ifs.k, 0, -1):
                stack.append((word + (i,), amap.compose(self.ifs.maps[i - 1].amap)))

    def touching_cells(self, F: QuerySet):
        n = self.level
        for word, amap, whole in self._walk(F):
            if not whole:
                yield Cell(self._geometry(amap, word), word, n)
                continue
            for tail in itertools.product(range(1, self.ifs.k + 1), repeat=n - len(word)):
                w = word + tail
                yield Cell(self._geometry(compose_word(self.ifs, w).amap, w), w, n)

    def all_cells(self):
        # depth first, so every prefix map is composed once
        maps = [f.amap for f in self.ifs.maps]

        def walk(word, amap):
            if len(word) == self.level:
                yield Cell(self._geometry(amap, word), word, self.level)
                return
            for i, f in enumerate(maps, 1):
                yield from walk(word + (i,), amap.compose(f))

        yield from walk((), AffineMap.identity(self.ifs.dim))

    def sample_params(self, rng: random.Random, k: int) -> list:
        return [tuple(rng.randint(1, self.ifs.k) for _ in range(self.level)) for _ in range(k)]


def make_natural_ifs_structure(ifs: IFSystem, name: str | None = None) -> FractalStructure:
    """Levels ``Gamma_n = {f_w(K) : |w| = n}``; level 0 is ``{K}``."""

    def gen(n: int) -> Level:
        return Level(n, (), (IFSWordFamily(ifs, n),))

    fs = FractalStructure(
        name or f"natural structure of {ifs!r}",
        ifs.dim,
        gen,
        claims={"locally_finite", "finite_levels", "diameters_vanish"},
        self_similar=True,
    )
    fs.ifs = ifs
    return fs
