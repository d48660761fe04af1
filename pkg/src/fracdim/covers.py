"""Minimum-cost covers ``min sum diam(A)**s`` over a finite candidate pool.

Three engines share the same instance and solution types:

* :func:`min_cover_1d` -- exact chain dynamic programme for targets on a line;
* :func:`min_cover_bb` -- branch and bound over axis boxes in any dimension;
* :func:`brute_force_cover` -- exhaustive subset enumeration, used as an oracle.
"""

from __future__ import annotations

import bisect
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .geometry import INF, AxisBox, Geometry, Point, Segment
from .structures import Cell, QuerySet

EXACT = "exact"
UPPER_BOUND = "upper_bound"
INFEASIBLE = "infeasible"
INFEASIBLE_WITHIN_BUDGET = "infeasible_within_budget"


def _power(d: float, s: float) -> float:
    """``d**s`` with ``0**0 = 1``."""
    if d == 0:
        return 1.0 if s == 0 else 0.0
    return d**s


def candidate_box(geometry: Geometry) -> AxisBox:
    """Closed axis box equal to ``geometry``; only box-like cells are accepted."""
    if isinstance(geometry, AxisBox):
        return geometry
    if isinstance(geometry, Point):
        return geometry.bbox
    if isinstance(geometry, Segment) and sum(a != b for a, b in zip(geometry.start, geometry.end)) <= 1:
        return geometry.bbox
    raise TypeError(f"cover candidates must be axis boxes, got {type(geometry).__name__}")


@dataclass(frozen=True)
class CoverInstance:
    """A target set, a finite pool of candidate cells and an exponent ``s``."""

    target: QuerySet
    candidates: tuple[Cell, ...]
    exponent: float
    diameters: tuple = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("the exponent must be nonnegative")
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if self.diameters is not None:
            return  # derived from a validated instance
        object.__setattr__(self, "diameters", tuple(c.diameter for c in self.candidates))
        for c, d in zip(self.candidates, self.diameters):
            if not math.isfinite(d):
                raise ValueError(f"candidate {c.address} has infinite diameter")

    @property
    def weights(self) -> list[float]:
        return [_power(d, self.exponent) for d in self.diameters]

    def with_exponent(self, s: float) -> "CoverInstance":
        return CoverInstance(self.target, self.candidates, s, self.diameters)


@dataclass(frozen=True)
class CoverSolution:
    chosen: tuple[int, ...]
    cost: float
    optimality: str
    nodes: int = 0

    @property
    def feasible(self) -> bool:
        return self.optimality in (EXACT, UPPER_BOUND)

    def to_dict(self, instance: CoverInstance | None = None) -> dict:
        out = {
            "chosen": list(self.chosen),
            "cost": "inf" if self.cost == INF else self.cost,
            "optimality": self.optimality,
        }
        if self.nodes:
            out["nodes"] = self.nodes
        if instance is not None:
            out["exponent"] = instance.exponent
            out["cells"] = [
                {"address": [str(a) for a in instance.candidates[i].address], "diameter": instance.candidates[i].diameter}
                for i in self.chosen
            ]
        return out


def explain_json(instance: CoverInstance, solution: CoverSolution) -> str:
    """Deterministic JSON dump of a chosen cover."""
    return json.dumps(solution.to_dict(instance), sort_keys=True)


def canonical_cost(weights: Sequence[float], chosen: Sequence[int]) -> float:
    """Cover cost summed in increasing index order."""
    return math.fsum(weights[i] for i in sorted(chosen))


def _infeasible() -> CoverSolution:
    return CoverSolution((), INF, INFEASIBLE)


# ---------------------------------------------------------------------------
# one dimension


def _line_intervals(instance: CoverInstance):
    """Project the instance onto a line: ``(F1, [(lo, hi, index), ...])``.

    Returns ``None`` when the target neither is one-dimensional nor lies on a
    coordinate line.
    """
    F = instance.target
    if F.dim == 1:
        line, axis, fixed = F, 0, ()
    else:
        proj = F.line_projection()
        if proj is None:
            return None
        axis, fixed, line = proj
    out = []
    for i, c in enumerate(instance.candidates):
        b = candidate_box(c.geometry)
        others = [bd for j, bd in enumerate(b.bounds) if j != axis]
        if all(lo <= x <= hi for (lo, hi), x in zip(others, fixed)):
            lo, hi = b.bounds[axis]
            if line.meets_box(AxisBox(((lo, hi),))):
                out.append((lo, hi, i))
    return line, out


def _integer_keys(values):
    """Order-preserving exact map of rationals (and infinity) to integers."""
    finite = [v for v in values if v != INF]
    if not all(isinstance(v, (int, Fraction)) for v in finite):
        return lambda v: v
    den = 1
    for v in finite:
        if isinstance(v, Fraction):
            den = math.lcm(den, v.denominator)
    top = max((abs(int(v * den)) for v in finite), default=0) + 1

    def key(v):
        return top if v == INF else int(v * den)
    return key


class Cover1D:
    """Reusable chain DP for one target and pool; :meth:`solve` per exponent.

    A cover of a closed set on the line can be ordered by right endpoints so
    that each interval starts no later than the first point of ``F`` past the
    previous right endpoint.  The state is that right endpoint, so a
    monotone stack keyed by the reach ``inf F ∩ (r, oo)`` gives the cheapest
    predecessor by binary search.
    """

    def __init__(self, instance: CoverInstance):
        proj = _line_intervals(instance)
        if proj is None:
            raise ValueError("target does not lie on a line")
        self.instance = instance
        line, ivs = proj
        ivs.sort(key=lambda t: (t[1], t[0], t[2]))
        self.first = line.first_point()
        self.ivs = ivs
        self.diams = [instance.diameters[i] for _, _, i in ivs]
        self._diam_arr = np.array(self.diams, dtype=float)
        self.reach = []
        self.is_goal = []
        memo: dict = {}
        for lo, hi, _ in ivs:
            if hi not in memo:
                nxt = line.next_point(hi)
                memo[hi] = (INF if nxt is None else max(hi, nxt), nxt is None)
            r, g = memo[hi]
            self.reach.append(r)
            self.is_goal.append(g)
        self.source = [self.first is not None and lo <= self.first for lo, _, _ in ivs]
        # exact integer keys for the comparisons made in every solve
        key = _integer_keys([lo for lo, _, _ in ivs] + [hi for _, hi, _ in ivs] + self.reach)
        self._lo = [key(lo) for lo, _, _ in ivs]
        self._reach = [key(r) for r in self.reach]
        self._groups = []
        i = 0
        while i < len(ivs):
            j = i
            while j < len(ivs) and ivs[j][1] == ivs[i][1]:
                j += 1
            self._groups.append((i, j))
            i = j

    def solve(self, s: float | None = None) -> CoverSolution:
        s = self.instance.exponent if s is None else s
        if self.first is None:
            return CoverSolution((), 0.0, EXACT)
        n = len(self.ivs)
        w = np.power(self._diam_arr, s).tolist()  # 0 ** 0 = 1 as in _power
        cost = [INF] * n
        ncell = [0] * n
        parent = [-1] * n
        label = [t[2] for t in self.ivs]

        def smaller_set(pa: int, ea: int, pb: int, eb: int) -> bool:
            # the sets are chain(pa) + {ea} and chain(pb) + {eb} of equal size;
            # in sorted lexicographic order the winner holds the least element
            # of the symmetric difference, which lies on the two branches
            # above the common ancestor
            ma = mb = math.inf
            if ea != eb:
                ma, mb = ea, eb
            u, v = pa, pb
            while u != v:
                du = ncell[u] if u >= 0 else 0
                dv = ncell[v] if v >= 0 else 0
                if du >= dv:
                    ma = min(ma, label[u])
                    u = parent[u]
                if dv >= du:
                    mb = min(mb, label[v])
                    v = parent[v]
            return ma < mb

        def less(a, b) -> bool:
            # options are (cost, cells, predecessor, own index); ties go to
            # fewer cells, then to the lexicographically smaller index list
            if a[0] != b[0]:
                return a[0] < b[0]
            if a[1] != b[1]:
                return a[1] < b[1]
            return smaller_set(a[2], a[3], b[2], b[3])

        def state(j):
            return (cost[j], ncell[j], parent[j], self.ivs[j][2])

        stack: list[int] = []
        stack_reach: list[float] = []
        for i, j_end in self._groups:
            for j in range(i, j_end):
                idx = self.ivs[j][2]
                best = (w[j], 1, -1, idx) if self.source[j] else None
                k = bisect.bisect_left(stack_reach, self._lo[j])
                if k < len(stack):
                    p = stack[k]
                    opt = (cost[p] + w[j], ncell[p] + 1, p, idx)
                    if best is None or less(opt, best):
                        best = opt
                if best is not None:
                    cost[j], ncell[j], parent[j] = best[0], best[1], best[2]
            for j in range(i, j_end):
                if cost[j] == INF:
                    continue
                # reach is nondecreasing in r, so a cheaper newcomer dominates
                while stack and not less(state(stack[-1]), state(j)):
                    stack.pop()
                    stack_reach.pop()
                stack.append(j)
                stack_reach.append(self._reach[j])
        best_j = -1
        for j in range(n):
            if self.is_goal[j] and cost[j] < INF:
                if best_j == -1 or less(state(j), state(best_j)):
                    best_j = j
        if best_j == -1:
            return _infeasible()
        chosen = []
        j = best_j
        while j >= 0:
            chosen.append(label[j])
            j = parent[j]
        chosen = tuple(sorted(chosen))
        weights = self.instance.with_exponent(s).weights
        return CoverSolution(chosen, canonical_cost(weights, chosen), EXACT)


def min_cover_1d(instance: CoverInstance) -> CoverSolution:
    """Exact minimum-cost cover of a target lying on a line."""
    return Cover1D(instance).solve()


# ---------------------------------------------------------------------------
# brute force


def _atom_masks(instance: CoverInstance):
    """Required atoms of the line split at candidate endpoints, as bitmasks."""
    line, ivs = _line_intervals(instance)
    ends = sorted({e for lo, hi, _ in ivs for e in (lo, hi)})
    first = line.first_point()
    atoms = []  # (kind, a, b): "pt" at a, "open" (a, b) with None for +-oo
    if first is None:
        return [], {}, 0
    prev = None
    for e in ends:
        atoms.append(("open", prev, e))
        atoms.append(("pt", e, e))
        prev = e
    atoms.append(("open", prev, None))
    if not ends:
        atoms = [("open", None, None)]
    required = []
    for kind, a, b in atoms:
        if kind == "pt":
            hit = line.contains_point((a,))
        else:
            p = first if a is None else line.next_point(a)
            if p is not None and a is not None and p == a:
                # next_point returns a itself when F accumulates at a from the right
                hit = b is None or a < b
            else:
                hit = p is not None and (a is None or p > a) and (b is None or p < b)
        if hit:
            required.append((kind, a, b))
    masks = {}
    for lo, hi, i in ivs:
        m = 0
        for bit, (kind, a, b) in enumerate(required):
            if kind == "pt":
                inside = lo <= a <= hi
            else:
                inside = a is not None and b is not None and lo <= a and b <= hi
            if inside:
                m |= 1 << bit
        masks[i] = m
    return required, masks, len(required)


def brute_force_cover(instance: CoverInstance, max_candidates: int = 20) -> CoverSolution:
    """Exhaustive optimum over all subsets of at most ``max_candidates`` cells.

    On a line, the target is split into atoms (candidate endpoints and the
    open gaps between them); each candidate covers a set of atoms and all
    subsets are scored at once with numpy.  Elsewhere subsets are tested in
    increasing cost order by exact box subtraction.
    """
    k = len(instance.candidates)
    if k > max_candidates:
        raise ValueError(f"pool of {k} candidates exceeds the brute-force limit {max_candidates}")
    weights = instance.weights
    if _line_intervals(instance) is not None:
        return _brute_line(instance, weights)
    return _brute_general(instance, weights)


def _subset_costs(weights: Sequence[float]) -> np.ndarray:
    costs = np.zeros(1, dtype=float)
    for w in weights:
        costs = np.concatenate([costs, costs + w])
    return costs


def _pick(feasible: np.ndarray, costs: np.ndarray, weights) -> CoverSolution:
    idx = np.flatnonzero(feasible)
    if idx.size == 0:
        return _infeasible()
    c = costs[idx]
    cmin = c.min()
    near = idx[c <= cmin * (1 + 1e-12) + 1e-300]
    best = None
    for m in near.tolist():
        chosen = tuple(i for i in range(len(weights)) if m >> i & 1)
        key = (canonical_cost(weights, chosen), len(chosen), chosen)
        if best is None or key < best:
            best = key
    return CoverSolution(best[2], best[0], EXACT)


def _brute_line(instance: CoverInstance, weights) -> CoverSolution:
    required, masks, nbits = _atom_masks(instance)
    k = len(weights)
    if nbits == 0:
        return CoverSolution((), 0.0, EXACT)
    words = (nbits + 63) // 64
    cov = np.zeros((1, words), dtype=np.uint64)
    for i in range(k):
        m = masks.get(i, 0)
        row = np.array([(m >> (64 * t)) & 0xFFFFFFFFFFFFFFFF for t in range(words)], dtype=np.uint64)
        cov = np.concatenate([cov, cov | row])
    full = np.array(
        [((1 << nbits) - 1 >> (64 * t)) & 0xFFFFFFFFFFFFFFFF for t in range(words)], dtype=np.uint64
    )
    feasible = np.all(cov == full, axis=1)
    return _pick(feasible, _subset_costs(weights), weights)


def _brute_general(instance: CoverInstance, weights) -> CoverSolution:
    F = instance.target
    boxes = [candidate_box(c.geometry) for c in instance.candidates]
    costs = _subset_costs(weights)
    order = np.argsort(costs, kind="stable")
    found = None
    for m in order.tolist():
        if found is not None and costs[m] > costs[found] * (1 + 1e-12) + 1e-300:
            break
        chosen = [boxes[i] for i in range(len(boxes)) if m >> i & 1]
        if F.uncovered_witness(chosen) is None:
            if found is None:
                found = m
    if found is None:
        return _infeasible()
    feasible = np.zeros(costs.size, dtype=bool)
    for m in order.tolist():
        if costs[m] > costs[found] * (1 + 1e-12) + 1e-300:
            break
        chosen = [boxes[i] for i in range(len(boxes)) if m >> i & 1]
        feasible[m] = F.uncovered_witness(chosen) is None
    return _pick(feasible, costs, weights)


# ---------------------------------------------------------------------------
# branch and bound


@dataclass
class _BBState:
    boxes: list
    weights: list
    budget: int
    nodes: int = 0
    best_cost: float = INF
    best: tuple = ()
    exhausted: bool = False
    cost_per_volume: float = 0.0
    target_volume: Fraction | None = None
    axes: tuple = ()
    containing: dict = field(default_factory=dict)


def _greedy(F: QuerySet, st: _BBState) -> tuple[int, ...] | None:
    chosen: list[int] = []
    while True:
        w = F.uncovered_witness([st.boxes[i] for i in chosen])
        if w is None:
            return tuple(sorted(chosen))
        opts = [i for i, b in enumerate(st.boxes) if i not in chosen and b.contains_point(w)]
        if not opts:
            return None

        def score(i):
            vol = float(st.boxes[i].volume(st.axes)) if st.axes else 0.0
            return (-(vol / st.weights[i]) if st.weights[i] > 0 else -INF, st.weights[i], i)

        chosen.append(min(opts, key=score))


def min_cover_bb(instance: CoverInstance, node_budget: int = 200_000) -> CoverSolution:
    """Branch and bound over axis-box candidates.

    Each node asks the target for an uncovered witness point and branches
    on the candidates containing it (cheapest first); a volume bound prunes
    when the target is a full box.  Identical geometries are merged first.
    """
    F = instance.target
    weights_all = instance.weights
    seen: dict = {}
    keep = []
    for i, c in enumerate(instance.candidates):
        b = candidate_box(c.geometry)
        if b in seen:
            continue
        seen[b] = i
        if F.meets_box(b):
            keep.append(i)
    boxes = [candidate_box(instance.candidates[i].geometry) for i in keep]
    weights = [weights_all[i] for i in keep]
    st = _BBState(boxes, weights, node_budget)
    hull = F.hull
    full_box = hull is not None and F.covers_region(hull)
    if full_box:
        st.axes = hull.free_axes()
        st.target_volume = hull.volume(st.axes)
        if st.axes and st.target_volume > 0:
            ratios = []
            for b, w in zip(boxes, weights):
                inter = b.intersection(hull)
                v = inter.volume(st.axes) if inter is not None else Fraction(0)
                ratios.append(w / float(v) if v > 0 else INF)
            st.cost_per_volume = min(ratios, default=0.0)
            if st.cost_per_volume == INF:
                st.cost_per_volume = 0.0
    g = _greedy(F, st)
    if g is not None:
        st.best = g
        st.best_cost = canonical_cost(weights, g)
    _bb(F, st, [], 0.0, set())
    if st.best_cost == INF:
        status = INFEASIBLE if not st.exhausted else INFEASIBLE_WITHIN_BUDGET
        return CoverSolution((), INF, status, st.nodes)
    chosen = tuple(sorted(keep[i] for i in st.best))
    return CoverSolution(
        chosen, canonical_cost(weights_all, chosen), UPPER_BOUND if st.exhausted else EXACT, st.nodes
    )


def _bound(F: QuerySet, st: _BBState, chosen: list[int], cost: float) -> float:
    if not st.cost_per_volume or st.target_volume is None:
        return cost
    from .geometry import union_volume

    hull = F.hull
    parts = [b for b in (st.boxes[i].intersection(hull) for i in chosen) if b is not None]
    covered = union_volume(parts, st.axes) if parts else Fraction(0)
    return cost + float(st.target_volume - covered) * st.cost_per_volume


def _bb(F: QuerySet, st: _BBState, chosen: list[int], cost: float, banned: set) -> None:
    if st.nodes >= st.budget:
        st.exhausted = True
        return
    st.nodes += 1
    if _bound(F, st, chosen, cost) > st.best_cost * (1 + 1e-12):
        return
    w = F.uncovered_witness([st.boxes[i] for i in chosen])
    if w is None:
        key = (canonical_cost(st.weights, chosen), len(chosen), tuple(sorted(chosen)))
        if st.best_cost == INF or key < (st.best_cost, len(st.best), st.best):
            st.best_cost, st.best = key[0], key[2]
        return
    opts = [i for i, b in enumerate(st.boxes) if i not in banned and i not in chosen and b.contains_point(w)]
    opts.sort(key=lambda i: (st.weights[i], i))
    banned = set(banned)
    for i in opts:
        c = cost + st.weights[i]
        if c > st.best_cost * (1 + 1e-12):
            break
        chosen.append(i)
        _bb(F, st, chosen, c, banned)
        chosen.pop()
        if st.exhausted:
            return
        # every cover using i was explored in the branch above
        banned.add(i)


def min_cover(instance: CoverInstance, node_budget: int = 200_000) -> CoverSolution:
    """Dispatch: the exact line DP when possible, branch and bound otherwise."""
    if not instance.candidates:
        F = instance.target
        empty = F.hull is None or not F.meets_box(F.hull)
        return CoverSolution((), 0.0, EXACT) if empty else _infeasible()
    if _line_intervals(instance) is not None:
        return min_cover_1d(instance)
    return min_cover_bb(instance, node_budget)


def scaling_inequality_holds(cost_t: float, cost_s: float, delta: float, t: float, s: float, rtol: float = 1e-12) -> bool:
    """``cost_t <= delta**(t - s) * cost_s`` for covers with diameters at most ``delta``."""
    if t < s:
        raise ValueError("need t >= s")
    if cost_s == INF:
        return True
    bound = _power(delta, t - s) * cost_s
    return cost_t <= bound * (1 + rtol) + 1e-300
