"""Box dimension and the six fractal-structure dimensions.

Every estimator returns a :class:`DimensionEstimate` carrying the convergence
sequence it was extrapolated from.  Ratio models (box, I, II) extrapolate a
ratio sequence; the Hausdorff-type models (III to VI) bisect on the exponent
``s`` using the tail of a pre-measure sequence.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .covers import Cover1D, CoverInstance, min_cover_bb, _line_intervals
from .geometry import INF, AxisBox
from .ifs import moran_solve
from .querysets import Box
from .structures import (
    DiameterProfile,
    FractalStructure,
    InfiniteFamilyError,
    NoCountableCover,
    QuerySet,
    level_profile,
    make_natural_euclidean,
)

MODELS = ("BOX", "D1", "D2", "D3", "D4", "D5", "D6")

CONVERGED = "converged"
OSCILLATING = "oscillating"
INFINITE = "infinite"
UNDEFINED = "undefined-precondition"

CONVERGENCE_SPREAD = 1e-3
# pre-measure tail thresholds of the divergence classifier
DIVERGENT_LEVEL = 1e6
VANISHING_LEVEL = 1e-6

PRECONDITION_MESSAGE = (
    "the sup of cell diameters meeting F does not tend to 0 over the generated levels; "
    "without that, the critical exponent where the pre-measures jump from infinity to 0 "
    "need not exist, so no value is reported"
)


def _fmt(x: float):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return None
    return "inf" if x == INF else x


@dataclass
class DimensionEstimate:
    """One dimension estimate.

    ``sequence`` holds ``(n or delta, statistic, ratio)`` rows: the count and
    the ratio for box, I and II; the pre-measure at the estimated exponent
    and the per-level local exponent for III to VI.
    """

    model: str
    value: float
    lower: float
    upper: float
    sequence: list = field(default_factory=list)
    status: str = CONVERGED
    notes: list = field(default_factory=list)
    method: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if (self.status == INFINITE) != (self.value == INF):
            raise ValueError("status 'infinite' must go with value inf and only with it")

    def to_record(self) -> dict:
        out = {
            "model": self.model,
            "value": _fmt(self.value),
            "lower": _fmt(self.lower),
            "upper": _fmt(self.upper),
            "status": self.status,
        }
        if self.method:
            out["method"] = self.method
        if self.notes:
            out["notes"] = list(self.notes)
        return out

    def csv_rows(self) -> list[tuple]:
        return [(x, _fmt(st) if st is not None else "", "" if r is None else _fmt(r)) for x, st, r in self.sequence]


def _infinite(model: str, sequence, notes, method="", extra=None) -> DimensionEstimate:
    return DimensionEstimate(model, INF, INF, INF, sequence, INFINITE, list(notes), method, extra or {})


def _undefined(model: str, sequence, notes, method="", extra=None) -> DimensionEstimate:
    nan = math.nan
    return DimensionEstimate(model, nan, nan, nan, sequence, UNDEFINED, list(notes), method, extra or {})


def tail_window(n_max: int) -> int:
    return max(4, n_max // 3)


# ---------------------------------------------------------------------------
# extrapolation of ratio sequences


def _ls_slope(x: Sequence[float], y: Sequence[float]) -> float | None:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0:
        return None
    xm = x - x.mean()
    return float(np.dot(xm, y - y.mean()) / np.dot(xm, xm))


def _aitken(r: Sequence[float]) -> float | None:
    """Aitken's delta-squared value when the last differences look geometric."""
    if len(r) < 5:
        return None
    d = [r[i + 1] - r[i] for i in range(len(r) - 5, len(r) - 1)]
    if any(x == 0 for x in d):
        return None
    q = [d[i + 1] / d[i] for i in range(3)]
    if not all(abs(x) <= 0.75 for x in q):
        return None
    if not (all(x > 0 for x in q) or all(x < 0 for x in q)):
        return None
    return r[-1] - d[-1] ** 2 / (d[-1] - d[-2])


def _extrapolate(ratios: Sequence[float], logstat: Sequence[float], logscale: Sequence[float], w: int):
    """``(value, method)`` from a ratio sequence and its log-log data."""
    tail = ratios[-w:]
    if max(tail) - min(tail) <= 1e-12 * max(1.0, abs(tail[-1])):
        return ratios[-1], "constant tail"
    a = _aitken(ratios)
    if a is not None:
        return a, "Aitken extrapolation"
    slope = _ls_slope(logscale[-w:], logstat[-w:])
    if slope is None:
        return ratios[-1], "last ratio"
    return slope, "log-log slope over the tail"


def _ratio_estimate(model: str, rows: list, notes: list, w: int) -> DimensionEstimate:
    """Estimate from rows ``(n, stat, ratio, log stat, scale)``."""
    valid = [r for r in rows if r[2] is not None]
    sequence = [(n, st, ra) for n, st, ra, _, _ in rows]
    if not valid:
        return _undefined(model, sequence, notes + ["no level gives a well-posed ratio"])
    ratios = [r[2] for r in valid]
    logs = [r[3] for r in valid]
    scales = [r[4] for r in valid]
    value, how = _extrapolate(ratios, logs, scales, w)
    running = [value]
    for cut in range(1, min(3, len(valid) - 1) + 1):
        running.append(_extrapolate(ratios[:-cut], logs[:-cut], scales[:-cut], w)[0])
    lower, upper = min(running), max(running)
    status = CONVERGED if upper - lower < CONVERGENCE_SPREAD else OSCILLATING
    notes = notes + [how]
    extra = {"liminf_tail": min(ratios[-w:]), "limsup_tail": max(ratios[-w:])}
    return DimensionEstimate(model, value, lower, upper, sequence, status, notes, "ratio", extra)


def _log_delta(p: DiameterProfile) -> float:
    if p.delta == INF:
        return INF
    if p.log_diams:
        return p.log_diams[-1]
    return -INF if p.delta == 0 else math.log(p.delta)


def _counts(fs: FractalStructure, F: QuerySet, n_max: int, n_min: int):
    first = max(n_min, fs.first_level, 1)
    return [(n, level_profile(fs, n, F)) for n in range(first, n_max + 1)]


def dim1(fs: FractalStructure, F: QuerySet, n_max: int = 12, n_min: int = 1, model: str = "D1") -> DimensionEstimate:
    """Fractal dimension I: ``log N_n(F) / (n log 2)``."""
    profiles = _counts(fs, F, n_max, n_min)
    rows, notes = [], []
    for n, p in profiles:
        if p.count == INF:
            rows.append((n, INF, INF, INF, n * math.log(2)))
            return _infinite(model, [(a, b, c) for a, b, c, _, _ in rows], ["N_n(F) is infinite at level %d" % n], "ratio")
        if p.count == 0:
            rows.append((n, 0, None, -INF, n * math.log(2)))
            continue
        ls = math.log(p.count)
        rows.append((n, p.count, ls / (n * math.log(2)), ls, n * math.log(2)))
    if all(r[1] == 0 for r in rows):
        seq = [(a, b, c) for a, b, c, _, _ in rows]
        return DimensionEstimate(model, 0.0, 0.0, 0.0, seq, CONVERGED, ["F meets no cell: value 0 by convention"], "ratio")
    return _ratio_estimate(model, rows, notes, tail_window(n_max))


def dim2(fs: FractalStructure, F: QuerySet, n_max: int = 12, n_min: int = 1) -> DimensionEstimate:
    """Fractal dimension II: ``log N_n(F) / -log delta(F, Gamma_n)``."""
    profiles = _counts(fs, F, n_max, n_min)
    rows, notes, deltas = [], [], []
    for n, p in profiles:
        ld = _log_delta(p)
        deltas.append((n, p.delta))
        if p.count == INF:
            rows.append((n, INF, INF, INF, -ld))
            return _infinite("D2", [(a, b, c) for a, b, c, _, _ in rows], ["N_n(F) is infinite at level %d" % n], "ratio")
        if p.count == 0:
            rows.append((n, 0, None, -INF, -ld))
            continue
        ls = math.log(p.count)
        if ld == -INF:
            if p.count > 1:
                notes.append(f"level {n}: {p.count} cells of diameter 0 meet F (degenerate)")
            rows.append((n, p.count, 0.0, ls, INF))
        elif ld >= 0:
            rows.append((n, p.count, None, ls, -ld))
        else:
            rows.append((n, p.count, ls / -ld, ls, -ld))
    if deltas and all(d == INF for _, d in deltas):
        return _undefined("D2", [(a, b, c) for a, b, c, _, _ in rows],
                          ["delta(F, Gamma_n) is infinite at every generated level"], "ratio")
    ill = [n for n, st, r, _, _ in rows if r is None and st]
    if ill:
        notes.append(f"ratio ill-posed (delta >= 1) at levels {ill}")
    if all(r[1] == 0 for r in rows):
        seq = [(a, b, c) for a, b, c, _, _ in rows]
        return DimensionEstimate("D2", 0.0, 0.0, 0.0, seq, CONVERGED, ["F meets no cell: value 0 by convention"], "ratio")
    est = _ratio_estimate("D2", rows, notes, tail_window(n_max))
    est.extra["deltas"] = deltas
    return est


@functools.lru_cache(maxsize=64)
def _mesh_structure(box: AxisBox) -> FractalStructure:
    return make_natural_euclidean(box.dim, box, f"dyadic mesh on {box}")


def mesh_box(F: QuerySet) -> AxisBox | None:
    """Integer box strictly containing the hull of ``F``: the box-counting mesh."""
    h = F.hull
    if h is None:
        return None
    return AxisBox(tuple((Fraction(math.floor(lo) - 1), Fraction(math.ceil(hi) + 1)) for lo, hi in h.bounds))


def box_dimension(F: QuerySet, n_max: int = 12, n_min: int = 1) -> DimensionEstimate:
    """Box dimension from the closed ``2^-n`` mesh cubes meeting ``F``."""
    box = mesh_box(F)
    if box is None:
        return _undefined("BOX", [], ["F is unbounded"])
    est = dim1(_mesh_structure(box), F, n_max, n_min, model="BOX")
    est.notes.append(f"mesh cubes of side 2^-n over {box}")
    return est


# ---------------------------------------------------------------------------
# critical exponents


def _classify(logs: Sequence[float]) -> int:
    """+1 for a divergent tail, -1 for a vanishing or flat one."""
    if any(x == INF for x in logs):
        return 1
    finite = [x for x in logs if x != -INF]
    if not finite:
        return -1
    if len(finite) < len(logs):
        return -1
    last3 = logs[-3:]
    if len(last3) == 3 and last3[0] < last3[1] < last3[2] and last3[2] > math.log(DIVERGENT_LEVEL):
        return 1
    if len(last3) == 3 and last3[0] > last3[1] > last3[2] and last3[2] < math.log(VANISHING_LEVEL):
        return -1
    # growth over the last two steps: closest to the asymptotic rate, and
    # blind to a period-two alternation of cell shapes
    if len(logs) >= 3:
        slope = logs[-1] - logs[-3]
    else:
        slope = _ls_slope(range(len(logs)), logs)
    if slope is None or abs(slope) <= 1e-12 * max(1.0, max(abs(x) for x in logs)):
        return -1
    return 1 if slope > 0 else -1


@dataclass
class CriticalExponent:
    value: float
    lower: float
    upper: float
    notes: list


def critical_exponent(tail: Callable[[float], list], s_hi: float, s_tol: float) -> CriticalExponent:
    """Bisection for the exponent where the tail switches from divergent to vanishing.

    ``tail(s)`` returns the logs of the pre-measure over the tail window.
    The bracket keeps a divergent left end and a vanishing right end.
    """
    if s_tol <= 0:
        raise ValueError("s_tol must be positive")
    if _classify(tail(0.0)) < 0:
        return CriticalExponent(0.0, 0.0, 0.0, ["tail vanishes or stays bounded at s = 0"])
    lo, hi = 0.0, s_hi
    while _classify(tail(hi)) > 0:
        lo, hi = hi, 2 * hi
        if hi > 1024:
            return CriticalExponent(INF, INF, INF, ["tail diverges for every tested exponent"])
    while hi - lo > s_tol:
        mid = 0.5 * (lo + hi)
        if _classify(tail(mid)) > 0:
            lo = mid
        else:
            hi = mid
    return CriticalExponent(0.5 * (lo + hi), lo, hi, [])


def _local_root(g: Callable[[float], float], s_hi: float, tol: float = 1e-10) -> float | None:
    """Root of a decreasing ``g`` on ``[0, s_hi]`` by bisection, if bracketed."""
    a, b = 0.0, s_hi
    ga, gb = g(a), g(b)
    if not (ga >= 0 >= gb) or math.isnan(ga) or math.isnan(gb):
        return None
    if ga == 0:
        return 0.0
    while b - a > tol:
        m = 0.5 * (a + b)
        if g(m) > 0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def _safe_exp(x: float) -> float:
    if x == INF:
        return INF
    if x > 700:
        return INF
    return math.exp(x)


def _deltas_vanish(deltas: Sequence[float]) -> bool:
    # nonincreasing and shrinking across the window (a stuck or infinite delta fails)
    if not deltas or not all(math.isfinite(x) for x in deltas):
        return False
    if deltas[-1] >= 1e-2 and not (len(deltas) > 1 and deltas[-1] <= deltas[0] / 2):
        return False
    return all(b <= a * (1 + 1e-12) for a, b in zip(deltas, deltas[1:]))


# ---------------------------------------------------------------------------
# fractal dimension III


def premeasure_level_sum(fs: FractalStructure, F: QuerySet, s: float, n: int) -> float:
    """``H_n^s(F) = sum diam(A)^s`` over the level-``n`` cells meeting ``F``."""
    return _safe_exp(level_profile(fs, n, F).log_sum(s))


def premeasure_inf(fs: FractalStructure, F: QuerySet, s: float, n: int, max_extra: int = 4096) -> float:
    """``inf_{m >= n} H_m^s(F)``: the whole-level form of the pre-measure.

    Levels are scanned upward until the sums settle (16 equal minima) or
    have increased for 64 consecutive levels.
    """
    best = INF
    since_best = 0
    prev = None
    rising = 0
    for m in range(n, n + max_extra + 1):
        v = premeasure_level_sum(fs, F, s, m)
        if v < best:
            best, since_best = v, 0
        else:
            since_best += 1
        rising = rising + 1 if (prev is not None and v > prev) else 0
        prev = v
        if since_best >= 16 and v == best:
            break
        if rising >= 64:
            break
    return best


@dataclass
class PreMeasureCurve:
    exponent_grid: list
    levels: list
    values: list  # values[i][j] = H_{levels[j]}^{s_i}
    critical_exponent: float


def premeasure_curve(fs: FractalStructure, F: QuerySet, levels: Sequence[int], points: int = 41,
                     s_max: float | None = None) -> PreMeasureCurve:
    d = fs.space_dimension
    s_max = d + 1 if s_max is None else s_max
    grid = [s_max * i / (points - 1) for i in range(points)]
    values = [[premeasure_level_sum(fs, F, s, n) for n in levels] for s in grid]
    crit = critical_exponent(lambda s: [level_profile(fs, n, F).log_sum(s) for n in levels], d + 1, 1e-3)
    return PreMeasureCurve(grid, list(levels), values, crit.value)


def _moran_path(fs: FractalStructure, F: QuerySet) -> float | None:
    ifs = getattr(fs, "ifs", None)
    if ifs is None or not ifs.is_strict_self_similar:
        return None
    if not F.contains_attractor(ifs):
        return None
    # F must also lie in the attractor: test on the hull of F
    h = F.hull
    if h is None or not ifs.hull.contains(h):
        return None
    if ifs.kind == "cantor":
        from .querysets import AttractorSet

        if F != AttractorSet(ifs):
            return None
    return moran_solve(ifs.factors, tol=1e-13)


def dim3(fs: FractalStructure, F: QuerySet, n_max: int = 12, s_tol: float = 1e-3,
         method: str = "auto") -> DimensionEstimate:
    """Fractal dimension III as the critical exponent of the level sums.

    ``method`` is ``"auto"`` (similarity equation when the structure is the
    natural one of a strictly self-similar system and ``F`` is its
    attractor), ``"similarity"`` or ``"numeric"``.
    """
    if method not in ("auto", "similarity", "numeric"):
        raise ValueError(f"unknown method {method!r}")
    w = tail_window(n_max)
    first = max(fs.first_level, 1)
    levels = list(range(max(first, n_max - w + 1), n_max + 1))
    profiles = {n: level_profile(fs, n, F) for n in range(first, n_max + 1)}
    if any(p.count == INF for p in profiles.values()):
        seq = [(n, INF if p.count == INF else None, None) for n, p in profiles.items()]
        return _infinite("D3", seq, ["infinitely many cells of positive diameter meet F"], "level-sum")
    deltas = [profiles[n].delta for n in levels]
    if not _deltas_vanish(deltas):
        return _undefined("D3", [(n, profiles[n].delta, None) for n in profiles], [PRECONDITION_MESSAGE],
                          "level-sum", {"deltas": deltas})
    d = fs.space_dimension

    def tail(s):
        return [profiles[n].log_sum(s) for n in levels]

    notes = []
    sim = _moran_path(fs, F) if method != "numeric" else None
    if method == "similarity" and sim is None:
        raise ValueError("the similarity path needs a strictly self-similar system and F equal to its attractor")
    if sim is not None:
        value = lower = upper = sim
        how = "similarity-equation"
        notes.append("root of sum c_i^s = 1")
    else:
        crit = critical_exponent(tail, d + 1, s_tol)
        value, lower, upper = crit.value, crit.lower, crit.upper
        notes += crit.notes
        how = "level-sum"
        if value == INF:
            return _infinite("D3", [], notes, how)
    s_hi = max(d + 1.0, 2 * value + 1)
    sequence = []
    for n in range(first, n_max + 1):
        stat = _safe_exp(profiles[n].log_sum(value))
        root = None
        if n - 1 in profiles:
            pa, pb = profiles[n], profiles[n - 1]
            root = _local_root(lambda s: pa.log_sum(s) - pb.log_sum(s), s_hi)
        sequence.append((n, stat, root))
    return DimensionEstimate("D3", value, lower, upper, sequence, CONVERGED, notes, how)


# ---------------------------------------------------------------------------
# fractal dimensions IV, V and VI (cover-based)


def cover_pool(fs: FractalStructure, F: QuerySet, levels: Sequence[int], max_diameter: float = INF) -> list:
    """Cells from the given levels usable to cover ``F``."""
    out = []
    for m in levels:
        for c in fs.level(m).cover_pool(F):
            if c.diameter <= max_diameter * (1 + 1e-12):
                out.append(c)
    return out


class _CoverCosts:
    """Minimum cover cost as a function of ``s`` for one fixed pool."""

    def __init__(self, F: QuerySet, pool: list, node_budget: int = 20_000):
        self.instance = CoverInstance(F, tuple(pool), 0.0)
        self.line = _line_intervals(self.instance) is not None
        self.dp = Cover1D(self.instance) if self.line else None
        self.node_budget = node_budget
        self.exact = True
        self._memo: dict = {}

    def solve(self, s: float):
        if s not in self._memo:
            if self.dp is not None:
                sol = self.dp.solve(s)
            else:
                sol = min_cover_bb(self.instance.with_exponent(s), self.node_budget)
                if sol.optimality != "exact":
                    self.exact = False
            self._memo[s] = sol
        return self._memo[s]

    def log_cost(self, s: float) -> float:
        c = self.solve(s).cost
        return INF if c == INF else (-INF if c == 0 else math.log(c))


def _cover_estimate(model: str, index: list, pools: list, F: QuerySet, d: int, s_tol: float,
                    notes: list, method: str) -> DimensionEstimate:
    costs = [_CoverCosts(F, pool) for pool in pools]
    for x, cc in zip(index, costs):
        if cc.solve(0.0).cost == INF:
            seq = [(x, INF, None)]
            return _infinite(model, seq, notes + [f"no cover of F in the candidate pool at {x} (inf of empty set)"],
                             method, {"witness": x})

    def tail(s):
        return [cc.log_cost(s) for cc in costs]

    crit = critical_exponent(tail, d + 1, s_tol)
    notes = notes + crit.notes
    if crit.value == INF:
        return _infinite(model, [], notes, method)
    s_hi = max(d + 1.0, 2 * crit.value + 1)
    sequence = []
    for i, (x, cc) in enumerate(zip(index, costs)):
        root = None
        if i:
            prev = costs[i - 1]
            root = _local_root(lambda s: cc.log_cost(s) - prev.log_cost(s), s_hi, tol=1e-5)
        sequence.append((x, _safe_exp(cc.log_cost(crit.value)), root))
    if not all(cc.exact for cc in costs):
        notes.append("some covers are branch-and-bound upper bounds")
    return DimensionEstimate(model, crit.value, crit.lower, crit.upper, sequence, CONVERGED, notes, method)


def _closed_target(F: QuerySet, notes: list) -> QuerySet:
    if "compact" in F.traits:
        return F
    G = F.closure()
    notes.append("finite covers by closed cells of F and of its closure coincide; the closure is used")
    return G


def dim4(fs: FractalStructure, F: QuerySet, n_max: int = 8, depth_cap: int = 4, s_tol: float = 1e-3) -> DimensionEstimate:
    """Fractal dimension IV from finite minimum covers by cells of levels ``n..n+depth_cap``."""
    return _deep_cover_model("D4", fs, F, n_max, depth_cap, s_tol)


def dim5(fs: FractalStructure, F: QuerySet, n_max: int = 8, depth_cap: int = 4, s_tol: float = 1e-3) -> DimensionEstimate:
    """Fractal dimension V; numeric only for compact ``F`` (finite subcovers suffice)."""
    if "compact" not in F.traits:
        return _undefined("D5", [], ["countable covers of a non-compact set cannot be searched finitely; "
                                     "only the analytic value applies"], "analytic-only", {"analytic_only": True})
    est = _deep_cover_model("D5", fs, F, n_max, depth_cap, s_tol)
    est.notes.append("F is compact, so the finite-cover computation of dimension IV applies")
    return est


def _deep_cover_model(model, fs, F, n_max, depth_cap, s_tol) -> DimensionEstimate:
    est = _deep_cover_core(fs, F, n_max, depth_cap, s_tol)
    # the core result is shared between IV and V, so hand out copies
    return dataclasses.replace(est, model=model, sequence=list(est.sequence), notes=list(est.notes),
                               extra=dict(est.extra))


@functools.lru_cache(maxsize=256)
def _deep_cover_core(fs, F, n_max, depth_cap, s_tol) -> DimensionEstimate:
    model = "D4"
    w = tail_window(n_max)
    first = max(fs.first_level, 1)
    levels = list(range(max(first, n_max - w + 1), n_max + 1))
    notes: list = []
    target = _closed_target(F, notes)
    deltas = [level_profile(fs, n, target).delta for n in levels]
    if any(level_profile(fs, n, target).count == INF for n in levels):
        notes.append("infinitely many cells meet F; covers use the finitely many cells the families list")
    if not _deltas_vanish(deltas):
        return _undefined(model, [(n, dl, None) for n, dl in zip(levels, deltas)], [PRECONDITION_MESSAGE],
                          "cover", {"deltas": deltas})
    try:
        pools = [cover_pool(fs, target, range(n, n + depth_cap + 1)) for n in levels]
    except InfiniteFamilyError as exc:
        return _undefined(model, [], [f"candidate pool is not enumerable: {exc}"], "cover")
    notes.append(f"covers drawn from levels n..n+{depth_cap}")
    return _cover_estimate(model, levels, pools, target, fs.space_dimension, s_tol, notes, "cover")


def delta_schedule(fs: FractalStructure, F: QuerySet, count: int) -> list[float]:
    """``delta(F, Gamma_j)`` when it tends to 0, else ``2^-j``, for ``j = 1..count``."""
    first = max(fs.first_level, 1)
    ds = [level_profile(fs, j, F).delta for j in range(first, first + count)]
    if _deltas_vanish(ds) and all(0 < x < INF for x in ds):
        return ds
    return [2.0**-j for j in range(1, count + 1)]


def dim6(fs: FractalStructure, F: QuerySet, n_max: int = 8, depth_cap: int = 4, s_tol: float = 1e-3,
         schedule: Sequence[float] | None = None) -> DimensionEstimate:
    """Fractal dimension VI from covers by cells of diameter at most ``delta``.

    For each ``delta`` the pool holds the cells of levels up to the first
    level whose cells meeting ``F`` have diameter at most ``delta``, plus
    ``depth_cap`` more levels.
    """
    notes: list = []
    if "compact" not in F.traits:
        return _undefined("D6", [], ["countable covers of a non-compact set cannot be searched finitely; "
                                     "only the analytic value applies"], "analytic-only", {"analytic_only": True})
    sched = list(schedule) if schedule is not None else delta_schedule(fs, F, n_max)
    w = tail_window(len(sched))
    first = max(fs.first_level, 1)
    horizon = first + len(sched) + depth_cap + 4
    level_delta = {m: level_profile(fs, m, F).delta for m in range(first, horizon + 1)}
    index, pools = [], []
    for dl in sched[-w:]:
        bound = next((m for m in range(first, horizon + 1) if level_delta[m] <= dl * (1 + 1e-12)), None)
        # no level is fine enough: search the levels the schedule itself spans
        top = (bound if bound is not None else first + len(sched) - 1) + depth_cap
        try:
            pool = cover_pool(fs, F, range(first, top + 1), max_diameter=dl)
        except NoCountableCover as exc:
            return _infinite("D6", [(dl, INF, None)], [f"no countable cover by cells exists: {exc}"], "cover",
                             {"witness": dl})
        except InfiniteFamilyError as exc:
            return _undefined("D6", [], [f"candidate pool is not enumerable: {exc}"], "cover")
        index.append(dl)
        pools.append(pool)
    notes.append(f"cells of diameter <= delta from levels up to the first fine-enough level + {depth_cap}")
    return _cover_estimate("D6", index, pools, F, fs.space_dimension, s_tol, notes, "cover")


def cover_premeasure(fs: FractalStructure, F: QuerySet, s: float, n: int, depth_cap: int):
    """Minimum cover cost from levels ``n..n+depth_cap`` and its solution."""
    pool = cover_pool(fs, F, range(n, n + depth_cap + 1))
    cc = _CoverCosts(F, pool)
    return cc.solve(s).cost, cc.solve(s), cc.instance.with_exponent(s)


def cover_breakpoint(fs: FractalStructure, F: QuerySet, n: int, depth_cap: int, s_max: float = 4.0,
                     tol: float = 1e-9) -> list[float]:
    """Exponents where the optimal cover from levels ``n..n+depth_cap`` changes."""
    pool = cover_pool(fs, F, range(n, n + depth_cap + 1))
    cc = _CoverCosts(F, pool)
    out = []
    grid = [s_max * i / 64 for i in range(65)]
    for a, b in zip(grid, grid[1:]):
        if cc.solve(a).chosen != cc.solve(b).chosen:
            ca = cc.solve(a).chosen
            while b - a > tol:
                m = 0.5 * (a + b)
                if cc.solve(m).chosen == ca:
                    a = m
                else:
                    b = m
            out.append(0.5 * (a + b))
    return out


# ---------------------------------------------------------------------------
# curves


def curve_dimension(curve, n_max: int = 10, s_tol: float = 1e-3, check_depth: int = 4) -> DimensionEstimate:
    """Dimension III of the image of a curve on the structure it induces."""
    rep = curve.check(min(check_depth, n_max))
    if not rep.ok:
        raise ValueError("induced levels are not a fractal structure: " + "; ".join(rep.violations[:5]))
    fs = curve.induced_structure()
    est = dim3(fs, curve.image, n_max, s_tol, method="numeric")
    if all(fs.level(n).profile(curve.image).delta == 0 for n in range(1, min(n_max, 4) + 1)):
        est.notes.append("degenerate curve: every image cell has diameter 0")
    return est


ESTIMATORS = {
    "D1": dim1,
    "D2": dim2,
    "D3": dim3,
    "D4": dim4,
    "D5": dim5,
    "D6": dim6,
}
