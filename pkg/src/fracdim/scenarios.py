"""Registry of spaces, structures and sets with known dimension values.

A :class:`Scenario` bundles one fractal structure, a few named query sets
and a list of :class:`Expectation` entries.  Running a scenario computes
every expectation that has a numeric path and compares it with the known
value; analytic-only entries are reported as such, never silently skipped.
"""

from __future__ import annotations

import json
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import jsonschema

from .dimensions import (
    CONVERGED,
    ESTIMATORS,
    INFINITE,
    MODELS,
    OSCILLATING,
    UNDEFINED,
    DimensionEstimate,
    _fmt,
    box_dimension,
    cover_breakpoint,
    curve_dimension,
    premeasure_inf,
    premeasure_level_sum,
)
from .geometry import INF, AxisBox
from .ifs import ContractionMap, IFSystem, make_natural_ifs_structure, moran_solve, verify_osc_witness
from .querysets import (
    AttractorSet,
    Box,
    CombOpenIntervals,
    FinitePoints,
    HarmonicPoints,
    RationalPoints,
    UnionSet,
)
from .spaces import (
    LevelwiseCurve,
    affine_rectangles_ifs,
    cantor_family_ifs,
    cantor_ifs,
    constant_curve,
    golden_ifs,
    hilbert5_curve,
    identity_curve,
    make_cantor_union,
    make_comb_space,
    make_horizontal_lines,
    make_stuck_half,
    make_unbounded_level,
    overlap_triple_ifs,
    rotated_squares_ifs,
    three_map_unit_ifs,
)
from .structures import (
    EVERYTHING,
    Cell,
    FractalStructure,
    Level,
    QuerySet,
    check_refinement,
    delta,
    make_natural_euclidean,
)

SCHEMA_VERSION = "1.0"
AUDIT_MODELS = MODELS + ("H",)
PROPERTIES = ("monotonicity", "finite-stability", "countable-stability", "zero-on-countable", "closure-invariance")
#: cover models use at most this many levels unless a scenario pins a depth
COVER_DEPTH = 7
CANTOR_FAMILY = (Fraction(1, 3), Fraction(2, 5), Fraction(9, 20), Fraction(49, 100), Fraction(499, 1000))

UNDEFINED_VALUE = math.nan  # expected value meaning "the precondition must be rejected"

PASS, FAIL, ANALYTIC = "pass", "fail", "analytic-only"


def _lg(a: float, b: float) -> float:
    return math.log(a) / math.log(b)


LOG2_3 = _lg(2, 3)
LOG3_2 = _lg(3, 2)
LOG5_2 = _lg(5, 2)


# ---------------------------------------------------------------------------
# data model


@dataclass(frozen=True)
class RunConfig:
    depth: int = 12
    depth_cap: int = 4
    s_tol: float = 1e-3
    models: frozenset | None = None  # None keeps every model and statistic

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if self.depth_cap < 0:
            raise ValueError("depth_cap must be nonnegative")
        if not self.s_tol > 0:
            raise ValueError("s_tol must be positive")

    def wants(self, model: str) -> bool:
        return self.models is None or model in self.models


@dataclass(frozen=True)
class Expectation:
    """A known value of ``model`` on the query set named ``query``.

    ``model`` is one of :data:`AUDIT_MODELS` or, for entries with a
    ``compute`` callback, a statistic tag.  ``value`` may be ``inf`` or
    :data:`UNDEFINED_VALUE` (the estimator must reject its precondition).
    ``n_max`` and ``depth_cap`` pin the depth when the value is only
    reached at that depth; otherwise the run configuration decides.
    """

    query: str
    model: str
    value: float
    citation: str
    tol: float = 1e-2
    analytic_only: bool = False
    n_max: int | None = None
    depth_cap: int | None = None
    per_level: bool = False
    compute: Callable[["Scenario", RunConfig], float] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.citation:
            raise ValueError("every expectation needs a citation")
        if self.compute is None and self.model not in AUDIT_MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.model == "H" and not self.analytic_only:
            raise ValueError("the Hausdorff dimension has no numeric path here; mark it analytic_only")


@dataclass
class Scenario:
    name: str
    description: str
    structure: FractalStructure | None
    queries: dict
    expected: tuple
    notes: str = ""
    curve: LevelwiseCurve | None = None
    max_level: int | None = None  # for structures given by finitely many explicit levels

    def __post_init__(self):
        for e in self.expected:
            if e.query not in self.queries:
                raise ValueError(f"{self.name}: expectation refers to unknown query {e.query!r}")
        self._cache: dict = {}
        self._lock = threading.Lock()

    def find(self, query: str, model: str) -> Expectation:
        for e in self.expected:
            if e.query == query and e.model == model:
                return e
        raise KeyError(f"{self.name} has no {model} expectation for {query!r}")


@dataclass
class Comparison:
    scenario: str
    query: str
    model: str
    expected: float
    tol: float
    citation: str
    value: float
    lower: float
    upper: float
    status: str
    verdict: str
    detail: str = ""
    estimate: DimensionEstimate | None = None

    @property
    def passed(self) -> bool:
        return self.verdict != FAIL

    def to_record(self) -> dict:
        return {
            "scenario": self.scenario,
            "query": self.query,
            "model": self.model,
            "value": _fmt(self.value),
            "lower": _fmt(self.lower),
            "upper": _fmt(self.upper),
            "status": self.status,
            "citation": self.citation,
            "expected": "undefined" if math.isnan(self.expected) else _fmt(self.expected),
            "tolerance": self.tol,
            "verdict": self.verdict,
        }


@dataclass
class ScenarioReport:
    scenario: str
    comparisons: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.comparisons)


# ---------------------------------------------------------------------------
# evaluation


def _depth(e: Expectation, scenario: Scenario, config: RunConfig, cover: bool) -> int:
    n = e.n_max if e.n_max is not None else (min(config.depth, COVER_DEPTH) if cover else config.depth)
    if scenario.max_level is not None:
        n = min(n, scenario.max_level)
    return n


def estimate_for(scenario: Scenario, e: Expectation, config: RunConfig) -> DimensionEstimate:
    """Run the estimator behind ``e`` (cached per scenario and parameters)."""
    cover = e.model in ("D4", "D5", "D6")
    n = _depth(e, scenario, config, cover)
    cap = e.depth_cap if e.depth_cap is not None else config.depth_cap
    key = (e.query, e.model, n, cap if cover else None, config.s_tol)
    with scenario._lock:
        hit = scenario._cache.get(key)
    if hit is not None:
        return hit
    F = scenario.queries[e.query]
    if scenario.curve is not None and e.model == "D3" and e.query == "image":
        est = curve_dimension(scenario.curve, n, config.s_tol)
    elif e.model == "BOX":
        est = box_dimension(F, n)
    elif e.model in ("D1", "D2"):
        est = ESTIMATORS[e.model](scenario.structure, F, n)
    elif e.model == "D3":
        est = ESTIMATORS["D3"](scenario.structure, F, n, config.s_tol)
    else:
        est = ESTIMATORS[e.model](scenario.structure, F, n, cap, config.s_tol)
    with scenario._lock:
        scenario._cache.setdefault(key, est)
    return est


def _judge(e: Expectation, value: float, status: str, est: DimensionEstimate | None) -> tuple[str, str]:
    if math.isnan(e.value):
        ok = status == UNDEFINED
        return (PASS if ok else FAIL), ("precondition rejected" if ok else "expected the precondition to be rejected")
    if e.value == INF:
        ok = value == INF
        return (PASS if ok else FAIL), ("" if ok else "expected inf")
    if value is None or math.isnan(value) or value == INF:
        return FAIL, f"no finite value ({status})"
    err = abs(value - e.value)
    if err > e.tol:
        return FAIL, f"|error| = {err:.3g} > {e.tol:g}"
    if e.per_level and est is not None:
        ratios = [r for _, _, r in est.sequence if r is not None]
        worst = max((abs(r - e.value) for r in ratios), default=0.0)
        if worst > e.tol:
            return FAIL, f"some level ratio is off by {worst:.3g}"
        return PASS, f"every level ratio within {e.tol:g}"
    return PASS, f"|error| = {err:.3g}"


def evaluate(scenario: Scenario, e: Expectation, config: RunConfig) -> Comparison:
    """Compare one expectation with its computed value."""
    if e.analytic_only:
        return Comparison(scenario.name, e.query, e.model, e.value, e.tol, e.citation, e.value, e.value, e.value,
                          ANALYTIC, ANALYTIC, "known analytically; no numeric path is attempted")
    if e.compute is not None:
        v = float(e.compute(scenario, config))
        status = INFINITE if v == INF else CONVERGED
        verdict, detail = _judge(e, v, status, None)
        return Comparison(scenario.name, e.query, e.model, e.value, e.tol, e.citation, v, v, v, status,
                          verdict, detail)
    est = estimate_for(scenario, e, config)
    verdict, detail = _judge(e, est.value, est.status, est)
    return Comparison(scenario.name, e.query, e.model, e.value, e.tol, e.citation, est.value, est.lower,
                      est.upper, est.status, verdict, detail, est)


def run_scenario(name: str | Scenario, config: RunConfig = RunConfig()) -> ScenarioReport:
    """Evaluate every expectation of a scenario selected by ``config``."""
    sc = name if isinstance(name, Scenario) else get_scenario(name)
    rows = [evaluate(sc, e, config) for e in sc.expected if config.wants(e.model)]
    return ScenarioReport(sc.name, rows)


def run_all(scenarios: Sequence[Scenario] | None = None, config: RunConfig = RunConfig(),
            workers: int = 1) -> list[ScenarioReport]:
    """Run scenarios, optionally on a thread pool; reports keep registry order."""
    scenarios = list(registry() if scenarios is None else scenarios)
    if workers <= 1:
        return [run_scenario(s, config) for s in scenarios]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: run_scenario(s, config), scenarios))


# ---------------------------------------------------------------------------
# statistics that are not dimension values


def _stuck_closed_form(s: float, n: int) -> float:
    """``inf_{m >= n} 2/2^s + (2^m - 1)/2^(ms)`` in closed form."""
    if s <= 1:
        # the second term is nondecreasing in m, so the infimum sits at m = n
        return 2 * 2.0**-s + (2**n - 1) * 2.0 ** (-n * s)
    return 2.0 ** (1 - s)  # decreasing in m; the limit is not attained


STUCK_GRID = (0.25, 0.5, 1.0, 1.5, 2.0)


def stuck_premeasure_error(sc: Scenario, config: RunConfig, levels=range(1, 7)) -> float:
    """Largest relative error of the computed whole-level pre-measure."""
    X = sc.queries["X"]
    worst = 0.0
    for s in STUCK_GRID:
        for n in levels:
            exact = _stuck_closed_form(s, n)
            worst = max(worst, abs(premeasure_inf(sc.structure, X, s, n) - exact) / exact)
    return worst


def stuck_breakpoint(sc: Scenario, config: RunConfig) -> float:
    """Exponent where the cheapest finite cover switches from two halves to a fine right half."""
    pts = cover_breakpoint(sc.structure, sc.queries["X"], 3, config.depth_cap)
    if len(pts) != 1:
        return math.nan
    return pts[0]


def hilbert_closed_form(s: float, n: int) -> float:
    return math.sqrt(2) ** s * (5 / 2**s) ** n


HILBERT_GRID = (1.0, 2.0, LOG5_2, 3.0)


def hilbert_premeasure_error(sc: Scenario, config: RunConfig, levels=range(1, 11)) -> float:
    fs = sc.curve.induced_structure()
    worst = 0.0
    for s in HILBERT_GRID:
        for n in levels:
            exact = hilbert_closed_form(s, n)
            worst = max(worst, abs(premeasure_level_sum(fs, sc.curve.image, s, n) - exact) / exact)
    return worst


def full_level_delta(sc: Scenario, config: RunConfig) -> float:
    """``min_n sup{diam A : A in Gamma_n}`` over levels 1..6 (inf when every level has an unbounded cell)."""
    return min(delta(sc.structure, n, EVERYTHING) for n in range(1, 7))


def first_finite_delta(sc: Scenario, config: RunConfig) -> float:
    """First level from which ``delta(F, Gamma_n)`` stays finite (checked up to level 8)."""
    F = sc.queries["F"]
    ds = [delta(sc.structure, n, F) for n in range(1, 9)]
    for i in range(len(ds)):
        if all(math.isfinite(x) for x in ds[i:]):
            return float(i + 1)
    return INF


def moran_of(ifs: IFSystem) -> Callable:
    return lambda sc, config: moran_solve(ifs.factors)


def osc_of(ifs: IFSystem) -> Callable:
    """1 when the declared open set passes, 0 when it fails."""
    return lambda sc, config: 1.0 if verify_osc_witness(ifs).ok else 0.0


# ---------------------------------------------------------------------------
# the registry


def _unit() -> AxisBox:
    return AxisBox.of((0, 1))


def _ifs_scenario(name, description, ifs, expected, notes="", extra_queries=None) -> Scenario:
    queries = {"K": AttractorSet(ifs)}
    queries.update(extra_queries or {})
    return Scenario(name, description, make_natural_ifs_structure(ifs), queries, tuple(expected), notes)


def _unit_interval() -> Scenario:
    E = [Expectation("I", m, 1.0, "Cells of level n are 2^n intervals of length 2^-n; every model gives 1",
                     1e-2) for m in MODELS]
    E.append(Expectation("I", "H", 1.0, "A nondegenerate interval has Hausdorff dimension 1", 0, True))
    return Scenario("unit_interval", "Dyadic intervals on [0,1], F = [0,1]",
                    make_natural_euclidean(1, _unit()), {"I": Box(_unit())}, tuple(E))


def _unit_square() -> Scenario:
    sq = AxisBox.of((0, 1), (0, 1))
    cite = "Level n has 4^n squares of diameter sqrt(2) 2^-n"
    E = (Expectation("S", "D1", 2.0, cite, 1e-6, per_level=True),
         Expectation("S", "D2", 2.0, cite, 1e-2, n_max=10),
         Expectation("S", "D3", 2.0, cite, 1e-2, n_max=10),
         Expectation("S", "BOX", 2.0, "4^n mesh squares of side 2^-n meet the unit square", 1e-2, n_max=10))
    return Scenario("unit_square", "Dyadic squares on [0,1]^2, F = [0,1]^2",
                    make_natural_euclidean(2, sq), {"S": Box(sq)}, E)


def _cantor_euclidean() -> Scenario:
    K = AttractorSet(cantor_ifs())
    cite = "The middle-third Cantor set has box dimension log 2/log 3"
    E = (Expectation("K", "BOX", LOG2_3, cite, 1e-2, n_max=14),
         Expectation("K", "D1", LOG2_3, "On dyadic cells dimension I is the box dimension: log 2/log 3", 1e-2,
                     n_max=14),
         Expectation("K", "D3", LOG2_3, "On dyadic cells dimension III is the box dimension: log 2/log 3",
                     1e-2, n_max=20),
         Expectation("K", "H", LOG2_3, "Two similarities of ratio 1/3 with the open set condition: "
                     "2 (1/3)^s = 1", 0, True),
         Expectation("I", "BOX", 1.0, "[0,1] has box dimension 1", 1e-2))
    return Scenario("cantor_euclidean", "Middle-third Cantor set under dyadic cells",
                    make_natural_euclidean(1, _unit()), {"K": K, "I": Box(_unit())}, E,
                    "dyadic counts of a triadic set oscillate log-periodically; D3 is read at depth 20")


def _cantor_ifs() -> Scenario:
    ifs = cantor_ifs()
    E = (Expectation("K", "D1", 1.0, "Level n has 2^n cells: log 2^n/(n log 2) = 1", 1e-12, per_level=True),
         Expectation("K", "D2", LOG2_3, "2^n cells of diameter 3^-n: log 2^n/log 3^n = log 2/log 3", 1e-12,
                     per_level=True),
         Expectation("K", "D3", LOG2_3, "Strict self-similarity: 2 (1/3)^s = 1", 1e-10),
         Expectation("K", "BOX", LOG2_3, "Box dimension log 2/log 3", 1e-2, n_max=14),
         Expectation("K", "H", LOG2_3, "Open set condition with V = (0,1): 2 (1/3)^s = 1", 0, True))
    return _ifs_scenario("cantor_ifs", "Middle-third Cantor set with its words as cells", ifs, E)


def _rationals_unit() -> Scenario:
    Q = RationalPoints(_unit())
    one = "Every dyadic cell meets Q, so N_n = 2^n and the closure is [0,1]"
    zero = "Countable sets have dimension 0 under countably stable models"
    pt = "A single point meets at most two cells per level"
    E = [Expectation("Q", "BOX", 1.0, one, 1e-2),
         Expectation("Q", "D1", 1.0, one, 1e-6, per_level=True),
         Expectation("Q", "D2", 1.0, one, 1e-6, per_level=True),
         Expectation("Q", "D3", 1.0, one, 1e-2),
         Expectation("Q", "D4", 1.0, "Finite covers of Q cover its closure [0,1], of Hausdorff dimension 1", 1e-2),
         Expectation("Q", "D5", 0.0, zero, 0, True),
         Expectation("Q", "D6", 0.0, zero, 0, True),
         Expectation("Q", "H", 0.0, zero, 0, True),
         Expectation("closure", "BOX", 1.0, "[0,1] has box dimension 1", 1e-2),
         Expectation("closure", "D4", 1.0, "Dimension IV of [0,1] on dyadic cells is 1", 1e-2),
         Expectation("closure", "D5", 1.0, "Dimension V of [0,1] on dyadic cells is 1", 1e-2),
         Expectation("closure", "D6", 1.0, "Dimension VI of [0,1] on dyadic cells is 1", 1e-2),
         Expectation("closure", "H", 1.0, "[0,1] has Hausdorff dimension 1", 0, True)]
    for m in MODELS:
        E.append(Expectation("point", m, 0.0, pt, 1e-2))
    E.append(Expectation("point", "H", 0.0, "A point has Hausdorff dimension 0", 0, True))
    return Scenario("rationals_unit", "Rationals in [0,1] under dyadic cells",
                    make_natural_euclidean(1, _unit()),
                    {"Q": Q, "closure": Q.closure(), "point": FinitePoints(((Fraction(1, 3),),))}, tuple(E),
                    "Q is the union of its points; every point behaves like 1/3, so sup over the parts is "
                    "the value on 'point'")


def _cantor_union() -> Scenario:
    fs = make_cantor_union()
    C1 = AttractorSet(cantor_ifs())
    C2 = Box(AxisBox.of((2, 3)))
    U = UnionSet((C1, C2))
    E = (Expectation("C1", "D2", LOG2_3, "2^n Cantor cells of diameter 3^-n", 1e-6, n_max=15),
         Expectation("C2", "D2", 1.0, "4^n cells of diameter 4^-n on [2,3]", 1e-6, n_max=15),
         Expectation("union", "D2", _lg(4, 3), "4^n + 2^n cells of largest diameter 3^-n: "
                     "the ratio tends to log 4/log 3 > 1", 1e-6, n_max=15),
         Expectation("C1", "D1", 1.0, "2^n cells: log 2^n/(n log 2)", 1e-6),
         Expectation("C2", "D1", 2.0, "4^n cells: log 4^n/(n log 2)", 1e-6),
         Expectation("union", "D1", 2.0, "2^n + 4^n cells: the ratio tends to 2", 1e-2),
         Expectation("C1", "D3", LOG2_3, "Level sums 2^n 3^(-ns) switch at log 2/log 3", 1e-2),
         Expectation("C2", "D3", 1.0, "Level sums 4^n 4^(-ns) switch at 1", 1e-2),
         Expectation("union", "D3", 1.0, "The sum of both level sums switches at max(log 2/log 3, 1)", 1e-2))
    return Scenario("cantor_union", "Cantor words on [0,1] beside 4^-n cells on [2,3]", fs,
                    {"C1": C1, "C2": C2, "union": U}, E)


def _dyadic_cantor_union() -> Scenario:
    ifs = cantor_family_ifs(Fraction(1, 4))
    E_ = AttractorSet(ifs)
    F = Box(AxisBox.of((2, 4)))
    U = UnionSet((E_, F))
    half = "Two maps of ratio 1/4 with the open set condition: 2 (1/4)^s = 1 gives 1/2"
    one = "[2,4] is an interval: dimension 1"
    mx = "E is a compact set of dimension 1/2, F an interval: the union has dimension max(1/2, 1) = 1"
    exp = []
    for m in ("BOX", "D1", "D3", "D4", "D5", "D6"):
        cap = 3 if m in ("D4", "D5", "D6") else None
        exp += [Expectation("E", m, 0.5, half, 3e-2, depth_cap=cap),
                Expectation("F", m, 1.0, one, 2e-2, depth_cap=cap),
                Expectation("U", m, 1.0, mx, 2e-2, depth_cap=cap)]
    exp += [Expectation("E", "H", 0.5, half, 0, True), Expectation("F", "H", 1.0, one, 0, True),
            Expectation("U", "H", 1.0, mx, 0, True)]
    return Scenario("dyadic_cantor_union", "Cantor set of ratio 1/4 beside [2,4] under dyadic cells on [0,4]",
                    make_natural_euclidean(1, AxisBox.of((0, 4))), {"E": E_, "F": F, "U": U}, tuple(exp),
                    "cover models use three extra levels per pool here to stay fast")


def _comb_space() -> Scenario:
    F = CombOpenIntervals()
    E = (Expectation("F", "D1", 1.0, "N_n(F) = 2^n: the open intervals avoid the teeth", 1e-6, n_max=10),
         Expectation("closure", "D1", INF, "The closure [0,1] x {0} meets infinitely many teeth cells", 0, n_max=10),
         Expectation("F", "D2", 1.0, "2^n cells of diameter 2^-n", 1e-6, n_max=10),
         Expectation("closure", "D2", INF, "Infinitely many cells meet the closure", 0, n_max=10),
         Expectation("F", "D3", 1.0, "Level sums 2^n 2^(-ns) switch at 1", 1e-2, n_max=10),
         Expectation("closure", "D3", INF, "Infinitely many cells of diameter 2^-n: every level sum is infinite",
                     0, n_max=10))
    return Scenario("comb_space", "[0,1] x {0} with vertical teeth over 2^-m", make_comb_space(),
                    {"F": F, "closure": F.closure()}, E)


def _unbounded_level() -> Scenario:
    I = Box(_unit())
    E = (Expectation("F", "delta_full", INF, "Each level holds the unbounded cell R minus (-n, n)", 0,
                     compute=full_level_delta),
         Expectation("F", "first_finite_delta", 2.0, "From level 2 on the unbounded cell misses [0,1]", 0,
                     compute=first_finite_delta),
         Expectation("F", "D2", 1.0, "Past the first level 2^n + 2 cells of diameter 2^-n meet [0,1]", 1e-2))
    return Scenario("unbounded_level", "Dyadic intervals in [-n,n] plus the unbounded complement",
                    make_unbounded_level(1), {"F": I}, E)


def _stuck_half() -> Scenario:
    X = Box(_unit())
    E = (Expectation("X", "premeasure_error", 0.0,
                     "inf over m >= n of 2/2^s + (2^m - 1)/2^(ms), on s in {1/4, 1/2, 1, 3/2, 2}", 1e-12,
                     compute=stuck_premeasure_error),
         Expectation("X", "D3", UNDEFINED_VALUE, "delta(X, Gamma_n) = 1/2 for every n", 0),
         Expectation("X", "D4", UNDEFINED_VALUE, "delta(X, Gamma_n) = 1/2 for every n", 0),
         Expectation("X", "D5", UNDEFINED_VALUE, "delta(X, Gamma_n) = 1/2 for every n", 0),
         Expectation("X", "D6", INF, "Every cover by cells contains [0,1/2], so no cover has diameters "
                     "below 1/2: inf of the empty set", 0),
         Expectation("X", "D4_breakpoint", 1.0, "Finite covers cost 2/2^s (two halves) against "
                     "1/2^s + 2^(M(1-s)-1) (fine right half); they cross at s = 1", 1e-6,
                     compute=stuck_breakpoint))
    return Scenario("stuck_half", "[0,1/2] and [1/2,1] repeated at every level beside dyadic cells",
                    make_stuck_half(), {"X": X}, E)


def _golden_pair() -> Scenario:
    ifs = golden_ifs()
    gold = _lg((1 + math.sqrt(5)) / 2, 2)
    E = (Expectation("K", "BOX", gold, "Open set condition: 1/2^s + 1/4^s = 1", 5e-2, n_max=16),
         Expectation("K", "D2", 1.0, "2^n cells, the largest of diameter 2^-n", 1e-2, n_max=16),
         Expectation("K", "D3", gold, "Strict self-similarity: 1/2^s + 1/4^s = 1", 1e-10),
         Expectation("K", "moran", gold, "1/2^s + 1/4^s = 1", 1e-10, compute=moran_of(ifs)),
         Expectation("K", "osc", 1.0, "V = (0,1) is an open set for the maps", 0, compute=osc_of(ifs)))
    return _ifs_scenario("golden_pair", "Maps x/2 and (x+3)/4", ifs, E)


def _affine_rectangles() -> Scenario:
    ifs = affine_rectangles_ifs()
    E = (Expectation("K", "D1", 3.0, "8^n cells: log 8^n/(n log 2) = 3", 1e-9, per_level=True),
         Expectation("K", "D2", 3.0, "8^n rectangles 2^-n by 4^-n, diameter sqrt((1 + 4^n)/16^n)", 1e-2, n_max=20),
         Expectation("K", "BOX", 2.0, "The attractor is the unit square", 5e-2, n_max=12),
         Expectation("K", "moran", 3.0, "Eight maps of Lipschitz constant 1/2: 8 (1/2)^s = 1", 1e-10,
                     compute=moran_of(ifs)))
    return _ifs_scenario("affine_rectangles", "Eight maps (x/2, y/4) + t tiling the square", ifs, E,
                         "the maps are affine, not similarities; 1/2 is their Lipschitz constant")


def _rotated_squares() -> Scenario:
    ifs = rotated_squares_ifs()
    E = (Expectation("K", "D3", 2.0, "Even levels hold squares of side 8^-n and odd levels rectangles of "
                     "sides 2/8^(n+1), 1/(4 8^n): the level sums switch at 2", 1e-2, n_max=48),
         Expectation("K", "moran", 3.0, "Eight maps of Lipschitz constant 1/2: 8 (1/2)^s = 1, which differs "
                     "from dimension III", 1e-10, compute=moran_of(ifs)))
    return _ifs_scenario("rotated_squares", "Eight maps (-y/2, x/4) + t on the square", ifs, E,
                         "not strictly self-similar, so the similarity equation does not give dimension III")


def _overlap_triple() -> Scenario:
    ifs = overlap_triple_ifs()
    E = (Expectation("K", "D3", LOG3_2, "Strict self-similarity: 3 (1/2)^s = 1", 1e-10),
         Expectation("K", "D1", LOG3_2, "3^n cells: log 3^n/(n log 2)", 1e-9, per_level=True),
         Expectation("K", "D2", LOG3_2, "3^n cells of diameter 2^-n", 1e-9, per_level=True),
         Expectation("K", "H", 1.0, "The attractor is [0,1]", 0, True),
         Expectation("K", "osc", 0.0, "The images of (0,1) overlap", 0, compute=osc_of(ifs)))
    return _ifs_scenario("overlap_triple", "Maps x/2, (x+1)/2 and (2x+1)/4", ifs, E)


def _three_map_unit() -> Scenario:
    ifs = three_map_unit_ifs()
    E = (Expectation("K", "D1", LOG3_2, "3^n cells: log 3^n/(n log 2)", 1e-9, per_level=True),
         Expectation("K", "D2", LOG3_2, "3^n cells, the largest of diameter 2^-n", 1e-9, per_level=True),
         Expectation("K", "D3", 1.0, "Strict self-similarity: 1/2^s + 2/4^s = 1", 1e-10),
         Expectation("K", "BOX", 1.0, "The attractor is [0,1]", 1e-2),
         Expectation("K", "H", 1.0, "The attractor is [0,1]", 0, True),
         Expectation("K", "osc", 1.0, "V = (0,1) is an open set for the maps", 0, compute=osc_of(ifs)))
    return _ifs_scenario("three_map_unit", "Maps x/2, (x+2)/4 and (x+3)/4", ifs, E)


def _curve_scenario(name, description, curve: LevelwiseCurve, expected, notes="") -> Scenario:
    return Scenario(name, description, curve.induced_structure(), {"image": curve.image}, tuple(expected), notes,
                    curve=curve)


def _hilbert5() -> Scenario:
    curve = hilbert5_curve()
    cite = "5^n image squares of diameter sqrt(2) 2^-n: level sums (sqrt 2)^s (5/2^s)^n switch at log 5/log 2"
    E = (Expectation("image", "premeasure_error", 0.0, "(sqrt 2)^s (5/2^s)^n for s in {1, 2, log 5/log 2, 3}",
                     1e-12, compute=hilbert_premeasure_error),
         Expectation("image", "D3", LOG5_2, cite, 1e-2, n_max=10),
         Expectation("image", "BOX", 2.0, "The curve fills the unit square", 1e-2, n_max=10),
         Expectation("image", "H", 2.0, "The curve fills the unit square", 0, True))
    return _curve_scenario("hilbert5", "Square-filling curve with five image cells per cell", curve, E,
                           "two of the five sub-cells of each cell share one quarter")


def _identity_curve() -> Scenario:
    E = (Expectation("image", "D3", 1.0, "The identity induces the dyadic intervals", 1e-2),)
    return _curve_scenario("identity_curve", "Identity on [0,1]", identity_curve(), E)


def _constant_curve() -> Scenario:
    E = (Expectation("image", "D3", 0.0, "Every image cell is one point of diameter 0", 1e-2),)
    return _curve_scenario("constant_curve", "Constant curve at (1/2, 1/2)", constant_curve(), E)


def _harmonic_points() -> Scenario:
    H = HarmonicPoints()
    E = (Expectation("F", "BOX", 0.5, "{0} and 1/k: mesh side 2^-n separates about 2^(n/2) points", 5e-2,
                     n_max=16),
         Expectation("F", "D4", 0.0, "F is compact and countable: dimension IV equals its Hausdorff dimension 0",
                     0, True))
    return Scenario("harmonic_points", "{0} together with 1/k for k >= 1", make_natural_euclidean(1, _unit()),
                    {"F": H}, E)


def _horizontal_lines() -> Scenario:
    V = Box(AxisBox.of((0, 0), (0, 1)))
    Hz = Box(AxisBox.of((0, 1), (0, 0)))
    E = (Expectation("vertical", "D6", INF, "Every cell is a horizontal line or segment; no countable family "
                     "of them covers a vertical segment: inf of the empty set", 0, n_max=6, depth_cap=2),
         Expectation("horizontal", "D6", 1.0, "A horizontal segment is covered by dyadic segments of its line",
                     1e-2, n_max=6, depth_cap=2))
    return Scenario("horizontal_lines", "Dyadic segments on every horizontal line of the plane",
                    make_horizontal_lines(), {"vertical": V, "horizontal": Hz}, E)


def cantor_family(c) -> Scenario:
    """Two maps of ratio ``c`` fixing 0 and 1."""
    c = Fraction(c)
    ifs = cantor_family_ifs(c)
    val = math.log(2) / -math.log(c)
    E = (Expectation("K", "D2", val, f"2^n cells of diameter c^n: log 2/(-log c) with c = {c}", 1e-12,
                     per_level=True),
         Expectation("K", "D1", 1.0, "2^n cells: log 2^n/(n log 2) = 1", 1e-12, per_level=True))
    return _ifs_scenario(f"cantor_family:{c}", f"Cantor set of ratio {c}", ifs, E)


_BUILDERS = (
    _unit_interval, _unit_square, _cantor_euclidean, _cantor_ifs, _rationals_unit, _cantor_union,
    _dyadic_cantor_union, _comb_space, _unbounded_level, _stuck_half, _golden_pair, _affine_rectangles,
    _rotated_squares, _overlap_triple, _three_map_unit, _hilbert5, _identity_curve, _constant_curve,
    _harmonic_points, _horizontal_lines,
)

_registry_lock = threading.Lock()
_registry: list | None = None


def registry() -> list[Scenario]:
    """Built-in scenarios in a fixed order (built once, then shared)."""
    global _registry
    with _registry_lock:
        if _registry is None:
            _registry = [b() for b in _BUILDERS] + [cantor_family(c) for c in CANTOR_FAMILY]
        return list(_registry)


def scenario_names() -> list[str]:
    return [s.name for s in registry()]


def get_scenario(name: str, extra: Sequence[Scenario] = ()) -> Scenario:
    for s in list(extra) + registry():
        if s.name == name:
            return s
    if name.startswith("cantor_family:"):
        return cantor_family(Fraction(name.split(":", 1)[1]))
    raise KeyError(f"unknown scenario {name!r}; known: {', '.join(scenario_names())}")


def build_scenario(name: str) -> Scenario:
    """A freshly built scenario with an empty result cache."""
    if name.startswith("cantor_family:"):
        return cantor_family(Fraction(name.split(":", 1)[1]))
    builder = globals().get("_" + name)
    if builder not in _BUILDERS:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(scenario_names())}")
    return builder()


def refinement_reports(depth: int = 6) -> dict:
    """``check_refinement`` of every scenario structure (curves: their induced structure)."""
    out = {}
    for s in registry():
        fs = s.curve.induced_structure() if s.curve is not None else s.structure
        out[s.name] = check_refinement(fs, min(depth, s.max_level or depth))
    return out


# ---------------------------------------------------------------------------
# property audit


@dataclass(frozen=True)
class Witness:
    """Where a (model, property) cell is tested: scenario, query names and the relation."""

    scenario: str
    relation: str  # "le", "max", "sup", "zero", "equal"
    queries: tuple


# which instance tests each cell; the expected mark comes from TABLE1
_CANTOR_UNION = Witness("cantor_union", "le", ("C1", "union"))
_DYADIC_LE = Witness("dyadic_cantor_union", "le", ("E", "U"))
_DYADIC_MAX = Witness("dyadic_cantor_union", "max", ("E", "F", "U"))
_Q_SUP = Witness("rationals_unit", "sup", ("point", "Q"))
_Q_ZERO = Witness("rationals_unit", "zero", ("Q",))
_Q_EQUAL = Witness("rationals_unit", "equal", ("Q", "closure"))
_COMB_EQUAL = Witness("comb_space", "equal", ("F", "closure"))

TABLE1 = {
    # model: (monotonicity, finite stability, countable stability, zero on countable, closure invariance)
    "BOX": (True, True, False, False, True),
    "D1": (True, True, False, False, False),
    "D2": (True, False, False, False, False),
    "D3": (True, True, False, False, False),
    "D4": (True, True, False, False, True),
    "D5": (True, True, True, True, False),
    "D6": (True, True, True, True, False),
    "H": (True, True, True, True, False),
}

WITNESSES = {
    "BOX": (Witness("cantor_euclidean", "le", ("K", "I")), _DYADIC_MAX, _Q_SUP, _Q_ZERO, _Q_EQUAL),
    "D1": (_CANTOR_UNION, Witness("cantor_union", "max", ("C1", "C2", "union")), _Q_SUP, _Q_ZERO, _COMB_EQUAL),
    "D2": (_CANTOR_UNION, Witness("cantor_union", "max", ("C1", "C2", "union")), _Q_SUP, _Q_ZERO, _COMB_EQUAL),
    "D3": (_CANTOR_UNION, Witness("cantor_union", "max", ("C1", "C2", "union")), _Q_SUP, _Q_ZERO, _COMB_EQUAL),
    "D4": (_DYADIC_LE, _DYADIC_MAX, _Q_SUP, _Q_ZERO, _Q_EQUAL),
    "D5": (_DYADIC_LE, _DYADIC_MAX, _Q_SUP, _Q_ZERO, _Q_EQUAL),
    "D6": (_DYADIC_LE, _DYADIC_MAX, _Q_SUP, _Q_ZERO, _Q_EQUAL),
    "H": (_DYADIC_LE, _DYADIC_MAX, _Q_SUP, _Q_ZERO, _Q_EQUAL),
}


@dataclass
class AuditCell:
    model: str
    prop: str
    holds_expected: bool
    witness: Witness
    values: dict
    holds_observed: bool | None
    verdict: str  # "confirmed", "reproduced", "mismatch"
    methods: dict

    def to_record(self) -> dict:
        return {
            "model": self.model,
            "property": self.prop,
            "expected": "holds" if self.holds_expected else "fails",
            "observed": None if self.holds_observed is None else ("holds" if self.holds_observed else "fails"),
            "verdict": self.verdict,
            "scenario": self.witness.scenario,
            "values": {k: _fmt(v) for k, v in self.values.items()},
            "methods": self.methods,
        }


@dataclass
class Table1Report:
    cells: list

    @property
    def passed(self) -> bool:
        return all(c.verdict in ("confirmed", "reproduced") for c in self.cells)

    def grid(self) -> dict:
        return {(c.model, c.prop): c for c in self.cells}


def _close(a: float, b: float, tol: float) -> bool:
    if a == INF or b == INF:
        return a == b
    return abs(a - b) <= tol


def _relation_holds(relation: str, vals: list, tols: list) -> bool:
    t = sum(tols)
    if relation == "le":
        return vals[0] <= vals[1] + t if vals[1] != INF else True
    if relation == "max":
        return _close(vals[2], max(vals[0], vals[1]), t)
    if relation == "sup":
        # the last query is the countable union, the others stand for its parts
        return _close(vals[-1], max(vals[:-1]), t)
    if relation == "zero":
        return _close(vals[0], 0.0, t)
    if relation == "equal":
        return _close(vals[0], vals[1], t)
    raise ValueError(f"unknown relation {relation!r}")


def table1_audit(config: RunConfig = RunConfig()) -> Table1Report:
    """Test every (model, property) cell of the property table on its witness instance.

    Marked cells must hold on the instance ("confirmed"); unmarked cells must
    fail on it ("reproduced").  Values come from the scenario expectations:
    numeric where a numeric path exists, analytic otherwise.
    """
    cells = []
    for model in AUDIT_MODELS:
        for prop, mark, w in zip(PROPERTIES, TABLE1[model], WITNESSES[model]):
            sc = get_scenario(w.scenario)
            vals, tols, methods = [], [], {}
            for q in w.queries:
                e = sc.find(q, model)
                cmp = evaluate(sc, e, config)
                vals.append(cmp.value)
                tols.append(e.tol)
                methods[q] = "analytic" if e.analytic_only else (cmp.estimate.method if cmp.estimate else "")
            observed = _relation_holds(w.relation, vals, tols)
            verdict = ("confirmed" if mark else "reproduced") if observed == mark else "mismatch"
            cells.append(AuditCell(model, prop, mark, w, dict(zip(w.queries, vals)), observed, verdict, methods))
    return Table1Report(cells)


# ---------------------------------------------------------------------------
# scenario files


def _load_schema() -> dict:
    from importlib import resources

    return json.loads(resources.files("fracdim").joinpath("scenario_schema.json").read_text())


def parse_value(x) -> float:
    """Number, ``"inf"``, ``"p/q"`` or ``"undefined"``."""
    if isinstance(x, bool):
        raise ValueError("booleans are not values")
    if isinstance(x, (int, float)):
        return float(x)
    t = str(x).strip()
    if t == "inf":
        return INF
    if t == "undefined":
        return UNDEFINED_VALUE
    return float(Fraction(t))


def _rat(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


def _box(bounds) -> AxisBox:
    return AxisBox(tuple((_rat(lo), _rat(hi)) for lo, hi in bounds))


def _ifs_from(spec: dict) -> IFSystem:
    maps = [ContractionMap.from_matrix([[_rat(v) for v in row] for row in m["linear"]],
                                       [_rat(v) for v in m["translation"]]) for m in spec["maps"]]
    witness = _box(spec["osc_witness"]) if "osc_witness" in spec else None
    return IFSystem(maps, _box(spec["hull"]), osc_witness=witness, attractor_known=spec.get("attractor"),
                    name=spec.get("name", ""))


def _explicit_structure(spec: dict) -> tuple[FractalStructure, int]:
    first = spec.get("first_level", 1)
    levels = [tuple(_box(c) for c in lvl) for lvl in spec["levels"]]
    last = first + len(levels) - 1

    def gen(n: int) -> Level:
        if n > last:
            raise ValueError(f"the file lists levels {first}..{last} only")
        cells = tuple(Cell(b, (i,), n) for i, b in enumerate(levels[n - first]))
        return Level(n, cells, ())

    fs = FractalStructure(spec.get("name", "explicit levels"), spec["dimension"], gen, claims={"finite_levels"},
                          first_level=first)
    return fs, last


def _query_from(spec: dict, structure_ifs: IFSystem | None) -> QuerySet:
    t = spec["type"]
    if t == "box":
        return Box(_box(spec["bounds"]))
    if t == "attractor":
        ifs_spec = spec.get("ifs", "structure")
        if ifs_spec == "structure":
            if structure_ifs is None:
                raise ValueError("an attractor query needs an IFS structure or its own IFS")
            return AttractorSet(structure_ifs)
        return AttractorSet(_ifs_from(ifs_spec))
    if t == "points":
        return FinitePoints(tuple(tuple(_rat(v) for v in p) for p in spec["points"]))
    if t == "rationals":
        return RationalPoints(_box(spec["bounds"]))
    if t == "harmonic":
        return HarmonicPoints()
    if t == "union":
        return UnionSet(tuple(_query_from(p, structure_ifs) for p in spec["parts"]))
    raise ValueError(f"unknown query type {t!r}")


def load_scenarios(text: str) -> list[Scenario]:
    """Parse a scenario file (JSON, validated against the bundled schema)."""
    data = json.loads(text)
    jsonschema.validate(data, _load_schema())
    out = []
    for sp in data["scenarios"]:
        st = sp["structure"]
        ifs, max_level = None, None
        if st["type"] == "natural_euclidean":
            hull = _box(st["hull"])
            fs = make_natural_euclidean(hull.dim, hull)
        elif st["type"] == "ifs":
            ifs = _ifs_from(st)
            fs = make_natural_ifs_structure(ifs)
        else:
            fs, max_level = _explicit_structure(st)
        queries = {k: _query_from(v, ifs) for k, v in sp["queries"].items()}
        exps = []
        for e in sp["expected"]:
            exps.append(Expectation(e["query"], e["model"], parse_value(e["value"]), e["citation"],
                                    e.get("tol", 1e-2), e.get("analytic_only", False), e.get("n_max"),
                                    e.get("depth_cap"), e.get("per_level", False)))
        out.append(Scenario(sp["name"], sp.get("description", ""), fs, queries, tuple(exps), sp.get("notes", ""),
                            max_level=max_level))
    return out


def load_scenario_file(path: str) -> list[Scenario]:
    with open(path, encoding="utf-8") as fh:
        return load_scenarios(fh.read())
