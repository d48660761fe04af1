"""The twelve acceptance checks, runnable from the CLI and from the test suite.

Each check returns a :class:`CheckResult`.  Tolerances are fixed here and
never loosened by callers.  The property check (number 12) draws its cases
from a seeded generator so that ``verify`` needs no test dependencies; the
test suite runs the same properties again under Hypothesis.
"""

from __future__ import annotations

import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .covers import CoverInstance, brute_force_cover, scaling_inequality_holds, min_cover_1d
from .dimensions import INFINITE, UNDEFINED, box_dimension, dim1, dim2, dim3, premeasure_inf
from .geometry import INF, AxisBox
from .ifs import moran_solve
from .querysets import Box
from .structures import Cell, check_refinement, count_touching, make_natural_euclidean
from .scenarios import (
    CANTOR_FAMILY,
    LOG2_3,
    LOG3_2,
    LOG5_2,
    STUCK_GRID,
    RunConfig,
    build_scenario,
    estimate_for,
    evaluate,
    get_scenario,
    hilbert_premeasure_error,
    registry,
    run_scenario,
    stuck_breakpoint,
    stuck_premeasure_error,
    table1_audit,
)

PROPERTY_CASES = 100


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.title}: {self.detail}"


def _result(number: int, title: str, checks: list[tuple[bool, str]]) -> CheckResult:
    ok = all(c for c, _ in checks)
    return CheckResult(number, title, ok, "; ".join(d for _, d in checks))


def check_moran() -> CheckResult:
    out = []
    for factors, exact in (((Fraction(1, 3), Fraction(1, 3)), LOG2_3),
                           ((Fraction(1, 2), Fraction(1, 4)), math.log((1 + math.sqrt(5)) / 2) / math.log(2))):
        moran_solve(factors)  # warm up
        t = time.perf_counter()
        s = moran_solve(factors)
        dt = time.perf_counter() - t
        err = abs(s - exact)
        out.append((err < 1e-10 and dt < 1e-3, f"{'/'.join(map(str, factors))}: err {err:.1e}, {dt * 1e3:.3f} ms"))
    return _result(1, "Moran solver", out)


def _max_level_error(est, exact: float, levels: int) -> float:
    rows = [r for n, _, r in est.sequence if n <= levels]
    if len(rows) < levels:
        return INF
    return max(abs(r - exact) for r in rows)


def check_cantor_levels() -> CheckResult:
    sc = get_scenario("cantor_ifs")
    K = sc.queries["K"]
    e1 = _max_level_error(dim1(sc.structure, K, 12), 1.0, 12)
    e2 = _max_level_error(dim2(sc.structure, K, 12), LOG2_3, 12)
    return _result(2, "Cantor IFS levels", [(e1 < 1e-12, f"D1 max level error {e1:.1e}"),
                                            (e2 < 1e-12, f"D2 max level error {e2:.1e}")])


def check_cantor_union(config: RunConfig) -> CheckResult:
    sc = get_scenario("cantor_union")
    vals = {}
    out = []
    for q, exact in (("C1", LOG2_3), ("C2", 1.0), ("union", math.log(4) / math.log(3))):
        v = dim2(sc.structure, sc.queries[q], 15).value
        vals[q] = v
        out.append((abs(v - exact) < 1e-6, f"D2({q}) = {v:.9f}"))
    gap = vals["union"] - max(vals["C1"], vals["C2"])
    out.append((gap > 1e-6, f"union exceeds the max by {gap:.6f}"))
    return _result(3, "Finite-stability failure of D2", out)


def check_affine() -> CheckResult:
    sc = get_scenario("affine_rectangles")
    K = sc.queries["K"]
    est = dim2(sc.structure, K, 20)
    last = [r for n, _, r in est.sequence if n == 20][0]
    box = box_dimension(K, 12).value
    return _result(4, "Affine rectangles", [(abs(last - 3) < 1e-2, f"D2 ratio at n=20 {last:.5f}"),
                                             (abs(box - 2) < 5e-2, f"box estimate {box:.5f}")])


def check_rotated_overlap(config: RunConfig) -> CheckResult:
    rot = get_scenario("rotated_squares")
    v = estimate_for(rot, rot.find("K", "D3"), config).value
    ov = get_scenario("overlap_triple")
    d3 = dim3(ov.structure, ov.queries["K"], 8)
    m = moran_solve([Fraction(1, 2)] * 3)
    h = ov.find("K", "H")
    return _result(5, "Rotated squares and overlapping triple", [
        (abs(v - 2) < 1e-2, f"rotated D3 {v:.5f}"),
        (abs(m - LOG3_2) < 1e-10 and abs(d3.value - LOG3_2) < 1e-10,
         f"overlap D3 {d3.value:.12f} (Moran {m:.12f})"),
        (h.analytic_only and abs(h.value - d3.value) > 0.5, f"Hausdorff value {h.value:g} asserted analytically"),
    ])


def check_hilbert(config: RunConfig) -> CheckResult:
    sc = get_scenario("hilbert5")
    err = hilbert_premeasure_error(sc, config)
    v = estimate_for(sc, sc.find("image", "D3"), config).value
    return _result(6, "Five-piece curve", [
        (err < 1e-12, f"level sums on s in {{1, 2, log5/log2, 3}}, n <= 10: max rel err {err:.1e}"),
        (abs(v - LOG5_2) < 1e-2, f"D3 {v:.5f}"),
    ])


def check_stuck_half(config: RunConfig) -> CheckResult:
    sc = get_scenario("stuck_half")
    X = sc.queries["X"]
    err = stuck_premeasure_error(sc, config)
    out = [(err < 1e-12, f"pre-measure on {len(STUCK_GRID)} exponents: max rel err {err:.1e}")]
    for m in ("D3", "D4", "D5"):
        st = estimate_for(sc, sc.find("X", m), config).status
        out.append((st == UNDEFINED, f"{m} {st}"))
    est6 = estimate_for(sc, sc.find("X", "D6"), config)
    w = est6.extra.get("witness", math.nan)
    out.append((est6.status == INFINITE and w < 0.5, f"D6 {est6.status}, no cover below delta {w:g}"))
    bp = stuck_breakpoint(sc, config)
    out.append((abs(bp - 1) < 1e-6, f"D4 cover breakpoint {bp:.9f}"))
    return _result(7, "Stuck half", out)


def random_line_instance(rng: random.Random, k: int, s: float | None = None) -> CoverInstance:
    """Random dyadic intervals in [0,1] against a random dyadic target."""
    den = 2 ** rng.randint(2, 5)
    a = rng.randint(0, den - 1)
    b = rng.randint(a, den)
    target = Box(AxisBox.of((Fraction(a, den), Fraction(b, den))))
    cells = []
    for i in range(k):
        dn = 2 ** rng.randint(1, 5)
        lo = rng.randint(0, dn - 1)
        hi = rng.randint(lo + 1, min(dn, lo + 1 + dn // 2))
        cells.append(Cell(AxisBox.of((Fraction(lo, dn), Fraction(hi, dn))), (i,), 0))
    return CoverInstance(target, tuple(cells), rng.uniform(0, 3) if s is None else s)


def check_cover_engine(instances: int = 200, seed: int = 2024) -> CheckResult:
    rng = random.Random(seed)
    mismatches, scaling_fail, pairs = 0, 0, 0
    t0 = time.perf_counter()
    for _ in range(instances):
        inst = random_line_instance(rng, rng.randint(1, 20))
        a, b = min_cover_1d(inst), brute_force_cover(inst)
        same_cost = a.cost == b.cost or abs(a.cost - b.cost) <= 1e-12 * max(1.0, abs(b.cost))
        if not same_cost or a.chosen != b.chosen:
            mismatches += 1
        dmax = max(inst.diameters)
        s = inst.exponent
        t = s + rng.uniform(0.1, 2)
        cs, ct = min_cover_1d(inst).cost, min_cover_1d(inst.with_exponent(t)).cost
        pairs += 1
        if not scaling_inequality_holds(ct, cs, dmax, t, s):
            scaling_fail += 1
    dt = time.perf_counter() - t0
    return _result(8, "Cover engine", [
        (mismatches == 0, f"{instances} instances, {mismatches} mismatches"),
        (dt < 10, f"{dt:.2f} s"),
        (scaling_fail == 0, f"scaling inequality on {pairs} pairs, {scaling_fail} failures"),
    ])


def check_harmonic(config: RunConfig) -> CheckResult:
    sc = get_scenario("harmonic_points")
    v = box_dimension(sc.queries["F"], 16).value
    e = sc.find("F", "D4")
    cmp = evaluate(sc, e, config)
    return _result(9, "Harmonic points", [
        (abs(v - 0.5) < 5e-2, f"box estimate {v:.4f}"),
        (cmp.verdict == "analytic-only" and e.value == 0 and bool(e.citation),
         f"D4 = {e.value:g} analytic-only ({e.citation})"),
    ])


def check_table1(config: RunConfig) -> CheckResult:
    rep = table1_audit(config)
    models = {c.model for c in rep.cells}
    props = {c.prop for c in rep.cells}
    bad = [f"{c.model}/{c.prop}" for c in rep.cells if c.verdict not in ("confirmed", "reproduced")]
    untested = [c for c in rep.cells if c.holds_observed is None]
    blank = sum(1 for c in rep.cells if not c.holds_expected)
    return _result(10, "Property table", [
        (len(models) == 8 and len(props) == 5 and len(rep.cells) == 40, f"{len(models)} models x {len(props)} properties"),
        (not bad, f"{40 - blank} marks confirmed, {blank} blanks reproduced" if not bad else "mismatch: " + ", ".join(bad)),
        (not untested, f"{len(untested)} untested"),
    ])


def check_cantor_family() -> CheckResult:
    vals, worst = [], 0.0
    for c in CANTOR_FAMILY:
        sc = get_scenario(f"cantor_family:{c}")
        exact = math.log(2) / -math.log(c)
        est = dim2(sc.structure, sc.queries["K"], 12)
        worst = max(worst, _max_level_error(est, exact, 12))
        vals.append(est.value)
    inc = all(a < b for a, b in zip(vals, vals[1:]))
    gap = 1 - vals[-1]
    return _result(11, "Cantor ratio family", [
        (worst < 1e-12, f"max level error {worst:.1e}"),
        (inc, "D2 increasing in c" if inc else f"not increasing: {vals}"),
        (0 <= gap < 3e-3, f"1 - D2(0.499) = {gap:.2e}"),
    ])


# --- property check with a seeded generator -------------------------------------------------


def _random_box(rng: random.Random, den: int = 64) -> AxisBox:
    a = rng.randint(0, den - 1)
    b = rng.randint(a, den)
    return AxisBox.of((Fraction(a, den), Fraction(b, den)))


def check_properties(config: RunConfig, cases: int = PROPERTY_CASES, seed: int = 7) -> CheckResult:
    rng = random.Random(seed)
    out = []
    # refinement: each registry structure at a random depth, plus random natural structures
    structs = [s.structure for s in registry() if s.curve is None]
    bad = 0
    for i in range(cases):
        if i < len(structs):
            fs = structs[i]
            depth = 3
        else:
            den = 2 ** rng.randint(0, 2)
            lo = Fraction(rng.randint(-4, 4), den)
            fs = make_natural_euclidean(1, AxisBox.of((lo, lo + Fraction(rng.randint(1, 8), den))))
            depth = fs.first_level + rng.randint(1, 4)
        if not check_refinement(fs, depth).ok:
            bad += 1
    out.append((bad == 0, f"refinement {cases} cases, {bad} failures"))

    nat = make_natural_euclidean(1, AxisBox.of((0, 1)))
    bad = 0
    for _ in range(cases):
        big = _random_box(rng)
        (a, b), = big.bounds
        lo = a + (b - a) * Fraction(rng.randint(0, 8), 8)
        hi = lo + (b - lo) * Fraction(rng.randint(0, 8), 8)
        small = AxisBox.of((lo, hi))
        n = rng.randint(1, 9)
        if count_touching(nat, n, Box(small)) > count_touching(nat, n, Box(big)):
            bad += 1
    out.append((bad == 0, f"count monotonicity {cases} cases, {bad} failures"))

    bad = 0
    for _ in range(cases):
        F = Box(_random_box(rng))
        n = rng.randint(1, 6)
        s, t = sorted(rng.uniform(0, 3) for _ in range(2))
        if premeasure_inf(nat, F, t, n) > premeasure_inf(nat, F, s, n) * (1 + 1e-12):
            bad += 1
    out.append((bad == 0, f"pre-measure monotone in s {cases} cases, {bad} failures"))

    names = [s.name for s in registry() if s.name.startswith("cantor_family") or s.name in
             ("cantor_ifs", "comb_space", "three_map_unit", "overlap_triple", "unbounded_level")]
    bad = 0
    serial = {n: _report_key(run_scenario(build_scenario(n), config)) for n in names}
    for _ in range(cases):
        pick = rng.sample(names, 3)
        with ThreadPoolExecutor(max_workers=3) as pool:
            got = list(pool.map(lambda n: _report_key(run_scenario(build_scenario(n), config)), pick))
        if got != [serial[n] for n in pick]:
            bad += 1
    out.append((bad == 0, f"determinism under threads {cases} cases, {bad} failures"))
    return _result(12, "Property suites", out)


def _report_key(rep) -> tuple:
    return tuple((c.query, c.model, repr(c.value), c.status, c.verdict) for c in rep.comparisons)


def run_acceptance(config: RunConfig = RunConfig()) -> list[CheckResult]:
    return [
        check_moran(),
        check_cantor_levels(),
        check_cantor_union(config),
        check_affine(),
        check_rotated_overlap(config),
        check_hilbert(config),
        check_stuck_half(config),
        check_cover_engine(),
        check_harmonic(config),
        check_table1(config),
        check_cantor_family(),
        check_properties(config),
    ]
