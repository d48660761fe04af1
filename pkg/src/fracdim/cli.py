"""Command-line front end: ``fracdim {dims, scenario-list, verify, moran, table1}``.

Exit codes: 0 success, 1 verification mismatch, 2 usage or precondition error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from fractions import Fraction

from . import __version__
from .covers import explain_json
from .dimensions import MODELS, UNDEFINED, _fmt, cover_premeasure
from .ifs import moran_solve
from .scenarios import (
    SCHEMA_VERSION,
    Expectation,
    RunConfig,
    Scenario,
    estimate_for,
    get_scenario,
    load_scenario_file,
    registry,
    run_all,
    table1_audit,
)

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2
DEPTH_ENV = "FRACDIM_DEPTH"


class UsageError(Exception):
    pass


def parse_model(text: str) -> str:
    """``2``, ``d2``, ``D2``, ``II``, ``box`` or ``H`` to a model tag."""
    t = text.strip().upper()
    roman = {"I": "D1", "II": "D2", "III": "D3", "IV": "D4", "V": "D5", "VI": "D6"}
    if t in ("BOX", "B"):
        return "BOX"
    if t == "H":
        return "H"
    if t.isdigit():
        t = "D" + t
    t = roman.get(t, t)
    if t not in MODELS:
        raise argparse.ArgumentTypeError(f"unknown model {text!r}; use box, 1..6 or H")
    return t


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", action="append", type=parse_model, default=None,
                        help="restrict to a model (box, 1..6, H); repeatable")
    common.add_argument("--depth", type=_positive_int, default=None,
                        help=f"deepest level (default 12, or ${DEPTH_ENV})")
    common.add_argument("--depth-cap", type=_nonneg_int, default=4, help="extra levels in cover pools (default 4)")
    common.add_argument("--s-tol", type=_positive_float, default=1e-3, help="exponent tolerance (default 1e-3)")
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--scenario-file", default=None, help="JSON file with extra scenarios")

    p = argparse.ArgumentParser(prog="fracdim", description="Box dimension and fractal-structure dimensions I-VI.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dims", parents=[common], help="estimate dimensions of one scenario query")
    d.add_argument("scenario")
    d.add_argument("--query", default=None, help="query set name (default: the scenario's first)")
    d.add_argument("--explain", action="store_true", help="dump the chosen covers of cover models")

    sub.add_parser("scenario-list", parents=[common], help="list scenarios and their expectations")

    v = sub.add_parser("verify", parents=[common], help="compare every scenario with its expected values")
    v.add_argument("--acceptance", action="store_true", help="also run the twelve acceptance checks")
    v.add_argument("--workers", type=_positive_int, default=1, help="threads for scenario runs")

    m = sub.add_parser("moran", help="solve sum c_i^s = 1")
    m.add_argument("factors", nargs="+")
    m.add_argument("--tol", type=_positive_float, default=1e-13)

    sub.add_parser("table1", parents=[common], help="audit the model/property table")
    return p


def _config(args) -> RunConfig:
    depth = args.depth
    if depth is None and os.environ.get(DEPTH_ENV):
        try:
            depth = _positive_int(os.environ[DEPTH_ENV])
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"{DEPTH_ENV}: {exc}") from None
    models = frozenset(args.model) if args.model else None
    return RunConfig(depth=depth or 12, depth_cap=args.depth_cap, s_tol=args.s_tol, models=models)


def _depth_given(args) -> bool:
    return args.depth is not None or bool(os.environ.get(DEPTH_ENV))


def _extra_scenarios(args) -> list[Scenario]:
    if not getattr(args, "scenario_file", None):
        return []
    try:
        return load_scenario_file(args.scenario_file)
    except FileNotFoundError:
        raise UsageError(f"no such file: {args.scenario_file}") from None
    except Exception as exc:  # schema errors, bad values
        raise UsageError(f"invalid scenario file: {str(exc).splitlines()[0]}") from None


def _emit(out, fmt: str, records: list[dict], csv_header: list[str], csv_rows: list[list], text: list[str]) -> None:
    if fmt == "json":
        out.write(json.dumps({"schema_version": SCHEMA_VERSION, "records": records}, sort_keys=True, indent=2))
        out.write("\n")
    elif fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(csv_header)
        w.writerows(csv_rows)
        out.write(buf.getvalue())
    else:
        out.write("\n".join(text) + "\n")


def _num(x) -> str:
    v = _fmt(x)
    if v is None:
        return "undefined"
    return v if isinstance(v, str) else f"{v:.6g}"


# --- commands --------------------------------------------------------------------------------


def cmd_dims(args, out) -> int:
    config = _config(args)
    try:
        sc = get_scenario(args.scenario, _extra_scenarios(args))
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    query = args.query or next(iter(sc.queries))
    if query not in sc.queries:
        raise UsageError(f"scenario {sc.name} has no query {query!r}; known: {', '.join(sc.queries)}")
    listed = [e for e in sc.expected if e.query == query and e.compute is None]
    models = args.model or list(dict.fromkeys(e.model for e in listed)) or ["BOX", "D1", "D2", "D3"]
    records, rows, text = [], [], []
    code = EXIT_OK
    for model in models:
        known = next((e for e in listed if e.model == model), None)
        if model == "H" or (known is not None and known.analytic_only):
            if known is None:
                raise UsageError(f"no analytic value of {model} is recorded for {sc.name}/{query}")
            records.append({"scenario": sc.name, "query": query, "model": model, "value": _fmt(known.value),
                            "lower": _fmt(known.value), "upper": _fmt(known.value), "status": "analytic-only",
                            "citation": known.citation})
            text.append(f"{sc.name} {query} {model}: {_num(known.value)} (analytic-only: {known.citation})")
            continue
        e = Expectation(query, model, math.nan, known.citation if known else "computed on request",
                        n_max=None if _depth_given(args) or known is None else known.n_max,
                        depth_cap=None if known is None else known.depth_cap)
        est = estimate_for(sc, e, config)
        rec = {"scenario": sc.name, "query": query, "citation": e.citation, **est.to_record()}
        if args.explain and model in ("D4", "D5", "D6") and est.status not in (UNDEFINED,) and est.sequence:
            rec["covers"] = _explain(sc, query, est, config, e)
        records.append(rec)
        for x, st, r in est.csv_rows():
            rows.append([sc.name, query, model, x, st, r])
        line = f"{sc.name} {query} {model}: {_num(est.value)} [{_num(est.lower)}, {_num(est.upper)}] {est.status}"
        text.append(line)
        for note in est.notes:
            text.append(f"    {note}")
        if args.explain and "covers" in rec:
            for cv in rec["covers"]:
                text.append(f"    level {cv['level']}: {len(cv['chosen'])} cells, cost {_num(cv['cost'])} "
                            f"at s = {cv['exponent']:.6g} ({cv['optimality']})")
        if est.status == UNDEFINED:
            code = EXIT_USAGE
    _emit(out, args.format, records, ["scenario", "query", "model", "n_or_delta", "statistic", "ratio"], rows, text)
    return code


def _explain(sc: Scenario, query: str, est, config: RunConfig, e: Expectation) -> list:
    """Chosen covers from levels ``n..n+depth_cap`` at the estimated exponent for the last levels."""
    if not math.isfinite(est.value):
        return []
    cap = e.depth_cap if e.depth_cap is not None else config.depth_cap
    F = sc.queries[query]
    target = F if "compact" in F.traits else F.closure()
    out = []
    levels = [x for x, _, _ in est.sequence if isinstance(x, int)][-2:] or [sc.structure.first_level + 1]
    for n in levels:
        _, sol, inst = cover_premeasure(sc.structure, target, est.value, n, cap)
        out.append({"level": n, **json.loads(explain_json(inst, sol))})
    return out


def cmd_scenario_list(args, out) -> int:
    scs = registry() + _extra_scenarios(args)
    records, rows, text = [], [], []
    for sc in scs:
        for e in sc.expected:
            if args.model and e.model not in args.model:
                continue
            rec = {"scenario": sc.name, "query": e.query, "model": e.model,
                   "expected": "undefined" if math.isnan(e.value) else _fmt(e.value), "tolerance": e.tol,
                   "analytic_only": e.analytic_only, "citation": e.citation}
            records.append(rec)
            rows.append([sc.name, e.query, e.model, rec["expected"], e.tol, e.analytic_only, e.citation])
        n = len(sc.expected)
        text.append(f"{sc.name}: {sc.description} ({n} expectation{'' if n == 1 else 's'})")
    _emit(out, args.format, records,
          ["scenario", "query", "model", "expected", "tolerance", "analytic_only", "citation"], rows, text)
    return EXIT_OK


def cmd_verify(args, out) -> int:
    config = _config(args)
    extra = _extra_scenarios(args)
    t0 = time.perf_counter()
    scs = extra if extra else registry()
    reports = run_all(scs, config, workers=args.workers)
    records, rows, text = [], [], []
    failed = 0
    for rep in reports:
        for c in rep.comparisons:
            rec = c.to_record()
            records.append(rec)
            rows.append([c.scenario, c.query, c.model, rec["expected"], rec["value"], c.tol, c.status, c.verdict])
            mark = {"pass": "ok  ", "fail": "FAIL", "analytic-only": "n/a "}[c.verdict]
            text.append(f"{mark} {c.scenario:22s} {c.query:10s} {c.model:18s} expected {_num(c.expected) if not math.isnan(c.expected) else 'undefined':>10s}"
                        f"  got {_num(c.value):>10s}  {c.status}" + (f"  ({c.detail})" if c.verdict == "fail" else ""))
            failed += c.verdict == "fail"
    if args.acceptance:
        from .acceptance import run_acceptance

        for r in run_acceptance(config):
            records.append({"acceptance": r.number, "title": r.title, "verdict": "pass" if r.passed else "fail",
                            "detail": r.detail})
            rows.append(["acceptance", r.number, r.title, "", "", "", "", "pass" if r.passed else "fail"])
            text.append(r.line())
            failed += not r.passed
    n = sum(len(r.comparisons) for r in reports)
    text.append(f"{n} comparisons, {failed} failed, {time.perf_counter() - t0:.1f} s")
    _emit(out, args.format, records,
          ["scenario", "query", "model", "expected", "value", "tolerance", "status", "verdict"], rows, text)
    return EXIT_MISMATCH if failed else EXIT_OK


def cmd_moran(args, out) -> int:
    try:
        factors = [Fraction(f) for f in args.factors]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"factors must be rationals or decimals: {' '.join(args.factors)}") from None
    for f in factors:
        if not 0 < f < 1:
            raise UsageError(f"factor {f} is not in (0, 1)")
    s = moran_solve(factors, args.tol)
    out.write(f"{round(s, 12)}\n")
    return EXIT_OK


def cmd_table1(args, out) -> int:
    config = _config(args)
    rep = table1_audit(config)
    cells = [c for c in rep.cells if not args.model or c.model in args.model]
    records = [c.to_record() for c in cells]
    rows = [[c.model, c.prop, "holds" if c.holds_expected else "fails", c.verdict, c.witness.scenario] for c in cells]
    text = []
    props = list(dict.fromkeys(c.prop for c in cells))
    text.append(f"{'model':6s}" + "".join(f"{p:>22s}" for p in props))
    grid = rep.grid()
    for model in dict.fromkeys(c.model for c in cells):
        row = ""
        for p in props:
            c = grid[(model, p)]
            mark = "yes" if c.holds_expected else "no"
            row += f"{mark + ' (' + c.verdict + ')':>22s}"
        text.append(f"{model:6s}{row}")
    bad = [c for c in cells if c.verdict == "mismatch"]
    for c in bad:
        text.append(f"mismatch: {c.model} {c.prop} on {c.witness.scenario}: {c.values}")
    _emit(out, args.format, records, ["model", "property", "expected", "verdict", "scenario"], rows, text)
    return EXIT_MISMATCH if bad else EXIT_OK


COMMANDS = {
    "dims": cmd_dims,
    "scenario-list": cmd_scenario_list,
    "verify": cmd_verify,
    "moran": cmd_moran,
    "table1": cmd_table1,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"fracdim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
