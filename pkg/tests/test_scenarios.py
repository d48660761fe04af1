import json
import math

import jsonschema
import pytest

from fracdim.dimensions import UNDEFINED
from fracdim.geometry import INF
from fracdim.scenarios import (
    ANALYTIC,
    AUDIT_MODELS,
    PASS,
    PROPERTIES,
    TABLE1,
    Expectation,
    RunConfig,
    Scenario,
    build_scenario,
    get_scenario,
    hilbert_premeasure_error,
    load_scenarios,
    parse_value,
    refinement_reports,
    registry,
    run_all,
    run_scenario,
    scenario_names,
    stuck_breakpoint,
    stuck_premeasure_error,
    table1_audit,
)
from fracdim.structures import check_refinement

from conftest import LOG2_3

FAST = RunConfig(depth=8, depth_cap=3)


def test_registry_size_and_citations():
    scs = registry()
    assert len(scs) >= 16
    assert len(set(scenario_names())) == len(scs)
    for sc in scs:
        assert sc.expected, sc.name
        for e in sc.expected:
            assert e.citation.strip(), (sc.name, e)


def test_every_structure_generates_levels_one_to_eight():
    for sc in registry():
        fs = sc.curve.induced_structure() if sc.curve is not None else sc.structure
        for n in range(max(1, fs.first_level), 9):
            assert fs.level(n) is not None


def test_refinement_through_depth_six():
    for name, rep in refinement_reports(6).items():
        assert rep.ok, (name, rep)


def test_cantor_ifs_expectations():
    rep = run_scenario("cantor_ifs", FAST)
    assert rep.passed
    by_model = {c.model: c for c in rep.comparisons}
    assert by_model["D3"].value == pytest.approx(LOG2_3, abs=1e-10)
    assert by_model["H"].verdict == ANALYTIC
    assert by_model["D1"].verdict == PASS


def test_model_filter():
    rep = run_scenario("cantor_ifs", RunConfig(depth=8, models=frozenset({"D2"})))
    assert [c.model for c in rep.comparisons] == ["D2"]


def test_stuck_half_records_undefined_and_infinite():
    rep = run_scenario("stuck_half", FAST)
    assert rep.passed
    rows = {(c.query, c.model): c for c in rep.comparisons}
    assert rows[("X", "D3")].status == UNDEFINED
    assert rows[("X", "D6")].value == INF
    sc = get_scenario("stuck_half")
    assert stuck_premeasure_error(sc, FAST) < 1e-9
    assert abs(stuck_breakpoint(sc, FAST) - 1) < 1e-2


def test_hilbert_premeasure_closed_form():
    assert hilbert_premeasure_error(get_scenario("hilbert5"), FAST) < 1e-12


def test_whole_registry_passes():
    reports = run_all(config=RunConfig())
    failed = [(r.scenario, c.query, c.model, c.detail) for r in reports for c in r.comparisons if not c.passed]
    assert not failed


def test_table1_audit_marks_and_blanks():
    rep = table1_audit(RunConfig())
    assert rep.passed
    grid = rep.grid()
    assert len(grid) == len(AUDIT_MODELS) * len(PROPERTIES)
    marks = sum(sum(v) for v in TABLE1.values())
    assert sum(c.verdict == "confirmed" for c in rep.cells) == marks
    assert grid[("D2", "finite-stability")].verdict == "reproduced"
    assert grid[("D5", "zero-on-countable")].verdict == "confirmed"
    json.dumps([c.to_record() for c in rep.cells])


def test_build_scenario_is_fresh_and_unknown_names_fail():
    a, b = build_scenario("cantor_ifs"), build_scenario("cantor_ifs")
    assert a is not b and a._cache == {}
    assert get_scenario("cantor_family:2/5").name == "cantor_family:2/5"
    with pytest.raises(KeyError):
        get_scenario("no_such_scenario")
    with pytest.raises(KeyError):
        build_scenario("no_such_scenario")


def test_expectation_validation():
    with pytest.raises(ValueError):
        Expectation("K", "D1", 1.0, "")
    with pytest.raises(ValueError):
        Expectation("K", "D9", 1.0, "x")
    with pytest.raises(ValueError):
        Expectation("K", "H", 1.0, "x")
    with pytest.raises(ValueError):
        Scenario("s", "", None, {}, (Expectation("K", "D1", 1.0, "x"),))
    with pytest.raises(ValueError):
        RunConfig(depth=0)


@pytest.mark.parametrize("raw,val", [(1, 1.0), ("inf", INF), ("2/3", 2 / 3), (0.5, 0.5)])
def test_parse_value(raw, val):
    assert parse_value(raw) == val


def test_parse_undefined():
    assert math.isnan(parse_value("undefined"))
    with pytest.raises(ValueError):
        parse_value(True)


FILE = {
    "schema_version": "1.0",
    "scenarios": [
        {
            "name": "file_cantor",
            "structure": {
                "type": "ifs",
                "maps": [
                    {"linear": [["1/3"]], "translation": [0]},
                    {"linear": [["1/3"]], "translation": ["2/3"]},
                ],
                "hull": [[0, 1]],
                "osc_witness": [[0, 1]],
            },
            "queries": {"K": {"type": "attractor"}, "half": {"type": "box", "bounds": [[0, "1/2"]]}},
            "expected": [
                {"query": "K", "model": "D2", "value": 0.6309297535714574, "citation": "2 (1/3)^s = 1",
                 "tol": 1e-9, "per_level": True},
                {"query": "K", "model": "D3", "value": 0.6309297535714574, "citation": "2 (1/3)^s = 1"},
                {"query": "K", "model": "H", "value": 0.6309297535714574, "citation": "2 (1/3)^s = 1",
                 "analytic_only": True},
            ],
        },
        {
            "name": "file_explicit",
            "structure": {
                "type": "explicit",
                "dimension": 1,
                "levels": [[[[0, "1/2"]], [["1/2", 1]]], [[[0, "1/4"]], [["1/4", "1/2"]], [["1/2", 1]]]],
            },
            "queries": {"X": {"type": "box", "bounds": [[0, 1]]}, "P": {"type": "points", "points": [["1/3"]]}},
            "expected": [{"query": "P", "model": "D1", "value": 0, "citation": "a point meets at most two cells"}],
        },
    ],
}


def test_load_scenarios_round_trip():
    scs = load_scenarios(json.dumps(FILE))
    assert [s.name for s in scs] == ["file_cantor", "file_explicit"]
    assert run_scenario(scs[0], FAST).passed
    assert scs[1].max_level == 2
    assert run_scenario(scs[1], FAST).passed
    with pytest.raises(ValueError):
        scs[1].structure.level(3)


def test_corrupted_value_fails():
    bad = json.loads(json.dumps(FILE))
    bad["scenarios"][0]["expected"][0]["value"] = 0.7
    sc = load_scenarios(json.dumps(bad))[0]
    assert not run_scenario(sc, FAST).passed


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(schema_version="2.0"),
        lambda d: d["scenarios"][0].pop("queries"),
        lambda d: d["scenarios"][0]["expected"][0].update(model="D7"),
        lambda d: d["scenarios"][0]["expected"][0].update(citation=""),
        lambda d: d["scenarios"][0]["queries"].update(B={"type": "box"}),
        lambda d: d["scenarios"][0]["expected"][0].update(value="lots"),
    ],
)
def test_schema_rejects_malformed_files(mutate):
    bad = json.loads(json.dumps(FILE))
    mutate(bad)
    with pytest.raises(jsonschema.ValidationError):
        load_scenarios(json.dumps(bad))


def test_check_refinement_on_file_structure():
    fs = load_scenarios(json.dumps(FILE))[1].structure
    assert check_refinement(fs, 2).ok
