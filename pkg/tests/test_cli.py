import io
import json
import subprocess
import sys
import time

import pytest

from fracdim.cli import main, parse_model

from conftest import LOG2_3, LOG5_2
from test_scenarios import FILE


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def run_process(*argv, env=None):
    return subprocess.run([sys.executable, "-m", "fracdim.cli", *argv], capture_output=True, text=True, env=env,
                          timeout=300)


@pytest.mark.parametrize("text,model", [("2", "D2"), ("d2", "D2"), ("II", "D2"), ("box", "BOX"), ("h", "H"),
                                        ("VI", "D6")])
def test_parse_model(text, model):
    assert parse_model(text) == model


def test_dims_cantor_model_two():
    code, text = run("dims", "cantor_ifs", "--model", "2", "--format", "json")
    assert code == 0
    doc = json.loads(text)
    assert doc["schema_version"] == "1.0"
    (rec,) = doc["records"]
    assert rec["model"] == "D2" and rec["status"] == "converged"
    assert rec["value"] == pytest.approx(LOG2_3, abs=1e-12)
    assert {"scenario", "model", "value", "lower", "upper", "status", "citation"} <= rec.keys()


def test_dims_stuck_half_precondition_exits_two():
    code, text = run("dims", "stuck_half", "--model", "3")
    assert code == 2
    assert "undefined-precondition" in text
    assert "vanish" in text or "0" in text


def test_dims_hilbert_csv_ratio_column():
    code, text = run("dims", "hilbert5", "--model", "3", "--format", "csv")
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0] == "scenario,query,model,n_or_delta,statistic,ratio"
    last = lines[-1].split(",")
    assert abs(float(last[-1]) - LOG5_2) < 1e-2


def test_dims_analytic_only_and_infinite():
    code, text = run("dims", "cantor_ifs", "--model", "H", "--format", "json")
    assert code == 0 and json.loads(text)["records"][0]["status"] == "analytic-only"
    code, text = run("dims", "comb_space", "--query", "closure", "--model", "1", "--format", "json")
    assert code == 0 and json.loads(text)["records"][0]["value"] == "inf"


def test_dims_explain_dumps_covers():
    code, text = run("dims", "unit_interval", "--model", "4", "--depth", "5", "--depth-cap", "2", "--explain",
                     "--format", "json")
    assert code == 0
    rec = json.loads(text)["records"][0]
    assert rec["covers"] and all(c["optimality"] == "exact" for c in rec["covers"])


def test_dims_usage_errors():
    assert run("dims", "no_such_scenario")[0] == 2
    assert run("dims", "cantor_ifs", "--query", "nope")[0] == 2
    assert run("dims", "cantor_ifs", "--model", "D9")[0] == 2
    assert run("dims", "cantor_ifs", "--depth", "0")[0] == 2
    assert run("dims", "cantor_ifs", "--s-tol", "0")[0] == 2
    assert run("dims", "cantor_ifs", "--bogus")[0] == 2
    assert run()[0] == 2


@pytest.mark.parametrize("factors,expected", [(("1/3", "1/3"), "0.630929753571"), (("1/2", "1/4"), "0.694241913631"),
                                              (("0.5", "0.5"), "1.0")])
def test_moran(factors, expected):
    code, text = run("moran", *factors)
    assert code == 0 and text.strip() == expected


@pytest.mark.parametrize("factors", [("1.5",), ("0",), ("x",), ("1/0",)])
def test_moran_rejects_bad_factors(factors):
    assert run("moran", *factors)[0] == 2


def test_scenario_list_formats():
    code, text = run("scenario-list", "--format", "json")
    assert code == 0
    recs = json.loads(text)["records"]
    assert len({r["scenario"] for r in recs}) >= 16
    assert all(r["citation"] for r in recs)
    code, text = run("scenario-list", "--model", "H", "--format", "csv")
    assert code == 0 and all(line.split(",")[2] == "H" for line in text.strip().splitlines()[1:])


def test_verify_model_filter():
    code, text = run("verify", "--model", "4", "--format", "json")
    assert code == 0
    recs = json.loads(text)["records"]
    assert recs and {r["model"] for r in recs} == {"D4"}


def test_verify_with_scenario_file(tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(FILE))
    assert run("verify", "--scenario-file", str(good))[0] == 0
    bad_doc = json.loads(json.dumps(FILE))
    bad_doc["scenarios"][0]["expected"][1]["value"] = 0.9
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(bad_doc))
    code, text = run("verify", "--scenario-file", str(bad))
    assert code == 1 and "FAIL" in text
    broken = tmp_path / "broken.json"
    broken.write_text('{"schema_version": "1.0"}')
    assert run("verify", "--scenario-file", str(broken))[0] == 2
    assert run("verify", "--scenario-file", str(tmp_path / "missing.json"))[0] == 2
    code, text = run("dims", "file_cantor", "--scenario-file", str(good), "--model", "3", "--format", "json")
    assert code == 0 and json.loads(text)["records"][0]["value"] == pytest.approx(LOG2_3, abs=1e-10)


def test_table1_command():
    code, text = run("table1", "--format", "json")
    assert code == 0
    recs = json.loads(text)["records"]
    assert len(recs) == 40 and all(r["verdict"] in ("confirmed", "reproduced") for r in recs)
    code, text = run("table1", "--model", "D2")
    assert code == 0 and "D2" in text


def test_depth_environment_variable(monkeypatch):
    monkeypatch.setenv("FRACDIM_DEPTH", "5")
    code, text = run("dims", "cantor_ifs", "--model", "1", "--format", "csv")
    # header plus one row per level
    assert code == 0 and len(text.strip().splitlines()) == 6
    code, text = run("dims", "cantor_ifs", "--model", "1", "--depth", "3", "--format", "csv")
    assert len(text.strip().splitlines()) == 4
    monkeypatch.setenv("FRACDIM_DEPTH", "zero")
    assert run("dims", "cantor_ifs", "--model", "1")[0] == 2


def test_output_is_byte_identical_across_processes():
    args = ("dims", "cantor_ifs", "--model", "2", "--model", "3", "--depth", "8")
    for fmt in ("json", "csv"):
        a, b = run_process(*args, "--format", fmt), run_process(*args, "--format", fmt)
        assert a.returncode == b.returncode == 0
        assert a.stdout == b.stdout and a.stdout


def test_default_verify_runs_under_a_minute():
    t0 = time.perf_counter()
    res = run_process("verify")
    elapsed = time.perf_counter() - t0
    assert res.returncode == 0, res.stdout[-2000:]
    assert " 0 failed" in res.stdout
    assert elapsed < 60
