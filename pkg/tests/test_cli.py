import csv
import io
import json

import pytest

from specbound import bounds
from specbound import cli as mod
from specbound.oracle import GridResult
from specbound.poly import HomoPoly, gradient_map, map_to_json, poly_to_json, power

DIAG_Q2 = {"n": 2, "p": 2, "terms": [{"j": [2, 0], "c": 1.0}, {"j": [0, 2], "c": 1.0}]}


def write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
    return str(path)


def test_bound_reports_bracket(tmp_path, capsys):
    path = write(tmp_path, "diag_q2.json", DIAG_Q2)
    assert mod.run(["bound", path, "--kmax", "4"]) == mod.EXIT_OK
    report = json.loads(capsys.readouterr().out)
    rho1 = next(s for s in report["sequences"] if s["method"] == "rho1")
    assert rho1["ks"] == [1, 2, 4]
    assert rho1["values"][1] == pytest.approx(1.27789, abs=1e-5)
    assert report["bracket"]["lower"] == pytest.approx(1.0, abs=1e-9)
    assert report["bracket"]["upper"] <= 1.27789 + 1e-9
    assert report["input"]["source"] == "diag_q2.json"


def test_bound_is_deterministic(tmp_path, capsys):
    path = write(tmp_path, "cubic.json", poly_to_json(power(HomoPoly.linear([1.0, -0.5]), 3)))
    args = ["bound", path, "--kmax", "4", "--seed", "7", "--starts", "4"]
    assert mod.run(args) == mod.EXIT_OK
    first = capsys.readouterr().out
    assert mod.run(args) == mod.EXIT_OK
    assert capsys.readouterr().out == first


def test_bound_csv_and_table(tmp_path, capsys):
    path = write(tmp_path, "diag_q2.json", DIAG_Q2)
    assert mod.run(["bound", path, "--kmax", "2", "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == {"method": "rho1", "k": "1", "value": rows[0]["value"], "terminated_by": "kmax"}
    assert rows[-1]["method"] == "bracket_upper"

    assert mod.run(["bound", path, "--kmax", "2", "--format", "table"]) == 0
    out = capsys.readouterr().out
    assert "method" in out.splitlines()[0]
    assert "bracket_lower" in out


def test_demo_passes(capsys):
    assert mod.run(["demo"]) == mod.EXIT_OK
    checks = json.loads(capsys.readouterr().out)
    assert checks and all(c["passed"] for c in checks)


def test_demo_failure_exit_code(monkeypatch, capsys):
    from specbound.demo import DemoCheck

    bad = DemoCheck(name="x", expected=1.0, actual=2.0, tolerance=1e-9, passed=False)
    monkeypatch.setattr(mod, "run_demo", lambda: [bad])
    assert mod.run(["demo"]) == mod.EXIT_DEMO_FAILED
    assert "1 of 1" in capsys.readouterr().err


def test_broken_json_is_input_error(tmp_path, capsys):
    path = write(tmp_path, "broken.json", '{"n": 2, "p": ')
    assert mod.run(["bound", path]) == mod.EXIT_INPUT
    assert "error" in capsys.readouterr().err


def test_invalid_document_is_input_error(tmp_path, capsys):
    path = write(tmp_path, "bad.json", {"n": 2, "p": 2, "terms": [{"j": [1, 0], "c": 1.0}]})
    assert mod.run(["rho1", path]) == mod.EXIT_INPUT
    path = write(tmp_path, "list.json", "[1, 2]")
    assert mod.run(["bound", path]) == mod.EXIT_INPUT
    path = write(tmp_path, "other.json", {"hello": 1})
    assert mod.run(["bound", path]) == mod.EXIT_INPUT


def test_missing_file_and_unknown_flag(tmp_path, capsys):
    assert mod.run(["bound", str(tmp_path / "nope.json")]) == mod.EXIT_INPUT
    assert mod.run(["bound", "x.json", "--frobnicate"]) == mod.EXIT_INPUT
    assert "usage" in capsys.readouterr().err


def test_bound_rejects_maps(tmp_path):
    F = gradient_map(HomoPoly.from_terms(2, 3, {(3, 0): 1.0, (0, 3): 1.0}))
    path = write(tmp_path, "map.json", map_to_json(F))
    assert mod.run(["bound", path]) == mod.EXIT_INPUT


def test_strict_budget_truncation(tmp_path, capsys):
    path = write(tmp_path, "q.json", {"n": 2, "p": 2, "terms": [
        {"j": [2, 0], "c": 1.0}, {"j": [1, 1], "c": 1.0}, {"j": [0, 2], "c": 1.0}]})
    assert mod.run(["bound", path, "--kmax", "4", "--budget", "3"]) == mod.EXIT_OK
    assert json.loads(capsys.readouterr().out)["truncated"] is True
    assert mod.run(["bound", path, "--kmax", "4", "--budget", "3", "--strict"]) == mod.EXIT_TRUNCATED
    assert mod.run(["rho1", path, "--kmax", "4", "--budget", "3", "--strict"]) == mod.EXIT_TRUNCATED


def test_bracket_violation_exit_code(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(bounds, "grid_oracle", lambda f: GridResult(value=1e6, x=[1.0, 0.0], points=1))
    path = write(tmp_path, "diag_q2.json", DIAG_Q2)
    assert mod.run(["bound", path, "--kmax", "2"]) == mod.EXIT_VIOLATION
    captured = capsys.readouterr()
    assert "Bracket violation" in captured.err
    assert json.loads(captured.out)["bracket"]["lower"] == 1e6


def test_single_method_commands(tmp_path, capsys):
    cube = {"dims": [2, 2, 2], "dense": [1.0] * 8}
    tpath = write(tmp_path, "ones.json", cube)

    assert mod.run(["rho1", tpath, "--kmax", "8"]) == 0
    seq = json.loads(capsys.readouterr().out)
    assert seq["values"] == pytest.approx([2**1.5] * len(seq["values"]), rel=1e-9)

    assert mod.run(["cw", tpath]) == 0
    assert json.loads(capsys.readouterr().out)["bound"] == pytest.approx(4.0, rel=1e-12)

    assert mod.run(["matrix3", tpath]) == 0
    single = json.loads(capsys.readouterr().out)
    assert single["method"] == "matrix_d3"
    assert single["value"] == pytest.approx(2**1.5, rel=1e-9)

    F = gradient_map(HomoPoly.from_terms(2, 3, {(3, 0): 1.0, (0, 3): 1.0}))
    mpath = write(tmp_path, "map.json", map_to_json(F))
    assert mod.run(["rho2", mpath, "--kmax", "3"]) == 0
    seq = json.loads(capsys.readouterr().out)
    assert seq["values"][1] == pytest.approx(2 ** (1 / 6), rel=1e-9)


def test_cw_honours_tolerance(tmp_path, capsys):
    tpath = write(tmp_path, "ramp.json", {"dims": [2, 2, 2, 2], "dense": [float(v) for v in range(1, 17)]})
    assert mod.run(["cw", tpath]) == 0
    tight = json.loads(capsys.readouterr().out)
    assert mod.run(["cw", tpath, "--tol", "0.5"]) == 0
    loose = json.loads(capsys.readouterr().out)
    assert tight["converged"] and loose["converged"]
    assert loose["iterations"] < tight["iterations"]


def test_convert_round_trip(tmp_path, capsys):
    cube = power(HomoPoly.linear([1.0, 1.0]), 3)
    ppath = write(tmp_path, "cube.json", poly_to_json(cube))
    assert mod.run(["convert", ppath, "--to", "tensor"]) == 0
    tensor_doc = json.loads(capsys.readouterr().out)
    assert tensor_doc["dims"] == [2, 2, 2]
    assert [e["v"] for e in tensor_doc["entries"]] == [1.0] * 8

    tpath = write(tmp_path, "cube_tensor.json", tensor_doc)
    assert mod.run(["convert", tpath, "--to", "poly"]) == 0
    assert json.loads(capsys.readouterr().out) == json.loads(poly_to_json(cube))


def test_output_file_and_save(tmp_path, monkeypatch, capsys):
    out_dir = tmp_path / "reports"
    monkeypatch.setenv("SPECBOUND_OUTPUT_DIR", str(out_dir))
    path = write(tmp_path, "diag_q2.json", DIAG_Q2)
    target = tmp_path / "report.json"
    assert mod.run(["bound", path, "--kmax", "2", "-o", str(target), "--save"]) == 0
    assert capsys.readouterr().out == ""
    saved = list(out_dir.glob("bound_*.json"))
    assert len(saved) == 1
    assert saved[0].read_text() == target.read_text()
