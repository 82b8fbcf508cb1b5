import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import jsonschema
import numpy as np
import pytest

from nlkg.cli import dumps, main

CLASSIFY_SCHEMA = {
    "type": "object",
    "required": ["family", "model", "model_id", "lambda_model", "roster_index", "borderline", "rank", "lambda"],
    "properties": {
        "family": {"enum": ["Z1_plus", "Z1_zero", "Z1_minus", "Z2", "Rank0", "Rank2_nonZ2", "Rank3"]},
        "model": {"type": ["string", "null"]},
        "roster_index": {"type": ["integer", "null"]},
        "borderline": {"type": "boolean"},
        "rank": {"type": "integer", "minimum": 0, "maximum": 3},
        "lambda": {"type": "array", "items": {"type": "number"}, "minItems": 8, "maxItems": 8},
    },
}

ERROR_SCHEMA = {
    "type": "object",
    "required": ["error", "message", "exit_code"],
    "properties": {"error": {"type": "string"}, "message": {"type": "string"}, "exit_code": {"enum": [2, 3, 4]}},
}


def call(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def call_json(capsys, *argv):
    code, out, err = call(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_classify_output(capsys):
    got = call_json(capsys, "classify", "--lambda", "[1,3,3,1,1,3,3,1]")
    jsonschema.validate(got, CLASSIFY_SCHEMA)
    assert got["family"] == "Z1_plus" and got["model_id"] == "Decoupled(1,0)"


def test_classify_model_id_and_unreducible(capsys):
    got = call_json(capsys, "classify", "--system", "NewA(1)")
    assert (got["family"], got["model"], got["roster_index"]) == ("Z1_zero", "NewA", 6)
    got = call_json(capsys, "classify", "--lambda", "[1,2,3,4,5,6,7,9]")
    jsonschema.validate(got, CLASSIFY_SCHEMA)
    assert got["family"] == "Rank3" and got["model"] is None


def test_classify_from_matrix(capsys):
    got = call_json(capsys, "classify", "--matrix", '{"A": [[0,0,-3],[0,0,0],[0,0,0]]}')
    assert got["model_id"] == "Sunagawa" and got["lambda"] == [0, 0, 0, 0, 1, 0, 0, 0]


def test_reduce_reports_exact_rationals(capsys):
    got = call_json(capsys, "reduce", "--lambda", "[0,0,3,1,0,0,0,1]")
    assert got["model_id"] == "NewA(1)"
    assert got["exact_values"]["/params/k"] == "3/4" and got["exact_values"]["/params/ell"] == "3/2"
    assert np.allclose(got["total"], [[0, 1], [1.5, 0.75]])


def test_reduce_z2_exact_chain(capsys):
    got = call_json(capsys, "reduce", "--lambda", "[1,2,1,0,0,1,2,1]")
    assert got["model_id"] == "NewB(1)" and got["total"] == [[1, 1], [1, 0]] and got["exact"]


def test_decimal_input_is_exact_unless_asked(capsys):
    got = call_json(capsys, "reduce", "--lambda", "[0.25,0,0.25,0,0,0.25,0,0.25]")
    assert got["exact"] and got["exact_values"]["/total/0/0"] == "1/2"
    got = call_json(capsys, "reduce", "--inexact", "--lambda", "[0.25,0,0.25,0,0,0.25,0,0.25]")
    assert not got["exact"] and "exact_values" not in got


def test_transform_matches_library(capsys):
    got = call_json(capsys, "transform", "--lambda", "[1,0,3,0,0,3,0,1]", "--m", '{"m": [[1,1],[1,-1]]}')
    assert got["lambda"] == [1, 0, 0, 0, 0, 0, 0, 1] == got["lambda_by_matrix"]
    assert got["det"] == -2


def test_input_from_file_and_stdin(capsys, tmp_path, monkeypatch):
    f = tmp_path / "lam.json"
    f.write_text('{"lambda": [0, 0, 0, 0, 1, 0, 0, 0]}')
    assert call_json(capsys, "classify", "--lambda", f"@{f}")["model_id"] == "Sunagawa"
    monkeypatch.setattr(sys, "stdin", io.StringIO("[1,0,-3,0,0,3,0,-1]"))
    assert call_json(capsys, "classify", "--lambda", "-")["model_id"] == "New2"


def test_catalog(capsys):
    assert len(call_json(capsys, "catalog")["models"]) == 7
    assert len(call_json(capsys, "catalog", "--signed")["models"]) == 14


def test_ode_csv(capsys):
    code, out, _ = call(capsys, "ode", "--system", "NewB(1)", "--alpha0", "0.5", "0", "0", "0.5", "--s-end", "0.01")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:5] == ["s", "re_alpha1", "im_alpha1", "re_alpha2", "im_alpha2"] and len(rows[0]) == 7
    assert len(rows) == 12
    first, last = [float(x) for x in rows[1]], [float(x) for x in rows[-1]]
    assert first[:5] == [0, 0.5, 0, 0, 0.5]
    # conserved columns do not move
    assert last[5:] == pytest.approx(first[5:], abs=1e-14)


def test_ode_json_and_nonresonant(capsys):
    got = call_json(capsys, "ode", "--system", "New3", "--alpha0", "0.1", "0", "0.2", "0",
                    "--s-end", "0.01", "--format", "json", "--experimental")
    assert isinstance(got, dict)
    code, out, _ = call(capsys, "ode", "--system", "NewA(1)", "--alpha0", "0.1", "0", "0.2", "0",
                        "--nonresonant", "--tau0", "10", "--s-end", "0.01", "--dt", "0.01")
    assert code == 0 and "tau" in out.splitlines()[0].split(",")


def test_pde_writes_outputs(capsys, tmp_path):
    cfg = {"coefficients": "NewA(1)", "epsilon": 0.05, "X": 96.0, "N": 1024, "dt": 0.05, "T": 80.0,
           "snapshot_every": 2, "snapshot_window": 2.0, "vertex_offset": 0.0,
           "taus": [14, 20, 30, 45, 70], "z": [0.0]}
    got = call_json(capsys, "pde", "--config", json.dumps(cfg), "--out-dir", str(tmp_path))
    assert isinstance(got, dict)
    for name in ("final_state.csv", "snapshots.npz", "diagnostics.csv", "fit.json"):
        assert (tmp_path / name).exists()
    header = (tmp_path / "final_state.csv").read_text().splitlines()[0]
    assert header == "x,u1,v1,u2,v2"
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert fit["fit_error"] is None and fit["fit"]["n"] == 5 == got["fit"]["n"]
    diag = (tmp_path / "diagnostics.csv").read_text().splitlines()
    assert diag[0].startswith("tau,z,re_alpha1") and len(diag) == 6


@pytest.mark.parametrize("argv,code,kind", [
    (["transform", "--lambda", "[1,0,0,0,0,0,0,1]", "--m", '{"m": [[1,2],[2,4]]}'], 2, "invalid_transform"),
    (["classify", "--matrix", '{"A": [[1,0,0],[0,1,0],[0,0,1]]}'], 2, "not_traceless"),
    (["reduce", "--lambda", "[1,2,3,4,5,6,7,9]"], 3, "unsupported_class"),
    (["ode", "--system", "New2", "--alpha0", "10", "0", "10", "0", "--s-end", "5"], 4, "blow_up"),
    (["classify", "--lambda", "[1,2,3]"], 2, "invalid_input"),
    (["classify", "--lambda", "not json"], 2, "invalid_input"),
    (["classify", "--lambda", "[0,0,0,0,1,0,0,0]", "--system", "Sunagawa"], 2, "invalid_input"),
])
def test_error_paths(capsys, argv, code, kind):
    got, _, err = call(capsys, *argv)
    payload = json.loads(err.strip().splitlines()[-1])
    jsonschema.validate(payload, ERROR_SCHEMA)
    assert got == code == payload["exit_code"] and payload["error"] == kind


def test_pde_blow_up_exit_code(capsys):
    cfg = {"coefficients": "Decoupled(1,1)", "epsilon": 3.0, "X": 64.0, "N": 512, "dt": 0.01, "T": 10.0,
           "check_support": False}
    code, out, err = call(capsys, "pde", "--config", json.dumps(cfg))
    assert code == 4 and json.loads(err.strip().splitlines()[-1])["error"] == "blow_up"


def test_dumps_marks_exact_values():
    text = dumps({"k": Fraction(3, 4), "x": 0.1, "n": 2})
    got = json.loads(text)
    assert got["k"] == 0.75 and got["exact_values"] == {"/k": "3/4"}
    assert "0.10000000000000001" in text


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nlkg", "classify", "--system", "New3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["model_id"] == "New3"
