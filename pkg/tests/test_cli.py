import json
import subprocess
import sys

import pytest

from carnot.cli import main
from carnot.curves import piecewise_constant


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_group_summary(capsys):
    code, out, _ = run(capsys, "group", "engel")
    rep = json.loads(out)
    assert code == 0
    assert rep["layer_dims"] == [2, 1, 1] and rep["tool"] == "carnot" and rep["spec_digest"]
    assert out == json.dumps(rep, sort_keys=True, indent=2) + "\n"


@pytest.mark.parametrize("argv,code,tag", [
    (["rigidity", "engel", "--vector", "1,0"], 0, "Rigid"),
    (["rigidity", "superengel", "--vector", "0,0,1"], 0, "NotRigid"),
    (["pliability", "heisenberg:1", "--vector", "1,0"], 0, "Pliable"),
    (["pliability", "engel", "--vector", "1,0"], 0, "NotPliable"),
    (["pliability", "superengel", "--vector", "0,0,1"], 2, "Unknown"),
    (["pliability", "--group", "freequot:3", "--vector", "1,1/2,-2"], 0, "Pliable"),
])
def test_verdict_exit_codes(capsys, argv, code, tag):
    c, out, _ = run(capsys, *argv)
    assert c == code and json.loads(out)["tag"] == tag


def test_output_is_byte_identical_across_runs(capsys):
    argv = ["probe", "superengel", "--vector", "0,0,1", "--samples", "200", "--seed", "3"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b and json.loads(a)["separated"]


@pytest.mark.parametrize("argv", [
    ["rigidity", "nope", "--vector", "1"],
    ["rigidity", "engel", "--vector", "1"],
    ["rigidity", "engel", "--vector", "a,b"],
    ["rigidity", "engel"],
    ["whitney", "check", "engel"],
    ["whitney", "counterexample", "heisenberg:1", "--vector", "1,0"],
])
def test_errors_exit_1(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 1 and out == "" and err.startswith("carnot: error:")


def test_usage_error_exit_1():
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 1


def test_malformed_json_reports_position(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"K": [0,\n 1,, 2]}')
    code, _, err = run(capsys, "whitney", "check", "engel", "--data", str(bad))
    assert code == 1 and ":2:" in err


def test_whitney_counterexample_then_check(capsys, tmp_path):
    path = tmp_path / "ce.json"
    code, out, _ = run(capsys, "whitney", "counterexample", "engel", "--nmax", "6", "--out", str(path))
    assert code == 0 and out == ""
    rep = json.loads(path.read_text())
    assert rep["telescoping_bound"] is True
    code, out, _ = run(capsys, "whitney", "check", "--group", "engel", "--data", str(path))
    rep = json.loads(out)
    assert code == 0 and rep["monotone"] and rep["decay_exponent"] > 0
    code, _, err = run(capsys, "whitney", "extend", "engel", "--data", str(path))
    assert code == 1 and "step <= 2" in err


def test_curve_integrate_and_lusin(capsys, tmp_path):
    ctrl = piecewise_constant([[1, 0], [0, 1]], [0.5, 0.5])
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"control": ctrl.to_json()}))
    code, out, _ = run(capsys, "curve", "integrate", "heisenberg:1", "--control", str(path))
    rep = json.loads(out)
    assert code == 0 and rep["endpoint"] == pytest.approx([0.5, 0.5, 0.125])
    code, out, _ = run(capsys, "curve", "integrate", "heisenberg:1", "--control", str(path),
                       "--format", "csv", "--step-size", "0.5")
    assert out.splitlines()[-1].split(",")[-1] == "0.125"
    code, out, _ = run(capsys, "lusin", "heisenberg:1", "--control", str(path), "--epsilon", "0.1")
    rep = json.loads(out)
    assert code == 0 and rep["ok"] and rep["complement_measure"] == pytest.approx(0.1)


def test_json_group_spec_file(capsys, tmp_path):
    spec = tmp_path / "g.json"
    spec.write_text(json.dumps({"generators": 2, "step": 4, "relations": [{"112": 1}], "name": "mine"}))
    code, out, _ = run(capsys, "group", str(spec))
    assert code == 0 and json.loads(out)["layer_dims"] == [2, 1, 1, 1]


def test_cache_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("CARNOT_CACHE_DIR", str(tmp_path))
    from carnot.lie_core import build_free_nilpotent
    a = build_free_nilpotent(2, 4)
    assert (tmp_path / "free_2_4.json").exists()
    b = build_free_nilpotent(2, 4)
    assert a.table == b.table


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "carnot", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "0.1.0" in r.stdout


@pytest.mark.parametrize("spec,dims", [("engel", [2, 1, 1]), ("free:2:2", [2, 1]), ("heisenberg:2", [4, 1])])
def test_group_examples(capsys, spec, dims):
    code, out, _ = run(capsys, "group", spec)
    rep = json.loads(out)
    assert code == 0 and rep["layer_dims"] == dims and rep["dim"] == sum(dims)


def test_zero_vector_example(capsys):
    code, out, _ = run(capsys, "pliability", "heisenberg:1", "--vector", "0,0")
    rep = json.loads(out)
    assert code == 0 and rep["tag"] == "Pliable" and rep["certificate"] == "ZeroVector"
