from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from bimetric import catalog
from bimetric.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_eval_polar_christoffel(capsys):
    code, out, _ = run(capsys, "eval", "polar_flat", "--kind", "christoffel", "--point", "2,0.7")
    assert code == 0
    assert "Gamma^r_theta,theta = -2.0" in out
    assert "Gamma^theta_r,theta = 0.5" in out


def test_eval_json(capsys):
    code, out, _ = run(capsys, "eval", "euclidean2", "--kind", "riemann", "--point", "0.3,-4", "--json")
    assert code == 0
    data = json.loads(out)
    assert data["schema"] == 1
    assert data["index_order"].startswith("[l][i][j][k]")
    assert not np.any(data["components"])


def test_eval_scalar_sphere(capsys):
    code, out, _ = run(capsys, "eval", "sphere_unit", "--kind", "scalar", "--point", "pi/3,1")
    assert code == 0
    assert abs(float(out.split("=")[1]) - 2.0) <= 1e-6


def test_eval_with_background(capsys):
    code, out, _ = run(
        capsys, "eval", "sphere_unit", "--background", "sphere_unit", "--kind", "ricci", "--point", "1,1", "--json"
    )
    assert code == 0
    assert json.loads(out)["components"] == [[0.0, 0.0], [0.0, 0.0]]


def test_eval_fd_mode(capsys):
    code, out, _ = run(capsys, "eval", "sphere_unit", "--kind", "scalar", "--point", "1,1", "--mode", "fd")
    assert code == 0
    assert abs(float(out.split("=")[1]) - 2.0) <= 1e-4


def test_check_theorem2(capsys):
    code, out, _ = run(capsys, "check", "theorem2", "polar_flat", "sphere_unit", "--samples", "50", "--seed", "7")
    report = json.loads(out)
    assert code == 0
    assert report["passed"] and report["max_residual"] < 1e-7
    assert report["samples"] == 50 and report["seed"] == 7 and report["schema"] == 1


def test_check_flatness(capsys):
    assert run(capsys, "check", "flatness", "sphere_unit", "polar_flat")[0] == 0
    code, out, _ = run(capsys, "check", "flatness", "polar_flat", "sphere_unit")
    assert code == 1
    assert json.loads(out)["max_residual"] >= 0.1


def test_check_same_file_thrice(capsys, tmp_path):
    path = tmp_path / "e.json"
    path.write_text(catalog.random_metric(3, 2).to_json())
    code, out, _ = run(capsys, "check", "cocycle-gamma", str(path), str(path), str(path))
    assert code == 0
    assert json.loads(out)["max_residual"] == 0.0


def test_check_passed_iff_within_tolerance(capsys):
    code, out, _ = run(capsys, "check", "theorem1", "random:2:1", "random:2:2", "--tol", "1e-30")
    report = json.loads(out)
    assert code == 1 and not report["passed"]
    assert report["max_residual"] > report["tolerance"]


def test_report_is_deterministic(capsys):
    argv = ("check", "ricci-identity", "random:3:4", "--samples", "10", "--seed", "3")
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_exit_code_parse_error(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "bad", "dimension": 2, "coordinates": ["x", "y"], "components": [["1", "0"], ["0", "1+*y"]]}')
    code, _, err = run(capsys, "eval", str(bad), "--kind", "scalar", "--point", "1,1")
    assert code == 2
    assert str(bad) in err and "byte offset 2" in err
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    assert run(capsys, "check", "compatibility", str(broken))[0] == 2
    code, _, err = run(capsys, "eval", "polar_flat", "--kind", "scalar", "--point", "1,(2")
    assert code == 2 and "byte offset 4" in err


def test_exit_code_domain_error(capsys):
    code, _, err = run(capsys, "eval", "polar_flat", "--kind", "christoffel", "--point", "0,1")
    assert code == 3
    assert "domain guard" in err
    assert run(capsys, "eval", "poincare_half", "--kind", "scalar", "--point", "0,-1")[0] == 3


def test_exit_code_configuration(capsys, tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    a.write_text(json.dumps({"name": "a", "dimension": 1, "coordinates": ["x"], "components": [["1"]], "sample_region": [[0, 1]]}))
    b.write_text(json.dumps({"name": "b", "dimension": 1, "coordinates": ["x"], "components": [["2"]], "sample_region": [[2, 3]]}))
    code, _, err = run(capsys, "check", "theorem2", str(a), str(b))
    assert code == 4 and "do not intersect" in err
    assert run(capsys, "check", "theorem2", "polar_flat", "euclidean3")[0] == 4
    assert run(capsys, "check", "theorem2", "polar_flat")[0] == 4
    assert run(capsys, "eval", "no_such_metric", "--kind", "scalar", "--point", "1,1")[0] == 4
    assert run(capsys, "suite", "--dims", "4")[0] == 4


def test_suite_small(capsys):
    code, out, _ = run(capsys, "suite", "--dims", "2", "--seed", "5", "--samples", "5")
    report = json.loads(out)
    assert code == 0 and report["passed"]
    assert report["total"] > 10
    assert all(r["samples"] == 5 for r in report["reports"])
    assert {r["check_name"] for r in report["reports"]} == {
        "theorem1", "theorem2", "cocycle-gamma", "cocycle-riemann", "flatness", "ricci-identity", "compatibility"
    }


def test_suite_fd(capsys):
    code, out, _ = run(capsys, "suite", "--dims", "2,3", "--seed", "1", "--samples", "5", "--mode", "fd")
    assert code == 0 and json.loads(out)["mode"] == "fd"


def test_suite_reports_sign_flip(capsys, sign_flip):
    code, out, err = run(capsys, "suite", "--dims", "2", "--samples", "5")
    assert code == 1
    failed = {r["check_name"] for r in json.loads(out)["reports"] if not r["passed"]}
    assert "theorem2" in failed
    assert "FAILED theorem2" in err


def test_manifest_command(capsys):
    code, out, _ = run(capsys, "manifest", "poincare_half")
    assert code == 0
    assert json.loads(out)["domain_guard"] == "y"


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "bimetric.cli", "eval", "euclidean3", "--kind", "scalar", "--point", "1,2,3"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "scalar = 0.0"


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["check", "no-such-check", "polar_flat"])
    assert info.value.code == 2
