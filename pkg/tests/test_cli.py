import json
import math
import shutil
import subprocess
import sys

import pytest

from hquat.cli import run

INV = json.dumps({"center": 0, "words": [{"factors": [[1, -1]]}]})
UNIT_J = json.dumps({"circle": {"a": 0, "r": 1, "M": "J", "turns": 1}})


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def q(report_value):
    return [report_value[k] for k in ("v", "w", "x", "y")]


def test_integrate_inverse_over_circle(capsys):
    code, rep, _ = call(capsys, "integrate", "--phrase", INV, "--path", UNIT_J)
    assert code == 0
    assert q(rep["value"]) == pytest.approx([0, 2 * math.pi, 0, 0], abs=1e-8)
    assert rep["refinements"] >= 1 and rep["error_estimate"] < 1e-8
    assert rep["tol"] == 1e-8 and rep["command"] == "integrate"


def test_exp_of_zero(capsys):
    code, rep, _ = call(capsys, "exp", "0")
    assert code == 0 and q(rep["value"]) == [1.0, 0.0, 0.0, 0.0]


def test_residue_of_simple_pole(capsys):
    phrase = json.dumps({"center": "1+J", "words": [{"factors": [["2K", -1]]}]})
    code, rep, _ = call(capsys, "residue", "--phrase", phrase, "--M", "L", "--r", "0.3")
    assert code == 0
    assert q(rep["value"]) == pytest.approx([0, 0, 2, 0], abs=1e-9)
    assert q(rep["closed_form"]) == [0.0, 0.0, 2.0, 0.0]


def test_ln_and_polar(capsys):
    code, rep, _ = call(capsys, "ln", "--", "-J")
    assert code == 0 and q(rep["value"]) == pytest.approx([0, 1.5 * math.pi, 0, 0])
    code, rep, _ = call(capsys, "polar", "2J")
    assert rep["value"]["rho"] == 2.0 and rep["value"]["arg"]["w"] == pytest.approx(0.25)


def test_simplify_output_is_accepted_by_eval(capsys):
    phrase = json.dumps({"center": "K", "words": [
        {"factors": [[2, 1], [3, 1]]},
        {"factors": [["J", 1]], "tail": "L"},
        {"factors": [[0, 4]]},
    ]})
    code, simp, _ = call(capsys, "simplify", "--phrase", phrase)
    assert code == 0 and len(simp["value"]["words"]) == 2
    _, direct, _ = call(capsys, "eval", "--phrase", phrase, "--at", "1+2J-L")
    _, again, _ = call(capsys, "eval", "--phrase", json.dumps(simp["value"]), "--at", "1+2J-L")
    assert q(again["value"]) == pytest.approx(q(direct["value"]), abs=1e-12)


def test_simplify_eliminates_conjugates(capsys):
    phrase = json.dumps({"center": 0, "words": [{"factors": [[1, 1, "zc"]]}]})
    _, simp, _ = call(capsys, "simplify", "--phrase", phrase)
    _, val, _ = call(capsys, "eval", "--phrase", json.dumps(simp["value"]), "--at", "1+2J")
    assert q(val["value"]) == pytest.approx([1, -2, 0, 0], abs=1e-14)


def test_dln_and_index(capsys):
    circle = json.dumps({"circle": {"a": "1", "r": 0.5, "M": "K", "turns": 3}})
    code, rep, _ = call(capsys, "dln", "--path", circle, "--at", "1")
    assert code == 0 and q(rep["value"]) == pytest.approx([0, 0, 6 * math.pi, 0], abs=1e-8)
    code, rep, _ = call(capsys, "index", "--path", circle, "--at", "1")
    assert q(rep["value"]) == pytest.approx([0, 0, 3, 0], abs=1e-9)
    assert rep["topological"] == [0, 3, 0]


def test_cauchy_and_laurent(capsys):
    square = json.dumps({"center": 0, "words": [{"factors": [[1, 2]]}]})
    code, rep, _ = call(capsys, "cauchy", "--phrase", square, "--circle", UNIT_J, "--at", "0.2+0.3J")
    assert code == 0
    assert q(rep["value"]) == pytest.approx([0.04 - 0.09, 0.12, 0, 0], abs=1e-8)
    code, rep, _ = call(capsys, "cauchy", "--phrase", square, "--circle", UNIT_J, "--at", "0.2+0.3J", "--k", "1")
    assert q(rep["value"]) == pytest.approx([0.4, 0.6, 0, 0], abs=1e-8)
    laurent = json.dumps({"center": 0, "words": [{"factors": [["J", 1]]}, {"factors": [["K", -2]]}]})
    code, rep, _ = call(capsys, "laurent", "--phrase", laurent, "--center", "0", "--r1", "0.5",
                        "--R1", "2", "--at", "0.5+0.8L", "--kmax", "2")
    assert code == 0 and len(rep["phi"]) == 3


def test_argp_and_root(capsys):
    cube = json.dumps({"center": "J", "words": [{"factors": [[1, 3]]}]})
    code, rep, _ = call(capsys, "argp", "--phrase", cube, "--path",
                        json.dumps({"circle": {"a": "J", "r": 1, "M": "L", "turns": 1}}), "--zeros", '["J"]')
    assert code == 0 and rep["passed"] and rep["delta"] < 1e-8
    code, rep, _ = call(capsys, "argp", "--phrase", cube, "--path",
                        json.dumps({"circle": {"a": "J", "r": 1, "M": "L", "turns": 1}}), "--zeros", "[]")
    assert code == 1 and not rep["passed"]
    poly = json.dumps({"center": 0, "words": [{"factors": [[1, 2]]}, {"factors": [], "tail": 1}]})
    code, rep, _ = call(capsys, "root", "--phrase", poly)
    assert code == 0 and rep["residual"] < 1e-8


def test_crcheck_pass_and_fail(capsys):
    affine = json.dumps({"center": 0, "words": [{"factors": [["1+J", 1]]}, {"factors": [], "tail": "K"}]})
    code, rep, _ = call(capsys, "crcheck", "--phrase", affine, "--at", "0.3+0.2L", "--harmonic", "--conformal")
    assert code == 0 and rep["passed"]
    assert set(rep["value"]) == {"cr", "harmonic", "conformal"}
    conj = json.dumps({"center": 0, "words": [{"factors": [[1, 1, "zc"]]}]})
    code, rep, _ = call(capsys, "crcheck", "--phrase", conj, "--at", "0.3+0.2L")
    assert code == 1 and rep["value"]["cr"]["max_residual"] >= 1.0


def test_usage_and_input_errors(capsys):
    with pytest.raises(SystemExit) as info:
        run(["frobnicate"])
    assert info.value.code == 2
    code, rep, err = call(capsys, "eval", "--phrase", "{bad json", "--at", "1")
    assert code == 2 and rep is None and "phrase" in err
    code, rep, err = call(capsys, "exp", "1+2X")
    assert code == 2
    code, rep, err = call(capsys, "cauchy", "--phrase", INV.replace("-1", "2"), "--circle", UNIT_J, "--at", "3")
    assert code == 2 and "error" in rep


def test_numerical_failure_exit_code(capsys):
    two_negative = json.dumps({"center": 0, "words": [{"factors": [["J", -1], ["K", -1]]}]})
    path = json.dumps({"polyline": ["1", "1+K", "2L"]})
    code, rep, err = call(capsys, "integrate", "--phrase", two_negative, "--path", path)
    assert code == 3 and "UnsupportedShape" in rep["error"]
    code, rep, err = call(capsys, "integrate", "--phrase", INV, "--path", UNIT_J, "--tol", "1e-30",
                          "--max-refine", "2")
    assert code == 3 and "best" in rep


def test_json_arguments_from_file_and_stdin(capsys, tmp_path, monkeypatch):
    args = {"phrase": json.loads(INV), "path": json.loads(UNIT_J)}
    f = tmp_path / "args.json"
    f.write_text(json.dumps(args))
    code, rep, _ = call(capsys, "integrate", "--json", str(f))
    assert code == 0 and rep["value"]["w"] == pytest.approx(2 * math.pi)
    import io
    monkeypatch.setattr(sys, "stdin", io.StringIO(json.dumps({"value": "J"})))
    code, rep, _ = call(capsys, "exp", "--json", "-")
    assert code == 0 and rep["value"]["v"] == pytest.approx(math.cos(1))
    monkeypatch.setattr(sys, "stdin", io.StringIO("[1, 2"))
    code, rep, _ = call(capsys, "exp", "--json", "-")
    assert code == 2


def test_reports_are_deterministic(capsys):
    argv = ["integrate", "--phrase", INV, "--path", UNIT_J, "--seed", "7"]
    run(argv)
    first = capsys.readouterr().out
    run(argv)
    second = capsys.readouterr().out
    assert first == second
    run(argv + ["--timing"])
    assert "wall_time" in json.loads(capsys.readouterr().out)


@pytest.mark.skipif(shutil.which("hquat") is None, reason="console script not installed")
def test_console_script():
    out = subprocess.run(["hquat", "exp", "0"], capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["value"]["v"] == 1.0
