import json
import subprocess
import sys

import jsonschema
import pytest

from presdec.cli import SCHEMA_PATH, _bound_text, main, parse_pi
from presdec.mondec import equivalent
from presdec.smtlib import parse_formula

SUM = "(declare-const x Int)(declare-const y Int)\n(assert (>= (+ x y) 2))\n"
EQ = "(declare-const x Int)(declare-const y Int)\n(assert (= x y))\n"
PI = "(declare-const x Int)(declare-const y Int)(declare-const z Int)\n(assert (and (= z (+ x (* 2 y))) (< z 5)))\n"
EXISTS = "(declare-const y Int)\n(assert (exists ((x Int)) (and (= (mod x 2) 0) (>= y 3))))\n"
COUPLED = "(declare-const y Int)\n(assert (exists ((x Int)) (= x y)))\n"


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return _write


@pytest.fixture(scope="module")
def schema():
    return json.loads(SCHEMA_PATH.read_text())


def _fill(arg, files):
    key = arg[1:-1]
    return files[key] if arg.startswith("{") and key in files else arg


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_check_text_golden(capsys, write):
    code, out, _ = run(capsys, "check", write("sum.smt2", SUM))
    assert code == 0
    assert out == (
        "x: decomposable (bound 8388608, minimal bound 2)\n"
        "y: decomposable (bound 8388608, minimal bound 2)\n"
        "decomposable\n"
    )


def test_non_decomposable_is_a_successful_verdict(capsys, write):
    code, out, _ = run(capsys, "check", write("eq.smt2", EQ), "--var", "x")
    assert code == 0
    assert out.splitlines()[0] == "x: non-decomposable (bound 2097152)"
    assert out.splitlines()[-1] == "non-decomposable"


@pytest.mark.parametrize(
    "argv",
    [
        ("check", "{sum}", "--format", "json"),
        ("check", "{eq}", "--format", "json", "--no-bound-search"),
        ("check", "{pi}", "--block", "x,y", "--format", "json"),
        ("decompose", "{sum}", "--format", "json"),
        ("qe", "{ex}", "--format", "json"),
    ],
)
def test_json_reports_validate(capsys, write, schema, argv):
    files = {"sum": write("sum.smt2", SUM), "eq": write("eq.smt2", EQ), "pi": write("pi.smt2", PI), "ex": write("ex.smt2", EXISTS)}
    code, out, _ = run(capsys, *(_fill(a, files) for a in argv))
    assert code == 0
    report = json.loads(out)
    jsonschema.validate(report, schema)
    assert report["command"] == argv[0]


def test_decompose_var_output_is_equivalent(capsys, write):
    code, out, _ = run(capsys, "decompose", write("sum.smt2", SUM), "--var", "x")
    assert code == 0
    dec = parse_formula(out).formula
    assert equivalent(dec, parse_formula(SUM).formula) is None


def test_decompose_pi_writes_file(capsys, write, tmp_path):
    dest = tmp_path / "out.smt2"
    code, out, _ = run(capsys, "decompose", write("pi.smt2", PI), "--pi", "{x},{y},{z}", "--out", str(dest))
    assert code == 0 and "wrote" in out
    assert equivalent(parse_formula(dest.read_text()).formula, parse_formula(PI).formula) is None


def test_decompose_disjunct_count(capsys, write):
    text = "(declare-const x Int)(declare-const y Int)(assert (<= (+ x y) 8))"
    code, out, _ = run(capsys, "decompose", write("le.smt2", text), "--var", "x", "--format", "text")
    assert code == 0
    n = int(out.split()[1])
    assert n >= 9


def test_decompose_monadic_input(capsys, write):
    text = "(declare-const x Int)(declare-const y Int)(assert (or (>= x 3) (= (mod y 2) 1)))"
    code, out, _ = run(capsys, "decompose", write("m.smt2", text))
    assert code == 0
    assert equivalent(parse_formula(out).formula, parse_formula(text).formula) is None


def test_qe(capsys, write):
    code, out, _ = run(capsys, "qe", write("ex.smt2", EXISTS))
    assert code == 0 and "(assert (>= y 3))" in out


def test_qe_not_decomposable_exit_3(capsys, write):
    code, _, err = run(capsys, "qe", write("coupled.smt2", COUPLED))
    assert code == 3
    assert "not decomposable; fast path inapplicable" in err


def test_decompose_not_decomposable_exit_3(capsys, write):
    code, _, _ = run(capsys, "decompose", write("eq.smt2", EQ), "--var", "x")
    assert code == 3


@pytest.mark.parametrize(
    "argv",
    [
        ("check", "missing.smt2"),
        ("check", "{sum}", "--var", "q"),
        ("check", "{sum}", "--pi", "{x}"),
        ("check", "{bad}"),
        ("frobnicate",),
        ("qe", "{sum}"),
    ],
)
def test_usage_errors_exit_2(capsys, write, argv):
    files = {"sum": write("sum.smt2", SUM), "bad": write("bad.smt2", "(assert (>= (* x x) 1))")}
    code, _, _ = run(capsys, *(_fill(a, files) for a in argv))
    assert code == 2


def test_parse_error_has_location(capsys, write):
    path = write("bad.smt2", "(declare-const x Int)\n(assert (>= (* x x) 1))")
    code, _, err = run(capsys, "check", path)
    assert code == 2 and err.startswith(f"{path}:2:")


def test_resource_limit_exit_4(capsys, write):
    text = "(declare-const x Int)(declare-const y Int)(assert (<= (+ x y) 64))"
    code, _, err = run(capsys, "decompose", write("big.smt2", text), "--var", "x", "--max-disjuncts", "10")
    assert code == 4 and "resource limit" in err


def test_strlen_rewrite(capsys, tmp_path):
    from pathlib import Path

    corpus = Path(__file__).resolve().parent.parent / "corpus" / "strlen"
    out_dir = tmp_path / "rw"
    code, out, _ = run(capsys, "strlen", str(corpus), "--rewrite", "--out", str(out_dir))
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split()[:1] == ["Benchmarks"]
    assert lines[1].split() == ["12", "11", "9", "6", "3", "2"]
    assert len(list(out_dir.glob("*.smt2"))) == 6


def test_parse_pi_and_bound_text():
    assert parse_pi("{x},{y, z}") == [["x"], ["y", "z"]]
    with pytest.raises(Exception):
        parse_pi("x,y")
    assert _bound_text(2**40) == "2^40"
    assert _bound_text(2**40 + 3) == "2^40 + 3"
    assert _bound_text(12) == "12"


def test_console_script():
    out = subprocess.run(
        [sys.executable, "-m", "presdec.cli", "--version"], capture_output=True, text=True, check=True
    )
    assert out.stdout.startswith("presdec ")
