import pytest
from hypothesis import given

from oracles import formulas, holds, points
from presdec.errors import NonlinearTerm, ParseError, SmtSyntaxError, UnsupportedSort
from presdec.formula import CongBin, CongUn, V, free_vars
from presdec.smtlib import (
    extract_length_abstraction,
    formula_to_smt,
    parse_formula,
    parse_sexprs,
    print_formula,
    print_script,
)

NAMES = ("x", "y", "z")


def parse(body: str, decls=("x", "y", "z")):
    head = "".join(f"(declare-const {v} Int)" for v in decls)
    return parse_formula(head + body).formula


def test_sexpr_spans_and_comments():
    es = parse_sexprs("; comment\n(assert\n  (>= x 1))")
    assert len(es) == 1
    inner = es[0].items[1]
    assert inner.span.line == 3 and inner.span.column == 3


@pytest.mark.parametrize(
    "text, env, expected",
    [
        ("(assert (>= (+ x (* 2 y)) 5))", {"x": 1, "y": 2}, True),
        ("(assert (< x y))", {"x": 3, "y": 3}, False),
        ("(assert (= x y z))", {"x": 2, "y": 2, "z": 2}, True),
        ("(assert (distinct x y))", {"x": 2, "y": 2}, False),
        ("(assert (=> (> x 2) (< y 1)))", {"x": 3, "y": 0}, True),
        ("(assert (xor (> x 2) (> y 2)))", {"x": 3, "y": 3}, False),
        ("(assert (ite (> x 2) (> y 2) (= y 0)))", {"x": 0, "y": 0}, True),
        ("(assert (let ((s (+ x y))) (<= s 4)))", {"x": 2, "y": 2}, True),
        ("(assert (= (mod x 3) 2))", {"x": 8}, True),
        ("(assert ((_ divisible 4) (* 2 x)))", {"x": 6}, True),
        ("(assert (= (mod (* 3 x) 4) (mod y 4)))", {"x": 3, "y": 1}, True),
        ("(assert (= (mod (+ x y) 2) 0))", {"x": 3, "y": 5}, True),
        ("(assert (= (mod (+ x y) 2) 0))", {"x": 3, "y": 4}, False),
        ("(assert (>= (- x y) (- 2)))", {"x": 0, "y": 2}, True),
    ],
)
def test_parse_semantics(text, env, expected):
    phi = parse(text)
    full = {v: env.get(v, 0) for v in NAMES}
    assert holds(phi, full) == expected


def test_mod_atoms_have_congruence_shape():
    phi = parse("(assert (= (mod (* 3 x) 4) (mod y 4)))")
    assert isinstance(phi, CongBin)
    phi = parse("(assert (= (mod x 5) 1))")
    assert isinstance(phi, CongUn)


def test_errors_carry_spans():
    with pytest.raises(NonlinearTerm) as e:
        parse("(assert (>= (* x y) 1))")
    assert e.value.span.line == 1
    with pytest.raises(SmtSyntaxError):
        parse("(assert (>= x 1)")
    with pytest.raises(UnsupportedSort):
        parse_formula("(declare-const r Real)(assert (> r 0))")


def test_undeclared_symbol_warns():
    rep = parse_formula("(assert (>= q 1))")
    assert free_vars(rep.formula) == {"q"}
    assert any("q" in msg for _, msg in rep.warnings)
    assert rep.diagnostics("f.smt2")[0].startswith("f.smt2:1:")


def test_quantifier_block():
    rep = parse_formula("(declare-const y Int)(assert (exists ((x Int)) (and (= x y) (>= y 1))))")
    assert rep.quantifier == ("exists", ("x",))
    with pytest.raises(SmtSyntaxError):
        parse_formula("(assert (>= 1 0))(assert (exists ((x Int)) (>= x 1)))")


@given(formulas())
def test_print_parse_roundtrip(phi):
    text = print_script(phi, list(NAMES))
    back = parse_formula(text).formula
    for env in points(NAMES, 4):
        assert holds(back, env) == holds(phi, env)


def test_print_equality_pair():
    assert print_formula((V("x") - V("y")).eq(0)) == "(assert (= (+ x (* (- 1) y)) 0))"
    assert formula_to_smt(V("x") >= 3) == "(>= x 3)"


def test_length_abstraction():
    text = """(declare-const u String)(declare-const v String)
    (assert (and (= u (str.++ v "a")) (>= (str.len u) (+ (str.len v) 1))))
    (assert (str.in_re v (re.* (str.to_re "ab"))))"""
    rep = extract_length_abstraction(text)
    assert free_vars(rep.formula) == {"len!u", "len!v"}
    assert rep.length_terms == {"len!u": "u", "len!v": "v"}
    assert sum("non-arithmetic" in m for _, m in rep.warnings) == 2
    assert len(rep.consumed) == 1


def test_length_abstraction_without_lengths():
    rep = extract_length_abstraction('(declare-const u String)(assert (= u "a"))')
    assert rep.length_terms == {}
    assert any("no length constraints" in m for _, m in rep.warnings)


def test_str_len_rejected_outside_strings():
    with pytest.raises(ParseError):
        parse_formula("(declare-const x Int)(assert (>= (str.len x) 1))")
