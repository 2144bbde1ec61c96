import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import formulas, holds, points
from presdec.formula import (
    FALSE,
    TRUE,
    And,
    CongBin,
    CongUn,
    Ineq,
    LinearTerm,
    Not,
    Or,
    V,
    atoms,
    bound_metrics,
    dnf_conjunct_count,
    evaluate,
    free_vars,
    fresh_name,
    mk_and,
    mk_or,
    rename,
    simplify_atom,
    size_metrics,
    size_metrics_upper,
    substitute,
    substitute_many,
    to_dnf,
    to_pnf,
    unary_congruence,
)
from presdec.formula import Const

x, y, z = V("x"), V("y"), V("z")
NAMES = ("x", "y", "z")


def test_linear_term_normalizes():
    t = LinearTerm.of([("y", 2), ("x", 1), ("y", -2)])
    assert t.coeffs == (("x", 1),)
    assert (t + (-t)).is_zero()
    assert LinearTerm.of({"x": 3, "y": -1}).value({"x": 2, "y": 5}) == 1


def test_expr_builders():
    assert evaluate((x + y * 2).eq(5), {"x": 1, "y": 2})
    assert evaluate(x < 3, {"x": 2}) and not evaluate(x < 3, {"x": 3})
    assert evaluate((x - y).ne(0), {"x": 1, "y": 2})


def test_congruence_validation():
    with pytest.raises(ValueError):
        CongUn("x", 3, 3)
    with pytest.raises(ValueError):
        CongBin(1, "x", 0, 1, "y")
    with pytest.raises(ValueError):
        Ineq(LinearTerm.of({"x": 1}), "<", 3)


def test_mk_and_or_fold_constants():
    assert mk_and(TRUE, x >= 1) == (x >= 1)
    assert mk_and(FALSE, x >= 1) == FALSE
    assert mk_or(TRUE, x >= 1) == TRUE
    assert mk_or() == FALSE and mk_and() == TRUE


def test_unary_congruence_semantics():
    # 3y == 2 (mod 4) has the solutions y == 2 (mod 4)
    f = unary_congruence("y", 3, 4, 2)
    for v in range(40):
        assert evaluate(f, {"y": v}) == ((3 * v - 2) % 4 == 0)


def test_size_metrics_small_cases():
    # x >= 1 -> x - s = 1: one equation, two variables, constant 1
    assert size_metrics(x >= 1) == size_metrics_upper(x >= 1)
    m = size_metrics(x >= 1)
    assert (m.d, m.m_eq, m.n_vars) == (1, 1, 2)
    m = size_metrics(TRUE)
    assert (m.d, m.m_eq, m.n_vars) == (1, 0, 0)
    # a x == b y (mod k) -> two equations over x, y, z, x', y'; constant 2
    m = size_metrics(CongBin(1, "x", 2, 1, "y"))
    assert (m.d, m.m_eq, m.n_vars) == (2, 2, 5)


def test_bound_metrics_falls_back_to_upper_bound():
    wide = mk_and(*(mk_or(V(f"a{i}") >= 1, V(f"b{i}") >= 2) for i in range(14)))
    assert dnf_conjunct_count(wide) == 2**14
    m, exact = bound_metrics(wide, exact_limit=4096)
    assert not exact
    up = size_metrics_upper(wide)
    assert m == up


@given(formulas())
def test_pnf_preserves_semantics(phi):
    p = to_pnf(phi)
    assert not any(isinstance(a, Not) for a in _nodes(p))
    for env in points(NAMES, 5):
        assert holds(p, env) == holds(phi, env)


@given(formulas(depth=2))
def test_dnf_preserves_semantics(phi):
    dnf = to_dnf(phi)
    assert len(dnf) <= dnf_conjunct_count(phi)
    for env in points(NAMES, 4):
        assert any(all(holds(a, env) for a in c) for c in dnf) == holds(phi, env)


@given(formulas())
def test_metrics_upper_bound_dominates(phi):
    if dnf_conjunct_count(phi) > 256:
        return
    exact = size_metrics(phi)
    up = size_metrics_upper(phi)
    assert exact.m_eq <= up.m_eq and exact.n_vars <= up.n_vars and exact.d <= up.d


@given(formulas(), st.integers(0, 9))
def test_substitute_matches_evaluation(phi, v):
    s = substitute(phi, "x", v)
    assert "x" not in free_vars(s)
    for env in points(("y", "z"), 4):
        assert holds(s, env) == holds(phi, {**env, "x": v})


@given(formulas())
def test_evaluate_agrees_with_reference(phi):
    for env in points(NAMES, 3):
        assert evaluate(phi, env) == holds(phi, env)


@given(formulas())
def test_simplify_atom_is_equivalent(phi):
    for at in atoms(phi):
        s = simplify_atom(at)
        for env in points(NAMES, 6):
            assert holds(s, env) == holds(at, env)


def test_substitute_many_folds_to_constant():
    f = mk_and(x + y <= 3, CongUn("x", 2, 1))
    assert substitute_many(f, {"x": 1, "y": 2}) == TRUE
    assert substitute_many(f, {"x": 2, "y": 0}) == FALSE


def test_rename_and_fresh_name():
    f = rename(x + y <= 3, {"x": "q"})
    assert free_vars(f) == {"q", "y"}
    assert fresh_name("x!1", {"x!1"}) not in {"x!1"}
    assert fresh_name("x!1", set()) == "x!1"


def _nodes(f):
    yield f
    if isinstance(f, (And, Or)):
        for a in f.args:
            yield from _nodes(a)
    elif isinstance(f, Not):
        yield from _nodes(f.arg)


def test_const_values():
    assert Const(True) == TRUE and str(FALSE) == "false"
