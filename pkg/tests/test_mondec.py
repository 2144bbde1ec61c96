import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import formulas, holds, lcm_of_moduli, max_const, points, same_on_grid, truth_table_sat
from presdec.errors import NotDecomposable, ResourceLimit, TooManyVariables
from presdec.formula import TRUE, CongBin, CongUn, Or, V, free_vars, mk_and, mk_or
from presdec.mondec import (
    badx_formula,
    check_decomposable_on,
    check_monadic,
    decompose_full,
    decompose_on,
    decomposition_pieces,
    div_atoms,
    equivalent,
    hardness_gadget,
    is_monadic,
    maximal_consistent_sets,
    minimal_bound_search,
    mondec_bound,
    samediv_formula,
)

x, y, z = V("x"), V("y"), V("z")

# x + 2y >= 5 & z < 5 & x =_2 y
WORKED = mk_and(x + y * 2 >= 5, z <= 4, CongBin(1, "x", 2, 1, "y"))


def _disjuncts(f):
    return len(f.args) if isinstance(f, Or) else 1


def test_equality_is_not_decomposable():
    phi = (x - y).eq(0)
    v = check_decomposable_on(phi, "x")
    assert not v.decomposable
    w = v.counterexample
    assert w["x!1"] >= v.bound and w["x!2"] >= v.bound
    assert holds(badx_formula(phi, "x", "x!1", "x!2"), w)
    with pytest.raises(NotDecomposable):
        decompose_on(phi, "x")


@pytest.mark.parametrize(
    "phi, exponent",
    [
        # x1 - s = 1, x2 + s' = 0: m=2, n=4, largest constant 1 (d=1)
        (x >= 1, 11),
        # x1 + y + s = 4, x2 + y - s' = 5: m=2, n=5, constant 5 (d=3)
        (x + y <= 4, 33),
        # 9 x1 + y + s = 20, 9 x2 + y - s' = 21: m=2, n=5, constant 21 (d=5)
        (x * 9 + y <= 20, 53),
    ],
)
def test_bound_hand_values(phi, exponent):
    assert mondec_bound(phi, "x") == 2**exponent


def test_samediv_semantics():
    phi = mk_and(CongUn("x", 3, 1), CongBin(2, "x", 4, 1, "y"))
    sd = samediv_formula(phi, "x", "a", "b")
    for env in points(("a", "b", "y"), 11):
        same = (env["a"] - 1) % 3 == 0
        same = same == ((env["b"] - 1) % 3 == 0)
        same = same and (((2 * env["a"] - env["y"]) % 4 == 0) == ((2 * env["b"] - env["y"]) % 4 == 0))
        assert holds(sd, env) == same
    assert samediv_formula(x + y <= 3, "x") == TRUE


def test_div_atoms_expansion():
    phi = mk_and(CongUn("x", 2, 1), CongBin(1, "y", 3, 2, "x"), CongUn("y", 5, 0))
    d = div_atoms(phi, "x")
    assert d.moduli == (2, 3) and d.period == 6
    assert len(d.expanded) == 5
    sets = maximal_consistent_sets(d, 7)
    assert len(sets) == 6
    for s in sets:
        assert s.witness >= 7 and s.witness % 6 == s.residue
        assert all(holds(a, {"x": s.witness}) for a in s.atoms)


def test_worked_example_on_x():
    assert check_decomposable_on(WORKED, "x").decomposable
    B = minimal_bound_search(WORKED, "x")
    # for x >= 5 the inequality holds for every y, so 8 is the least power of two
    assert B == 8
    assert not check_decomposable_on(WORKED, "x", 4).decomposable
    pieces = decomposition_pieces(WORKED, "x", B)
    assert len(pieces) == B + 2
    out = decompose_on(WORKED, "x")
    assert equivalent(WORKED, out) is None
    assert same_on_grid(WORKED, out, ("x", "y", "z"), 14) is None


def test_pi_example_decomposes_fully():
    phi = mk_and((z - x - y * 2).eq(0), z <= 4)
    out = decompose_full(phi)
    assert is_monadic(out)
    expected = mk_or(
        *(
            mk_and(x.eq(i), y.eq(j), z.eq(i + 2 * j))
            for i in range(5)
            for j in range(0, 2 - (i + 1) // 2 + 1)
        )
    )
    assert equivalent(out, expected) is None


@pytest.mark.parametrize("n", [2, 3, 4])
def test_size_lower_bound(n):
    phi = x + y <= 2**n
    out = decompose_on(phi, "x")
    assert _disjuncts(out) >= 2**n + 1


def test_disjunct_cap():
    with pytest.raises(ResourceLimit):
        decompose_on(x + y <= 64, "x", max_disjuncts=10)


def test_check_monadic_reports_each_variable():
    rep = check_monadic(mk_and(x + y >= 2, (x - z).eq(0)))
    assert not rep.decomposable
    assert rep.per_variable["y"].decomposable
    assert not rep.per_variable["x"].decomposable and not rep.per_variable["z"].decomposable


def test_gadget_limit():
    with pytest.raises(TooManyVariables):
        hardness_gadget([[1, 7]])


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_gadget_matches_truth_table(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 3)
    cnf = [
        [rng.choice((1, -1)) * rng.randint(1, n) for _ in range(rng.randint(1, 3))]
        for _ in range(rng.randint(1, 5))
    ]
    assert check_monadic(hardness_gadget(cnf, n)).decomposable == (not truth_table_sat(cnf, n))


@settings(max_examples=20)
@given(formulas(names=("x", "y"), depth=2, decomposable=True))
def test_decompose_full_random(phi):
    out = decompose_full(phi)
    assert is_monadic(out)
    names = sorted(free_vars(phi))
    if names:
        hi = 16 + 2 * lcm_of_moduli(phi) + max_const(phi)
        assert same_on_grid(phi, out, names, min(hi, 60)) is None


@settings(max_examples=20)
@given(formulas(names=("x", "y"), depth=1))
def test_minimal_bound_is_least(phi):
    v = check_decomposable_on(phi, "x", minimize=False)
    if not v.decomposable or "x" not in free_vars(phi):
        return
    B = minimal_bound_search(phi, "x")
    assert check_decomposable_on(phi, "x", B, minimize=False).decomposable
    if B > 1:
        assert not check_decomposable_on(phi, "x", B // 2, minimize=False).decomposable
