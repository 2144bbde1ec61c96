import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import Z3
from oracles import brute_sat, formulas, grid_cap, holds, random_conjunction
from presdec.errors import BackendFailure, ResourceLimit
from presdec.formula import FALSE, TRUE, CongBin, CongUn, V, free_vars, mk_and
from presdec.lia.conjunction import Budget, lattice_solve, solve_conjunction
from presdec.lia.normalize import expand_congruence, normalize_to_equalities, small_model_bound
from presdec.lia.simplex import Simplex
from presdec.lia.solver import ExternalBackend, SolverConfig, check_sat

x, y, z = V("x"), V("y"), V("z")


def test_trivial_verdicts():
    assert check_sat(TRUE).is_sat
    assert not check_sat(FALSE).is_sat
    assert not check_sat(mk_and(x <= 3, x >= 5)).is_sat


def test_parity_and_frobenius():
    # 2x + 2y = 7 has no solution; 3x + 5y = 7 has none over N either
    assert not check_sat((x * 2 + y * 2).eq(7)).is_sat
    assert not check_sat((x * 3 + y * 5).eq(7)).is_sat
    r = check_sat((x * 3 + y * 5).eq(8))
    assert r.is_sat and 3 * r.model["x"] + 5 * r.model["y"] == 8


def test_crt_merge():
    phi = mk_and(CongUn("x", 4, 3), CongUn("x", 6, 5), x <= 30)
    r = check_sat(phi)
    assert r.is_sat and r.model["x"] % 12 == 11
    assert not check_sat(mk_and(CongUn("x", 4, 1), CongUn("x", 6, 2))).is_sat


def test_binary_congruence_expansion():
    at = CongBin(3, "x", 4, 1, "y")
    ex = expand_congruence(at)
    for a in range(12):
        for b in range(12):
            env = {"x": a, "y": b}
            assert holds(ex, env) == holds(at, env)


def test_lattice_solve_describes_all_solutions():
    rows, rhs = [[2, 4, -6]], [10]
    v0, N = lattice_solve(rows, rhs, 3)
    assert sum(a * b for a, b in zip(rows[0], v0)) == 10
    p = len(N[0])
    assert p == 2
    for j in range(p):
        col = [N[i][j] for i in range(3)]
        assert sum(a * b for a, b in zip(rows[0], col)) == 0
    # every small solution is reached: N has unimodular completion, so check a few
    for t in [(1, 0), (0, 1), (3, -2)]:
        v = [v0[i] + sum(N[i][j] * t[j] for j in range(p)) for i in range(3)]
        assert sum(a * b for a, b in zip(rows[0], v)) == 10
    assert lattice_solve([[2, 4]], [5], 2) is None


def test_simplex_bounds_and_conflict():
    s = Simplex(2)
    r = s.add_row({0: 1, 1: 1})
    assert s.set_lower(0, Fraction(1), "a") is None
    assert s.set_lower(1, Fraction(1), "b") is None
    assert s.set_upper(r, Fraction(1), "c") is None
    core = s.check()
    assert core == {"a", "b", "c"}


def test_conjunction_core_is_unsat():
    atoms = [x >= 5, y >= 0, (x + y) <= 3]
    res = solve_conjunction(atoms)
    assert not res.sat
    assert res.core and set(res.core) <= set(atoms)
    assert not solve_conjunction(list(res.core)).sat


# integer-infeasible although the LP relaxation is not; needs a dozen B&B nodes
BRANCHY = [x * 3 - y * 4 >= 1, x + y * 5 <= 4, x * 4 - y <= 2]


def test_branching_instance_is_unsat():
    assert brute_sat(mk_and(*BRANCHY), ["x", "y"], 60) is None
    res = solve_conjunction(BRANCHY)
    assert not res.sat and set(res.core) <= set(BRANCHY)


def test_budget_exhaustion_raises():
    with pytest.raises(ResourceLimit):
        solve_conjunction(BRANCHY, Budget(max_nodes=3))
    with pytest.raises(ResourceLimit):
        check_sat(mk_and(*BRANCHY), config=SolverConfig(max_nodes=3))


def test_solver_config_timeout():
    with pytest.raises(ResourceLimit):
        check_sat(mk_and(*BRANCHY), config=SolverConfig(timeout=0.0))


def test_dense_system_finds_small_model():
    # z3 finds x=6, y=4, z=6; the search must not wander off along an unbounded ray
    atoms = [x * -9 - y * 6 + z * 9 <= -22, x * 2 - y * 4 - z * 9 <= -19, x * 2 - y * 8 + z * 5 >= 10, x * -7 + y * 6 + z * 7 >= 0]
    res = solve_conjunction(atoms, Budget(max_nodes=2000))
    assert res.sat and all(holds(a, res.model) for a in atoms)


def test_small_model_bound_formula():
    sys_ = normalize_to_equalities([x + y <= 4, CongUn("x", 3, 1)])
    # two equalities, constant 4 (k=3 < 4), variables x, y, slack, quotient
    b = small_model_bound(sys_)
    assert b.base_max == ((2 + 2) * 4 + 1) ** 4


@settings(max_examples=80)
@given(st.integers(0, 2**32 - 1))
def test_conjunctions_match_brute_force(seed):
    rng = random.Random(seed)
    names = ["x", "y", "z"][: rng.randint(1, 3)]
    atoms = [a for a in random_conjunction(rng, names, rng.randint(1, 4)) if not isinstance(a, CongBin)]
    res = solve_conjunction(atoms)
    found = brute_sat(mk_and(*atoms), names, grid_cap(len(names)))
    if res.sat:
        assert all(holds(a, {v: res.model.get(v, 0) for v in names}) for a in atoms)
    else:
        assert found is None
    if found is not None:
        assert res.sat


@given(formulas())
def test_check_sat_matches_grid(phi):
    names = sorted(free_vars(phi))
    res = check_sat(phi)
    found = brute_sat(phi, names, grid_cap(len(names)))
    if res.is_sat:
        assert holds(phi, res.model)
    else:
        assert found is None
    if found is not None:
        assert res.is_sat


@pytest.mark.skipif(Z3 is None, reason="z3 binary not available")
@settings(max_examples=25)
@given(formulas())
def test_external_backend_agrees(phi):
    a = check_sat(phi)
    b = check_sat(phi, ExternalBackend(Z3))
    assert a.is_sat == b.is_sat
    if b.is_sat:
        assert holds(phi, {**{v: 0 for v in free_vars(phi)}, **b.model})


def test_external_backend_failure():
    with pytest.raises(BackendFailure):
        check_sat(x >= 1, ExternalBackend("false"))
