import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings

from oracles import formulas, holds, points
from presdec import grid
from presdec.errors import ResourceLimit
from presdec.formula import CongBin, CongUn, LinearTerm, Ineq, V, mk_and, mk_or
from presdec.grid import KERNEL, agrees, box_points, compile_formula, evaluate_points, find_point, truth_table

NAMES = ("x", "y", "z")
KERNELS = ["python"] + (["cython"] if KERNEL == "cython" else [])


def _oracle_table(phi, names, hi):
    out = np.zeros((hi + 1,) * len(names), dtype=bool)
    for env in points(names, hi):
        out[tuple(env[v] for v in names)] = holds(phi, env)
    return out


@pytest.mark.parametrize("kernel", KERNELS)
@settings(max_examples=40)
@given(phi=formulas())
def test_table_matches_oracle(kernel, phi):
    assert np.array_equal(truth_table(phi, NAMES, 7, kernel), _oracle_table(phi, NAMES, 7))


@pytest.mark.parametrize("kernel", KERNELS)
def test_negative_residues_and_binary_congruences(kernel):
    phi = mk_or(CongBin(3, "x", 4, -1, "y"), mk_and(CongUn("x", 5, 4), V("x") - V("y") <= -2))
    assert np.array_equal(truth_table(phi, ("x", "y"), 20, kernel), _oracle_table(phi, ("x", "y"), 20))


def test_large_coefficients_fall_back_to_exact_arithmetic():
    big = 2**61
    phi = Ineq(LinearTerm.of({"x": big, "y": -big}), ">=", big)
    prog = compile_formula(phi, ("x", "y"))
    pts = np.array([[3, 2], [2, 2], [5, 1]], dtype=np.int64)
    assert list(evaluate_points(prog, pts)) == [True, False, True]


def test_box_points_order():
    pts = box_points([1, 2])
    assert pts.tolist() == [[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [1, 2]]
    assert box_points([1, 2], 2, 4).tolist() == [[0, 2], [1, 0]]


def test_find_point_and_agrees():
    phi = mk_and(V("x") + V("y") >= 5, CongUn("x", 3, 2))
    assert find_point(phi, ("x", "y"), 6) == {"x": 2, "y": 3}
    assert agrees(phi, phi, ("x", "y"), 10) is None
    d = agrees(phi, V("x") + V("y") >= 5, ("x", "y"), 10)
    assert d is not None and not holds(phi, d) and holds(V("x") + V("y") >= 5, d)


def test_point_limit(monkeypatch):
    monkeypatch.setattr(grid, "MAX_POINTS", 100)
    with pytest.raises(ResourceLimit):
        truth_table(V("x") >= 1, ("x", "y"), 10)


def test_missing_variable_rejected():
    with pytest.raises(ValueError):
        compile_formula(V("q") >= 1, ("x",))


def test_pure_python_switch():
    env = {**os.environ, "PRESDEC_PURE_PYTHON": "1"}
    out = subprocess.run(
        [sys.executable, "-c", "from presdec.grid import KERNEL; print(KERNEL)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "python"
