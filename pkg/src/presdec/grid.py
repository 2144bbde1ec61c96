"""Brute-force evaluation of formulas on integer boxes.

Formulas are compiled to a postfix program over linear rows and run either
by the compiled kernel (one point at a time, C loop) or by a numpy fallback
that executes the same program on whole columns.  Setting
``PRESDEC_PURE_PYTHON=1`` forces the fallback.  Values that could overflow
64-bit arithmetic are evaluated exactly with :func:`evaluate` instead.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

from .errors import ResourceLimit
from .formula import LE, And, CongBin, CongUn, Const, Formula, Ineq, Not, Or, evaluate, free_vars

OP_LIN, OP_MOD, OP_AND, OP_OR, OP_NOT, OP_TRUE, OP_FALSE = range(7)
REL_LE, REL_GE = 0, 1

_INT64_SAFE = 1 << 62
CHUNK = 1 << 16
MAX_POINTS = 50_000_000


def _load_kernel():
    if os.environ.get("PRESDEC_PURE_PYTHON") == "1":
        return None
    try:
        from . import _gridkernel
    except ImportError:
        return None
    return _gridkernel.eval_points


_compiled = _load_kernel()
KERNEL = "cython" if _compiled is not None else "python"


@dataclass(frozen=True)
class Program:
    variables: tuple[str, ...]
    ops: np.ndarray
    args: np.ndarray
    rows: np.ndarray
    params: np.ndarray
    consts: np.ndarray
    max_depth: int
    max_abs_row: int
    max_abs_const: int


def compile_formula(phi: Formula, variables: Sequence[str]) -> Program:
    variables = tuple(variables)
    missing = free_vars(phi) - set(variables)
    if missing:
        raise ValueError(f"variables {sorted(missing)} have no column")
    col = {v: i for i, v in enumerate(variables)}
    ops: list[int] = []
    args: list[int] = []
    rows: list[list[int]] = []
    params: list[int] = []
    consts: list[int] = []
    row_of: dict[tuple, int] = {}

    def row(coeffs: Mapping[str, int], param: int, const: int) -> int:
        vec = [0] * len(variables)
        for v, a in coeffs.items():
            vec[col[v]] += a
        key = (tuple(vec), param, const)
        idx = row_of.get(key)
        if idx is None:
            idx = row_of[key] = len(rows)
            rows.append(vec)
            params.append(param)
            consts.append(const)
        return idx

    depth = 0
    max_depth = 0

    def emit(op: int, arg: int, delta: int) -> None:
        nonlocal depth, max_depth
        ops.append(op)
        args.append(arg)
        depth += delta
        max_depth = max(max_depth, depth)

    def go(f: Formula) -> None:
        if isinstance(f, Ineq):
            emit(OP_LIN, row(f.term.as_dict(), REL_LE if f.rel == LE else REL_GE, f.bound), 1)
        elif isinstance(f, CongUn):
            emit(OP_MOD, row({f.x: 1}, f.k, f.c), 1)
        elif isinstance(f, CongBin):
            coeffs = {f.x: f.a}
            coeffs[f.y] = coeffs.get(f.y, 0) - f.b
            emit(OP_MOD, row(coeffs, f.k, 0), 1)
        elif isinstance(f, (And, Or)):
            if not f.args:
                emit(OP_TRUE if isinstance(f, And) else OP_FALSE, 0, 1)
                return
            for a in f.args:
                go(a)
            emit(OP_AND if isinstance(f, And) else OP_OR, len(f.args), 1 - len(f.args))
        elif isinstance(f, Not):
            go(f.arg)
            emit(OP_NOT, 0, 0)
        elif isinstance(f, Const):
            emit(OP_TRUE if f.value else OP_FALSE, 0, 1)
        else:
            raise TypeError(f"not a formula: {f!r}")

    go(phi)
    n = len(variables)
    rows_arr = np.array(rows, dtype=object).reshape(len(rows), n) if rows else np.zeros((0, n), dtype=object)
    max_abs_row = max((sum(abs(a) for a in r) for r in rows), default=0)
    max_abs_const = max((abs(c) for c in consts), default=0)
    safe = max_abs_row < _INT64_SAFE and max_abs_const < _INT64_SAFE and all(abs(p) < _INT64_SAFE for p in params)
    dt = np.int64 if safe else object
    return Program(
        variables,
        np.array(ops, dtype=np.int64),
        np.array(args, dtype=np.int64),
        np.ascontiguousarray(rows_arr.astype(dt)),
        np.array(params, dtype=dt),
        np.array(consts, dtype=dt),
        max_depth,
        max_abs_row,
        max_abs_const,
    )


def _eval_numpy(prog: Program, pts: np.ndarray) -> np.ndarray:
    """Column-wise interpreter for the same postfix program."""
    stack: list[np.ndarray] = []
    n = pts.shape[0]
    values = pts @ prog.rows.T if len(prog.rows) else np.zeros((n, 0), dtype=pts.dtype)
    for op, arg in zip(prog.ops.tolist(), prog.args.tolist()):
        if op == OP_LIN:
            col = values[:, arg]
            stack.append(col <= prog.consts[arg] if prog.params[arg] == REL_LE else col >= prog.consts[arg])
        elif op == OP_MOD:
            stack.append((values[:, arg] - prog.consts[arg]) % prog.params[arg] == 0)
        elif op == OP_AND:
            acc = stack.pop()
            for _ in range(arg - 1):
                acc = acc & stack.pop()
            stack.append(acc)
        elif op == OP_OR:
            acc = stack.pop()
            for _ in range(arg - 1):
                acc = acc | stack.pop()
            stack.append(acc)
        elif op == OP_NOT:
            stack.append(~stack.pop())
        else:
            stack.append(np.full(n, op == OP_TRUE, dtype=bool))
    return np.asarray(stack[0], dtype=bool)


def _fits_int64(prog: Program, max_value: int) -> bool:
    if prog.rows.dtype != np.int64:
        return False
    return prog.max_abs_row * max_value + prog.max_abs_const < _INT64_SAFE


def evaluate_points(prog: Program, points: np.ndarray, kernel: Optional[str] = None) -> np.ndarray:
    """Truth value at each row of ``points`` (columns ordered as ``prog.variables``)."""
    pts = np.asarray(points)
    if pts.ndim != 2 or pts.shape[1] != len(prog.variables):
        raise ValueError("points must have one column per program variable")
    max_value = int(np.abs(pts).max()) if pts.size else 0
    if not _fits_int64(prog, max_value):
        pts = pts.astype(object)
        return _eval_numpy(prog, pts)
    pts = np.ascontiguousarray(pts, dtype=np.int64)
    kernel = kernel or KERNEL
    if kernel == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        return _compiled(pts, prog.ops, prog.args, prog.rows, prog.params, prog.consts, prog.max_depth)
    return _eval_numpy(prog, pts)


def box_points(bounds: Sequence[int], start: int = 0, stop: Optional[int] = None) -> np.ndarray:
    """Rows ``start..stop`` of the lexicographic enumeration of ``prod [0, b_i]``."""
    shape = tuple(b + 1 for b in bounds)
    total = int(np.prod(shape, dtype=object)) if shape else 1
    stop = total if stop is None else min(stop, total)
    if not shape:
        return np.zeros((max(0, stop - start), 0), dtype=np.int64)
    idx = np.arange(start, stop, dtype=np.int64)
    return np.stack(np.unravel_index(idx, shape), axis=1).astype(np.int64)


def _box_size(bounds: Sequence[int]) -> int:
    total = 1
    for b in bounds:
        total *= b + 1
    return total


def _chunks(bounds: Sequence[int]) -> Iterator[np.ndarray]:
    total = _box_size(bounds)
    if total > MAX_POINTS:
        raise ResourceLimit(f"grid of {total} points exceeds {MAX_POINTS}")
    for s in range(0, total, CHUNK):
        yield box_points(bounds, s, s + CHUNK)


def _as_bounds(variables: Sequence[str], bounds: int | Sequence[int]) -> list[int]:
    if isinstance(bounds, int):
        return [bounds] * len(variables)
    if len(bounds) != len(variables):
        raise ValueError("one bound per variable")
    return list(bounds)


def truth_table(
    phi: Formula, variables: Sequence[str], bounds: int | Sequence[int], kernel: Optional[str] = None
) -> np.ndarray:
    """Boolean array of shape ``(b_1+1, ..., b_n+1)``."""
    bnds = _as_bounds(variables, bounds)
    prog = compile_formula(phi, variables)
    parts = [evaluate_points(prog, c, kernel) for c in _chunks(bnds)]
    flat = np.concatenate(parts) if parts else np.zeros(0, dtype=bool)
    return flat.reshape(tuple(b + 1 for b in bnds))


def satisfying_points(
    phi: Formula, variables: Sequence[str], bounds: int | Sequence[int], kernel: Optional[str] = None
) -> Iterator[dict[str, int]]:
    bnds = _as_bounds(variables, bounds)
    prog = compile_formula(phi, variables)
    for c in _chunks(bnds):
        mask = evaluate_points(prog, c, kernel)
        for row in c[mask]:
            yield dict(zip(variables, map(int, row)))


def find_point(
    phi: Formula, variables: Sequence[str], bounds: int | Sequence[int], kernel: Optional[str] = None
) -> Optional[dict[str, int]]:
    """First satisfying point of the box in lexicographic order, if any."""
    return next(satisfying_points(phi, variables, bounds, kernel), None)


def agrees(a: Formula, b: Formula, variables: Sequence[str], bounds: int | Sequence[int]) -> Optional[dict[str, int]]:
    """A point of the box where ``a`` and ``b`` differ, or None."""
    bnds = _as_bounds(variables, bounds)
    pa = compile_formula(a, variables)
    pb = compile_formula(b, variables)
    for c in _chunks(bnds):
        diff = evaluate_points(pa, c) != evaluate_points(pb, c)
        if diff.any():
            return dict(zip(variables, map(int, c[np.argmax(diff)])))
    return None


def reference_table(phi: Formula, variables: Sequence[str], bounds: int | Sequence[int]) -> np.ndarray:
    """Slow exact table via :func:`evaluate`; used to cross-check the kernels."""
    bnds = _as_bounds(variables, bounds)
    out = np.zeros(tuple(b + 1 for b in bnds), dtype=bool)
    for pt in itertools.product(*(range(b + 1) for b in bnds)):
        out[pt] = evaluate(phi, dict(zip(variables, pt)))
    return out
