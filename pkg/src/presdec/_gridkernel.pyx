# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled postfix evaluator for formulas over a batch of integer points."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    OP_LIN = 0
    OP_MOD = 1
    OP_AND = 2
    OP_OR = 3
    OP_NOT = 4
    OP_TRUE = 5
    OP_FALSE = 6
    REL_LE = 0


def eval_points(
    const cnp.int64_t[:, ::1] pts,
    const cnp.int64_t[::1] ops,
    const cnp.int64_t[::1] args,
    const cnp.int64_t[:, ::1] rows,
    const cnp.int64_t[::1] params,
    const cnp.int64_t[::1] consts,
    Py_ssize_t max_depth,
):
    cdef Py_ssize_t n_pts = pts.shape[0]
    cdef Py_ssize_t n_vars = pts.shape[1]
    cdef Py_ssize_t n_ops = ops.shape[0]
    out_arr = np.zeros(n_pts, dtype=np.uint8)
    cdef cnp.uint8_t[::1] out = out_arr
    stack_arr = np.zeros(max(1, max_depth), dtype=np.uint8)
    cdef cnp.uint8_t[::1] stack = stack_arr
    cdef Py_ssize_t p, i, j, sp, r, cnt
    cdef cnp.int64_t acc, k, rem, op
    cdef cnp.uint8_t v
    for p in range(n_pts):
        sp = 0
        for i in range(n_ops):
            op = ops[i]
            if op == OP_LIN or op == OP_MOD:
                r = args[i]
                acc = 0
                for j in range(n_vars):
                    acc += rows[r, j] * pts[p, j]
                if op == OP_LIN:
                    if params[r] == REL_LE:
                        v = acc <= consts[r]
                    else:
                        v = acc >= consts[r]
                else:
                    k = params[r]
                    rem = (acc - consts[r]) % k
                    v = rem == 0
                stack[sp] = v
                sp += 1
            elif op == OP_AND:
                cnt = args[i]
                v = 1
                for j in range(cnt):
                    sp -= 1
                    v = v & stack[sp]
                stack[sp] = v
                sp += 1
            elif op == OP_OR:
                cnt = args[i]
                v = 0
                for j in range(cnt):
                    sp -= 1
                    v = v | stack[sp]
                stack[sp] = v
                sp += 1
            elif op == OP_NOT:
                stack[sp - 1] = 1 - stack[sp - 1]
            elif op == OP_TRUE:
                stack[sp] = 1
                sp += 1
            else:
                stack[sp] = 0
                sp += 1
        out[p] = stack[0]
    return out_arr.view(np.bool_)
