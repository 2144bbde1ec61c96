"""Monadic decomposability: deciding it and building decompositions.

A formula ``phi(x, ys)`` is decomposable on ``x`` iff there is a threshold
``B`` such that any two values ``x1, x2 >= B`` that agree on every
divisibility constraint on ``x`` are interchangeable in ``phi``.  The
violation of that property is a quantifier-free query, so deciding is a
single unsatisfiability check at a (huge but computable) bound.  For
constructing the decomposition we search for the least power of two that
already works and case-split below it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import EquivalenceCheckFailed, NotDecomposable, ResourceLimit, TooManyVariables
from .formula import (
    FALSE,
    TRUE,
    And,
    CongBin,
    CongUn,
    Formula,
    Ineq,
    LinearTerm,
    Not,
    Or,
    SizeMetrics,
    atoms,
    bound_metrics,
    evaluate,
    free_vars,
    fresh_name,
    iff,
    mk_and,
    mk_or,
    rename,
    substitute,
    substitute_many,
    var_eq,
)
from .lia.solver import Backend, SolverConfig, check_sat

DEFAULT_MAX_DISJUNCTS = 100_000


# --------------------------------------------------------------------------
# divisibility constraints


def orient(atom: CongBin, x: str) -> CongBin:
    """Put ``x`` on the left of a binary congruence (congruence is symmetric)."""
    if atom.y == x and atom.x != x:
        return CongBin(atom.b, atom.y, atom.k, atom.a, atom.x)
    return atom


@dataclass(frozen=True)
class DivAtomSet:
    """Divisibility atoms of a formula with respect to one variable.

    ``short`` holds the syntactic atoms mentioning ``x`` (binary ones
    oriented with ``x`` on the left); ``expanded`` holds every ``x == c (mod
    k)`` for each modulus ``k`` that constrains ``x``.
    """

    x: str
    short: tuple[Formula, ...]
    expanded: tuple[CongUn, ...]

    @property
    def moduli(self) -> tuple[int, ...]:
        return tuple(sorted({a.k for a in self.expanded}))

    @property
    def period(self) -> int:
        return math.lcm(*self.moduli) if self.expanded else 1


def div_atoms(phi: Formula, x: str) -> DivAtomSet:
    short: list[Formula] = []
    seen: set[Formula] = set()
    moduli: set[int] = set()
    for at in atoms(phi):
        if isinstance(at, CongUn) and at.x == x:
            item: Formula = at
        elif isinstance(at, CongBin) and x in (at.x, at.y):
            item = orient(at, x)
        else:
            continue
        if item not in seen:
            seen.add(item)
            short.append(item)
            if item.k > 1:
                moduli.add(item.k)
    expanded = tuple(CongUn(x, k, c) for k in sorted(moduli) for c in range(k))
    return DivAtomSet(x, tuple(short), expanded)


def _pair_names(phi: Formula, x: str) -> tuple[str, str]:
    taken = set(free_vars(phi))
    x1 = fresh_name(f"{x}!1", taken)
    x2 = fresh_name(f"{x}!2", taken | {x1})
    return x1, x2


def samediv_formula(phi: Formula, x: str, x1: Optional[str] = None, x2: Optional[str] = None) -> Formula:
    """``x1`` and ``x2`` satisfy the same divisibility constraints of ``phi``."""
    if x1 is None or x2 is None:
        x1, x2 = _pair_names(phi, x)
    parts = []
    for at in div_atoms(phi, x).short:
        a1 = rename(at, {x: x1})
        a2 = rename(at, {x: x2})
        parts.append(iff(a1, a2))
    if not parts:
        return TRUE
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def badx_formula(phi: Formula, x: str, x1: Optional[str] = None, x2: Optional[str] = None) -> Formula:
    """``samediv(x1, x2, ys) & phi(x1, ys) & ~phi(x2, ys)``."""
    if x1 is None or x2 is None:
        x1, x2 = _pair_names(phi, x)
    return And((samediv_formula(phi, x, x1, x2), rename(phi, {x: x1}), Not(rename(phi, {x: x2}))))


def bound_from_metrics(m: SizeMetrics) -> int:
    return 2 ** (m.d * m.m_eq * m.n_vars + 3)


def mondec_bound(phi: Formula, x: str) -> int:
    """The threshold ``2^(d*m*n + 3)`` from the metrics of the violation query."""
    metrics, _ = bound_metrics(badx_formula(phi, x))
    return bound_from_metrics(metrics)


# --------------------------------------------------------------------------
# checking


@dataclass
class VariableVerdict:
    decomposable: bool
    bound: int
    counterexample: Optional[dict[str, int]] = None
    minimal_bound: Optional[int] = None


def _ge(v: str, b: int) -> Formula:
    return Ineq(LinearTerm(((v, 1),)), ">=", b)


def _le(v: str, b: int) -> Formula:
    return Ineq(LinearTerm(((v, 1),)), "<=", b)


def check_decomposable_on(
    phi: Formula,
    x: str,
    bound_override: Optional[int] = None,
    backend: Backend = "builtin",
    config: Optional[SolverConfig] = None,
    minimize: bool = True,
) -> VariableVerdict:
    """Look for ``x1, x2 >= B`` and ``ys`` that witness non-decomposability.

    No witness means ``phi`` is decomposable on ``x`` (for any ``B``).  With
    the default ``B`` a witness proves non-decomposability.  The witness is
    returned under the keys ``x1``/``x2`` names (``x!1``, ``x!2``) plus the
    other variables.
    """
    if bound_override is not None and bound_override < 1:
        raise ValueError("bound must be at least 1")
    B = bound_override if bound_override is not None else mondec_bound(phi, x)
    if x not in free_vars(phi):
        return VariableVerdict(True, B)
    x1, x2 = _pair_names(phi, x)
    bad = badx_formula(phi, x, x1, x2)
    query = And((_ge(x1, B), _ge(x2, B), bad))
    res = check_sat(query, backend, config)
    if not res.is_sat:
        return VariableVerdict(True, B)
    witness = res.model
    if minimize:
        order = [x1, x2] + sorted(v for v in free_vars(phi) if v != x)
        witness = minimize_witness(query, witness, order, {x1: B, x2: B}, backend, config)
    return VariableVerdict(False, B, witness)


def minimize_witness(
    query: Formula,
    model: dict[str, int],
    order: Sequence[str],
    lower: dict[str, int],
    backend: Backend = "builtin",
    config: Optional[SolverConfig] = None,
) -> dict[str, int]:
    """Greedily lower each coordinate in turn while ``query`` stays satisfiable."""
    fixed: dict[str, int] = {}
    current = dict(model)
    for v in order:
        lo = lower.get(v, 0)
        cur = current.get(v, lo)
        cands = {lo, lo + 1}
        for w in fixed.values():
            cands.update((w - 1, w, w + 1))
        best = cur
        base = substitute_fixed(query, fixed)
        for c in sorted(c for c in cands if lo <= c < cur):
            res = check_sat(mk_and(base, var_eq(v, c)), backend, config)
            if res.is_sat:
                best, current = c, res.model
                break
        if best > lo and best - lo <= 1 << 16:
            # exact minimum in a small window
            a, b = lo, best
            while a < b:
                mid = (a + b) // 2
                res = check_sat(mk_and(base, _ge(v, lo), _le(v, mid)), backend, config)
                if res.is_sat:
                    b = mid
                    current = res.model
                else:
                    a = mid + 1
            best = b
            res = check_sat(mk_and(base, var_eq(v, best)), backend, config)
            current = res.model
        fixed[v] = best
        current = {**current, **fixed}
    out = dict(current)
    out.update(fixed)
    if not evaluate(query, out):
        raise AssertionError("witness minimization lost satisfiability")
    return out


def substitute_fixed(phi: Formula, fixed: dict[str, int]) -> Formula:
    return substitute_many(phi, fixed) if fixed else phi


def minimal_bound_search(
    phi: Formula,
    x: str,
    backend: Backend = "builtin",
    config: Optional[SolverConfig] = None,
    top: Optional[int] = None,
) -> int:
    """Least power of two ``B <= B'`` at which the interchangeability check passes.

    The check is monotone in ``B``, so the exponent is found by doubling and
    then bisection.
    """
    if top is None:
        top = mondec_bound(phi, x)
    verdict = check_decomposable_on(phi, x, top, backend, config, minimize=False)
    if not verdict.decomposable:
        raise NotDecomposable(f"not monadically decomposable on {x}", verdict.counterexample)
    top_e = top.bit_length() - 1

    def ok(e: int) -> bool:
        return check_decomposable_on(phi, x, 1 << e, backend, config, minimize=False).decomposable

    if ok(0):
        return 1
    lo_e = 0  # fails
    step = 1
    hi_e = top_e
    while lo_e + step < top_e:
        if ok(lo_e + step):
            hi_e = lo_e + step
            break
        lo_e += step
        step *= 2
    # invariant: lo_e fails, hi_e passes
    while hi_e - lo_e > 1:
        mid = (lo_e + hi_e) // 2
        if ok(mid):
            hi_e = mid
        else:
            lo_e = mid
    return 1 << hi_e


# --------------------------------------------------------------------------
# decomposition


@dataclass(frozen=True)
class MaxConsistentSet:
    atoms: tuple[CongUn, ...]
    witness: int
    residue: int
    period: int


def maximal_consistent_sets(divstar: DivAtomSet, B: int) -> list[MaxConsistentSet]:
    """One set per residue class modulo the lcm of the moduli, lifted to ``>= B``."""
    L = divstar.period
    out: list[MaxConsistentSet] = []
    seen: set[tuple[CongUn, ...]] = set()
    for r in range(L):
        sat = tuple(a for a in divstar.expanded if r % a.k == a.c)
        if sat in seen:
            continue
        seen.add(sat)
        out.append(MaxConsistentSet(sat, B + (r - B) % L, r, L))
    return out


def decomposition_pieces(
    phi: Formula, x: str, B: int, max_disjuncts: int = DEFAULT_MAX_DISJUNCTS
) -> list[tuple[Formula, Formula]]:
    """``(guard(x), residual(ys))`` pairs whose disjunction is the decomposition."""
    divstar = div_atoms(phi, x)
    if B + divstar.period > max_disjuncts:
        raise ResourceLimit(
            f"decomposition on {x} needs {B + divstar.period} disjuncts (limit {max_disjuncts})"
        )
    pieces: list[tuple[Formula, Formula]] = []
    for v in range(B):
        pieces.append((var_eq(x, v), substitute(phi, x, v)))
    for D in maximal_consistent_sets(divstar, B):
        guard = mk_and(_ge(x, B), *D.atoms) if B > 0 else mk_and(*D.atoms)
        pieces.append((guard, substitute(phi, x, D.witness)))
    return [(g, r) for g, r in pieces if r != FALSE and g != FALSE]


def assemble(pieces: Sequence[tuple[Formula, Formula]]) -> Formula:
    return mk_or(*(mk_and(g, r) for g, r in pieces))


def equivalent(a: Formula, b: Formula, backend: Backend = "builtin", config: Optional[SolverConfig] = None):
    """None when ``a`` and ``b`` agree everywhere, else a distinguishing model."""
    res = check_sat(Or((And((a, Not(b))), And((Not(a), b)))), backend, config)
    return res.model if res.is_sat else None


def decompose_on(
    phi: Formula,
    x: str,
    backend: Backend = "builtin",
    config: Optional[SolverConfig] = None,
    bound: Optional[int] = None,
    max_disjuncts: int = DEFAULT_MAX_DISJUNCTS,
    verify: bool = True,
) -> Formula:
    """Equivalent formula that is a disjunction of ``guard(x) & psi(ys)``."""
    if x not in free_vars(phi):
        return phi
    B = bound if bound is not None else minimal_bound_search(phi, x, backend, config)
    out = assemble(decomposition_pieces(phi, x, B, max_disjuncts))
    if verify:
        diff = equivalent(phi, out, backend, config)
        if diff is not None:
            raise EquivalenceCheckFailed(f"decomposition on {x} differs from the input", diff)
    return out


@dataclass
class MondecReport:
    decomposable: bool
    per_variable: dict[str, VariableVerdict] = field(default_factory=dict)
    decomposition: Optional[Formula] = None


def check_monadic(
    phi: Formula,
    backend: Backend = "builtin",
    config: Optional[SolverConfig] = None,
    variables: Optional[Sequence[str]] = None,
) -> MondecReport:
    """Decide decomposability on every free variable (decomposable iff all pass)."""
    names = list(variables) if variables is not None else sorted(free_vars(phi))
    report = MondecReport(True)
    for v in names:
        verdict = check_decomposable_on(phi, v, None, backend, config)
        report.per_variable[v] = verdict
        if not verdict.decomposable:
            report.decomposable = False
    return report


def decompose_full(
    phi: Formula,
    backend: Backend = "builtin",
    config: Optional[SolverConfig] = None,
    order: Optional[Sequence[str]] = None,
    max_disjuncts: int = DEFAULT_MAX_DISJUNCTS,
    verify: bool = True,
) -> Formula:
    """Boolean combination of one-variable formulas equivalent to ``phi``.

    Decomposes on the first variable, then recursively decomposes each
    residual (a formula in the remaining variables).  Residuals shared by
    several guards are decomposed once, under the disjunction of the guards.
    """
    names = list(order) if order is not None else sorted(free_vars(phi))
    memo: dict[tuple[Formula, int], Formula] = {}

    def go(f: Formula, i: int) -> Formula:
        rest = [v for v in names[i:] if v in free_vars(f)]
        if len(rest) <= 1:
            return f
        key = (f, i)
        hit = memo.get(key)
        if hit is not None:
            return hit
        x = rest[0]
        j = names.index(x) + 1
        B = minimal_bound_search(f, x, backend, config)
        grouped: dict[Formula, list[Formula]] = {}
        for g, r in decomposition_pieces(f, x, B, max_disjuncts):
            grouped.setdefault(r, []).append(g)
        parts = []
        for r, guards in grouped.items():
            if r != TRUE and not check_sat(r, backend, config).is_sat:
                continue
            parts.append(mk_and(mk_or(*guards), go(r, j)))
        out = mk_or(*parts)
        memo[key] = out
        return out

    out = go(phi, 0)
    if verify:
        diff = equivalent(phi, out, backend, config)
        if diff is not None:
            raise EquivalenceCheckFailed("monadic decomposition differs from the input", diff)
    return out


def is_monadic(phi: Formula) -> bool:
    """Every atom mentions at most one variable."""
    return all(len(free_vars(a)) <= 1 for a in atoms(phi))


# --------------------------------------------------------------------------
# hardness gadget

PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def hardness_gadget(cnf: Sequence[Sequence[int]], n_vars: Optional[int] = None, limit: int = 6) -> Formula:
    """``psi(x) & x = y`` where ``psi`` encodes the CNF with ``v_i`` as ``x == 0 (mod p_i)``.

    Clauses use DIMACS literals (``i`` or ``-i`` for variable ``v_i``).  The
    result is monadically decomposable iff the CNF is unsatisfiable.
    """
    n = n_vars if n_vars is not None else max((abs(l) for c in cnf for l in c), default=0)
    if n > limit or n > len(PRIMES):
        raise TooManyVariables(f"{n} propositional variables exceed the limit of {min(limit, len(PRIMES))}")
    clauses = []
    for clause in cnf:
        lits = []
        for lit in clause:
            if lit == 0 or abs(lit) > n:
                raise ValueError(f"bad literal {lit}")
            atom = CongUn("x", PRIMES[abs(lit) - 1], 0)
            lits.append(atom if lit > 0 else Not(atom))
        clauses.append(Or(tuple(lits)) if len(lits) != 1 else lits[0])
    psi = And(tuple(clauses)) if clauses else TRUE
    xy = LinearTerm.of({"x": 1, "y": -1})
    eq = And((Ineq(xy, "<=", 0), Ineq(xy, ">=", 0)))
    return And((psi, eq))
