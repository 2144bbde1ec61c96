"""Satisfiability of quantifier-free Presburger formulas over the naturals.

The builtin backend is a lazy SMT loop: the negation-free formula is
Tseitin-encoded for a SAT solver, each Boolean model is reduced to a set of
atoms that already forces the formula (the formula is monotone in its atoms),
and that set is checked by the integer conjunction solver.  Infeasible sets
come back as cores and are blocked.  This visits the disjuncts of the DNF
on demand instead of materializing it.

The external backend prints the query as SMT-LIB and drives a solver process
over stdin/stdout.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor, gcd
from typing import Optional, Union

from pysat.solvers import Solver

from ..errors import BackendFailure, ResourceLimit
from ..formula import (
    GE,
    And,
    CongBin,
    CongUn,
    Const,
    Formula,
    Ineq,
    Or,
    evaluate,
    free_vars,
    is_atom,
    mk_and,
    mk_or,
    simplify_atom,
    to_pnf,
)
from .conjunction import Budget, solve_conjunction
from .normalize import expand_congruence

SAT = "sat"
UNSAT = "unsat"


@dataclass
class SolverConfig:
    """Budgets for one ``check_sat`` call (``None`` means unlimited)."""

    timeout: Optional[float] = None
    max_nodes: int = 200_000
    max_iterations: Optional[int] = None
    minimize_cores: bool = False


@dataclass
class SatStats:
    backend: str
    elapsed: float = 0.0
    nodes: int = 0
    theory_checks: int = 0
    blocked: int = 0


@dataclass
class SatResult:
    verdict: str
    model: Optional[dict[str, int]]
    stats: SatStats = field(default_factory=lambda: SatStats("builtin"))

    @property
    def is_sat(self) -> bool:
        return self.verdict == SAT

    def __bool__(self) -> bool:
        return self.is_sat


@dataclass(frozen=True)
class ExternalBackend:
    """A command line such as ``"z3 -in"`` speaking SMT-LIB on stdin/stdout."""

    command: str

    def argv(self) -> list[str]:
        argv = shlex.split(self.command)
        if not argv:
            raise BackendFailure("empty solver command")
        if len(argv) == 1 and os.path.basename(argv[0]) == "z3":
            argv.append("-in")
        return argv


Backend = Union[str, ExternalBackend, None]


def default_backend() -> Backend:
    """``PRESDEC_SOLVER`` when set, else the builtin search."""
    cmd = os.environ.get("PRESDEC_SOLVER")
    return ExternalBackend(cmd) if cmd else "builtin"


def check_sat(phi: Formula, backend: Backend = "builtin", config: Optional[SolverConfig] = None) -> SatResult:
    """Decide ``phi``; a Sat verdict carries a model verified by ``evaluate``.

    ``backend`` is ``"builtin"``, an :class:`ExternalBackend`, or any other
    string, which is taken as an external solver command.
    """
    config = config or SolverConfig()
    if backend is None:
        backend = "builtin"
    if isinstance(backend, str) and backend != "builtin":
        backend = ExternalBackend(backend)
    start = time.monotonic()
    if isinstance(backend, ExternalBackend):
        result = _check_external(phi, backend, config)
    else:
        result = _LazySolver(phi, config).run()
    result.stats.elapsed = time.monotonic() - start
    if result.is_sat:
        model = dict(result.model or {})
        for v in free_vars(phi):
            model.setdefault(v, 0)
        if not evaluate(phi, model):
            raise AssertionError(f"{result.stats.backend} backend returned a non-model {model} for {phi}")
        result.model = model
    return result


def is_satisfiable(phi: Formula, backend: Backend = "builtin", config: Optional[SolverConfig] = None) -> bool:
    return check_sat(phi, backend, config).is_sat


# --------------------------------------------------------------------------
# builtin


def _prepare(phi: Formula) -> Formula:
    """Negation-free form with binary congruences expanded, constants folded."""
    memo: dict[Formula, Formula] = {}

    def go(f: Formula) -> Formula:
        hit = memo.get(f)
        if hit is not None:
            return hit
        if isinstance(f, CongBin):
            g = simplify_atom(f)
            out = expand_congruence(g) if isinstance(g, CongBin) else g
        elif is_atom(f):
            out = simplify_atom(f)
        elif isinstance(f, And):
            out = mk_and(*(go(a) for a in f.args))
        elif isinstance(f, Or):
            out = mk_or(*(go(a) for a in f.args))
        else:
            out = f
        memo[f] = out
        return out

    return go(to_pnf(phi))


def _unary_bound(atom: Ineq):
    """``(var, is_lower, bound)`` for a one-variable inequality."""
    ((v, a),) = atom.term.coeffs
    lower = (atom.rel == GE) == (a > 0)
    q = Fraction(atom.bound, a)
    return v, lower, (ceil(q) if lower else floor(q))


class _LazySolver:
    def __init__(self, phi: Formula, config: SolverConfig):
        self.phi = phi
        self.config = config
        self.stats = SatStats("builtin")
        deadline = None if config.timeout is None else time.monotonic() + config.timeout
        self.deadline = deadline
        self.var_of: dict[Formula, int] = {}
        self.atom_of: dict[int, Formula] = {}
        self.node_lit: dict[Formula, int] = {}
        self.clauses: list[list[int]] = []
        self.top = 0

    def _new(self) -> int:
        self.top += 1
        return self.top

    def _encode(self, f: Formula) -> int:
        hit = self.node_lit.get(f)
        if hit is not None:
            return hit
        if is_atom(f):
            v = self._new()
            self.var_of[f] = v
            self.atom_of[v] = f
        elif isinstance(f, And):
            kids = [self._encode(a) for a in f.args]
            v = self._new()
            for k in kids:
                self.clauses.append([-v, k])
        elif isinstance(f, Or):
            kids = [self._encode(a) for a in f.args]
            v = self._new()
            self.clauses.append([-v] + kids)
        else:
            raise TypeError(f)
        self.node_lit[f] = v
        return v

    def _axioms(self) -> None:
        lowers: dict[str, list[tuple[int, int]]] = {}
        uppers: dict[str, list[tuple[int, int]]] = {}
        congs: dict[str, list[tuple[CongUn, int]]] = {}
        for atom, v in self.var_of.items():
            if isinstance(atom, Ineq) and len(atom.term.coeffs) == 1:
                x, is_lower, b = _unary_bound(atom)
                (lowers if is_lower else uppers).setdefault(x, []).append((b, v))
            elif isinstance(atom, CongUn):
                congs.setdefault(atom.x, []).append((atom, v))
        for x in set(lowers) | set(uppers):
            lo = sorted(lowers.get(x, []))
            up = sorted(uppers.get(x, []))
            for (_, a), (_, b) in zip(lo[1:], lo):
                self.clauses.append([-a, b])  # x >= larger implies x >= smaller
            for (_, a), (_, b) in zip(up, up[1:]):
                self.clauses.append([-a, b])
            j = -1
            for bl, vl in lo:
                while j + 1 < len(up) and up[j + 1][0] < bl:
                    j += 1
                if j >= 0:
                    self.clauses.append([-vl, -up[j][1]])
        for lst in congs.values():
            for i in range(len(lst)):
                c1, v1 = lst[i]
                for c2, v2 in lst[i + 1 :]:
                    if (c1.c - c2.c) % gcd(c1.k, c2.k):
                        self.clauses.append([-v1, -v2])

    def _justify(self, root: Formula, model: set[int]) -> list[Formula]:
        out: list[Formula] = []
        seen: set[Formula] = set()
        stack = [root]
        while stack:
            f = stack.pop()
            if f in seen:
                continue
            seen.add(f)
            if is_atom(f):
                out.append(f)
            elif isinstance(f, And):
                stack.extend(f.args)
            else:
                # prefer a child that is already justified, then any true one
                pick = None
                for a in f.args:
                    if self.node_lit[a] in model:
                        if a in seen:
                            pick = None
                            break
                        if pick is None:
                            pick = a
                if pick is not None:
                    stack.append(pick)
        return out

    def _minimize(self, core: list[Formula]) -> list[Formula]:
        if not self.config.minimize_cores or len(core) <= 2 or len(core) > 24:
            return core
        core = list(core)
        i = 0
        while i < len(core):
            trial = core[:i] + core[i + 1 :]
            try:
                res = solve_conjunction(trial, Budget(max_nodes=2_000, deadline=self.deadline))
            except ResourceLimit:
                i += 1
                continue
            self.stats.theory_checks += 1
            if res.sat:
                i += 1
            else:
                keep = set(res.core)
                core = [a for a in trial if a in keep]
        return core

    def run(self) -> SatResult:
        root = _prepare(self.phi)
        if isinstance(root, Const):
            return SatResult(SAT if root.value else UNSAT, {} if root.value else None, self.stats)
        top_lit = self._encode(root)
        self._axioms()
        self.clauses.append([top_lit])
        budget = Budget(max_nodes=self.config.max_nodes, deadline=self.deadline)
        with Solver(name="m22", bootstrap_with=self.clauses) as sat:
            sat.set_phases([-v for v in range(1, self.top + 1)])
            iterations = 0
            while True:
                if self.deadline is not None and time.monotonic() > self.deadline:
                    raise ResourceLimit("time budget exhausted")
                iterations += 1
                if self.config.max_iterations is not None and iterations > self.config.max_iterations:
                    raise ResourceLimit("iteration budget exhausted")
                if not sat.solve():
                    self.stats.nodes = budget.nodes
                    return SatResult(UNSAT, None, self.stats)
                model = {l for l in sat.get_model() if l > 0}
                conj = self._justify(root, model)
                self.stats.theory_checks += 1
                res = solve_conjunction(conj, budget)
                if res.sat:
                    self.stats.nodes = budget.nodes
                    return SatResult(SAT, res.model, self.stats)
                core = [a for a in conj if a in res.core] or conj
                core = self._minimize(core)
                self.stats.blocked += 1
                sat.add_clause([-self.var_of[a] for a in core])


# --------------------------------------------------------------------------
# external


def _check_external(phi: Formula, backend: ExternalBackend, config: SolverConfig) -> SatResult:
    from ..smtlib import SList, Tok, formula_to_smt, parse_sexprs, symbol

    names = sorted(free_vars(phi))
    lines = ["(set-logic QF_LIA)", "(set-option :produce-models true)"]
    lines += [f"(declare-const {symbol(v)} Int)" for v in names]
    lines += [f"(assert (>= {symbol(v)} 0))" for v in names]
    lines += [f"(assert {formula_to_smt(phi)})", "(check-sat)", "(get-model)"]
    script = "\n".join(lines) + "\n"
    argv = backend.argv()
    stats = SatStats(f"external:{os.path.basename(argv[0])}")
    try:
        proc = subprocess.run(argv, input=script, capture_output=True, text=True, timeout=config.timeout)
    except subprocess.TimeoutExpired:
        raise ResourceLimit(f"external solver exceeded {config.timeout}s") from None
    except OSError as exc:
        raise BackendFailure(f"cannot run {argv[0]}: {exc}") from None
    out = proc.stdout.strip()
    first, _, tail = out.partition("\n")
    first = first.strip()
    if first == UNSAT:
        return SatResult(UNSAT, None, stats)
    if first != SAT:
        msg = (proc.stderr or out or f"exit status {proc.returncode}").strip().splitlines()
        raise BackendFailure(f"unexpected solver output: {msg[0] if msg else ''!r}")
    try:
        exprs = parse_sexprs(tail)
    except Exception as exc:
        raise BackendFailure(f"unparsable model: {exc}") from None
    model: dict[str, int] = {}

    def value(e) -> int:
        if isinstance(e, Tok) and e.kind == "num":
            return int(e.text)
        if isinstance(e, SList) and len(e.items) == 2 and isinstance(e.items[0], Tok) and e.items[0].text == "-":
            return -value(e.items[1])
        raise BackendFailure("model value is not an integer literal")

    defs = []
    for e in exprs:
        if isinstance(e, SList):
            items = e.items
            if items and isinstance(items[0], Tok) and items[0].text == "model":
                items = items[1:]
            if items and isinstance(items[0], Tok) and items[0].text == "define-fun":
                defs.append(e)
            else:
                defs.extend(i for i in items if isinstance(i, SList))
    for d in defs:
        it = d.items
        if len(it) == 5 and isinstance(it[0], Tok) and it[0].text == "define-fun" and isinstance(it[1], Tok):
            model[it[1].text] = value(it[4])
    for v in names:
        if v in model and model[v] < 0:
            raise BackendFailure(f"solver assigned negative value to {v}")
    model = {v: model.get(v, 0) for v in names}
    if not evaluate(phi, model):
        raise BackendFailure("solver model does not satisfy the query")
    return SatResult(SAT, model, stats)
