"""Integer feasibility of a conjunction of atoms over the naturals.

Pipeline: merge unary congruences per variable (CRT), substitute
``x = r + L*x'``, gcd-normalize the inequalities, check the rational
relaxation with the exact simplex, eliminate equalities with a column
Hermite reduction and finish with branch-and-bound.  Infeasibility comes
with a core: a subset of the input atoms that is already infeasible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor, gcd
from typing import Optional, Sequence

from ..errors import ResourceLimit
from ..formula import GE, LE, CongBin, CongUn, Const, Formula, Ineq
from .normalize import bound_from_counts
from .simplex import Simplex


@dataclass
class Budget:
    max_nodes: int = 200_000
    deadline: Optional[float] = None
    nodes: int = 0

    def tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.max_nodes:
            raise ResourceLimit(f"branch-and-bound node budget ({self.max_nodes}) exhausted")
        if self.deadline is not None and (self.nodes & 63) == 0 and time.monotonic() > self.deadline:
            raise ResourceLimit("time budget exhausted")

    def check_time(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise ResourceLimit("time budget exhausted")


@dataclass
class ConjResult:
    sat: bool
    model: Optional[dict[str, int]] = None
    core: frozenset = field(default_factory=frozenset)


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def lattice_solve(rows: Sequence[Sequence[int]], rhs: Sequence[int], n: int):
    """Integer solutions of ``rows * v = rhs`` as ``v0 + N t``.

    Returns ``(v0, N)`` with ``N`` a list of ``n`` rows of length ``p`` (the
    lattice dimension), or None when there is no integer solution.
    """
    m = [list(r) for r in rows]
    u = [[int(i == j) for j in range(n)] for i in range(n)]

    def colop(c1: int, c2: int, p: int, q: int, r: int, s: int) -> None:
        # (col c1, col c2) <- (p*c1 + q*c2, r*c1 + s*c2)
        for mat in (m, u):
            for row in mat:
                a, b = row[c1], row[c2]
                row[c1], row[c2] = p * a + q * b, r * a + s * b

    pivots: list[Optional[int]] = []
    r = 0
    for i in range(len(m)):
        row = m[i]
        for j in range(r + 1, n):
            if row[j] == 0:
                continue
            if row[r] == 0:
                colop(r, j, 0, 1, 1, 0)
                continue
            a, b = row[r], row[j]
            g, p, q = _xgcd(a, b)
            colop(r, j, p, q, -b // g, a // g)
        if r < n and row[r] != 0:
            if row[r] < 0:
                colop(r, r, -1, 0, -1, 0)
            pivots.append(r)
            r += 1
        else:
            pivots.append(None)
    w = [0] * r
    for i, piv in enumerate(pivots):
        row = m[i]
        upto = piv if piv is not None else r
        acc = sum(row[j] * w[j] for j in range(upto))
        rest = rhs[i] - acc
        if piv is None:
            if rest != 0:
                return None
        else:
            if rest % row[piv]:
                return None
            w[piv] = rest // row[piv]
    v0 = [sum(u[i][j] * w[j] for j in range(r)) for i in range(n)]
    basis = [[u[i][j] for j in range(r, n)] for i in range(n)]
    return v0, basis


@dataclass
class _Cons:
    coeffs: dict[int, int]
    lo: Optional[int]
    hi: Optional[int]
    lo_reason: frozenset = frozenset()
    hi_reason: frozenset = frozenset()


def _merge_congruences(congs: list[CongUn]):
    """CRT merge; returns ``(r, L)`` or a conflicting pair."""
    r, L = 0, 1
    for i, c in enumerate(congs):
        g = gcd(L, c.k)
        if (c.c - r) % g:
            for prev in congs[:i]:
                if (c.c - prev.c) % gcd(c.k, prev.k):
                    return (prev, c)
            raise AssertionError("pairwise-compatible congruences must be jointly solvable")
        # x = r + L*t, need r + L*t == c.c (mod c.k)
        lg, kg = L // g, c.k // g
        t = ((c.c - r) // g) * pow(lg, -1, kg) % kg if kg > 1 else 0
        r, L = r + L * t, L * kg
        r %= L
    return r, L


def safeguard_bound(atoms: Sequence[Formula]) -> int:
    """Small-model bound for the slack-converted system of ``atoms``."""
    m = 0
    a = 0
    names: set[str] = set()
    for at in atoms:
        if isinstance(at, Ineq):
            m += 1
            names.update(at.term.variables)
            a = max(a, abs(at.bound), *(abs(c) for _, c in at.term.coeffs))
        elif isinstance(at, CongUn):
            m += 1
            names.add(at.x)
            a = max(a, at.k, at.c)
    return bound_from_counts(m, a, len(names) + m).base_max


def solve_conjunction(atoms: Sequence[Formula], budget: Optional[Budget] = None) -> ConjResult:
    """Decide a conjunction of ``Ineq``/``CongUn`` atoms over the naturals."""
    budget = budget or Budget()
    congs: dict[str, list[CongUn]] = {}
    ineqs: list[Ineq] = []
    for at in atoms:
        if isinstance(at, Const):
            if not at.value:
                return ConjResult(False, core=frozenset([at]))
        elif isinstance(at, CongUn):
            if at.k > 1:
                congs.setdefault(at.x, []).append(at)
        elif isinstance(at, Ineq):
            ineqs.append(at)
        elif isinstance(at, CongBin):
            raise TypeError("binary congruences must be expanded before solving")
        else:
            raise TypeError(f"not an atom: {at!r}")

    names: list[str] = sorted({v for q in ineqs for v in q.term.variables} | set(congs))
    offset: dict[str, int] = {}
    scale: dict[str, int] = {}
    creason: dict[str, frozenset] = {}
    for v in names:
        lst = congs.get(v, [])
        if lst:
            res = _merge_congruences(lst)
            if isinstance(res[0], CongUn):
                return ConjResult(False, core=frozenset(res))
            offset[v], scale[v] = res
            creason[v] = frozenset(lst)
        else:
            offset[v], scale[v], creason[v] = 0, 1, frozenset()
    index = {v: i for i, v in enumerate(names)}
    n = len(names)

    # gcd-normalized constraints over the structural variables, merged by term
    cons: dict[tuple, _Cons] = {}
    for q in ineqs:
        coeffs: dict[int, int] = {}
        rhs = q.bound
        reason = frozenset([q])
        for v, a in q.term.coeffs:
            rhs -= a * offset[v]
            coeffs[index[v]] = a * scale[v]
            reason |= creason[v]
        rel = q.rel
        if not coeffs:
            if (rel == GE and 0 < rhs) or (rel == LE and 0 > rhs):
                return ConjResult(False, core=reason)
            continue
        g = 0
        for c in coeffs.values():
            g = gcd(g, c)
        lead = coeffs[min(coeffs)]
        if lead < 0:
            g = -g
        key = tuple(sorted((i, c // g) for i, c in coeffs.items()))
        if g < 0:
            rel = LE if rel == GE else GE
        b = Fraction(rhs, g)
        entry = cons.get(key)
        if entry is None:
            entry = cons[key] = _Cons(dict(key), None, None)
        if rel == GE:
            lo = ceil(b)
            if entry.lo is None or lo > entry.lo:
                entry.lo, entry.lo_reason = lo, reason
        else:
            hi = floor(b)
            if entry.hi is None or hi < entry.hi:
                entry.hi, entry.hi_reason = hi, reason
        if entry.lo is not None and entry.hi is not None and entry.lo > entry.hi:
            return ConjResult(False, core=entry.lo_reason | entry.hi_reason)

    if n == 0:
        return ConjResult(True, model={})

    cap = safeguard_bound(atoms)
    eqs = [c for c in cons.values() if c.lo is not None and c.lo == c.hi]
    others = [c for c in cons.values() if not (c.lo is not None and c.lo == c.hi)]
    eq_reason = frozenset().union(*(c.lo_reason | c.hi_reason for c in eqs)) if eqs else frozenset()
    rows = [[c.coeffs.get(i, 0) for i in range(n)] for c in eqs]
    sol = lattice_solve(rows, [c.lo for c in eqs], n)
    if sol is None:
        return ConjResult(False, core=eq_reason)
    v0, basis = sol
    p = len(basis[0]) if basis else 0

    # constraints in t-space: each structural v_i >= 0 (and <= cap), plus others
    tcons: list[tuple[dict[int, int], Optional[int], Optional[int], frozenset, frozenset]] = []
    for i in range(n):
        tcons.append(({j: basis[i][j] for j in range(p) if basis[i][j]}, -v0[i], cap - v0[i], frozenset(), frozenset()))
    for c in others:
        shift = sum(a * v0[i] for i, a in c.coeffs.items())
        tc: dict[int, int] = {}
        for i, a in c.coeffs.items():
            for j in range(p):
                if basis[i][j]:
                    tc[j] = tc.get(j, 0) + a * basis[i][j]
        tc = {j: a for j, a in tc.items() if a}
        tcons.append(
            (
                tc,
                None if c.lo is None else c.lo - shift,
                None if c.hi is None else c.hi - shift,
                c.lo_reason,
                c.hi_reason,
            )
        )

    spx = Simplex(p)
    rowvar: dict[tuple, int] = {}
    for tc, lo, hi, lr, hr in tcons:
        if not tc:
            if lo is not None and lo > 0:
                return ConjResult(False, core=eq_reason | lr)
            if hi is not None and hi < 0:
                return ConjResult(False, core=eq_reason | hr)
            continue
        g = 0
        for a in tc.values():
            g = gcd(g, a)
        if tc[min(tc)] < 0:
            g = -g
        tc = {j: a // g for j, a in tc.items()}
        if g < 0:
            lo, hi, lr, hr = hi, lo, hr, lr
        lo = None if lo is None else ceil(Fraction(lo, g))
        hi = None if hi is None else floor(Fraction(hi, g))
        if len(tc) == 1:
            var = next(iter(tc))
        else:
            key = tuple(sorted(tc.items()))
            var = rowvar.get(key)
            if var is None:
                var = rowvar[key] = spx.add_row(tc)
        for bound, reason, setter in ((lo, lr, spx.set_lower), (hi, hr, spx.set_upper)):
            if bound is None:
                continue
            conflict = setter(var, bound, reason or None)
            if conflict is not None:
                return ConjResult(False, core=frozenset(conflict) | eq_reason)

    result = _branch_and_bound(spx, p, budget)
    if isinstance(result, set):
        return ConjResult(False, core=frozenset(result) | eq_reason)
    t = result
    model: dict[str, int] = {}
    for v in names:
        i = index[v]
        vi = v0[i] + sum(basis[i][j] * t[j] for j in range(p))
        model[v] = offset[v] + scale[v] * vi
    return ConjResult(True, model=model)


# Box radii tried before the unrestricted search; only the last stage can refute.
BOX_STAGES = (4, 32, 512)


def _branch_and_bound(spx: Simplex, p: int, budget: Budget):
    """Integer point of the simplex's structural variables, or conflict reasons.

    Small boxes around the origin are searched first so that shallow models
    are found without wandering down an unbounded branch; their refutations
    are discarded since the box itself is not a reason.
    """
    root = spx.save()
    budget.tick()
    conflict = spx.check()
    if conflict is not None:
        return conflict
    if all(spx.value[j].denominator == 1 for j in range(p)):
        return [int(spx.value[j]) for j in range(p)]
    for r in BOX_STAGES:
        box = [(j, False, -r) for j in range(p)] + [(j, True, r) for j in range(p)]
        found = _dfs(spx, p, budget, root, box)
        if not isinstance(found, set):
            return found
    return _dfs(spx, p, budget, root, [])


def _dfs(spx: Simplex, p: int, budget: Budget, root, prefix):
    reasons: set = set()
    stack: list[list[tuple[int, bool, int]]] = [prefix]
    while stack:
        budget.tick()
        branch = stack.pop()
        spx.restore(root)
        conflict = None
        for var, is_upper, bound in branch:
            conflict = spx.set_upper(var, bound) if is_upper else spx.set_lower(var, bound)
            if conflict is not None:
                break
        if conflict is None:
            conflict = spx.check()
        if conflict is not None:
            reasons |= conflict
            continue
        frac = None
        for j in range(p):
            val = spx.value[j]
            if val.denominator != 1:
                frac = (j, val)
                break
        if frac is None:
            return [int(spx.value[j]) for j in range(p)]
        j, val = frac
        fl = floor(val)
        # floor branch popped first
        stack.append(branch + [(j, False, fl + 1)])
        stack.append(branch + [(j, True, fl)])
    return reasons
