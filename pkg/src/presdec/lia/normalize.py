"""Congruence expansion, slack-variable conversion and small-model bounds."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from ..formula import (
    FALSE,
    GE,
    TRUE,
    And,
    CongBin,
    CongUn,
    Const,
    Formula,
    Ineq,
    LinearTerm,
    congruence_pairs,
    mk_or,
)


def expand_congruence(atom: CongBin) -> Formula:
    """Rewrite ``a*x == b*y (mod k)`` into residue-pair cases modulo ``k``.

    >>> print(expand_congruence(CongBin(1, "x", 2, 1, "y")))
    ((x =_2 0 & y =_2 0) | (x =_2 1 & y =_2 1))
    """
    k = atom.k
    if k == 1:
        return TRUE
    if atom.x == atom.y:
        cs = [c for c in range(k) if ((atom.a - atom.b) * c) % k == 0]
        if len(cs) == k:
            return TRUE
        return mk_or(*(CongUn(atom.x, k, c) for c in cs))
    pairs = congruence_pairs(atom)
    if len(pairs) == k * k:
        return TRUE
    if not pairs:
        return FALSE
    return mk_or(*(And((CongUn(atom.x, k, c1), CongUn(atom.y, k, c2))) for c1, c2 in pairs))


@dataclass(frozen=True)
class LinearEquality:
    term: LinearTerm
    rhs: int

    def __str__(self) -> str:
        return f"{self.term} = {self.rhs}"


@dataclass(frozen=True)
class EqualitySystem:
    """Conjunction of linear equalities over natural-valued variables.

    ``fresh`` lists the variables introduced by the conversion, each with a
    short note on where it came from.
    """

    equalities: tuple[LinearEquality, ...]
    variables: tuple[str, ...]
    fresh: tuple[tuple[str, str], ...] = ()

    def max_constant(self) -> int:
        best = 0
        for eq in self.equalities:
            best = max(best, abs(eq.rhs), *(abs(a) for _, a in eq.term.coeffs))
        return best

    def __str__(self) -> str:
        return " & ".join(map(str, self.equalities)) or "true"


class _Fresh:
    def __init__(self, taken: Iterable[str]):
        self.taken = set(taken)
        self.n = 0
        self.made: list[tuple[str, str]] = []

    def __call__(self, stem: str, note: str) -> str:
        while True:
            self.n += 1
            name = f"{stem}!{self.n}"
            if name not in self.taken:
                self.taken.add(name)
                self.made.append((name, note))
                return name


def normalize_to_equalities(conjunct: Iterable[Formula]) -> EqualitySystem:
    """Equisatisfiable (over N) system of equalities for a conjunction of atoms.

    ``t >= b`` becomes ``t - s = b`` and ``t <= b`` becomes ``t + s = b`` with
    a fresh slack ``s``; ``x == c (mod k)`` becomes ``x - k*x' = c``; and
    ``a*x == b*y (mod k)`` becomes ``a*x - z - k*x' = 0, b*y - z - k*y' = 0``.
    """
    atoms = [a for a in conjunct if not (isinstance(a, Const) and a.value)]
    names: set[str] = set()
    for a in atoms:
        if isinstance(a, Ineq):
            names.update(a.term.variables)
        elif isinstance(a, CongUn):
            names.add(a.x)
        elif isinstance(a, CongBin):
            names.update((a.x, a.y))
        elif isinstance(a, Const):
            continue
        else:
            raise TypeError(f"not an atom: {a!r}")
    fresh = _Fresh(names)
    eqs: list[LinearEquality] = []
    for a in atoms:
        if isinstance(a, Const):
            # false: 0 = 1 keeps the system unsatisfiable
            eqs.append(LinearEquality(LinearTerm(), 1))
        elif isinstance(a, Ineq):
            s = fresh("s", f"slack of {a}")
            sign = -1 if a.rel == GE else 1
            eqs.append(LinearEquality(a.term + LinearTerm(((s, sign),)), a.bound))
        elif isinstance(a, CongUn):
            q = fresh(a.x + "'", f"quotient of {a}")
            eqs.append(LinearEquality(LinearTerm.of({a.x: 1, q: -a.k}), a.c))
        else:
            z = fresh("z", f"common residue of {a}")
            qx = fresh(a.x + "'", f"quotient of {a}")
            qy = fresh(a.y + "'", f"quotient of {a}")
            eqs.append(LinearEquality(LinearTerm.of([(a.x, a.a), (z, -1), (qx, -a.k)]), 0))
            eqs.append(LinearEquality(LinearTerm.of([(a.y, a.b), (z, -1), (qy, -a.k)]), 0))
    used: list[str] = []
    seen: set[str] = set()
    for eq in eqs:
        for v in eq.term.variables:
            if v not in seen:
                seen.add(v)
                used.append(v)
    return EqualitySystem(tuple(eqs), tuple(used), tuple(fresh.made))


@dataclass(frozen=True)
class SemilinearBound:
    base_max: int
    period_max: int


def small_model_bound(system: EqualitySystem) -> SemilinearBound:
    """Bounds on base and period vectors of the solution set of ``system``.

    With ``m`` equalities over ``n`` variables and largest constant ``a``
    (floored at 1): bases are at most ``((m+2)a+1)^n`` and periods at most
    ``(m*a+1)^n``.
    """
    m = len(system.equalities)
    n = len(system.variables)
    a = max(1, system.max_constant())
    return SemilinearBound(((m + 2) * a + 1) ** n, (m * a + 1) ** n)


def bound_from_counts(m: int, a: int, n: int) -> SemilinearBound:
    a = max(1, a)
    return SemilinearBound(((m + 2) * a + 1) ** n, (m * a + 1) ** n)
