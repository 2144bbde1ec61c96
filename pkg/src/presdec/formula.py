"""Quantifier-free Presburger formulas over the natural numbers.

Atoms are linear inequalities ``sum a_i x_i <= b`` / ``>= b`` and the two
congruence shapes ``a*x == b*y (mod k)`` and ``x == c (mod k)``.  Formulas
are immutable trees of atoms, ``And``, ``Or``, ``Not`` and the two constants.

Variables are plain strings.  All arithmetic is exact (Python ints).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from math import gcd
from typing import Iterable, Iterator, Mapping, Sequence, Union

LE = "<="
GE = ">="


class UnboundVariable(KeyError):
    """An assignment does not cover a free variable of the formula."""


class Formula:
    __slots__ = ()

    def __and__(self, other: "Formula") -> "Formula":
        return And((self, other))

    def __or__(self, other: "Formula") -> "Formula":
        return Or((self, other))

    def __invert__(self) -> "Formula":
        return Not(self)

    def __post_init__(self):
        self._validate()
        object.__setattr__(self, "_h", hash((type(self).__name__,) + self._key()))

    def _validate(self):
        pass

    def _cached_hash(self):
        return self._h


@dataclass(frozen=True)
class LinearTerm:
    """Sum of ``coeff * var``; zero coefficients are never stored."""

    coeffs: tuple[tuple[str, int], ...] = ()

    @classmethod
    def of(cls, mapping: Mapping[str, int] | Iterable[tuple[str, int]]) -> "LinearTerm":
        items = mapping.items() if isinstance(mapping, Mapping) else mapping
        acc: dict[str, int] = {}
        for v, a in items:
            if not v:
                raise ValueError("variable names must be nonempty")
            acc[v] = acc.get(v, 0) + a
        return cls(tuple(sorted((v, a) for v, a in acc.items() if a != 0)))

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.coeffs)

    def as_dict(self) -> dict[str, int]:
        return dict(self.coeffs)

    def get(self, var: str) -> int:
        for v, a in self.coeffs:
            if v == var:
                return a
        return 0

    def is_zero(self) -> bool:
        return not self.coeffs

    def value(self, sigma: Mapping[str, int]) -> int:
        try:
            return sum(a * sigma[v] for v, a in self.coeffs)
        except KeyError as exc:
            raise UnboundVariable(exc.args[0]) from None

    def scale(self, k: int) -> "LinearTerm":
        if k == 0:
            return LinearTerm()
        return LinearTerm(tuple((v, a * k) for v, a in self.coeffs))

    def __add__(self, other: "LinearTerm") -> "LinearTerm":
        return LinearTerm.of(list(self.coeffs) + list(other.coeffs))

    def __neg__(self) -> "LinearTerm":
        return self.scale(-1)

    def restrict(self, variables: Iterable[str]) -> "LinearTerm":
        keep = set(variables)
        return LinearTerm(tuple((v, a) for v, a in self.coeffs if v in keep))

    def without(self, variables: Iterable[str]) -> "LinearTerm":
        drop = set(variables)
        return LinearTerm(tuple((v, a) for v, a in self.coeffs if v not in drop))

    def rename(self, mapping: Mapping[str, str]) -> "LinearTerm":
        return LinearTerm.of([(mapping.get(v, v), a) for v, a in self.coeffs])

    def content(self) -> int:
        g = 0
        for _, a in self.coeffs:
            g = gcd(g, a)
        return g

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for i, (v, a) in enumerate(self.coeffs):
            sign = "-" if a < 0 else ("+" if i else "")
            mag = abs(a)
            body = v if mag == 1 else f"{mag}{v}"
            parts.append(f"{sign} {body}" if i else f"{sign}{body}")
        return " ".join(parts)


def _hashed(cls):
    """Use the hash cached at construction (trees get hashed a lot)."""
    cls.__hash__ = Formula._cached_hash
    return cls


@_hashed
@dataclass(frozen=True, eq=True)
class Ineq(Formula):
    term: LinearTerm
    rel: str
    bound: int
    _h: int = field(init=False, repr=False, compare=False)

    def _validate(self):
        if self.rel not in (LE, GE):
            raise ValueError(f"relation must be <= or >=, got {self.rel!r}")

    def _key(self):
        return (self.term, self.rel, self.bound)

    def __str__(self) -> str:
        return f"{self.term} {self.rel} {self.bound}"


@_hashed
@dataclass(frozen=True, eq=True)
class CongBin(Formula):
    """``a*x == b*y (mod k)``."""

    a: int
    x: str
    k: int
    b: int
    y: str
    _h: int = field(init=False, repr=False, compare=False)

    def _validate(self):
        if self.k < 1:
            raise ValueError("modulus must be >= 1")

    def _key(self):
        return (self.a, self.x, self.k, self.b, self.y)

    def __str__(self) -> str:
        lhs = self.x if self.a == 1 else f"{self.a}{self.x}"
        rhs = self.y if self.b == 1 else f"{self.b}{self.y}"
        return f"{lhs} =_{self.k} {rhs}"


@_hashed
@dataclass(frozen=True, eq=True)
class CongUn(Formula):
    """``x == c (mod k)`` with ``0 <= c < k``."""

    x: str
    k: int
    c: int
    _h: int = field(init=False, repr=False, compare=False)

    def _validate(self):
        if self.k < 1:
            raise ValueError("modulus must be >= 1")
        if not 0 <= self.c < self.k:
            raise ValueError(f"residue {self.c} outside [0, {self.k})")

    def _key(self):
        return (self.x, self.k, self.c)

    def __str__(self) -> str:
        return f"{self.x} =_{self.k} {self.c}"


@_hashed
@dataclass(frozen=True, eq=True)
class And(Formula):
    args: tuple[Formula, ...]
    _h: int = field(init=False, repr=False, compare=False)

    def _key(self):
        return self.args

    def __str__(self) -> str:
        return "(" + " & ".join(map(str, self.args)) + ")" if self.args else "true"


@_hashed
@dataclass(frozen=True, eq=True)
class Or(Formula):
    args: tuple[Formula, ...]
    _h: int = field(init=False, repr=False, compare=False)

    def _key(self):
        return self.args

    def __str__(self) -> str:
        return "(" + " | ".join(map(str, self.args)) + ")" if self.args else "false"


@_hashed
@dataclass(frozen=True, eq=True)
class Not(Formula):
    arg: Formula
    _h: int = field(init=False, repr=False, compare=False)

    def _key(self):
        return (self.arg,)

    def __str__(self) -> str:
        return f"~{self.arg}"


@_hashed
@dataclass(frozen=True, eq=True)
class Const(Formula):
    value: bool
    _h: int = field(init=False, repr=False, compare=False)

    def _key(self):
        return (self.value,)

    def __str__(self) -> str:
        return "true" if self.value else "false"


TRUE = Const(True)
FALSE = Const(False)

Atom = Union[Ineq, CongBin, CongUn]
ATOM_TYPES = (Ineq, CongBin, CongUn)
Conjunct = tuple  # tuple of atoms; the empty tuple is the constant true


def is_atom(phi: Formula) -> bool:
    return isinstance(phi, ATOM_TYPES)


# --------------------------------------------------------------------------
# Building helpers


class Expr:
    """Affine expression used to build atoms with ordinary operators.

    >>> x, y = V("x"), V("y")
    >>> print(x + 2 * y >= 5)
    x + 2y >= 5
    """

    __slots__ = ("coeffs", "const")

    def __init__(self, coeffs: Mapping[str, int] | None = None, const: int = 0):
        self.coeffs = {v: a for v, a in (coeffs or {}).items() if a}
        self.const = const

    @staticmethod
    def lift(other: "Expr | int") -> "Expr":
        return other if isinstance(other, Expr) else Expr({}, int(other))

    def __add__(self, other):
        o = Expr.lift(other)
        acc = dict(self.coeffs)
        for v, a in o.coeffs.items():
            acc[v] = acc.get(v, 0) + a
        return Expr(acc, self.const + o.const)

    __radd__ = __add__

    def __neg__(self):
        return Expr({v: -a for v, a in self.coeffs.items()}, -self.const)

    def __sub__(self, other):
        return self + (-Expr.lift(other))

    def __rsub__(self, other):
        return Expr.lift(other) - self

    def __mul__(self, k: int):
        if isinstance(k, Expr):
            raise TypeError("nonlinear product")
        return Expr({v: a * k for v, a in self.coeffs.items()}, self.const * k)

    __rmul__ = __mul__

    def _cmp(self, other, rel: str, shift: int = 0) -> Ineq:
        d = self - Expr.lift(other)
        return Ineq(LinearTerm.of(d.coeffs), rel, -d.const + shift)

    def __ge__(self, other) -> Ineq:
        return self._cmp(other, GE)

    def __le__(self, other) -> Ineq:
        return self._cmp(other, LE)

    def __gt__(self, other) -> Ineq:
        return self._cmp(other, GE, 1)

    def __lt__(self, other) -> Ineq:
        return self._cmp(other, LE, -1)

    def eq(self, other) -> Formula:
        return And((self <= other, self >= other))

    def ne(self, other) -> Formula:
        return Or((self < other, self > other))

    def term(self) -> LinearTerm:
        return LinearTerm.of(self.coeffs)


def V(name: str) -> Expr:
    return Expr({name: 1})


def var_eq(x: str, v: int) -> Formula:
    """``x = v`` in the two-inequality normal form."""
    t = LinearTerm(((x, 1),))
    return And((Ineq(t, LE, v), Ineq(t, GE, v)))


def iff(a: Formula, b: Formula) -> Formula:
    return Or((And((a, b)), And((Not(a), Not(b)))))


def mk_and(*args: Formula) -> Formula:
    """Conjunction with constant folding, flattening and deduplication."""
    out: list[Formula] = []
    seen: set[Formula] = set()
    stack = list(args)
    flat: list[Formula] = []
    for a in stack:
        if isinstance(a, And):
            flat.extend(a.args)
        else:
            flat.append(a)
    for a in flat:
        a = simplify_atom(a) if is_atom(a) else a
        if a == TRUE:
            continue
        if a == FALSE:
            return FALSE
        if isinstance(a, And):
            sub = mk_and(*a.args)
            if sub == FALSE:
                return FALSE
            parts = sub.args if isinstance(sub, And) else (() if sub == TRUE else (sub,))
        else:
            parts = (a,)
        for p in parts:
            if p not in seen:
                seen.add(p)
                out.append(p)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def mk_or(*args: Formula) -> Formula:
    out: list[Formula] = []
    seen: set[Formula] = set()
    flat: list[Formula] = []
    for a in args:
        if isinstance(a, Or):
            flat.extend(a.args)
        else:
            flat.append(a)
    for a in flat:
        a = simplify_atom(a) if is_atom(a) else a
        if a == FALSE:
            continue
        if a == TRUE:
            return TRUE
        parts = a.args if isinstance(a, Or) else (a,)
        for p in parts:
            if p not in seen:
                seen.add(p)
                out.append(p)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def _unary_residues(a: int, k: int, c: int) -> tuple[int, int] | Const:
    """Solutions of ``a*y == c (mod k)`` as ``(m, r)`` meaning ``y == r (mod m)``."""
    a %= k
    c %= k
    g = gcd(a, k)
    if c % g:
        return FALSE
    m = k // g
    if m == 1:
        return TRUE
    # a/g is invertible modulo m
    return m, (c // g) * pow(a // g, -1, m) % m


def unary_congruence(y: str, a: int, k: int, c: int) -> Formula:
    """``a*y == c (mod k)`` as ``y == r (mod m)``, a constant, or false."""
    res = _unary_residues(a, k, c)
    if isinstance(res, Const):
        return res
    m, r = res
    return CongUn(y, m, r)


def simplify_atom(atom: Formula) -> Formula:
    """Fold atoms whose truth is fixed over the naturals; otherwise unchanged."""
    if isinstance(atom, Ineq):
        t, b = atom.term, atom.bound
        if t.is_zero():
            return Const(0 >= b if atom.rel == GE else 0 <= b)
        signs = {a > 0 for _, a in t.coeffs}
        if len(signs) == 1:
            pos = signs.pop()
            # every coefficient has the same sign; the term ranges over one side of 0
            if pos:
                if atom.rel == GE and b <= 0:
                    return TRUE
                if atom.rel == LE and b < 0:
                    return FALSE
            else:
                if atom.rel == LE and b >= 0:
                    return TRUE
                if atom.rel == GE and b > 0:
                    return FALSE
        return atom
    if isinstance(atom, CongUn):
        return TRUE if atom.k == 1 else atom
    if isinstance(atom, CongBin):
        k = atom.k
        if k == 1:
            return TRUE
        a, b = atom.a % k, atom.b % k
        if a == 0 and b == 0:
            return TRUE
        if atom.x == atom.y:
            return unary_congruence(atom.x, a - b, k, 0)
        return atom
    return atom


# --------------------------------------------------------------------------
# Semantics


def evaluate(phi: Formula, sigma: Mapping[str, int]) -> bool:
    """Truth value of ``phi`` under the assignment ``sigma``."""
    if isinstance(phi, Ineq):
        v = phi.term.value(sigma)
        return v <= phi.bound if phi.rel == LE else v >= phi.bound
    if isinstance(phi, CongUn):
        try:
            return sigma[phi.x] % phi.k == phi.c
        except KeyError:
            raise UnboundVariable(phi.x) from None
    if isinstance(phi, CongBin):
        try:
            return (phi.a * sigma[phi.x] - phi.b * sigma[phi.y]) % phi.k == 0
        except KeyError as exc:
            raise UnboundVariable(exc.args[0]) from None
    if isinstance(phi, And):
        return all(evaluate(a, sigma) for a in phi.args)
    if isinstance(phi, Or):
        return any(evaluate(a, sigma) for a in phi.args)
    if isinstance(phi, Not):
        return not evaluate(phi.arg, sigma)
    if isinstance(phi, Const):
        return phi.value
    raise TypeError(f"not a formula: {phi!r}")


def atom_vars(atom: Formula) -> tuple[str, ...]:
    if isinstance(atom, Ineq):
        return atom.term.variables
    if isinstance(atom, CongUn):
        return (atom.x,)
    if isinstance(atom, CongBin):
        return (atom.x,) if atom.x == atom.y else (atom.x, atom.y)
    return ()


@lru_cache(maxsize=65536)
def free_vars(phi: Formula) -> frozenset[str]:
    if is_atom(phi):
        return frozenset(atom_vars(phi))
    if isinstance(phi, (And, Or)):
        out: frozenset[str] = frozenset()
        for a in phi.args:
            out |= free_vars(a)
        return out
    if isinstance(phi, Not):
        return free_vars(phi.arg)
    return frozenset()


def atoms(phi: Formula) -> Iterator[Formula]:
    """Atoms of ``phi`` in left-to-right order (with repetitions)."""
    if is_atom(phi):
        yield phi
    elif isinstance(phi, (And, Or)):
        for a in phi.args:
            yield from atoms(a)
    elif isinstance(phi, Not):
        yield from atoms(phi.arg)


def size(phi: Formula) -> int:
    if isinstance(phi, (And, Or)):
        return 1 + sum(size(a) for a in phi.args)
    if isinstance(phi, Not):
        return 1 + size(phi.arg)
    return 1


def _subst_atom(atom: Formula, values: Mapping[str, int]) -> Formula:
    if isinstance(atom, Ineq):
        hit = [(v, a) for v, a in atom.term.coeffs if v in values]
        if not hit:
            return atom
        shift = sum(a * values[v] for v, a in hit)
        rest = atom.term.without(values)
        return simplify_atom(Ineq(rest, atom.rel, atom.bound - shift))
    if isinstance(atom, CongUn):
        if atom.x in values:
            return Const(values[atom.x] % atom.k == atom.c)
        return atom
    if isinstance(atom, CongBin):
        xin, yin = atom.x in values, atom.y in values
        if xin and yin:
            return Const((atom.a * values[atom.x] - atom.b * values[atom.y]) % atom.k == 0)
        if xin:
            return unary_congruence(atom.y, atom.b, atom.k, atom.a * values[atom.x])
        if yin:
            return unary_congruence(atom.x, atom.a, atom.k, atom.b * values[atom.y])
        return atom
    return atom


def substitute_many(phi: Formula, values: Mapping[str, int]) -> Formula:
    """Partially evaluate ``phi`` with the given variables fixed."""
    for v, n in values.items():
        if n < 0:
            raise ValueError(f"value for {v} must be a natural number")
    if not values:
        return phi
    cache: dict[Formula, Formula] = {}

    def go(f: Formula) -> Formula:
        hit = cache.get(f)
        if hit is not None:
            return hit
        if is_atom(f):
            out = _subst_atom(f, values)
        elif isinstance(f, And):
            out = mk_and(*(go(a) for a in f.args))
        elif isinstance(f, Or):
            out = mk_or(*(go(a) for a in f.args))
        elif isinstance(f, Not):
            inner = go(f.arg)
            out = Const(not inner.value) if isinstance(inner, Const) else Not(inner)
        else:
            out = f
        cache[f] = out
        return out

    return go(phi)


def substitute(phi: Formula, var: str, value: int) -> Formula:
    return substitute_many(phi, {var: value})


def rename(phi: Formula, mapping: Mapping[str, str]) -> Formula:
    """Rename free variables (no capture issues: formulas are quantifier-free)."""
    if is_atom(phi):
        if isinstance(phi, Ineq):
            return Ineq(phi.term.rename(mapping), phi.rel, phi.bound)
        if isinstance(phi, CongUn):
            return CongUn(mapping.get(phi.x, phi.x), phi.k, phi.c)
        return CongBin(phi.a, mapping.get(phi.x, phi.x), phi.k, phi.b, mapping.get(phi.y, phi.y))
    if isinstance(phi, And):
        return And(tuple(rename(a, mapping) for a in phi.args))
    if isinstance(phi, Or):
        return Or(tuple(rename(a, mapping) for a in phi.args))
    if isinstance(phi, Not):
        return Not(rename(phi.arg, mapping))
    return phi


# --------------------------------------------------------------------------
# Normal forms


def congruence_pairs(atom: CongBin) -> list[tuple[int, int]]:
    """Residue pairs (c1, c2) in [0,k)^2 with ``a*c1 == b*c2 (mod k)``."""
    k = atom.k
    return [(c1, c2) for c1, c2 in product(range(k), repeat=2) if (atom.a * c1 - atom.b * c2) % k == 0]


def _pairs_formula(x: str, y: str, k: int, pairs: Sequence[tuple[int, int]]) -> Formula:
    if k == 1:
        return TRUE if pairs else FALSE
    if len(pairs) == k * k:
        return TRUE
    return mk_or(*(And((CongUn(x, k, c1), CongUn(y, k, c2))) for c1, c2 in pairs))


def _same_var_residues(atom: CongBin) -> list[int]:
    return [c for c in range(atom.k) if ((atom.a - atom.b) * c) % atom.k == 0]


def negate_atom(atom: Formula) -> Formula:
    """Negation-free equivalent of ``not atom`` over the naturals."""
    if isinstance(atom, Ineq):
        if atom.rel == LE:
            return Ineq(atom.term, GE, atom.bound + 1)
        return Ineq(atom.term, LE, atom.bound - 1)
    if isinstance(atom, CongUn):
        return mk_or(*(CongUn(atom.x, atom.k, c) for c in range(atom.k) if c != atom.c))
    if isinstance(atom, CongBin):
        if atom.x == atom.y:
            good = set(_same_var_residues(atom))
            return mk_or(*(CongUn(atom.x, atom.k, c) for c in range(atom.k) if c not in good))
        good = set(congruence_pairs(atom))
        others = [p for p in product(range(atom.k), repeat=2) if p not in good]
        return _pairs_formula(atom.x, atom.y, atom.k, others)
    raise TypeError(atom)


def to_pnf(phi: Formula) -> Formula:
    """Push negations into the atoms; the result contains no ``Not``."""
    cache: dict[tuple[Formula, bool], Formula] = {}

    def go(f: Formula, neg: bool) -> Formula:
        key = (f, neg)
        hit = cache.get(key)
        if hit is not None:
            return hit
        if is_atom(f):
            out = negate_atom(f) if neg else f
        elif isinstance(f, Const):
            out = Const(f.value != neg)
        elif isinstance(f, Not):
            out = go(f.arg, not neg)
        elif isinstance(f, And):
            parts = tuple(go(a, neg) for a in f.args)
            out = Or(parts) if neg else And(parts)
        elif isinstance(f, Or):
            parts = tuple(go(a, neg) for a in f.args)
            out = And(parts) if neg else Or(parts)
        else:
            raise TypeError(f)
        cache[key] = out
        return out

    return go(phi, False)


def to_dnf(phi: Formula) -> list[Conjunct]:
    """Disjunctive normal form as a list of atom tuples.

    The result can be exponentially larger than ``phi``.  ``[()]`` is true and
    ``[]`` is false.
    """
    if _has_not(phi):
        phi = to_pnf(phi)
    memo: dict[Formula, list[Conjunct]] = {}

    def merge(a: Conjunct, b: Conjunct) -> Conjunct:
        out = list(a)
        seen = set(a)
        for x in b:
            if x not in seen:
                seen.add(x)
                out.append(x)
        return tuple(out)

    def uniq(cs: Iterable[Conjunct]) -> list[Conjunct]:
        out, seen = [], set()
        for c in cs:
            key = frozenset(c)
            if key not in seen:
                seen.add(key)
                out.append(c)
        return out

    def go(f: Formula) -> list[Conjunct]:
        hit = memo.get(f)
        if hit is not None:
            return hit
        if is_atom(f):
            out = [(f,)]
        elif isinstance(f, Const):
            out = [()] if f.value else []
        elif isinstance(f, Or):
            out = uniq(c for a in f.args for c in go(a))
        elif isinstance(f, And):
            out = [()]
            for a in f.args:
                sub = go(a)
                out = uniq(merge(c, d) for c in out for d in sub)
                if not out:
                    break
        else:
            raise TypeError(f)
        memo[f] = out
        return out

    return go(phi)


def _has_not(phi: Formula) -> bool:
    if isinstance(phi, Not):
        return True
    if isinstance(phi, (And, Or)):
        return any(_has_not(a) for a in phi.args)
    return False


@dataclass(frozen=True)
class SizeMetrics:
    d: int
    m_eq: int
    n_vars: int


def size_metrics(phi: Formula) -> SizeMetrics:
    """Bit size, equality count and variable count after slack conversion.

    Each disjunct of ``to_dnf(to_pnf(phi))`` is converted into a system of
    linear equalities; ``m_eq`` and ``n_vars`` are maxima over disjuncts and
    ``d`` is the bit length of the largest absolute constant (at least 1).
    """
    from .lia.normalize import normalize_to_equalities

    d = m = n = 0
    for conj in to_dnf(to_pnf(phi)):
        system = normalize_to_equalities(conj)
        d = max(d, system.max_constant().bit_length())
        m = max(m, len(system.equalities))
        n = max(n, len(system.variables))
    return SizeMetrics(d=max(d, 1), m_eq=m, n_vars=n)


def dnf_conjunct_count(phi: Formula) -> int:
    """Upper bound on ``len(to_dnf(phi))`` computed without expanding."""
    phi = to_pnf(phi) if _has_not(phi) else phi
    memo: dict[Formula, int] = {}

    def go(f: Formula) -> int:
        hit = memo.get(f)
        if hit is not None:
            return hit
        if isinstance(f, And):
            out = 1
            for a in f.args:
                out *= go(a)
        elif isinstance(f, Or):
            out = sum(go(a) for a in f.args)
        elif isinstance(f, Const):
            out = int(f.value)
        else:
            out = 1
        memo[f] = out
        return out

    return go(phi)


def size_metrics_upper(phi: Formula) -> SizeMetrics:
    """Componentwise upper bound on ``size_metrics(phi)`` in linear time.

    Equalities and fresh variables are summed over conjunctions and maximized
    over disjunctions; every original variable is counted once.
    """
    phi = to_pnf(phi)
    memo: dict[Formula, tuple[int, int]] = {}
    big = 0

    def go(f: Formula) -> tuple[int, int]:
        nonlocal big
        hit = memo.get(f)
        if hit is not None:
            return hit
        if isinstance(f, Ineq):
            big = max(big, abs(f.bound), *(abs(a) for _, a in f.term.coeffs))
            out = (1, 1)
        elif isinstance(f, CongUn):
            big = max(big, f.k, f.c)
            out = (1, 1)
        elif isinstance(f, CongBin):
            big = max(big, abs(f.a), abs(f.b), f.k)
            out = (2, 3)
        elif isinstance(f, And):
            parts = [go(a) for a in f.args]
            out = (sum(p[0] for p in parts), sum(p[1] for p in parts))
        elif isinstance(f, Or):
            parts = [go(a) for a in f.args]
            out = (max((p[0] for p in parts), default=0), max((p[1] for p in parts), default=0))
        else:
            out = (0, 0)
        memo[f] = out
        return out

    m, fresh = go(phi)
    n = fresh + len(free_vars(phi)) if m else 0
    return SizeMetrics(d=max(big.bit_length(), 1), m_eq=m, n_vars=n)


def bound_metrics(phi: Formula, exact_limit: int = 4096) -> tuple[SizeMetrics, bool]:
    """Exact metrics when the DNF is small enough, else the linear-time bound."""
    if dnf_conjunct_count(phi) <= exact_limit:
        return size_metrics(phi), True
    return size_metrics_upper(phi), False


def fresh_name(base: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    if base not in taken:
        return base
    i = 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"
