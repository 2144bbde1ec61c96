"""Variadic decomposability on a block of variables, and Pi-decompositions.

For a block ``xs`` the inequality atoms of ``phi`` project to linear
functions ``f(xs)``.  A partition ``rho`` of those functions into unbounded
ones (``f >= B`` or ``f <= -B``) and bounded ones (``|f| < B``) carves the ``xs`` space
into regions; ``phi`` separates ``xs`` from the other variables iff, for
every ``rho``, two points of the same region that agree on the bounded
functions and on divisibility are interchangeable in ``phi``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Sequence

from .errors import EquivalenceCheckFailed, NotDecomposable, ResourceLimit, TooManyVariables
from .formula import (
    TRUE,
    And,
    CongBin,
    CongUn,
    Formula,
    Ineq,
    LinearTerm,
    Not,
    Or,
    atoms,
    bound_metrics,
    free_vars,
    fresh_name,
    iff,
    mk_and,
    mk_or,
    rename,
    substitute_many,
)
from .lia.solver import Backend, SolverConfig, check_sat
from .mondec import (
    DEFAULT_MAX_DISJUNCTS,
    bound_from_metrics,
    div_atoms,
    equivalent,
    minimize_witness,
)

MAX_FUNCTIONS = 8


def _canon(t: LinearTerm) -> LinearTerm:
    """Sign-normalize so the first coefficient is positive (``|f| = |-f|``)."""
    return -t if t.coeffs and t.coeffs[0][1] < 0 else t


def linear_functions(phi: Formula, xs: Sequence[str]) -> tuple[LinearTerm, ...]:
    """Projections onto ``xs`` of the inequality atoms, deduplicated up to sign."""
    block = set(xs)
    out: list[LinearTerm] = []
    seen: set[LinearTerm] = set()
    for at in atoms(phi):
        if isinstance(at, Ineq):
            f = at.term.restrict(block)
            if f.is_zero():
                continue
            f = _canon(f)
            if f not in seen:
                seen.add(f)
                out.append(f)
    return tuple(out)


@dataclass(frozen=True)
class RhoPartition:
    unbounded: tuple[LinearTerm, ...]
    bounded: tuple[LinearTerm, ...]

    def __str__(self) -> str:
        u = ", ".join(map(str, self.unbounded))
        b = ", ".join(map(str, self.bounded))
        return f"(unbounded: {{{u}}}, bounded: {{{b}}})"


def partitions(fs: Sequence[LinearTerm]) -> Iterator[RhoPartition]:
    """Every assignment of each ``f`` to bounded, ``f >= B`` or ``-f >= B``.

    Unbounded entries are stored with their sign applied, so the region of
    an unbounded ``g`` is simply ``g >= B``.  Keeping the two signs apart
    matters: ``x <= y`` is constant on ``x - y >= B`` and on ``x - y <= -B``
    but differs between them.
    """
    for choice in itertools.product((0, 1, -1), repeat=len(fs)):
        unb = tuple(f if c == 1 else -f for f, c in zip(fs, choice) if c)
        eq = tuple(f for f, c in zip(fs, choice) if not c)
        yield RhoPartition(unb, eq)


def _eq(t: LinearTerm, c: int) -> Formula:
    return And((Ineq(t, "<=", c), Ineq(t, ">=", c)))


def _block_names(xs: Sequence[str], tag: str, taken: set[str]) -> dict[str, str]:
    out = {}
    for x in xs:
        name = fresh_name(f"{x}!{tag}", taken)
        taken.add(name)
        out[x] = name
    return out


def same_rho_formula(rho: RhoPartition, m1: Mapping[str, str], m2: Mapping[str, str]) -> Formula:
    """``f(xs1) = f(xs2)`` for every bounded ``f``; unbounded ones are unconstrained."""
    parts = [_eq(f.rename(m1) + (-f.rename(m2)), 0) for f in rho.bounded]
    if not parts:
        return TRUE
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def reggeq_formula(rho: RhoPartition, m: Mapping[str, str], B: int) -> Formula:
    """``g >= B`` for unbounded (signed) ``g`` and ``|f| < B`` for bounded ``f``."""
    parts: list[Formula] = []
    for g in rho.unbounded:
        parts.append(Ineq(g.rename(m), ">=", B))
    for f in rho.bounded:
        g = f.rename(m)
        parts.append(Ineq(g, "<=", B - 1))
        parts.append(Ineq(g, ">=", -(B - 1)))
    if not parts:
        return TRUE
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def auxeq_formula(fs: Sequence[LinearTerm], m: Mapping[str, str], taken: set[str]) -> Formula:
    """Sign-split trackers: ``f = u+ & u- = 0`` or ``f = -u- & u+ = 0 & u- >= 1``."""
    parts = []
    for i, f in enumerate(fs):
        g = f.rename(m)
        up = fresh_name(f"u+{i}", taken)
        taken.add(up)
        um = fresh_name(f"u-{i}", taken)
        taken.add(um)
        tp = LinearTerm(((up, 1),))
        tm = LinearTerm(((um, 1),))
        pos = And((_eq(g + (-tp), 0), Ineq(tm, "<=", 0)))
        neg = And((_eq(g + tm, 0), Ineq(tp, "<=", 0), Ineq(tm, ">=", 1)))
        parts.append(Or((pos, neg)))
    if not parts:
        return TRUE
    return And(tuple(parts))


def samediv_block(phi: Formula, xs: Sequence[str], m1: Mapping[str, str], m2: Mapping[str, str]) -> Formula:
    """Every divisibility atom touching ``xs`` has the same truth value for both copies."""
    block = set(xs)
    parts = []
    seen: set[Formula] = set()
    for at in atoms(phi):
        if isinstance(at, (CongUn, CongBin)) and at not in seen and free_vars(at) & block:
            seen.add(at)
            parts.append(iff(rename(at, m1), rename(at, m2)))
    if not parts:
        return TRUE
    return parts[0] if len(parts) == 1 else And(tuple(parts))


@dataclass
class _Setup:
    xs: tuple[str, ...]
    fs: tuple[LinearTerm, ...]
    m1: dict[str, str]
    m2: dict[str, str]
    samediv: Formula
    phi1: Formula
    phi2: Formula


def _setup(phi: Formula, xs: Sequence[str], max_functions: int) -> _Setup:
    xs = tuple(xs)
    fs = linear_functions(phi, xs)
    if len(fs) > max_functions:
        raise TooManyVariables(
            f"{len(fs)} linear functions over the block give {3 ** len(fs)} regions "
            f"(limit {max_functions} functions)"
        )
    taken = set(free_vars(phi))
    m1 = _block_names(xs, "1", taken)
    m2 = _block_names(xs, "2", taken)
    return _Setup(xs, fs, m1, m2, samediv_block(phi, xs, m1, m2), rename(phi, m1), rename(phi, m2))


def vardec_bound(phi: Formula, xs: Sequence[str], max_functions: int = MAX_FUNCTIONS) -> int:
    """Largest per-partition threshold ``2^(d*m*n + 3)``.

    The metrics come from ``isreg & samediv & phi(xs1) & ~phi(xs2)`` plus the
    sign-split trackers for both copies.  Adding equalities never lowers the
    metrics, so the all-bounded partition attains the maximum.
    """
    s = _setup(phi, xs, max_functions)
    taken = set(free_vars(phi)) | set(s.m1.values()) | set(s.m2.values())
    rho = RhoPartition((), s.fs)
    system = And(
        (
            same_rho_formula(rho, s.m1, s.m2),
            s.samediv,
            s.phi1,
            Not(s.phi2),
            auxeq_formula(s.fs, s.m1, taken),
            auxeq_formula(s.fs, s.m2, taken),
        )
    )
    metrics, _ = bound_metrics(system)
    return bound_from_metrics(metrics)


@dataclass
class VardecVerdict:
    decomposable: bool
    bound: int
    rho: Optional[RhoPartition] = None
    counterexample: Optional[dict[str, int]] = None
    partitions_checked: int = 0


def _dc_query(s: _Setup, rho: RhoPartition, B: int) -> Formula:
    return And(
        (
            reggeq_formula(rho, s.m1, B),
            reggeq_formula(rho, s.m2, B),
            same_rho_formula(rho, s.m1, s.m2),
            s.samediv,
            s.phi1,
            Not(s.phi2),
        )
    )


def check_variadic_on(
    phi: Formula,
    xs: Sequence[str],
    bound_override: Optional[int] = None,
    backend: Backend = "builtin",
    config: Optional[SolverConfig] = None,
    max_functions: int = MAX_FUNCTIONS,
    minimize: bool = True,
) -> VardecVerdict:
    """Check the interchangeability condition for every partition ``rho``."""
    if bound_override is not None and bound_override < 1:
        raise ValueError("bound must be at least 1")
    xs = [x for x in xs if x in free_vars(phi)]
    B = bound_override if bound_override is not None else (vardec_bound(phi, xs, max_functions) if xs else 1)
    if not xs or not (free_vars(phi) - set(xs)):
        return VardecVerdict(True, B)
    s = _setup(phi, xs, max_functions)
    n = 0
    for rho in partitions(s.fs):
        n += 1
        query = _dc_query(s, rho, B)
        res = check_sat(query, backend, config)
        if res.is_sat:
            witness = res.model
            if minimize:
                order = [s.m1[x] for x in s.xs] + [s.m2[x] for x in s.xs]
                order += sorted(free_vars(phi) - set(s.xs))
                witness = minimize_witness(query, witness, order, {}, backend, config)
            return VardecVerdict(False, B, rho, witness, n)
    return VardecVerdict(True, B, None, None, n)


def minimal_vardec_bound(
    phi: Formula,
    xs: Sequence[str],
    backend: Backend = "builtin",
    config: Optional[SolverConfig] = None,
    max_functions: int = MAX_FUNCTIONS,
    top: Optional[int] = None,
) -> int:
    """Least power of two at which every partition passes (monotone in ``B``)."""
    if top is None:
        top = vardec_bound(phi, xs, max_functions)
    v = check_variadic_on(phi, xs, top, backend, config, max_functions, minimize=False)
    if not v.decomposable:
        raise NotDecomposable(f"not decomposable on {{{', '.join(xs)}}}", v.counterexample)

    def ok(e: int) -> bool:
        return check_variadic_on(phi, xs, 1 << e, backend, config, max_functions, minimize=False).decomposable

    top_e = top.bit_length() - 1
    if ok(0):
        return 1
    lo_e, hi_e, step = 0, top_e, 1
    while lo_e + step < top_e:
        if ok(lo_e + step):
            hi_e = lo_e + step
            break
        lo_e += step
        step *= 2
    while hi_e - lo_e > 1:
        mid = (lo_e + hi_e) // 2
        if ok(mid):
            hi_e = mid
        else:
            lo_e = mid
    return 1 << hi_e


# --------------------------------------------------------------------------
# decomposition


def _residue_classes(phi: Formula, xs: Sequence[str]) -> list[tuple[CongUn, ...]]:
    """Maximal consistent residue assignments for the block (product over variables)."""
    per_var = []
    for x in xs:
        d = div_atoms(phi, x)
        L = d.period
        classes = []
        for r in range(L):
            classes.append(tuple(CongUn(x, k, r % k) for k in d.moduli))
        per_var.append(classes)
    return [tuple(a for part in combo for a in part) for combo in itertools.product(*per_var)]


def representatives(
    s: _Setup,
    rho: RhoPartition,
    D: Sequence[CongUn],
    B: int,
    backend: Backend = "builtin",
    config: Optional[SolverConfig] = None,
    limit: int = DEFAULT_MAX_DISJUNCTS,
) -> list[dict[str, int]]:
    """One small point per class of bounded-function values in region ``(rho, D)``."""
    ident = {x: x for x in s.xs}
    region = mk_and(reggeq_formula(rho, ident, B), *D)
    out: list[dict[str, int]] = []
    blocks: list[Formula] = []
    while True:
        query = mk_and(region, *blocks)
        res = check_sat(query, backend, config)
        if not res.is_sat:
            return out
        point = {x: res.model.get(x, 0) for x in s.xs}
        point = minimize_witness(query, point, list(s.xs), {}, backend, config)
        point = {x: point[x] for x in s.xs}
        out.append(point)
        if len(out) > limit:
            raise ResourceLimit(f"more than {limit} representatives")
        if not rho.bounded:
            return out
        vals = [(f, f.value(point)) for f in rho.bounded]
        blocks.append(Not(mk_and(*(_eq(f, c) for f, c in vals))))


def variadic_pieces(
    phi: Formula,
    xs: Sequence[str],
    B: int,
    backend: Backend = "builtin",
    config: Optional[SolverConfig] = None,
    max_functions: int = MAX_FUNCTIONS,
    max_disjuncts: int = DEFAULT_MAX_DISJUNCTS,
) -> list[tuple[Formula, Formula]]:
    """``(guard(xs), residual(ys))`` pairs; residuals are satisfiable and distinct."""
    s = _setup(phi, xs, max_functions)
    ident = {x: x for x in s.xs}
    grouped: dict[Formula, list[Formula]] = {}
    count = 0
    classes = _residue_classes(phi, s.xs)
    for rho in partitions(s.fs):
        for D in classes:
            for c in representatives(s, rho, D, B, backend, config, max_disjuncts):
                count += 1
                if count > max_disjuncts:
                    raise ResourceLimit(f"decomposition exceeds {max_disjuncts} disjuncts")
                guard = mk_and(
                    reggeq_formula(rho, ident, B),
                    *(_eq(f, f.value(c)) for f in rho.bounded),
                    *D,
                )
                residual = substitute_many(phi, c)
                grouped.setdefault(residual, []).append(guard)
    pieces = []
    for residual, guards in grouped.items():
        if residual != TRUE and not check_sat(residual, backend, config).is_sat:
            continue
        pieces.append((mk_or(*guards), residual))
    return pieces


def decompose_variadic_on(
    phi: Formula,
    xs: Sequence[str],
    backend: Backend = "builtin",
    config: Optional[SolverConfig] = None,
    bound: Optional[int] = None,
    max_functions: int = MAX_FUNCTIONS,
    max_disjuncts: int = DEFAULT_MAX_DISJUNCTS,
    verify: bool = True,
) -> Formula:
    """Equivalent disjunction of ``guard(xs) & psi(ys)``."""
    xs = [x for x in xs if x in free_vars(phi)]
    if not xs or not (free_vars(phi) - set(xs)):
        return phi
    B = bound if bound is not None else minimal_vardec_bound(phi, xs, backend, config, max_functions)
    pieces = variadic_pieces(phi, xs, B, backend, config, max_functions, max_disjuncts)
    out = mk_or(*(mk_and(g, r) for g, r in pieces))
    if verify:
        diff = equivalent(phi, out, backend, config)
        if diff is not None:
            raise EquivalenceCheckFailed(f"decomposition on {{{', '.join(xs)}}} differs from the input", diff)
    return out


def pi_decompose(
    phi: Formula,
    parts: Sequence[Sequence[str]],
    backend: Backend = "builtin",
    config: Optional[SolverConfig] = None,
    max_functions: int = MAX_FUNCTIONS,
    max_disjuncts: int = DEFAULT_MAX_DISJUNCTS,
    verify: bool = True,
) -> Formula:
    """Decompose along the partition ``parts`` of the free variables.

    The first part is split off, its representative values substituted, and
    each residual is decomposed along the remaining parts.  The result is a
    disjunction of conjunctions whose conjuncts each mention one part only.
    """
    parts = [tuple(p) for p in parts]
    if any(not p for p in parts):
        raise ValueError("parts must be nonempty")
    flat = [v for p in parts for v in p]
    if len(set(flat)) != len(flat):
        raise ValueError("parts must be disjoint")
    missing = free_vars(phi) - set(flat)
    if missing:
        raise ValueError(f"variables {sorted(missing)} are not covered by the partition")
    memo: dict[tuple[Formula, int], Formula] = {}

    def go(f: Formula, i: int) -> Formula:
        live = [p for p in parts[i:] if set(p) & free_vars(f)]
        if len(live) <= 1:
            return f
        key = (f, i)
        hit = memo.get(key)
        if hit is not None:
            return hit
        block = [x for x in live[0] if x in free_vars(f)]
        j = parts.index(live[0]) + 1
        try:
            B = minimal_vardec_bound(f, block, backend, config, max_functions)
        except NotDecomposable as exc:
            raise NotDecomposable(f"not decomposable on part {{{', '.join(live[0])}}}", exc.witness) from None
        out_parts = []
        for guard, residual in variadic_pieces(f, block, B, backend, config, max_functions, max_disjuncts):
            out_parts.append(mk_and(guard, go(residual, j)))
        out = mk_or(*out_parts)
        memo[key] = out
        return out

    out = go(phi, 0)
    if verify:
        diff = equivalent(phi, out, backend, config)
        if diff is not None:
            raise EquivalenceCheckFailed("Pi-decomposition differs from the input", diff)
    return out


def respects_partition(phi: Formula, parts: Sequence[Sequence[str]]) -> bool:
    """Every atom's variables lie inside a single part."""
    owner = {v: i for i, p in enumerate(parts) for v in p}
    for at in atoms(phi):
        if len({owner.get(v, -1) for v in free_vars(at)}) > 1:
            return False
    return True
