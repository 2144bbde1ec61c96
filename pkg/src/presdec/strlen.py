"""Length constraints of string benchmarks as regular constraints.

A one-variable Presburger formula denotes an eventually periodic set of
naturals, i.e. a finite union of progressions ``a + j*b``.  Each progression
is the length language of ``Sigma^a (Sigma^b)*``, so a monadically
decomposable length abstraction can be replaced by regex memberships.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

from .errors import ParseError, PresdecError, ResourceLimit
from .formula import (
    GE,
    LE,
    And,
    Const,
    Formula,
    Ineq,
    LinearTerm,
    Not,
    Or,
    free_vars,
    fresh_name,
    iff,
    mk_and,
    mk_or,
    rename,
)
from .grid import truth_table
from .lia.solver import Backend, SolverConfig, check_sat
from .mondec import check_monadic, decompose_full, div_atoms, is_monadic
from .smtlib import (
    SList,
    Tok,
    _render,
    assertion_conjuncts,
    extract_length_abstraction,
    formula_to_smt,
    parse_sexprs,
)

MAX_PREFIX = 1 << 20


class NotMonadic(PresdecError):
    """The formula has more than one free variable."""


@dataclass(frozen=True)
class SemilinearSet:
    """Union of progressions ``{a + j*b : j >= 0}``; ``b == 0`` is the singleton ``{a}``."""

    progressions: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        seen = []
        for a, b in self.progressions:
            if a < 0 or b < 0:
                raise ValueError("bases and periods are natural numbers")
            if (a, b) not in seen:
                seen.append((a, b))
        object.__setattr__(self, "progressions", tuple(seen))

    def __contains__(self, n: int) -> bool:
        for a, b in self.progressions:
            if n == a or (b and n > a and (n - a) % b == 0):
                return True
        return False

    def members(self, upto: int) -> set[int]:
        return {n for n in range(upto + 1) if n in self}

    @property
    def is_empty(self) -> bool:
        return not self.progressions

    def horizon(self) -> int:
        """``max base + 4 * max period``: enough to compare two such sets."""
        return max((a for a, _ in self.progressions), default=0) + 4 * max(
            (b for _, b in self.progressions), default=0
        )


def _stabilization_point(delta: Formula, x: str, L: int, backend: Backend, config) -> int:
    """Least ``T`` with ``delta(n) <-> delta(n + L)`` for all ``n >= T``."""
    x2 = fresh_name(f"{x}+", set(free_vars(delta)))
    gap = LinearTerm(((x2, 1), (x, -1)))
    differs = mk_and(Ineq(gap, LE, L), Ineq(gap, GE, L), Not(iff(delta, rename(delta, {x: x2}))))

    def stable_from(t: int) -> bool:
        return not check_sat(mk_and(Ineq(LinearTerm(((x, 1),)), GE, t), differs), backend, config).is_sat

    if stable_from(0):
        return 0
    hi = 1
    while not stable_from(hi):
        hi *= 2
        if hi > MAX_PREFIX:
            raise ResourceLimit(f"no period found below {MAX_PREFIX}")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if stable_from(mid):
            hi = mid
        else:
            lo = mid
    return hi


def monadic_to_semilinear(
    delta: Formula, backend: Backend = "builtin", config: Optional[SolverConfig] = None
) -> SemilinearSet:
    """Progressions describing the solution set of a one-variable formula."""
    fv = sorted(free_vars(delta))
    if len(fv) > 1:
        raise NotMonadic(f"formula has {len(fv)} free variables: {', '.join(fv)}")
    if not fv:
        truth = check_sat(delta, backend, config).is_sat
        return SemilinearSet(((0, 1),)) if truth else SemilinearSet(())
    x = fv[0]
    L = div_atoms(delta, x).period
    T = _stabilization_point(delta, x, L, backend, config)
    table = truth_table(delta, [x], T + 2 * L)
    progs: list[tuple[int, int]] = [(n, 0) for n in range(T) if table[n]]
    for n in range(T, T + L):
        if table[n]:
            progs.append((n, L))
    out = SemilinearSet(tuple(progs))
    for n in range(T + 2 * L + 1):
        if bool(table[n]) != (n in out):
            raise AssertionError(f"progression set disagrees with the formula at {n}")
    return _compact(out)


def _compact(s: SemilinearSet) -> SemilinearSet:
    """Fold singletons that continue a progression backwards into it."""
    singles = sorted(a for a, b in s.progressions if b == 0)
    progs = {(a, b) for a, b in s.progressions if b}
    changed = True
    while changed:
        changed = False
        for a, b in sorted(progs):
            if a - b in singles and a - b >= 0:
                singles.remove(a - b)
                progs.discard((a, b))
                progs.add((a - b, b))
                changed = True
                break
    # progressions with period L covering every residue collapse to period 1
    by_period: dict[int, list[int]] = {}
    for a, b in progs:
        by_period.setdefault(b, []).append(a)
    merged = set()
    for b, bases in by_period.items():
        bases.sort()
        if b > 1 and len(bases) == b and bases[-1] - bases[0] == b - 1:
            merged.add((bases[0], 1))
        else:
            merged.update((a, b) for a in bases)
    return SemilinearSet(tuple(sorted((a, 0) for a in singles) + sorted(merged)))


# --------------------------------------------------------------------------
# regular expressions


def _sigma(n: int) -> str:
    if n == 1:
        return "re.allchar"
    return f"((_ re.loop {n} {n}) re.allchar)"


def progression_regex(a: int, b: int) -> str:
    if b == 0:
        return _sigma(a) if a else '(str.to_re "")'
    star = "(re.* re.allchar)" if b == 1 else f"(re.* {_sigma(b)})"
    return star if a == 0 else f"(re.++ {_sigma(a)} {star})"


def progression_text(a: int, b: int) -> str:
    """Compact notation such as ``S^2(S^3)*``."""
    base = "" if a == 0 else ("S" if a == 1 else f"S^{a}")
    if b == 0:
        return base or "eps"
    per = "S*" if b == 1 else f"(S^{b})*"
    return base + per


@dataclass(frozen=True)
class RegexConstraint:
    var: str
    pattern: str
    lengths: SemilinearSet

    def to_smt(self) -> str:
        return f"(str.in_re {self.var} {self.pattern})"

    def __str__(self) -> str:
        if self.lengths.is_empty:
            return f"{self.var} in {{}}"
        return f"{self.var} in " + " | ".join(progression_text(a, b) for a, b in self.lengths.progressions)


def semilinear_to_regex(s: SemilinearSet, w: str) -> RegexConstraint:
    parts = [progression_regex(a, b) for a, b in s.progressions]
    if not parts:
        pattern = "re.none"
    elif len(parts) == 1:
        pattern = parts[0]
    else:
        pattern = "(re.union " + " ".join(parts) + ")"
    return RegexConstraint(w, pattern, s)


def regex_lengths(pattern: Union[str, Tok, SList], upto: int) -> frozenset[int]:
    """Lengths ``<= upto`` of words in an SMT-LIB regular expression.

    Handles re.allchar, re.none, re.all, str.to_re, re.range, re.++,
    re.union, re.inter, re.*, re.+, re.opt and (_ re.loop lo hi).  Lengths
    of ``re.inter`` are over-approximated by intersecting the operands'
    length sets, which is exact when all but one operand are built from
    re.allchar alone (the only kind this module generates).
    """
    e = parse_sexprs(pattern)[0] if isinstance(pattern, str) else pattern
    full = frozenset(range(upto + 1))

    def star(s: frozenset[int]) -> frozenset[int]:
        reach = {0}
        frontier = [0]
        while frontier:
            n = frontier.pop()
            for k in s:
                m = n + k
                if k and m <= upto and m not in reach:
                    reach.add(m)
                    frontier.append(m)
        return frozenset(reach)

    def cat(a: frozenset[int], b: frozenset[int]) -> frozenset[int]:
        return frozenset(i + j for i in a for j in b if i + j <= upto)

    def go(e) -> frozenset[int]:
        if isinstance(e, Tok):
            if e.text == "re.allchar":
                return frozenset({1}) if upto >= 1 else frozenset()
            if e.text == "re.none":
                return frozenset()
            if e.text == "re.all":
                return full
            raise ValueError(f"unsupported regex {e.text}")
        head = e.items[0]
        args = e.items[1:]
        if isinstance(head, SList):
            # (_ re.loop lo hi)
            idx = [t.text for t in head.items]
            if idx[:2] != ["_", "re.loop"]:
                raise ValueError(f"unsupported indexed regex {idx}")
            lo, hi = int(idx[2]), int(idx[3])
            inner = go(args[0])
            acc = frozenset({0})
            out: set[int] = set()
            for i in range(hi + 1):
                if i >= lo:
                    out |= acc
                acc = cat(acc, inner)
                if not acc:
                    break
            return frozenset(out)
        op = head.text
        if op == "str.to_re":
            n = len(args[0].text)
            return frozenset({n}) if n <= upto else frozenset()
        if op == "re.range":
            lo_c, hi_c = args[0].text, args[1].text
            ok = len(lo_c) == 1 and len(hi_c) == 1 and lo_c <= hi_c
            return frozenset({1}) if ok and upto >= 1 else frozenset()
        if op == "re.++":
            acc = frozenset({0})
            for a in args:
                acc = cat(acc, go(a))
            return acc
        if op == "re.union":
            return frozenset().union(*(go(a) for a in args))
        if op == "re.inter":
            sets = [go(a) for a in args]
            return frozenset.intersection(*sets)
        if op == "re.*":
            return star(go(args[0]))
        if op == "re.+":
            inner = go(args[0])
            return cat(inner, star(inner))
        if op == "re.opt":
            return go(args[0]) | {0}
        raise ValueError(f"unsupported regex operator {op}")

    return go(e)


# --------------------------------------------------------------------------
# scanning and rewriting

NO_LENGTH = "no-length"
TRIVIALLY_UNSAT = "trivially-unsat"
DECOMPOSABLE = "decomposable"
NON_DECOMPOSABLE = "non-decomposable"
ERROR = "error"

CATEGORIES = (DECOMPOSABLE, NON_DECOMPOSABLE, NO_LENGTH, TRIVIALLY_UNSAT)


@dataclass
class FileResult:
    path: str
    category: str
    variables: tuple[str, ...] = ()
    counterexample: Optional[dict[str, int]] = None
    message: str = ""

    def to_json(self) -> dict:
        return {
            "path": self.path,
            "category": self.category,
            "variables": list(self.variables),
            "counterexample": self.counterexample,
            "message": self.message,
        }


@dataclass
class ScanReport:
    files: list[FileResult] = field(default_factory=list)

    @property
    def counts(self) -> dict[str, int]:
        c = {k: 0 for k in ("total", "with_len", "checked", "decomposable", "non_decomposable", "trivially_unsat", "errors")}
        for f in self.files:
            c["total"] += 1
            if f.category == ERROR:
                c["errors"] += 1
                continue
            if f.category != NO_LENGTH:
                c["with_len"] += 1
            if f.category == TRIVIALLY_UNSAT:
                c["trivially_unsat"] += 1
            elif f.category == DECOMPOSABLE:
                c["decomposable"] += 1
                c["checked"] += 1
            elif f.category == NON_DECOMPOSABLE:
                c["non_decomposable"] += 1
                c["checked"] += 1
        return c

    def merge(self, other: "ScanReport") -> "ScanReport":
        return ScanReport(self.files + other.files)

    def to_json(self) -> dict:
        return {"counts": self.counts, "files": [f.to_json() for f in self.files]}

    def table(self) -> str:
        """Aligned summary in the layout of the usual benchmark-count table."""
        c = self.counts
        head = ["Benchmarks", "With length constraints", "Checked", "Decomposable", "Non-decomposable", "Trivially unsat"]
        row = [c["total"], c["with_len"], c["checked"], c["decomposable"], c["non_decomposable"], c["trivially_unsat"]]
        widths = [max(len(h), len(str(v))) for h, v in zip(head, row)]
        line1 = "  ".join(h.rjust(w) for h, w in zip(head, widths))
        line2 = "  ".join(str(v).rjust(w) for v, w in zip(row, widths))
        pct = f"{100.0 * c['decomposable'] / c['checked']:.1f}%" if c["checked"] else "n/a"
        return f"{line1}\n{line2}\ndecomposable among checked: {pct}"


def _read(path: Union[str, Path]) -> bytes:
    return Path(path).read_bytes()


def classify(text: Union[str, bytes], backend: Backend = "builtin", config: Optional[SolverConfig] = None) -> FileResult:
    rep = extract_length_abstraction(text)
    if not rep.length_terms:
        return FileResult("", NO_LENGTH)
    phi = rep.formula
    if not check_sat(phi, backend, config).is_sat:
        return FileResult("", TRIVIALLY_UNSAT, rep.variables)
    m = check_monadic(phi, backend, config)
    if m.decomposable:
        return FileResult("", DECOMPOSABLE, rep.variables)
    bad = next(v for v, r in m.per_variable.items() if not r.decomposable)
    ce = m.per_variable[bad].counterexample
    return FileResult("", NON_DECOMPOSABLE, rep.variables, ce, f"not decomposable on {bad}")


def scan_file(path: Union[str, Path], backend: Backend = "builtin", config: Optional[SolverConfig] = None) -> FileResult:
    try:
        res = classify(_read(path), backend, config)
    except (ParseError, ResourceLimit, NotMonadic) as exc:
        res = FileResult("", ERROR, message=str(exc))
    res.path = str(path)
    return res


def _scan_one(args) -> FileResult:
    path, backend = args
    return scan_file(path, backend)


def smt_files(paths: Iterable[Union[str, Path]]) -> list[Path]:
    out: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(q for q in p.rglob("*.smt2") if q.is_file()))
        else:
            out.append(p)
    return out


def scan_paths(
    paths: Iterable[Union[str, Path]], backend: Backend = "builtin", jobs: int = 1
) -> ScanReport:
    files = smt_files(paths)
    if jobs > 1 and len(files) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_scan_one, [(f, backend) for f in files]))
    else:
        results = [scan_file(f, backend) for f in files]
    return ScanReport(results)


@dataclass
class RewriteResult:
    text: str
    category: str
    decomposition: Optional[Formula] = None
    assertion: Optional[str] = None
    memberships: list[RegexConstraint] = field(default_factory=list)
    flagged: list[str] = field(default_factory=list)


def membership_formula(
    phi: Formula,
    length_terms: Mapping[str, str],
    backend: Backend = "builtin",
    config: Optional[SolverConfig] = None,
    out: Optional[list[RegexConstraint]] = None,
) -> str:
    """SMT-LIB rendering of a monadic formula with length atoms as regex memberships."""
    memo: dict[Formula, str] = {}

    def go(f: Formula) -> str:
        hit = memo.get(f)
        if hit is not None:
            return hit
        fv = free_vars(f)
        if isinstance(f, Const):
            s = "true" if f.value else "false"
        elif len(fv) == 1 and next(iter(fv)) in length_terms:
            v = next(iter(fv))
            rc = semilinear_to_regex(monadic_to_semilinear(f, backend, config), length_terms[v])
            if out is not None:
                out.append(rc)
            s = rc.to_smt()
        elif len(fv) <= 1:
            s = formula_to_smt(f)
        elif isinstance(f, (And, Or)):
            s = _nary(f)
        elif isinstance(f, Not):
            s = f"(not {go(f.arg)})"
        else:
            raise NotMonadic(f"atom over several variables: {f}")
        memo[f] = s
        return s

    def _nary(f: Formula) -> str:
        # siblings over the same single variable share one regex
        join = mk_and if isinstance(f, And) else mk_or
        groups: dict[str, list[Formula]] = {}
        rest: list[Formula] = []
        for a in f.args:
            fv = free_vars(a)
            if len(fv) == 1:
                groups.setdefault(next(iter(fv)), []).append(a)
            else:
                rest.append(a)
        parts = [go(join(*g)) for g in groups.values()] + [go(a) for a in rest]
        if len(parts) == 1:
            return parts[0]
        return ("(and " if isinstance(f, And) else "(or ") + " ".join(parts) + ")"

    return go(phi)


def rewrite_text(
    text: Union[str, bytes], backend: Backend = "builtin", config: Optional[SolverConfig] = None
) -> RewriteResult:
    """Replace the length constraints of a benchmark by regex memberships.

    String assertions are kept verbatim.  Benchmarks whose length abstraction
    is not decomposable (or trivially unsatisfiable, or absent) come back
    unchanged, flagged with the reason.
    """
    raw = text.encode() if isinstance(text, str) else text
    src = raw.decode()
    rep = extract_length_abstraction(raw)
    if not rep.length_terms:
        return RewriteResult(src, NO_LENGTH)
    phi = rep.formula
    if not check_sat(phi, backend, config).is_sat:
        return RewriteResult(src, TRIVIALLY_UNSAT, flagged=["length constraints are unsatisfiable"])
    if not check_monadic(phi, backend, config).decomposable:
        return RewriteResult(src, NON_DECOMPOSABLE, flagged=["length constraints are not monadically decomposable"])
    dec = phi if is_monadic(phi) else decompose_full(phi, backend, config)
    regexes: list[RegexConstraint] = []
    assertion = membership_formula(dec, rep.length_terms, backend, config, regexes)
    lines: list[str] = []
    inserted = False
    for cmd, conjs in assertion_conjuncts(raw):
        chunk = raw[cmd.span.start : cmd.span.end].decode()
        if conjs:
            keep = [c for c in conjs if (c.span.start, c.span.end) not in rep.consumed]
            if len(keep) != len(conjs):
                if not inserted:
                    lines.append(f"(assert {assertion})")
                    inserted = True
                if not keep:
                    continue
                body = [raw[c.span.start : c.span.end].decode() for c in keep]
                chunk = f"(assert {body[0]})" if len(body) == 1 else "(assert (and " + " ".join(body) + "))"
        elif chunk.startswith("(check-sat") and not inserted:
            lines.append(f"(assert {assertion})")
            inserted = True
        lines.append(chunk)
    if not inserted:
        lines.append(f"(assert {assertion})")
    return RewriteResult("\n".join(lines) + "\n", DECOMPOSABLE, dec, assertion, regexes)


def rewrite_file(
    path: Union[str, Path],
    out_dir: Union[str, Path],
    backend: Backend = "builtin",
    config: Optional[SolverConfig] = None,
) -> RewriteResult:
    res = rewrite_text(_read(path), backend, config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / Path(path).name).write_text(res.text)
    return res


def eval_length_assertion(term: Union[str, SList, Tok], lengths: Mapping[str, int], horizon: int) -> bool:
    """Truth of a membership assertion given only the lengths of its string variables.

    Only for assertions produced by :func:`membership_formula`: Boolean
    structure over ``str.in_re`` atoms and integer arithmetic atoms.
    """
    e = parse_sexprs(term)[0] if isinstance(term, str) else term
    if isinstance(e, Tok):
        if e.text in ("true", "false"):
            return e.text == "true"
        raise ValueError(f"unexpected token {e.text}")
    head = e.items[0].text if isinstance(e.items[0], Tok) else None
    args = e.items[1:]
    if head == "and":
        return all(eval_length_assertion(a, lengths, horizon) for a in args)
    if head == "or":
        return any(eval_length_assertion(a, lengths, horizon) for a in args)
    if head == "not":
        return not eval_length_assertion(args[0], lengths, horizon)
    if head == "str.in_re":
        n = lengths[_render(args[0])]
        return n in regex_lengths(args[1], max(horizon, n))
    raise ValueError(f"unexpected operator {head}")
