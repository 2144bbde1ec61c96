"""Reading and writing the supported SMT-LIB 2 subset.

Integer variables are read with natural-number semantics.  Besides linear
arithmetic the reader accepts ``(= (mod t k) c)``, ``(= (mod a*x k) (mod
b*y k))``, ``((_ divisible k) t)`` and one top-level ``exists``/``forall``
block.  ``extract_length_abstraction`` reads string benchmarks and keeps only
their arithmetic over ``(str.len w)`` terms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Union

from .errors import NonlinearTerm, SmtSyntaxError, UnsupportedSort
from .formula import (
    FALSE,
    GE,
    LE,
    TRUE,
    And,
    CongBin,
    CongUn,
    Const,
    Expr,
    Formula,
    Ineq,
    LinearTerm,
    Not,
    Or,
    V,
    free_vars,
    iff,
    unary_congruence,
)


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass
class Tok:
    kind: str  # sym, num, str, kw
    text: str
    span: SourceSpan


@dataclass
class SList:
    items: list
    span: SourceSpan


SExpr = Union[Tok, SList]


@dataclass
class ParseReport:
    formula: Formula
    warnings: list[tuple[SourceSpan, str]] = field(default_factory=list)
    dialect: str = "core"
    quantifier: Optional[tuple[str, tuple[str, ...]]] = None
    variables: tuple[str, ...] = ()
    length_terms: dict[str, str] = field(default_factory=dict)
    consumed: frozenset[tuple[int, int]] = frozenset()

    def diagnostics(self, filename: str = "<input>") -> list[str]:
        return [f"{filename}:{sp.line}:{sp.column}: warning: {msg}" for sp, msg in self.warnings]


# --------------------------------------------------------------------------
# S-expressions

_SYMBOL_CHARS = re.compile(rb"[A-Za-z0-9~!@$%^&*_\-+=<>.?/'\x80-\xff]+")
_SIMPLE_SYMBOL = re.compile(r"^[A-Za-z~!@$%^&*_\-+=<>.?/'][A-Za-z0-9~!@$%^&*_\-+=<>.?/']*$")


def parse_sexprs(text: Union[str, bytes]) -> list[SExpr]:
    """All top-level S-expressions of ``text``; spans use byte offsets."""
    data = text.encode("utf-8") if isinstance(text, str) else text
    pos, line, line_start = 0, 1, 0
    stack: list[tuple[list, int, int, int]] = []
    out: list[SExpr] = []
    n = len(data)

    def span(a: int, b: int, ln: int, ls: int) -> SourceSpan:
        return SourceSpan(a, b, ln, a - ls + 1)

    def emit(node: SExpr) -> None:
        (stack[-1][0] if stack else out).append(node)

    while pos < n:
        ch = data[pos]
        if ch == 0x0A:
            pos += 1
            line, line_start = line + 1, pos
        elif ch in b" \t\r":
            pos += 1
        elif ch == 0x3B:  # ;
            end = data.find(b"\n", pos)
            pos = n if end < 0 else end
        elif ch == 0x28:
            stack.append(([], pos, line, line_start))
            pos += 1
        elif ch == 0x29:
            if not stack:
                raise SmtSyntaxError("unexpected ')'", span(pos, pos + 1, line, line_start))
            items, a, ln, ls = stack.pop()
            pos += 1
            emit(SList(items, span(a, pos, ln, ls)))
        elif ch == 0x22:  # string literal, "" escapes a quote
            a, ln, ls = pos, line, line_start
            pos += 1
            buf = bytearray()
            while True:
                if pos >= n:
                    raise SmtSyntaxError("unterminated string literal", span(a, n, ln, ls))
                c = data[pos]
                if c == 0x22:
                    if pos + 1 < n and data[pos + 1] == 0x22:
                        buf.append(0x22)
                        pos += 2
                        continue
                    pos += 1
                    break
                if c == 0x0A:
                    line, line_start = line + 1, pos + 1
                buf.append(c)
                pos += 1
            emit(Tok("str", buf.decode("utf-8", "replace"), span(a, pos, ln, ls)))
        elif ch == 0x7C:  # |quoted symbol|
            a, ln, ls = pos, line, line_start
            end = data.find(b"|", pos + 1)
            if end < 0:
                raise SmtSyntaxError("unterminated quoted symbol", span(a, n, ln, ls))
            body = data[pos + 1 : end]
            line += body.count(b"\n")
            if b"\n" in body:
                line_start = pos + 1 + body.rfind(b"\n") + 1
            pos = end + 1
            emit(Tok("sym", body.decode("utf-8", "replace"), span(a, pos, ln, ls)))
        else:
            m = _SYMBOL_CHARS.match(data, pos) if ch != 0x3A else re.compile(rb":[^\s()]*").match(data, pos)
            if m is None or m.end() == pos:
                raise SmtSyntaxError(f"unexpected character {chr(ch)!r}", span(pos, pos + 1, line, line_start))
            word = m.group().decode("utf-8", "replace")
            kind = "kw" if ch == 0x3A else ("num" if word.isdigit() else "sym")
            emit(Tok(kind, word, span(pos, m.end(), line, line_start)))
            pos = m.end()
    if stack:
        _, a, ln, ls = stack[-1]
        raise SmtSyntaxError("expected ')', found end of input", span(a, n, ln, ls))
    return out


def _head(e: SExpr) -> Optional[str]:
    if isinstance(e, SList) and e.items and isinstance(e.items[0], Tok) and e.items[0].kind == "sym":
        return e.items[0].text
    return None


def _describe(e: SExpr) -> str:
    if isinstance(e, Tok):
        return repr(e.text)
    return f"'({_head(e) or '...'} ...)'"


def _expect_sym(e: SExpr, what: str) -> str:
    if not (isinstance(e, Tok) and e.kind == "sym"):
        raise SmtSyntaxError(f"expected {what}, found {_describe(e)}", e.span)
    return e.text


def _expect_nat(e: SExpr, what: str) -> int:
    if not (isinstance(e, Tok) and e.kind == "num"):
        raise SmtSyntaxError(f"expected {what}, found {_describe(e)}", e.span)
    return int(e.text)


# --------------------------------------------------------------------------
# Term translation


class _StringTerm(Exception):
    """Raised inside the translator when a term leaves linear arithmetic."""

    def __init__(self, span: SourceSpan, what: str):
        super().__init__(what)
        self.span = span
        self.what = what


_STRING_OPS = {"str.++", "str.at", "str.substr", "str.in_re", "str.in.re", "str.prefixof",
               "str.suffixof", "str.contains", "str.indexof", "str.replace", "str.to_int",
               "str.to.int", "str.from_int", "int.to.str", "str.to_re", "str.to.re", "str.<",
               "str.<=", "str.is_digit", "str.replace_all", "str.to_code", "str.from_code"}


class _Translator:
    def __init__(self, strings: bool):
        self.strings = strings
        self.int_vars: dict[str, SourceSpan] = {}
        self.order: list[str] = []
        self.other_sorts: dict[str, str] = {}
        self.warnings: list[tuple[SourceSpan, str]] = []
        self.len_vars: dict[str, str] = {}
        self.defs: dict[str, SExpr] = {}

    def declare_int(self, name: str, span: SourceSpan) -> None:
        if name not in self.int_vars:
            self.int_vars[name] = span
            self.order.append(name)

    def _len_var(self, arg: SExpr) -> str:
        key = _render(arg)
        name = self.len_vars.get(key)
        if name is None:
            if isinstance(arg, Tok) and arg.kind == "sym" and _SIMPLE_SYMBOL.match(arg.text):
                name = f"len!{arg.text}"
            else:
                name = f"len!{len(self.len_vars) + 1}"
            while name in self.int_vars:
                name += "'"
            self.len_vars[key] = name
            self.declare_int(name, arg.span)
        return name

    # arithmetic -----------------------------------------------------------

    def arith(self, e: SExpr, env: dict) -> Expr:
        if isinstance(e, Tok):
            if e.kind == "num":
                return Expr({}, int(e.text))
            if e.kind != "sym":
                raise SmtSyntaxError(f"expected an integer term, found {_describe(e)}", e.span)
            name = e.text
            if name in ("true", "false"):
                raise SmtSyntaxError(f"expected an integer term, found {name!r}", e.span)
            if name in env:
                val = env[name]
                if not isinstance(val, Expr):
                    raise SmtSyntaxError(f"expected an integer term, found Boolean {name!r}", e.span)
                return val
            if name in self.defs:
                return self.arith(self.defs[name], {})
            if name in self.other_sorts:
                if self.other_sorts[name] == "String":
                    raise _StringTerm(e.span, f"string variable {name!r}")
                raise UnsupportedSort(f"variable {name!r} has sort {self.other_sorts[name]}", e.span)
            if name not in self.int_vars:
                self.warnings.append((e.span, f"undeclared symbol {name!r} read as a natural-number variable"))
                self.declare_int(name, e.span)
            return V(name)
        head = _head(e)
        args = e.items[1:]
        if head is None:
            raise SmtSyntaxError(f"expected an integer term, found {_describe(e)}", e.span)
        if head == "+":
            acc = Expr()
            for a in args:
                acc = acc + self.arith(a, env)
            return acc
        if head == "-":
            if not args:
                raise SmtSyntaxError("'-' needs at least one argument", e.span)
            first = self.arith(args[0], env)
            if len(args) == 1:
                return -first
            for a in args[1:]:
                first = first - self.arith(a, env)
            return first
        if head == "*":
            acc = Expr({}, 1)
            for a in args:
                t = self.arith(a, env)
                if acc.coeffs and t.coeffs:
                    raise NonlinearTerm("product of two non-constant terms", e.span)
                if t.coeffs:
                    acc = t * acc.const
                else:
                    acc = acc * t.const
            return acc
        if head == "let":
            return self.arith(args[1], self._bind(args[0], env))
        if head == "str.len":
            if len(args) != 1:
                raise SmtSyntaxError("str.len takes one argument", e.span)
            if not self.strings:
                raise UnsupportedSort("str.len outside the strings dialect", e.span)
            self._check_string_term(args[0], env)
            return V(self._len_var(args[0]))
        if head in ("mod", "div", "abs"):
            raise SmtSyntaxError(f"'{head}' is only supported inside (= (mod t k) c) patterns", e.span)
        if head in _STRING_OPS or head.startswith("str.") or head.startswith("re."):
            raise _StringTerm(e.span, head)
        if head == "ite":
            raise SmtSyntaxError("integer-valued ite is not supported", e.span)
        raise SmtSyntaxError(f"unknown integer function {head!r}", e.span)

    def _check_string_term(self, e: SExpr, env: dict) -> None:
        if isinstance(e, Tok) and e.kind == "sym" and e.text in self.int_vars:
            raise SmtSyntaxError(f"str.len applied to integer variable {e.text!r}", e.span)

    # Boolean ---------------------------------------------------------------

    def _bind(self, bindings: SExpr, env: dict) -> dict:
        if not isinstance(bindings, SList):
            raise SmtSyntaxError(f"expected let bindings, found {_describe(bindings)}", bindings.span)
        new = dict(env)
        for b in bindings.items:
            if not (isinstance(b, SList) and len(b.items) == 2):
                raise SmtSyntaxError(f"expected (name term), found {_describe(b)}", b.span)
            name = _expect_sym(b.items[0], "a let-bound name")
            try:
                new[name] = self.arith(b.items[1], env)
            except (SmtSyntaxError, _StringTerm):
                new[name] = self.boolean(b.items[1], env)
        return new

    def boolean(self, e: SExpr, env: dict) -> Formula:
        if isinstance(e, Tok):
            if e.kind == "sym":
                if e.text == "true":
                    return TRUE
                if e.text == "false":
                    return FALSE
                if e.text in env and isinstance(env[e.text], Formula):
                    return env[e.text]
                if e.text in self.defs:
                    return self.boolean(self.defs[e.text], {})
                if self.other_sorts.get(e.text) == "Bool":
                    raise UnsupportedSort(f"Boolean variable {e.text!r}", e.span)
            raise SmtSyntaxError(f"expected a formula, found {_describe(e)}", e.span)
        if e.items and isinstance(e.items[0], SList):
            return self._indexed(e, env)
        head = _head(e)
        args = e.items[1:]
        if head is None:
            raise SmtSyntaxError(f"expected a formula, found {_describe(e)}", e.span)
        if head == "and":
            parts = tuple(self.boolean(a, env) for a in args)
            return parts[0] if len(parts) == 1 else (And(parts) if parts else TRUE)
        if head == "or":
            parts = tuple(self.boolean(a, env) for a in args)
            return parts[0] if len(parts) == 1 else (Or(parts) if parts else FALSE)
        if head == "not":
            if len(args) != 1:
                raise SmtSyntaxError("'not' takes one argument", e.span)
            return Not(self.boolean(args[0], env))
        if head == "=>":
            if len(args) < 2:
                raise SmtSyntaxError("'=>' needs two arguments", e.span)
            out = self.boolean(args[-1], env)
            for a in reversed(args[:-1]):
                out = Or((Not(self.boolean(a, env)), out))
            return out
        if head == "xor":
            if len(args) != 2:
                raise SmtSyntaxError("'xor' takes two arguments", e.span)
            return Not(iff(self.boolean(args[0], env), self.boolean(args[1], env)))
        if head == "ite":
            if len(args) != 3:
                raise SmtSyntaxError("'ite' takes three arguments", e.span)
            c = self.boolean(args[0], env)
            return Or((And((c, self.boolean(args[1], env))), And((Not(c), self.boolean(args[2], env)))))
        if head == "let":
            return self.boolean(args[1], self._bind(args[0], env))
        if head in ("exists", "forall"):
            raise SmtSyntaxError("quantifiers are only supported as one top-level block", e.span)
        if head == "=":
            return self._equal(e, args, env)
        if head == "distinct":
            terms = [self.arith(a, env) for a in args]
            parts = [terms[i].ne(terms[j]) for i in range(len(terms)) for j in range(i + 1, len(terms))]
            return parts[0] if len(parts) == 1 else And(tuple(parts))
        if head in ("<=", ">=", "<", ">"):
            if len(args) < 2:
                raise SmtSyntaxError(f"'{head}' needs two arguments", e.span)
            terms = [self.arith(a, env) for a in args]
            op = {"<=": Expr.__le__, ">=": Expr.__ge__, "<": Expr.__lt__, ">": Expr.__gt__}[head]
            parts = [op(terms[i], terms[i + 1]) for i in range(len(terms) - 1)]
            return parts[0] if len(parts) == 1 else And(tuple(parts))
        if head in _STRING_OPS or head.startswith("str.") or head.startswith("re."):
            raise _StringTerm(e.span, head)
        raise SmtSyntaxError(f"unknown predicate {head!r}", e.span)

    def _indexed(self, e: SList, env: dict) -> Formula:
        ind = e.items[0]
        if _head(ind) == "_" and len(ind.items) == 3 and isinstance(ind.items[1], Tok) and ind.items[1].text == "divisible":
            k = _expect_nat(ind.items[2], "a divisor")
            if k < 1 or len(e.items) != 2:
                raise SmtSyntaxError("divisible needs a positive index and one argument", e.span)
            return self._mod_eq(e.items[1], k, Expr(), env, e.span)
        raise SmtSyntaxError(f"expected a formula, found {_describe(e)}", e.span)

    def _is_mod(self, e: SExpr) -> bool:
        return _head(e) == "mod"

    def _mod_parts(self, e: SList, env: dict) -> tuple[Expr, int]:
        if len(e.items) != 3:
            raise SmtSyntaxError("'mod' takes two arguments", e.span)
        k = _expect_nat(e.items[2], "a constant modulus")
        if k < 1:
            raise SmtSyntaxError("modulus must be at least 1", e.items[2].span)
        return self.arith(e.items[1], env), k

    def _mod_eq(self, t_e: SExpr, k: int, rhs: Expr, env: dict, span: SourceSpan) -> Formula:
        """``t mod k = rhs`` for a constant ``rhs``."""
        t = self.arith(t_e, env)
        if rhs.coeffs:
            raise SmtSyntaxError("the right side of a mod equality must be constant or a mod term", span)
        c = rhs.const
        if not 0 <= c < k:
            return FALSE
        target = c - t.const
        items = sorted(t.coeffs.items())
        if not items:
            return Const(target % k == 0)
        if len(items) == 1:
            (x, a), = items
            return unary_congruence(x, a, k, target)
        if len(items) == 2 and target % k == 0:
            (x, a), (y, b) = items
            return CongBin(a, x, k, -b, y)
        raise SmtSyntaxError("mod equality over more than two variables is not supported", span)

    def _equal(self, e: SList, args: list, env: dict) -> Formula:
        if len(args) < 2:
            raise SmtSyntaxError("'=' needs two arguments", e.span)
        if len(args) == 2 and (self._is_mod(args[0]) or self._is_mod(args[1])):
            lhs, rhs = args
            if not self._is_mod(lhs):
                lhs, rhs = rhs, lhs
            if self._is_mod(rhs):
                s, k1 = self._mod_parts(lhs, env)
                t, k2 = self._mod_parts(rhs, env)
                if k1 != k2:
                    raise SmtSyntaxError("mod equality with different moduli", e.span)
                if s.const or t.const or len(s.coeffs) != 1 or len(t.coeffs) != 1:
                    raise SmtSyntaxError("expected (= (mod a*x k) (mod b*y k))", e.span)
                (x, a), = s.coeffs.items()
                (y, b), = t.coeffs.items()
                return CongBin(a, x, k1, b, y)
            _, k = self._mod_parts(lhs, env)
            return self._mod_eq(lhs.items[1], k, self.arith(rhs, env), env, e.span)
        # Boolean equality is an iff; integer equality splits into <= and >=
        try:
            terms = [self.arith(a, env) for a in args]
        except SmtSyntaxError:
            fs = [self.boolean(a, env) for a in args]
            parts = [iff(fs[i], fs[i + 1]) for i in range(len(fs) - 1)]
            return parts[0] if len(parts) == 1 else And(tuple(parts))
        parts = [terms[i].eq(terms[i + 1]) for i in range(len(terms) - 1)]
        return parts[0] if len(parts) == 1 else And(tuple(parts))


def _render(e: SExpr) -> str:
    if isinstance(e, Tok):
        return e.text if e.kind != "str" else '"' + e.text.replace('"', '""') + '"'
    return "(" + " ".join(_render(i) for i in e.items) + ")"


# --------------------------------------------------------------------------
# Scripts


def _sort_name(e: SExpr) -> str:
    return _render(e)


def _commands(text: Union[str, bytes]) -> list[SList]:
    out = []
    for e in parse_sexprs(text):
        if not isinstance(e, SList) or _head(e) is None:
            raise SmtSyntaxError(f"expected a command, found {_describe(e)}", e.span)
        out.append(e)
    return out


def _declare(tr: _Translator, cmd: SList, strings: bool) -> None:
    head = _head(cmd)
    items = cmd.items
    if head == "declare-const":
        if len(items) != 3:
            raise SmtSyntaxError("expected (declare-const name sort)", cmd.span)
        name, sort_e = _expect_sym(items[1], "a name"), items[2]
    else:
        if len(items) != 4 or not isinstance(items[2], SList):
            raise SmtSyntaxError("expected (declare-fun name () sort)", cmd.span)
        name, sort_e = _expect_sym(items[1], "a name"), items[3]
        if items[2].items:
            if strings:
                tr.other_sorts[name] = "function"
                tr.warnings.append((cmd.span, f"function symbol {name!r} ignored"))
                return
            raise UnsupportedSort(f"function symbol {name!r} with arguments", cmd.span)
    sort = _sort_name(sort_e)
    if sort == "Int":
        tr.declare_int(name, items[1].span)
    elif strings or sort == "Bool":
        tr.other_sorts[name] = sort
    else:
        raise UnsupportedSort(f"sort {sort} of {name!r} (only Int is supported)", sort_e.span)


def _uses_strings(cmds: Sequence[SList]) -> bool:
    def walk(e: SExpr) -> bool:
        if isinstance(e, Tok):
            return e.kind == "str" or e.text in ("String", "RegLan") or e.text.startswith("str.") or e.text.startswith("re.")
        return any(walk(i) for i in e.items)

    return any(walk(c) for c in cmds)


def parse_formula(text: Union[str, bytes]) -> ParseReport:
    """Parse a script in the supported subset; assertions are conjoined."""
    cmds = _commands(text)
    dialect = "strings" if _uses_strings(cmds) else "core"
    tr = _Translator(strings=dialect == "strings")
    parts: list[Formula] = []
    quant: Optional[tuple[str, tuple[str, ...]]] = None
    for cmd in cmds:
        head = _head(cmd)
        if head in ("declare-const", "declare-fun"):
            _declare(tr, cmd, dialect == "strings")
        elif head == "define-fun":
            _define(tr, cmd)
        elif head == "assert":
            if len(cmd.items) != 2:
                raise SmtSyntaxError("'assert' takes one formula", cmd.span)
            body = cmd.items[1]
            if _head(body) in ("exists", "forall"):
                if quant is not None or parts:
                    raise SmtSyntaxError("a quantifier block must be the only assertion", body.span)
                kind = _head(body)
                names = _bound_vars(tr, body)
                quant = (kind, names)
                parts.append(tr.boolean(body.items[2], {}))
            else:
                if quant is not None:
                    raise SmtSyntaxError("a quantifier block must be the only assertion", body.span)
                parts.append(tr.boolean(body, {}))
        elif head in ("set-logic", "set-info", "set-option", "check-sat", "get-model", "exit", "get-value",
                      "push", "pop", "get-info", "echo", "check-sat-assuming", "reset"):
            continue
        else:
            tr.warnings.append((cmd.span, f"command {head!r} ignored"))
    if not parts:
        phi = TRUE
    elif len(parts) == 1:
        phi = parts[0]
    else:
        phi = And(tuple(parts))
    return ParseReport(phi, tr.warnings, dialect, quant, tuple(tr.order))


def _define(tr: _Translator, cmd: SList) -> None:
    items = cmd.items
    if len(items) != 5 or not isinstance(items[2], SList):
        raise SmtSyntaxError("expected (define-fun name () sort body)", cmd.span)
    name = _expect_sym(items[1], "a name")
    if items[2].items:
        raise SmtSyntaxError("define-fun with parameters is not supported", cmd.span)
    tr.defs[name] = items[4]


def _bound_vars(tr: _Translator, body: SList) -> tuple[str, ...]:
    if len(body.items) != 3 or not isinstance(body.items[1], SList):
        raise SmtSyntaxError(f"expected ({_head(body)} ((x Int) ...) body)", body.span)
    names = []
    for b in body.items[1].items:
        if not (isinstance(b, SList) and len(b.items) == 2):
            raise SmtSyntaxError(f"expected (name Int), found {_describe(b)}", b.span)
        name = _expect_sym(b.items[0], "a variable name")
        if _sort_name(b.items[1]) != "Int":
            raise UnsupportedSort(f"quantified variable {name!r} must be Int", b.items[1].span)
        tr.declare_int(name, b.items[0].span)
        names.append(name)
    return tuple(names)


def extract_length_abstraction(text: Union[str, bytes]) -> ParseReport:
    """Arithmetic part of a string benchmark with ``(str.len w)`` as variables.

    ``length_terms`` maps each length variable to the string term it measures
    and ``consumed`` holds the byte spans of the top-level conjuncts that
    went into the abstraction.
    """
    cmds = _commands(text)
    tr = _Translator(strings=True)
    parts: list[Formula] = []
    consumed: set[tuple[int, int]] = set()
    for cmd in cmds:
        head = _head(cmd)
        if head in ("declare-const", "declare-fun"):
            _declare(tr, cmd, True)
        elif head == "define-fun":
            try:
                _define(tr, cmd)
            except SmtSyntaxError:
                tr.warnings.append((cmd.span, "define-fun with parameters ignored"))
        elif head == "assert" and len(cmd.items) == 2:
            for conj in _split_and(cmd.items[1]):
                try:
                    f = tr.boolean(conj, {})
                except (_StringTerm, SmtSyntaxError, UnsupportedSort, NonlinearTerm) as exc:
                    msg = exc.what if isinstance(exc, _StringTerm) else str(exc)
                    tr.warnings.append((conj.span, f"non-arithmetic assertion dropped ({msg})"))
                    continue
                parts.append(f)
                consumed.add((conj.span.start, conj.span.end))
    terms = {name: key for key, name in tr.len_vars.items()}
    if not tr.len_vars:
        sp = cmds[0].span if cmds else SourceSpan(0, 0, 1, 1)
        tr.warnings.append((sp, "no length constraints"))
        return ParseReport(TRUE, tr.warnings, "strings", None, (), {}, frozenset(consumed))
    if not parts:
        phi = TRUE
    elif len(parts) == 1:
        phi = parts[0]
    else:
        phi = And(tuple(parts))
    used = free_vars(phi)
    return ParseReport(
        phi, tr.warnings, "strings", None, tuple(v for v in tr.order if v in used), terms, frozenset(consumed)
    )


def assertion_conjuncts(text: Union[str, bytes]) -> list[tuple[SList, list[SExpr]]]:
    """Every command with, for ``assert`` commands, its top-level conjuncts."""
    out = []
    for cmd in _commands(text):
        if _head(cmd) == "assert" and len(cmd.items) == 2:
            out.append((cmd, list(_split_and(cmd.items[1]))))
        else:
            out.append((cmd, []))
    return out


def _split_and(e: SExpr) -> Iterator[SExpr]:
    if _head(e) == "and":
        for a in e.items[1:]:
            yield from _split_and(a)
    else:
        yield e


# --------------------------------------------------------------------------
# Printing


def symbol(name: str) -> str:
    return name if _SIMPLE_SYMBOL.match(name) and name not in ("true", "false") else f"|{name}|"


def _int(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def _scaled(a: int, x: str) -> str:
    return symbol(x) if a == 1 else f"(* {_int(a)} {symbol(x)})"


def term_to_smt(t: LinearTerm) -> str:
    if t.is_zero():
        return "0"
    parts = [_scaled(a, v) for v, a in t.coeffs]
    return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def formula_to_smt(phi: Formula) -> str:
    """SMT-LIB term for ``phi`` (without the surrounding assert)."""
    if isinstance(phi, Ineq):
        return f"({phi.rel} {term_to_smt(phi.term)} {_int(phi.bound)})"
    if isinstance(phi, CongUn):
        return f"(= (mod {symbol(phi.x)} {phi.k}) {phi.c})"
    if isinstance(phi, CongBin):
        return f"(= (mod {_scaled(phi.a, phi.x)} {phi.k}) (mod {_scaled(phi.b, phi.y)} {phi.k}))"
    if isinstance(phi, And):
        if not phi.args:
            return "true"
        parts = _and_parts(phi.args)
        return parts[0] if len(parts) == 1 else "(and " + " ".join(parts) + ")"
    if isinstance(phi, Or):
        if not phi.args:
            return "false"
        return "(or " + " ".join(formula_to_smt(x) for x in phi.args) + ")"
    if isinstance(phi, Not):
        return f"(not {formula_to_smt(phi.arg)})"
    if isinstance(phi, Const):
        return "true" if phi.value else "false"
    raise TypeError(f"not a formula: {phi!r}")


def _and_parts(args: Sequence[Formula]) -> list[str]:
    """Conjuncts, with each ``t <= b`` / ``t >= b`` pair printed as ``(= t b)``."""
    le = {(a.term, a.bound) for a in args if isinstance(a, Ineq) and a.rel == LE}
    ge = {(a.term, a.bound) for a in args if isinstance(a, Ineq) and a.rel == GE}
    both = le & ge
    out, done = [], set()
    for a in args:
        key = (a.term, a.bound) if isinstance(a, Ineq) else None
        if key in both:
            if key not in done:
                done.add(key)
                out.append(f"(= {term_to_smt(a.term)} {_int(a.bound)})")
        else:
            out.append(formula_to_smt(a))
    return out


def print_formula(phi: Formula) -> str:
    """``(assert ...)`` for ``phi``."""
    return f"(assert {formula_to_smt(phi)})"


def print_script(
    phi: Formula,
    variables: Optional[Sequence[str]] = None,
    *,
    logic: str = "QF_LIA",
    nonneg: bool = False,
    quantifier: Optional[tuple[str, Sequence[str]]] = None,
    commands: Sequence[str] = ("(check-sat)",),
) -> str:
    """Complete script declaring the free variables of ``phi``.

    With ``nonneg`` every declared variable gets an explicit ``>= 0``
    assertion (needed when handing the script to an integer solver).
    """
    names = list(variables) if variables is not None else sorted(free_vars(phi))
    bound = list(quantifier[1]) if quantifier else []
    lines = [f"(set-logic {logic})"]
    for v in names:
        if v not in bound:
            lines.append(f"(declare-const {symbol(v)} Int)")
    if nonneg:
        for v in names:
            if v not in bound:
                lines.append(f"(assert (>= {symbol(v)} 0))")
    if quantifier:
        kind, qs = quantifier
        decl = " ".join(f"({symbol(v)} Int)" for v in qs)
        lines.append(f"(assert ({kind} ({decl}) {formula_to_smt(phi)}))")
    else:
        lines.append(print_formula(phi))
    lines.extend(commands)
    return "\n".join(lines) + "\n"
