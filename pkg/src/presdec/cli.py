"""``presdec`` command line.

Exit codes: 0 verdict delivered, 1 internal error, 2 input or usage error,
3 no decomposition exists for a command that needs one, 4 resource limit.
"""

from __future__ import annotations

import argparse
import json
import re
import signal
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .errors import (
    BackendFailure,
    EquivalenceCheckFailed,
    NotDecomposable,
    ParseError,
    ResourceLimit,
    TooManyVariables,
)
from .formula import Formula, Or, free_vars
from .lia.solver import Backend, ExternalBackend, SolverConfig, default_backend
from .mondec import (
    DEFAULT_MAX_DISJUNCTS,
    check_decomposable_on,
    decompose_full,
    decompose_on,
    minimal_bound_search,
)
from .qelim import QuantBlock, eliminate
from .smtlib import ParseReport, parse_formula, print_formula, print_script
from .vardec import check_variadic_on, decompose_variadic_on, minimal_vardec_bound, pi_decompose

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_NOT_DECOMPOSABLE, EXIT_RESOURCE = 0, 1, 2, 3, 4

SCHEMA_PATH = Path(__file__).with_name("schemas") / "report.schema.json"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    backend: Backend
    solver: SolverConfig
    timeout: Optional[float]
    bound_search: bool
    fmt: str
    max_disjuncts: int
    verbose: bool = False

    def __post_init__(self):
        if self.timeout is not None and self.timeout <= 0:
            raise UsageError("--timeout must be positive")
        if self.max_disjuncts < 1:
            raise UsageError("--max-disjuncts must be positive")
        if self.solver.max_nodes < 1:
            raise UsageError("--max-nodes must be positive")

    @property
    def backend_name(self) -> str:
        return "builtin" if self.backend == "builtin" else f"external:{self.backend.command}"


# --------------------------------------------------------------------------
# helpers


def _int_json(n: Optional[int]):
    """Integers beyond 2^53 go out as strings so JSON readers keep them exact."""
    if n is None:
        return None
    return n if abs(n) < 1 << 53 else str(n)


def _log2(n: int) -> int:
    return max(n.bit_length() - 1, 0)


def _bound_text(n: int) -> str:
    """Large values relative to the nearest power of two: ``2^263 + 1``."""
    if abs(n) <= 1 << 32:
        return str(n)
    k = _log2(n)
    d = n - (1 << k)
    if d == 0:
        return f"2^{k}"
    if d < 1 << 16:
        return f"2^{k} + {d}"
    return str(n)


def _model_text(model: dict[str, int]) -> str:
    return ", ".join(f"{k} = {_bound_text(v)}" for k, v in sorted(model.items()))


def parse_pi(spec: str) -> list[list[str]]:
    """``"{x},{y,z}"`` into ``[["x"], ["y", "z"]]``."""
    spec = spec.strip()
    if not re.fullmatch(r"\{[^{}]*\}(\s*,\s*\{[^{}]*\})*", spec):
        raise UsageError(f"malformed partition {spec!r} (expected e.g. \"{{x}},{{y,z}}\")")
    parts = []
    for body in re.findall(r"\{([^{}]*)\}", spec):
        names = [n.strip() for n in body.split(",") if n.strip()]
        if not names:
            raise UsageError(f"empty part in partition {spec!r}")
        parts.append(names)
    flat = [n for p in parts for n in p]
    if len(set(flat)) != len(flat):
        raise UsageError("partition parts must be disjoint")
    return parts


def _names(arg: str) -> list[str]:
    out = [n.strip() for n in arg.split(",") if n.strip()]
    if not out:
        raise UsageError("empty variable list")
    return out


def _load(path: str) -> tuple[ParseReport, str]:
    try:
        data = sys.stdin.buffer.read() if path == "-" else Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return parse_formula(data), path


def _known(rep: ParseReport, names: Sequence[str]) -> None:
    known = set(rep.variables) | free_vars(rep.formula)
    for n in names:
        if n not in known:
            raise UsageError(f"unknown variable {n!r}")


def _target(args, rep: ParseReport):
    """``("var", [v])``, ``("block", vs)``, ``("pi", parts)`` or ``("all", vars)``."""
    chosen = [k for k in ("var", "block", "pi") if getattr(args, k)]
    if len(chosen) > 1:
        raise UsageError("--var, --block and --pi are mutually exclusive")
    fv = sorted(free_vars(rep.formula))
    if args.var:
        _known(rep, [args.var])
        return "var", [args.var]
    if args.block:
        names = _names(args.block)
        _known(rep, names)
        return "block", names
    if args.pi:
        parts = parse_pi(args.pi)
        _known(rep, [n for p in parts for n in p])
        missing = set(fv) - {n for p in parts for n in p}
        if missing:
            raise UsageError(f"partition does not cover {', '.join(sorted(missing))}")
        return "pi", parts
    return "all", fv


def _emit(cfg: RunConfig, report: dict, text: str, smt: Optional[str] = None, out: Optional[str] = None) -> None:
    if cfg.fmt == "json":
        body = json.dumps(report, indent=2) + "\n"
    elif cfg.fmt == "smt2" and smt is not None:
        body = smt
    else:
        body = text
    if out:
        Path(out).write_text(body)
    else:
        sys.stdout.write(body)


def _report(command: str, cfg: RunConfig, path: str, start: float, **fields) -> dict:
    base = {
        "command": command,
        "input": path,
        "backend": cfg.backend_name,
        "elapsed": round(time.perf_counter() - start, 6),
    }
    base.update(fields)
    return base


# --------------------------------------------------------------------------
# commands


def _verdict_entry(target: list[str], decomposable: bool, bound: int, minimal: Optional[int], ce) -> dict:
    return {
        "target": target,
        "decomposable": decomposable,
        "bound": _int_json(bound),
        "bound_log2": _log2(bound),
        "minimal_bound": _int_json(minimal),
        "counterexample": {k: _int_json(ce[k]) for k in sorted(ce)} if ce else None,
    }


def cmd_check(args, cfg: RunConfig) -> int:
    start = time.perf_counter()
    rep, path = _load(args.file)
    phi = rep.formula
    kind, target = _target(args, rep)
    entries = []
    if kind in ("all", "var"):
        for v in target:
            res = check_decomposable_on(phi, v, None, cfg.backend, cfg.solver)
            minimal = None
            if res.decomposable and cfg.bound_search and v in free_vars(phi):
                minimal = minimal_bound_search(phi, v, cfg.backend, cfg.solver, res.bound)
            entries.append(_verdict_entry([v], res.decomposable, res.bound, minimal, res.counterexample))
    else:
        blocks = [target] if kind == "block" else target if len(target) > 1 else []
        for block in blocks:
            res = check_variadic_on(phi, block, None, cfg.backend, cfg.solver)
            minimal = None
            live = [x for x in block if x in free_vars(phi)]
            if res.decomposable and cfg.bound_search and live and free_vars(phi) - set(live):
                minimal = minimal_vardec_bound(phi, live, cfg.backend, cfg.solver)
            entry = _verdict_entry(block, res.decomposable, res.bound, minimal, res.counterexample)
            if res.rho is not None:
                entry["partition"] = str(res.rho)
            entries.append(entry)
    ok = all(e["decomposable"] for e in entries)
    verdict = "decomposable" if ok else "non-decomposable"
    lines = []
    for e in entries:
        name = "{" + ", ".join(e["target"]) + "}" if len(e["target"]) > 1 else e["target"][0]
        status = "decomposable" if e["decomposable"] else "non-decomposable"
        b = _bound_text(int(e["bound"]))
        extra = f", minimal bound {e['minimal_bound']}" if e["minimal_bound"] is not None else ""
        lines.append(f"{name}: {status} (bound {b}{extra})")
        if e["counterexample"]:
            lines.append("  counterexample: " + _model_text({k: int(v) for k, v in e["counterexample"].items()}))
    lines.append(verdict)
    report = _report("check", cfg, path, start, verdict=verdict, mode=kind, results=entries)
    _emit(cfg, report, "\n".join(lines) + "\n", smt=None)
    return EXIT_OK


def _disjuncts(phi: Formula) -> int:
    return len(phi.args) if isinstance(phi, Or) else 1


def cmd_decompose(args, cfg: RunConfig) -> int:
    start = time.perf_counter()
    rep, path = _load(args.file)
    phi = rep.formula
    kind, target = _target(args, rep)
    b, s = cfg.backend, cfg.solver
    if kind == "all":
        out = decompose_full(phi, b, s, max_disjuncts=cfg.max_disjuncts)
    elif kind == "var":
        bound = None if cfg.bound_search else check_decomposable_on(phi, target[0], None, b, s, False).bound
        out = decompose_on(phi, target[0], b, s, bound, cfg.max_disjuncts)
    elif kind == "block":
        bound = None
        if not cfg.bound_search:
            v = check_variadic_on(phi, target, None, b, s, minimize=False)
            if not v.decomposable:
                raise NotDecomposable(f"not decomposable on {{{', '.join(target)}}}", v.counterexample)
            bound = v.bound
        out = decompose_variadic_on(phi, target, b, s, bound, max_disjuncts=cfg.max_disjuncts)
    else:
        out = pi_decompose(phi, target, b, s, max_disjuncts=cfg.max_disjuncts)
    n = _disjuncts(out)
    if n > cfg.max_disjuncts:
        raise ResourceLimit(f"output has {n} disjuncts (limit {cfg.max_disjuncts}); raise --max-disjuncts")
    script = print_script(out, list(rep.variables), logic="QF_LIA", commands=("(check-sat)",))
    text = f"; {n} disjuncts, equivalent to {path}\n{print_formula(out)}\n"
    report = _report(
        "decompose", cfg, path, start, verdict="decomposable", mode=kind, disjuncts=n, output=print_formula(out)
    )
    fmt_out = args.out
    if fmt_out and cfg.fmt != "json":
        Path(fmt_out).write_text(script)
        sys.stdout.write(text if cfg.fmt == "text" else f"; wrote {n} disjuncts to {fmt_out}\n")
    else:
        _emit(cfg, report, text, smt=script, out=fmt_out)
    return EXIT_OK


def cmd_qe(args, cfg: RunConfig) -> int:
    start = time.perf_counter()
    rep, path = _load(args.file)
    if rep.quantifier is None:
        raise UsageError("input has no quantifier block (expected one (assert (exists ...)) or forall)")
    kind, names = rep.quantifier
    block = QuantBlock(kind, tuple(names), rep.formula)
    try:
        out = eliminate(block, cfg.backend, cfg.solver)
    except NotDecomposable as exc:
        raise NotDecomposable("not decomposable; fast path inapplicable", exc.witness) from None
    free = [v for v in rep.variables if v not in names]
    text = print_formula(out) + "\n"
    report = _report("qe", cfg, path, start, verdict="eliminated", quantifier=kind, bound_vars=list(names), output=print_formula(out))
    _emit(cfg, report, text, smt=print_script(out, free), out=args.out)
    return EXIT_OK


def cmd_strlen(args, cfg: RunConfig) -> int:
    from .strlen import rewrite_file, scan_paths, smt_files

    start = time.perf_counter()
    files = smt_files(args.paths)
    for f in files:
        if not f.exists():
            raise UsageError(f"cannot read {f}")
    scan = scan_paths(files, cfg.backend, args.jobs)
    rewritten = []
    if args.rewrite:
        out_dir = Path(args.out or "rewritten")
        for res in scan.files:
            if res.category == "decomposable":
                rw = rewrite_file(res.path, out_dir, cfg.backend, cfg.solver)
                rewritten.append(str(out_dir / Path(res.path).name))
                res.message = "; ".join(rw.flagged) or "rewritten"
    report = _report("strlen", cfg, ",".join(map(str, args.paths)), start, **scan.to_json(), rewritten=rewritten)
    lines = [scan.table()]
    if cfg.verbose:
        for f in scan.files:
            lines.append(f"{f.path}: {f.category}" + (f" ({f.message})" if f.message else ""))
    if rewritten:
        lines.append(f"rewrote {len(rewritten)} files into {args.out or 'rewritten'}")
    _emit(cfg, report, "\n".join(lines) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="presdec", description="Decomposition of Presburger formulas.")
    p.add_argument("--version", action="version", version=f"presdec {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--solver", help="external SMT-LIB solver command (default: builtin, or $PRESDEC_SOLVER)")
    common.add_argument("--timeout", type=float, help="wall-clock limit in seconds")
    common.add_argument("--max-nodes", type=int, default=200_000, help="branch-and-bound nodes per solver call")
    common.add_argument("--format", choices=("json", "text", "smt2"), default=None)
    common.add_argument("--max-disjuncts", type=int, default=DEFAULT_MAX_DISJUNCTS)
    common.add_argument("--no-bound-search", action="store_true", help="skip the minimal-bound search")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def target_flags(sp):
        sp.add_argument("file", help="SMT-LIB input ('-' for stdin)")
        sp.add_argument("--var", help="single variable")
        sp.add_argument("--block", help="comma-separated variable block")
        sp.add_argument("--pi", help='variable partition such as "{x},{y,z}"')
        sp.add_argument("--out", help="output file")

    c = sub.add_parser("check", parents=[common], help="decide decomposability")
    target_flags(c)
    c.set_defaults(func=cmd_check, default_format="text")
    d = sub.add_parser("decompose", parents=[common], help="construct a decomposition")
    target_flags(d)
    d.set_defaults(func=cmd_decompose, default_format="smt2")
    q = sub.add_parser("qe", parents=[common], help="eliminate a separable quantifier block")
    q.add_argument("file")
    q.add_argument("--out")
    q.set_defaults(func=cmd_qe, default_format="smt2")
    s = sub.add_parser("strlen", parents=[common], help="scan string benchmarks for decomposable length constraints")
    s.add_argument("paths", nargs="+")
    s.add_argument("--rewrite", action="store_true", help="write benchmarks with regex memberships")
    s.add_argument("--out", help="directory for rewritten files (default: rewritten)")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_strlen, default_format="text")
    return p


class _Timeout(Exception):
    pass


def _alarm(signum, frame):
    raise _Timeout()


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    err = sys.stderr
    try:
        backend: Backend = ExternalBackend(args.solver) if args.solver and args.solver != "builtin" else (
            "builtin" if args.solver == "builtin" else default_backend()
        )
        cfg = RunConfig(
            backend,
            SolverConfig(timeout=args.timeout, max_nodes=args.max_nodes),
            args.timeout,
            not args.no_bound_search,
            args.format or args.default_format,
            args.max_disjuncts,
            args.verbose,
        )
        if cfg.timeout and hasattr(signal, "SIGALRM"):
            signal.signal(signal.SIGALRM, _alarm)
            signal.setitimer(signal.ITIMER_REAL, cfg.timeout)
        try:
            return args.func(args, cfg)
        finally:
            if cfg.timeout and hasattr(signal, "SIGALRM"):
                signal.setitimer(signal.ITIMER_REAL, 0)
    except UsageError as exc:
        print(f"presdec: error: {exc}", file=err)
        return EXIT_USAGE
    except ParseError as exc:
        span = exc.span
        where = f"{args.file}:{span.line}:{span.column}: " if span is not None and hasattr(args, "file") else ""
        print(f"{where}error: {exc}", file=err)
        return EXIT_USAGE
    except BackendFailure as exc:
        print(f"presdec: solver error: {exc}", file=err)
        return EXIT_USAGE
    except NotDecomposable as exc:
        print(f"presdec: {exc}", file=err)
        if exc.witness:
            print("  counterexample: " + _model_text(exc.witness), file=err)
        return EXIT_NOT_DECOMPOSABLE
    except (ResourceLimit, TooManyVariables, _Timeout) as exc:
        msg = "time limit exceeded" if isinstance(exc, _Timeout) else str(exc)
        print(f"presdec: resource limit: {msg}", file=err)
        return EXIT_RESOURCE
    except EquivalenceCheckFailed as exc:
        print(f"presdec: internal error: {exc}", file=err)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
