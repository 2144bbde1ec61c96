"""Eliminating a homogeneous quantifier block when the matrix separates it."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Optional

from .errors import NotDecomposable, ResourceLimit
from .formula import (
    FALSE,
    TRUE,
    Formula,
    Not,
    dnf_conjunct_count,
    evaluate,
    free_vars,
    mk_or,
    substitute_many,
    to_dnf,
    to_pnf,
)
from .grid import find_point
from .lia.normalize import normalize_to_equalities, small_model_bound
from .lia.solver import Backend, SolverConfig, check_sat
from .vardec import MAX_FUNCTIONS, minimal_vardec_bound, variadic_pieces

log = logging.getLogger(__name__)

EXISTS, FORALL = "exists", "forall"


@dataclass(frozen=True)
class QuantBlock:
    kind: str
    vars: tuple[str, ...]
    matrix: Formula

    def __post_init__(self):
        if self.kind not in (EXISTS, FORALL):
            raise ValueError(f"quantifier must be exists or forall, got {self.kind!r}")
        if not self.vars:
            raise ValueError("quantifier block is empty")
        object.__setattr__(self, "vars", tuple(self.vars))

    @property
    def free(self) -> tuple[str, ...]:
        return tuple(sorted(free_vars(self.matrix) - set(self.vars)))


def _eliminate_exists(
    matrix: Formula, xs: tuple[str, ...], backend: Backend, config: Optional[SolverConfig]
) -> Formula:
    xs = tuple(x for x in xs if x in free_vars(matrix))
    if not xs:
        return matrix
    ys = free_vars(matrix) - set(xs)
    if not ys:
        return TRUE if check_sat(matrix, backend, config).is_sat else FALSE
    try:
        B = minimal_vardec_bound(matrix, xs, backend, config, MAX_FUNCTIONS)
    except NotDecomposable as exc:
        raise NotDecomposable(
            f"matrix is not decomposable on {{{', '.join(xs)}}}; fast path inapplicable", exc.witness
        ) from None
    keep = []
    for guard, residual in variadic_pieces(matrix, xs, B, backend, config):
        if check_sat(guard, backend, config).is_sat:
            keep.append(residual)
        else:
            log.info("dropped disjunct with unsatisfiable block part: %s", guard)
    return mk_or(*keep)


def eliminate(block: QuantBlock, backend: Backend = "builtin", config: Optional[SolverConfig] = None) -> Formula:
    """Quantifier-free equivalent of the block over its free variables.

    Raises NotDecomposable when the matrix does not separate the block; a
    general elimination procedure is then needed.
    """
    if block.kind == EXISTS:
        return _eliminate_exists(block.matrix, block.vars, backend, config)
    inner = _eliminate_exists(Not(block.matrix), block.vars, backend, config)
    if inner == TRUE:
        return FALSE
    if inner == FALSE:
        return TRUE
    return to_pnf(Not(inner))


def witness_cap(matrix: Formula, dnf_limit: int = 4096) -> Optional[int]:
    """Small-model bound of ``matrix``; None when its DNF is too large to inspect."""
    if dnf_conjunct_count(matrix) > dnf_limit:
        return None
    best = 0
    for conj in to_dnf(matrix):
        bound = small_model_bound(normalize_to_equalities(conj)).base_max
        best = max(best, bound)
    return best


def _holds(block: QuantBlock, ys: dict[str, int], cap: int, backend: Backend, config) -> bool:
    inst = substitute_many(block.matrix, ys)
    xs = tuple(x for x in block.vars if x in free_vars(inst))
    if block.kind == FORALL:
        inst = Not(inst)
    if not xs:
        found = evaluate(inst, {})
    else:
        limit = witness_cap(inst)
        if limit is not None and limit <= cap:
            found = find_point(inst, xs, limit) is not None
        else:
            found = find_point(inst, xs, cap) is not None or check_sat(inst, backend, config).is_sat
    return found if block.kind == EXISTS else not found


def verify_elimination(
    block: QuantBlock,
    result: Formula,
    grid_radius: int = 6,
    cap: int = 64,
    backend: Backend = "builtin",
    config: Optional[SolverConfig] = None,
) -> bool:
    """Compare ``result`` with the quantified formula at every point of the free-variable grid.

    The quantifier is decided by enumerating the block up to its small-model
    bound; when that bound exceeds ``cap`` the enumeration stops at ``cap``
    and the solver settles the remaining cases.
    """
    if grid_radius < 1:
        raise ValueError("grid_radius must be at least 1")
    ys = block.free
    extra = free_vars(result) - set(ys)
    if extra:
        return False
    total = (grid_radius + 1) ** len(ys)
    if total > 1_000_000:
        raise ResourceLimit(f"{total} grid points")
    for pt in itertools.product(range(grid_radius + 1), repeat=len(ys)):
        sigma = dict(zip(ys, pt))
        if _holds(block, sigma, cap, backend, config) != evaluate(result, sigma):
            return False
    return True
