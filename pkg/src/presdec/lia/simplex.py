"""Exact general simplex over the rationals.

The tableau form follows the usual SMT arrangement: every constraint row
``s = sum a_j x_j`` introduces a slack variable ``s``; all constraints are
bounds on variables.  Bounds carry an opaque *reason* so that an infeasible
check reports the set of reasons responsible (a Farkas explanation).  Bounds
can be saved and restored cheaply, which is what branch-and-bound needs.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Iterable, Optional

Reason = Optional[Hashable]


class Simplex:
    def __init__(self, n_struct: int = 0):
        self.n = 0
        self.lower: dict[int, tuple[Fraction, Reason]] = {}
        self.upper: dict[int, tuple[Fraction, Reason]] = {}
        self.value: list[Fraction] = []
        self.rows: dict[int, dict[int, Fraction]] = {}  # basic -> {nonbasic: coeff}
        self.cols: dict[int, set[int]] = {}  # nonbasic -> basic rows mentioning it
        self.pivots = 0
        for _ in range(n_struct):
            self.new_var()

    def new_var(self) -> int:
        v = self.n
        self.n += 1
        self.value.append(Fraction(0))
        self.cols[v] = set()
        return v

    def add_row(self, coeffs: dict[int, int | Fraction]) -> int:
        """New basic variable equal to ``sum coeffs[j] * x_j``."""
        s = self.n
        self.n += 1
        row: dict[int, Fraction] = {}
        for j, a in coeffs.items():
            if not a:
                continue
            if j in self.rows:
                for k, b in self.rows[j].items():
                    c = row.get(k, 0) + a * b
                    if c:
                        row[k] = c
                    else:
                        row.pop(k, None)
            else:
                c = row.get(j, 0) + a
                if c:
                    row[j] = Fraction(c)
                else:
                    row.pop(j, None)
        self.rows[s] = row
        for k in row:
            self.cols[k].add(s)
        self.value.append(sum((a * self.value[k] for k, a in row.items()), Fraction(0)))
        return s

    # -- bounds -------------------------------------------------------------

    def save(self):
        return dict(self.lower), dict(self.upper)

    def restore(self, state) -> None:
        self.lower, self.upper = dict(state[0]), dict(state[1])

    def set_lower(self, v: int, bound, reason: Reason = None) -> Optional[set]:
        """Tighten the lower bound; returns a conflict explanation or None."""
        bound = Fraction(bound)
        cur = self.lower.get(v)
        if cur is not None and cur[0] >= bound:
            return None
        up = self.upper.get(v)
        if up is not None and up[0] < bound:
            return _reasons((reason, up[1]))
        self.lower[v] = (bound, reason)
        if v not in self.rows and self.value[v] < bound:
            self._update(v, bound)
        return None

    def set_upper(self, v: int, bound, reason: Reason = None) -> Optional[set]:
        bound = Fraction(bound)
        cur = self.upper.get(v)
        if cur is not None and cur[0] <= bound:
            return None
        lo = self.lower.get(v)
        if lo is not None and lo[0] > bound:
            return _reasons((reason, lo[1]))
        self.upper[v] = (bound, reason)
        if v not in self.rows and self.value[v] > bound:
            self._update(v, bound)
        return None

    # -- core algorithm -----------------------------------------------------

    def _update(self, j: int, v: Fraction) -> None:
        delta = v - self.value[j]
        for i in self.cols[j]:
            self.value[i] += self.rows[i][j] * delta
        self.value[j] = v

    def _pivot(self, i: int, j: int) -> None:
        """Basic ``i`` leaves, nonbasic ``j`` enters."""
        self.pivots += 1
        row = self.rows.pop(i)
        a = row.pop(j)
        for k in row:
            self.cols[k].discard(i)
        self.cols[j].discard(i)
        # x_j = (x_i - sum_{k != j} a_k x_k) / a
        new = {k: -b / a for k, b in row.items()}
        new[i] = 1 / a
        users = self.cols.pop(j)
        self.cols[i] = set()
        for k in new:
            if k != i:
                self.cols[k].add(j)
        self.cols[i].add(j)
        self.rows[j] = new
        for r in users:
            rr = self.rows[r]
            c = rr.pop(j)
            for k, b in new.items():
                val = rr.get(k, 0) + c * b
                if val:
                    if k not in rr:
                        self.cols[k].add(r)
                    rr[k] = val
                elif k in rr:
                    del rr[k]
                    self.cols[k].discard(r)

    def _pivot_and_update(self, i: int, j: int, v: Fraction) -> None:
        a = self.rows[i][j]
        theta = (v - self.value[i]) / a
        self.value[i] = v
        self.value[j] += theta
        for k in self.cols[j]:
            if k != i:
                self.value[k] += self.rows[k][j] * theta
        self._pivot(i, j)

    def check(self) -> Optional[set]:
        """Restore feasibility; return None if feasible else the conflict reasons."""
        while True:
            bad = None
            for i in sorted(self.rows):
                lo = self.lower.get(i)
                if lo is not None and self.value[i] < lo[0]:
                    bad = (i, True)
                    break
                up = self.upper.get(i)
                if up is not None and self.value[i] > up[0]:
                    bad = (i, False)
                    break
            if bad is None:
                return None
            i, increase = bad
            row = self.rows[i]
            choice = None
            for j in sorted(row):
                a = row[j]
                if (a > 0) == increase:
                    up = self.upper.get(j)
                    if up is None or self.value[j] < up[0]:
                        choice = j
                        break
                else:
                    lo = self.lower.get(j)
                    if lo is None or self.value[j] > lo[0]:
                        choice = j
                        break
            if choice is None:
                return self._explain(i, increase)
            target = self.lower[i][0] if increase else self.upper[i][0]
            self._pivot_and_update(i, choice, target)

    def _explain(self, i: int, increase: bool) -> set:
        out = [self.lower[i][1] if increase else self.upper[i][1]]
        for j, a in self.rows[i].items():
            if (a > 0) == increase:
                out.append(self.upper[j][1])
            else:
                out.append(self.lower[j][1])
        return _reasons(out)


def _reasons(items: Iterable[Reason]) -> set:
    out: set = set()
    for r in items:
        if r is None:
            continue
        if isinstance(r, frozenset):
            out |= r
        else:
            out.add(r)
    return out
