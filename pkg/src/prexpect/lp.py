"""Exact two-phase simplex over rationals.

The instances this package generates are tiny (tens of variables and
constraints), so a dense tableau with `fractions.Fraction` entries is both
fast enough and free of rounding concerns. Bland's rule makes the pivot
sequence deterministic and cycle-free, which the callers rely on for
reproducible results.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping


class LPStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    status: LPStatus
    value: Fraction | None
    assignment: dict[str, Fraction]


_ZERO = Fraction(0)
_ONE = Fraction(1)


class LinearProgram:
    """Incrementally built LP; variables are free unless declared nonneg."""

    def __init__(self) -> None:
        self._names: list[str] = []
        self._nonneg: list[bool] = []
        self._index: dict[str, int] = {}
        self._rows: list[tuple[dict[int, Fraction], str, Fraction]] = []

    def add_variable(self, name: str, nonneg: bool = False) -> str:
        if name in self._index:
            raise ValueError(f"duplicate LP variable {name!r}")
        self._index[name] = len(self._names)
        self._names.append(name)
        self._nonneg.append(nonneg)
        return name

    def ensure_variable(self, name: str, nonneg: bool = False) -> str:
        if name not in self._index:
            self.add_variable(name, nonneg)
        return name

    def add_constraint(self, coeffs: Mapping[str, Fraction | int], rel: str, rhs) -> None:
        if rel not in ("<=", ">=", "=="):
            raise ValueError(f"unknown relation {rel!r}")
        row = {}
        for name, c in coeffs.items():
            c = Fraction(c)
            if c == 0:
                continue
            row[self._index[name]] = c
        self._rows.append((row, rel, Fraction(rhs)))

    def solve(self, objective: Mapping[str, Fraction | int], sense: str = "min") -> LPResult:
        if sense not in ("min", "max"):
            raise ValueError(f"unknown sense {sense!r}")
        obj = {self._index[name]: Fraction(c) for name, c in objective.items() if Fraction(c) != 0}
        if sense == "max":
            obj = {j: -c for j, c in obj.items()}
        result = self._solve_min(obj)
        if sense == "max" and result.value is not None:
            result.value = -result.value
        return result

    def check_feasible(self) -> LPResult:
        return self._solve_min({})

    # -- internals -----------------------------------------------------

    def _solve_min(self, obj: dict[int, Fraction]) -> LPResult:
        # Standard-form columns: nonneg vars map to one column, free vars to
        # a (plus, minus) pair.
        col_of: list[tuple[int, int | None]] = []
        ncols = 0
        for i in range(len(self._names)):
            if self._nonneg[i]:
                col_of.append((ncols, None))
                ncols += 1
            else:
                col_of.append((ncols, ncols + 1))
                ncols += 2

        rows: list[list[Fraction]] = []
        rhs: list[Fraction] = []
        slack_col: list[int | None] = []
        nslack = sum(1 for _, r, _ in self._rows if r != "==")
        total = ncols + nslack

        snext = ncols
        for row, rel, b in self._rows:
            dense = [_ZERO] * total
            for var, c in row.items():
                plus, minus = col_of[var]
                dense[plus] += c
                if minus is not None:
                    dense[minus] -= c
            if rel == "<=":
                dense[snext] = _ONE
                slack_col.append(snext)
                snext += 1
            elif rel == ">=":
                dense[snext] = -_ONE
                slack_col.append(snext)
                snext += 1
            else:
                slack_col.append(None)
            rows.append(dense)
            rhs.append(b)

        # Make every right-hand side nonnegative.
        for i in range(len(rows)):
            if rhs[i] < 0:
                rows[i] = [-a for a in rows[i]]
                rhs[i] = -rhs[i]

        # Initial basis: slack columns that survived with +1; artificial
        # columns for the rest.
        m = len(rows)
        basis: list[int] = [-1] * m
        art_cols: list[int] = []
        for i in range(m):
            sc = slack_col[i]
            if sc is not None and rows[i][sc] == 1:
                basis[i] = sc
        n_art = sum(1 for b in basis if b < 0)
        width = total + n_art
        tab: list[list[Fraction]] = []
        art_next = total
        for i in range(m):
            line = rows[i] + [_ZERO] * n_art + [rhs[i]]
            if basis[i] < 0:
                line[art_next] = _ONE
                basis[i] = art_next
                art_cols.append(art_next)
                art_next += 1
            tab.append(line)

        structural = total  # columns allowed to enter in phase 2

        if art_cols:
            cost1 = [_ZERO] * width
            for j in art_cols:
                cost1[j] = _ONE
            z = self._reduced_costs(tab, basis, cost1, width)
            status = self._iterate(tab, basis, z, width, entering_limit=width)
            if status is LPStatus.UNBOUNDED:  # pragma: no cover - phase 1 is bounded
                raise AssertionError("phase 1 cannot be unbounded")
            if -z[-1] > 0:
                return LPResult(LPStatus.INFEASIBLE, None, {})
            self._evict_artificials(tab, basis, structural, set(art_cols))

        cost2 = [_ZERO] * width
        for j, c in obj.items():
            plus, minus = col_of[j]
            cost2[plus] += c
            if minus is not None:
                cost2[minus] -= c
        z = self._reduced_costs(tab, basis, cost2, width)
        status = self._iterate(tab, basis, z, width, entering_limit=structural)
        if status is LPStatus.UNBOUNDED:
            return LPResult(LPStatus.UNBOUNDED, None, {})

        values = [_ZERO] * width
        for i, b in enumerate(basis):
            values[b] = tab[i][-1]
        assignment = {}
        for i, name in enumerate(self._names):
            plus, minus = col_of[i]
            val = values[plus]
            if minus is not None:
                val -= values[minus]
            assignment[name] = val
        objective_value = sum((c * assignment[self._names[j]] for j, c in obj.items()), _ZERO)
        return LPResult(LPStatus.OPTIMAL, objective_value, assignment)

    @staticmethod
    def _reduced_costs(tab, basis, cost, width) -> list[Fraction]:
        z = list(cost) + [_ZERO]
        for i, b in enumerate(basis):
            cb = cost[b]
            if cb != 0:
                row = tab[i]
                for j in range(width):
                    if row[j]:
                        z[j] -= cb * row[j]
                z[-1] += cb * row[-1]
        # keep z[-1] = -(current objective)
        z[-1] = -z[-1]
        return z

    @staticmethod
    def _iterate(tab, basis, z, width, entering_limit) -> LPStatus:
        m = len(tab)
        while True:
            enter = -1
            for j in range(entering_limit):
                if z[j] < 0:
                    enter = j
                    break
            if enter < 0:
                return LPStatus.OPTIMAL
            leave = -1
            best: Fraction | None = None
            for i in range(m):
                a = tab[i][enter]
                if a > 0:
                    ratio = tab[i][-1] / a
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                        best = ratio
                        leave = i
            if leave < 0:
                return LPStatus.UNBOUNDED
            LinearProgram._pivot(tab, basis, z, leave, enter)

    @staticmethod
    def _pivot(tab, basis, z, r, c) -> None:
        prow = tab[r]
        width = len(prow)
        piv = prow[c]
        if piv != 1:
            inv = _ONE / piv
            for j in range(width):
                if prow[j]:
                    prow[j] *= inv
        nonzero = [j for j in range(width) if prow[j]]
        for i in range(len(tab)):
            if i == r:
                continue
            row = tab[i]
            f = row[c]
            if f:
                for j in nonzero:
                    row[j] -= f * prow[j]
        f = z[c]
        if f:
            for j in nonzero:
                z[j] -= f * prow[j]
        basis[r] = c

    @staticmethod
    def _evict_artificials(tab, basis, structural, art_cols) -> None:
        m = len(tab)
        zdummy = [_ZERO] * (len(tab[0]))
        for i in range(m):
            if basis[i] in art_cols:
                pivot_col = -1
                for j in range(structural):
                    if tab[i][j] != 0:
                        pivot_col = j
                        break
                if pivot_col >= 0:
                    LinearProgram._pivot(tab, basis, zdummy, i, pivot_col)
                # else: redundant row; the artificial stays basic at zero and
                # can never re-enter because phase 2 limits entering columns.
