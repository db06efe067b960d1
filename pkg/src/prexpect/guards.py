"""Boolean guard expressions over linear atoms and their polyhedral form.

A guard is a boolean combination of comparisons between affine expressions.
To turn a guard into a region we rewrite it over primitive atoms of the
canonical form ``expr <= 0`` (negation of a primitive atom is again
primitive over the integers), enumerate truth assignments of the atoms and
keep the satisfying, nonempty cells. The cells are pairwise disjoint by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import TooManyGuardsError
from .linear import LinExpr, State
from .polyhedra import (
    LinConstraint,
    Polyhedron,
    Region,
    make_constraint,
    merge_adjacent,
    poly_is_empty,
)

DEFAULT_GUARD_CAP = 16

_NEGATED_REL = {"<": ">=", "<=": ">", "=": "!=", "!=": "=", ">": "<=", ">=": "<"}


class GuardExpr:
    """Base class for guard syntax nodes."""

    def evaluate(self, state: State) -> bool:
        raise NotImplementedError

    def atoms(self) -> list["Atom"]:
        raise NotImplementedError


@dataclass(frozen=True)
class Atom(GuardExpr):
    """Comparison ``expr rel 0`` (the parser moves everything to one side)."""

    expr: LinExpr
    rel: str  # one of < <= = != >= >

    def evaluate(self, state: State) -> bool:
        v = self.expr.evaluate(state)
        return {
            "<": v < 0,
            "<=": v <= 0,
            "=": v == 0,
            "!=": v != 0,
            ">": v > 0,
            ">=": v >= 0,
        }[self.rel]

    def atoms(self) -> list[Atom]:
        return [self]

    def negated(self) -> Atom:
        return Atom(self.expr, _NEGATED_REL[self.rel])

    def __str__(self) -> str:
        return f"{self.expr} {self.rel} 0"


@dataclass(frozen=True)
class Not(GuardExpr):
    child: GuardExpr

    def evaluate(self, state: State) -> bool:
        return not self.child.evaluate(state)

    def atoms(self) -> list[Atom]:
        return self.child.atoms()


@dataclass(frozen=True)
class And(GuardExpr):
    children: tuple[GuardExpr, ...]

    def evaluate(self, state: State) -> bool:
        return all(c.evaluate(state) for c in self.children)

    def atoms(self) -> list[Atom]:
        return [a for c in self.children for a in c.atoms()]


@dataclass(frozen=True)
class Or(GuardExpr):
    children: tuple[GuardExpr, ...]

    def evaluate(self, state: State) -> bool:
        return any(c.evaluate(state) for c in self.children)

    def atoms(self) -> list[Atom]:
        return [a for c in self.children for a in c.atoms()]


def conj(*parts: GuardExpr) -> GuardExpr:
    return And(tuple(parts))


def disj(*parts: GuardExpr) -> GuardExpr:
    return Or(tuple(parts))


def _primitive_constraints(atom: Atom) -> tuple[tuple[LinConstraint, ...], ...]:
    """The atom as a union of constraint conjunctions (one or two disjuncts)."""
    if atom.rel == "!=":
        lt = make_constraint(atom.expr, "<")
        gt = make_constraint(atom.expr, ">")
        return (tuple(lt), tuple(gt))
    return (tuple(make_constraint(atom.expr, atom.rel)),)


def _primitive_atoms(guard: GuardExpr) -> list[LinConstraint]:
    """Distinct canonical <=-constraints underlying the guard's atoms."""
    prims: list[LinConstraint] = []
    for atom in guard.atoms():
        for disjunct in _primitive_constraints(atom):
            for c in disjunct:
                if c not in prims:
                    prims.append(c)
    return prims


def _eval_under(guard: GuardExpr, truth: dict[LinConstraint, bool]) -> bool:
    if isinstance(guard, Atom):
        return any(
            all(truth[c] for c in disjunct)
            for disjunct in _primitive_constraints(guard)
        )
    if isinstance(guard, Not):
        return not _eval_under(guard.child, truth)
    if isinstance(guard, And):
        return all(_eval_under(c, truth) for c in guard.children)
    if isinstance(guard, Or):
        return any(_eval_under(c, truth) for c in guard.children)
    raise TypeError(f"not a guard expression: {guard!r}")


def guard_to_region(guard: GuardExpr, cap: int = DEFAULT_GUARD_CAP) -> Region:
    """Region of states satisfying the guard, as disjoint polyhedra."""
    prims = _primitive_atoms(guard)
    if len(prims) > cap:
        raise TooManyGuardsError(
            f"guard expands to {len(prims)} atomic constraints (cap {cap})"
        )
    cells: list[Polyhedron] = []
    for mask in range(1 << len(prims)):
        truth = {c: bool(mask >> k & 1) for k, c in enumerate(prims)}
        if not _eval_under(guard, truth):
            continue
        constraints = [
            c if value else c.negated() for c, value in truth.items()
        ]
        poly = Polyhedron.make(constraints)
        if not poly_is_empty(poly):
            cells.append(poly.simplified())
    return Region(tuple(merge_adjacent(cells)))


def region_partition(
    guards: Sequence[GuardExpr], cap: int = DEFAULT_GUARD_CAP
) -> list[Region]:
    """Nonempty cells of the complete boolean algebra over the guards.

    Every subset of guard indices yields the cell where exactly those guards
    hold; empty cells are pruned. With no guards at all the whole space is
    the single cell. The returned regions are pairwise disjoint and cover
    the space together (the all-guards-false cell is included when nonempty,
    ordered last).
    """
    count = len(guards)
    if count > cap:
        raise TooManyGuardsError(f"{count} guards exceed the cap of {cap}")
    if count == 0:
        return [Region.whole_space()]
    out: list[Region] = []
    masks = list(range(1, 1 << count)) + [0]
    for mask in masks:
        parts: list[GuardExpr] = []
        for i in range(count):
            if mask >> i & 1:
                parts.append(guards[i])
            else:
                parts.append(Not(guards[i]))
        region = guard_to_region(And(tuple(parts)), cap=cap)
        if not region.is_empty():
            out.append(region)
    return out
