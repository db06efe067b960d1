"""Guarded probabilistic-nondeterministic programs and their normal form.

A program is a set of guarded commands ``G -> E_1@p_1 | ... | E_k@p_k``
whose branch probabilities may sum to less than one. Normalization rewrites
the command set over the cells of the boolean algebra generated by the
guards: on each cell a fixed set of commands is enabled, so dispatch is
deterministic and all nondeterminism is explicit inside the cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import TooManyGuardsError
from .expectations import PiecewiseExpr
from .guards import And, GuardExpr, Not, Or, guard_to_region, DEFAULT_GUARD_CAP
from .linear import Assignment
from .polyhedra import Region


@dataclass(frozen=True)
class ProbBranch:
    probability: Fraction
    assignment: Assignment

    def __post_init__(self):
        if not (0 < self.probability <= 1):
            raise ValueError(f"branch probability {self.probability} not in (0, 1]")


@dataclass(frozen=True)
class GuardedCommand:
    guard: GuardExpr
    branches: tuple[ProbBranch, ...]

    def __post_init__(self):
        if not self.branches:
            raise ValueError("a command needs at least one branch")
        if sum(b.probability for b in self.branches) > 1:
            raise ValueError("branch probabilities sum to more than 1")


@dataclass(frozen=True)
class Program:
    variables: tuple[str, ...]
    consts: tuple[str, ...]
    init: Assignment | None
    commands: tuple[GuardedCommand, ...]
    post: PiecewiseExpr
    regions: tuple[Region, ...] | None = None
    region_labels: tuple[str, ...] | None = None

    def analysis_dims(self) -> tuple[str, ...]:
        """Dimensions of the template coefficients: the program variables,
        plus any symbolic constant the loop semantics actually references."""
        used: set[str] = set()
        for cmd in self.commands:
            for atom in cmd.guard.atoms():
                used |= atom.expr.variables()
            for branch in cmd.branches:
                for _, expr in branch.assignment.updates:
                    used |= expr.variables()
        for piece in self.post.pieces:
            for poly in piece.region.polyhedra:
                used |= poly.variables()
            for expr in piece.value.exprs:
                used |= expr.variables()
        if self.regions:
            for region in self.regions:
                for poly in region.polyhedra:
                    used |= poly.variables()
        return self.variables + tuple(c for c in self.consts if c in used)


@dataclass(frozen=True)
class GuardCell:
    """One cell of the guard algebra with the commands enabled there."""

    region: Region
    choices: tuple[tuple[ProbBranch, ...], ...]
    enabled: frozenset[int]


@dataclass(frozen=True)
class NormalizedProgram:
    cells: tuple[GuardCell, ...]
    exit_region: Region

    def guard_polyhedra(self):
        for cell in self.cells:
            for poly in cell.region.polyhedra:
                yield cell, poly


def normalize(program: Program, cap: int = DEFAULT_GUARD_CAP) -> NormalizedProgram:
    """Split the command set over the nonempty guard-algebra cells."""
    guards = [cmd.guard for cmd in program.commands]
    count = len(guards)
    if count > cap:
        raise TooManyGuardsError(f"{count} guards exceed the cap of {cap}")
    cells: list[GuardCell] = []
    for mask in range(1, 1 << count):
        chosen = [i for i in range(count) if mask >> i & 1]
        parts: list[GuardExpr] = [guards[i] for i in chosen]
        parts += [Not(guards[i]) for i in range(count) if not mask >> i & 1]
        region = guard_to_region(And(tuple(parts)), cap=cap)
        if region.is_empty():
            continue
        cells.append(
            GuardCell(
                region=region,
                choices=tuple(program.commands[i].branches for i in chosen),
                enabled=frozenset(chosen),
            )
        )
    return NormalizedProgram(cells=tuple(cells), exit_region=exit_region(program, cap=cap))


def exit_region(program: Program, cap: int = DEFAULT_GUARD_CAP) -> Region:
    """States where no guard holds, as a disjoint union of polyhedra."""
    if not program.commands:
        return Region.whole_space()
    guards = tuple(cmd.guard for cmd in program.commands)
    if len(guards) > cap:
        raise TooManyGuardsError(f"{len(guards)} guards exceed the cap of {cap}")
    return guard_to_region(Not(Or(guards)), cap=cap)
