"""Backward expectation transformer for normalized programs.

One step pushes a piecewise-linear expectation through every guard cell:
each enabled command contributes the probability-weighted sum of the
expectation composed with its branch assignments, and overlapping commands
meet in a pointwise (demonic) minimum. The loop functional additionally
keeps the post-expectation on the exit region.
"""

from __future__ import annotations

from .expectations import Piece, PiecewiseExpr, pw_evaluate
from .polyhedra import Region
from .program import NormalizedProgram

__all__ = ["wp_step", "loop_functional", "pw_evaluate"]


def wp_step(np: NormalizedProgram, x: PiecewiseExpr) -> PiecewiseExpr:
    """One demonic pre-expectation step; the value outside every guard cell is 0."""
    out: list[Piece] = []
    for cell in np.cells:
        for poly in cell.region.polyhedra:
            here = Region((poly,))
            per_command: list[PiecewiseExpr] = []
            for branches in cell.choices:
                acc: PiecewiseExpr | None = None
                for branch in branches:
                    part = (
                        x.compose(branch.assignment)
                        .restrict(here)
                        .scale(branch.probability)
                    )
                    acc = part if acc is None else acc.add(part, within=poly)
                per_command.append(acc)
            combined = per_command[0]
            for nxt in per_command[1:]:
                combined = combined.min_with(nxt, within=poly)
            out.extend(combined.restrict(here).pieces)
    return PiecewiseExpr(tuple(out)).prune_terms().coalesce()


def loop_functional(
    np: NormalizedProgram, beta: PiecewiseExpr, x: PiecewiseExpr
) -> PiecewiseExpr:
    """One unrolling of the loop: the transformer step on guard cells and the
    post-expectation ``beta`` on the exit region."""
    inner = wp_step(np, x)
    outer = beta.restrict(np.exit_region)
    return PiecewiseExpr(inner.pieces + outer.pieces)
