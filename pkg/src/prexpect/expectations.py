"""Piecewise-linear expectations: disjoint regions carrying minima of planes.

A PiecewiseExpr denotes the function that evaluates the MinExpr of the piece
containing the state and is 0 on states covered by no piece. The class is
closed under the operations the backward transformer needs for linear
programs: scaling, composition with affine assignments, addition and
pointwise minimum (both via common refinement), and restriction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .dominance import farkas_dominates, min_dominates
from .linear import Assignment, LinExpr, MinExpr, State, ZERO
from .polyhedra import Polyhedron, Region, merge_adjacent, poly_is_empty

MIN_ZERO = MinExpr.of(ZERO)


@dataclass(frozen=True)
class Piece:
    region: Region
    value: MinExpr


@dataclass(frozen=True)
class PiecewiseExpr:
    pieces: tuple[Piece, ...]

    @staticmethod
    def zero() -> PiecewiseExpr:
        return PiecewiseExpr(())

    @staticmethod
    def from_affine(expr: LinExpr) -> PiecewiseExpr:
        return PiecewiseExpr((Piece(Region.whole_space(), MinExpr.of(expr)),))

    @staticmethod
    def make(pieces: Iterable[tuple[Region, MinExpr]]) -> PiecewiseExpr:
        kept = [Piece(r, v) for r, v in pieces if not r.is_empty()]
        return PiecewiseExpr(tuple(kept))

    def support(self) -> Region:
        return Region(tuple(p for piece in self.pieces for p in piece.region.polyhedra))

    def evaluate(self, state: State) -> Fraction:
        for piece in self.pieces:
            if piece.region.contains(state):
                return piece.value.evaluate(state)
        return Fraction(0)

    def restrict(self, region: Region) -> PiecewiseExpr:
        out = []
        for piece in self.pieces:
            r = piece.region.intersect(region)
            if not r.is_empty():
                out.append(Piece(r, piece.value))
        return PiecewiseExpr(tuple(out))

    def compose(self, assignment: Assignment) -> PiecewiseExpr:
        out = []
        for piece in self.pieces:
            r = piece.region.preimage(assignment)
            if not r.is_empty():
                out.append(Piece(r, piece.value.substitute(assignment)))
        return PiecewiseExpr(tuple(out))

    def scale(self, factor: Fraction) -> PiecewiseExpr:
        if factor == 0:
            return PiecewiseExpr.zero()
        return PiecewiseExpr(
            tuple(Piece(p.region, p.value.scale(factor)) for p in self.pieces)
        )

    def _cells_with_default(self, within: Polyhedron | None) -> list[Piece]:
        """The pieces plus an explicit zero piece on the uncovered remainder."""
        cells = list(self.pieces)
        if within is not None:
            rest = self.support().complement_within(within)
        else:
            rest = self.support().complement()
        if not rest.is_empty():
            cells.append(Piece(rest, MIN_ZERO))
        return cells

    def add(self, other: PiecewiseExpr, within: Polyhedron | None = None) -> PiecewiseExpr:
        """Pointwise sum on the common refinement (0 outside pieces)."""
        out: list[Piece] = []
        for a in self._cells_with_default(within):
            for b in other._cells_with_default(within):
                region = a.region.intersect(b.region)
                if within is not None:
                    region = region.intersect_poly(within)
                if region.is_empty():
                    continue
                value = a.value.add(b.value)
                if value == MIN_ZERO:
                    continue
                out.append(Piece(region, value))
        return PiecewiseExpr(tuple(out))

    def min_with(self, other: PiecewiseExpr, within: Polyhedron | None = None) -> PiecewiseExpr:
        """Pointwise minimum on the common refinement (0 outside pieces)."""
        out: list[Piece] = []
        for a in self._cells_with_default(within):
            for b in other._cells_with_default(within):
                region = a.region.intersect(b.region)
                if within is not None:
                    region = region.intersect_poly(within)
                if region.is_empty():
                    continue
                value = a.value.merge_min(b.value)
                if value == MIN_ZERO:
                    continue
                out.append(Piece(region, value))
        return PiecewiseExpr(tuple(out))

    def coalesce(self) -> PiecewiseExpr:
        """Merge pieces that carry the same value expression into one region."""
        order: list[MinExpr] = []
        grouped: dict[MinExpr, list] = {}
        for piece in self.pieces:
            if piece.value not in grouped:
                grouped[piece.value] = []
                order.append(piece.value)
            grouped[piece.value].extend(piece.region.polyhedra)
        out = []
        for value in order:
            polys = merge_adjacent(grouped[value])
            out.append(Piece(Region(tuple(polys)), value))
        return PiecewiseExpr(tuple(out))

    def prune_terms(self) -> PiecewiseExpr:
        """Drop min-terms dominated from below by another term on the piece."""
        out = []
        for piece in self.pieces:
            terms = list(piece.value.exprs)
            if len(terms) > 1:
                kept: list[LinExpr] = []
                for i, t in enumerate(terms):
                    dominated = False
                    for j, u in enumerate(terms):
                        if i == j:
                            continue
                        if _dominates_on_region(u, t, piece.region):
                            # mutual domination means equal on the region;
                            # the earliest term wins the tie
                            if j < i or not _dominates_on_region(t, u, piece.region):
                                dominated = True
                                break
                    if not dominated:
                        kept.append(t)
                terms = kept
            out.append(Piece(piece.region, MinExpr(tuple(terms))))
        return PiecewiseExpr(tuple(out))


def _dominates_on_region(lower: LinExpr, upper: LinExpr, region: Region) -> bool:
    return all(
        farkas_dominates(lower, upper, poly) for poly in region.polyhedra
    )


def pw_evaluate(expr: PiecewiseExpr, state: State) -> Fraction:
    """Value at a state: 0 when no piece covers it."""
    return expr.evaluate(state)


def pw_dominates(a: PiecewiseExpr, b: PiecewiseExpr, within: Region) -> bool:
    """Pointwise ``a <= b`` over all rational points of ``within``."""
    cells_a = list(a.pieces)
    rest_a = a.support().complement()
    if not rest_a.is_empty():
        cells_a.append(Piece(rest_a, MIN_ZERO))
    cells_b = list(b.pieces)
    rest_b = b.support().complement()
    if not rest_b.is_empty():
        cells_b.append(Piece(rest_b, MIN_ZERO))
    for w in within.polyhedra:
        for ca in cells_a:
            for cb in cells_b:
                for pa in ca.region.polyhedra:
                    for pb in cb.region.polyhedra:
                        cell = pa.intersect(pb).intersect(w)
                        if poly_is_empty(cell):
                            continue
                        for upper_term in cb.value.exprs:
                            if not min_dominates(ca.value, upper_term, cell):
                                return False
    return True
