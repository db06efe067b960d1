"""Per-region affine templates and the abstract transformer step.

An abstract element assigns one affine function (a coefficient row) to each
of a fixed list of disjoint regions; its concretization is the piecewise
expectation that evaluates the row inside its region and 0 elsewhere.

The abstract step concretizes, applies the loop functional, and then per
region synthesizes the best affine plane squeezed between the previous row
(from below, keeping the chain ascending) and the transformed expectation
(from above, keeping the result a sound under-approximation). Both sides of
the sandwich are enforced with affine Farkas certificates inside a single
exact LP; the objective maximizes the plane at a fixed set of points of the
region, with an L1 tie-break so degenerate directions are pinned to zero.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .dominance import farkas_dominates
from .errors import (
    InfeasibleSandwichError,
    PostExpectationError,
    RegionMismatchError,
)
from .expectations import MIN_ZERO, PiecewiseExpr, pw_dominates
from .linear import LinExpr, MinExpr
from .lp import LinearProgram, LPStatus
from .polyhedra import Polyhedron, Region, poly_is_empty, polyhedron_vertices
from .program import NormalizedProgram, Program
from .transformer import loop_functional

DEFAULT_POINT_BOX = 100


@dataclass(frozen=True)
class AbstractElement:
    """Coefficient rows (constant first, then one entry per dimension) over a
    fixed list of pairwise-disjoint regions."""

    dims: tuple[str, ...]
    regions: tuple[Region, ...]
    rows: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if len(self.rows) != len(self.regions):
            raise ValueError("one coefficient row per region required")
        for row in self.rows:
            if len(row) != len(self.dims) + 1:
                raise ValueError("row width must be number of dimensions + 1")

    @staticmethod
    def bottom(dims: Sequence[str], regions: Sequence[Region]) -> AbstractElement:
        width = len(dims) + 1
        return AbstractElement(
            tuple(dims),
            tuple(regions),
            tuple(tuple(Fraction(0) for _ in range(width)) for _ in regions),
        )

    @staticmethod
    def from_rows(
        dims: Sequence[str], regions: Sequence[Region], rows: Sequence[Sequence]
    ) -> AbstractElement:
        return AbstractElement(
            tuple(dims),
            tuple(regions),
            tuple(tuple(Fraction(c) for c in row) for row in rows),
        )

    def row_expr(self, index: int) -> LinExpr:
        row = self.rows[index]
        return LinExpr.make(
            {v: row[k + 1] for k, v in enumerate(self.dims)}, row[0]
        )

    def float_rows(self) -> tuple[tuple[float, ...], ...]:
        return tuple(tuple(float(c) for c in row) for row in self.rows)

    def max_abs_coefficient(self) -> float:
        worst = 0.0
        for row in self.rows:
            for c in row:
                worst = max(worst, abs(float(c)))
        return worst

    def same_shape(self, other: AbstractElement) -> bool:
        return self.dims == other.dims and self.regions == other.regions


def concretize(element: AbstractElement) -> PiecewiseExpr:
    """One single-plane piece per region; 0 outside all regions."""
    return PiecewiseExpr.make(
        (region, MinExpr.of(element.row_expr(i)))
        for i, region in enumerate(element.regions)
    )


def abstract_leq(a: AbstractElement, b: AbstractElement) -> bool:
    """Order by concretization: every row of ``a`` lies below the matching row
    of ``b`` on its region (exact Farkas check per polyhedron)."""
    if not a.same_shape(b):
        raise RegionMismatchError("abstract elements disagree on regions")
    for i, region in enumerate(a.regions):
        lo, hi = a.row_expr(i), b.row_expr(i)
        for poly in region.polyhedra:
            if not farkas_dominates(lo, hi, poly):
                return False
    return True


def region_objective_points(
    region: Region, dims: Sequence[str], box: int = DEFAULT_POINT_BOX
) -> list[dict[str, Fraction]]:
    """Objective points for plane synthesis: the vertices of every region
    polyhedron clipped to [-box, box]^n, plus each vertex set's centroid."""
    points: list[tuple[Fraction, ...]] = []
    for poly in region.polyhedra:
        verts = polyhedron_vertices(poly, dims, lo=-box, hi=box)
        for v in verts:
            if v not in points:
                points.append(v)
        if verts:
            n = len(verts)
            centroid = tuple(
                sum((v[k] for v in verts), Fraction(0)) / n for k in range(len(dims))
            )
            if centroid not in points:
                points.append(centroid)
    points.sort()
    return [dict(zip(dims, p)) for p in points]


def lower_bound_plane(
    pieces: Sequence[tuple[Polyhedron, MinExpr]],
    floor: LinExpr,
    objective_points: Sequence[dict[str, Fraction]],
    dims: Sequence[str],
) -> LinExpr:
    """Best affine plane with ``floor <= plane`` on every piece polyhedron and
    ``plane <= piece value`` there, both via Farkas multipliers in one LP.

    Stage one maximizes the plane's total value at the objective points;
    stage two keeps that optimum and minimizes the L1 norm of the
    coefficients, so coordinates the sandwich leaves free come out 0.
    """
    if not pieces:
        raise InfeasibleSandwichError("no pieces to bound on this region")
    for poly, _ in pieces:
        if poly_is_empty(poly):
            raise ValueError("piece polyhedra must be nonempty")

    qvars = ["q:const"] + [f"q:{v}" for v in dims]

    def plane_coeff(var: str):
        # objective/constraint helper: the unknown plane's coefficient vars
        return qvars[1 + dims.index(var)] if var != "const" else qvars[0]

    def build(stage2_target: Fraction | None):
        lp = LinearProgram()
        for q in qvars:
            lp.add_variable(q)
        if stage2_target is not None:
            for q in qvars:
                lp.add_variable(f"abs:{q}", nonneg=True)
        block = 0
        for poly, value in pieces:
            constraints = poly.constraints
            # upper side: plane <= every min-term on this polyhedron
            for t, term in enumerate(value.exprs):
                names = [f"u{block}t{t}m{k}" for k in range(len(constraints))]
                for n in names:
                    lp.add_variable(n, nonneg=True)
                slack = f"u{block}t{t}s"
                lp.add_variable(slack, nonneg=True)
                for v in dims:
                    coeffs = {plane_coeff(v): Fraction(-1)}
                    for k, c in enumerate(constraints):
                        coeffs[names[k]] = c.expr.coeff(v)
                    lp.add_constraint(coeffs, "==", -term.coeff(v))
                coeffs = {qvars[0]: Fraction(-1), slack: Fraction(-1)}
                for k, c in enumerate(constraints):
                    coeffs[names[k]] = c.expr.const
                lp.add_constraint(coeffs, "==", -term.const)
            # lower side: floor <= plane on this polyhedron
            names = [f"f{block}m{k}" for k in range(len(constraints))]
            for n in names:
                lp.add_variable(n, nonneg=True)
            slack = f"f{block}s"
            lp.add_variable(slack, nonneg=True)
            for v in dims:
                coeffs = {plane_coeff(v): Fraction(1)}
                for k, c in enumerate(constraints):
                    coeffs[names[k]] = c.expr.coeff(v)
                lp.add_constraint(coeffs, "==", floor.coeff(v))
            coeffs = {qvars[0]: Fraction(1), slack: Fraction(-1)}
            for k, c in enumerate(constraints):
                coeffs[names[k]] = c.expr.const
            lp.add_constraint(coeffs, "==", floor.const)
            block += 1

        objective = {qvars[0]: Fraction(len(objective_points))}
        for v in dims:
            total = sum((pt[v] for pt in objective_points), Fraction(0))
            objective[plane_coeff(v)] = total
        if stage2_target is None:
            return lp, objective
        lp.add_constraint(objective, "==", stage2_target)
        for q in qvars:
            lp.add_constraint({f"abs:{q}": 1, q: -1}, ">=", 0)
            lp.add_constraint({f"abs:{q}": 1, q: 1}, ">=", 0)
        return lp, {f"abs:{q}": Fraction(1) for q in qvars}

    lp, objective = build(None)
    first = lp.solve(objective, sense="max")
    if first.status is LPStatus.INFEASIBLE:
        raise InfeasibleSandwichError(
            "previous iterate exceeds the transformed expectation on a region"
        )
    if first.status is LPStatus.UNBOUNDED:
        raise InfeasibleSandwichError(
            "plane objective unbounded; objective points outside the pieces"
        )
    lp2, objective2 = build(first.value)
    second = lp2.solve(objective2, sense="min")
    assert second.status is LPStatus.OPTIMAL, "tie-break stage must stay feasible"
    sol = second.assignment
    return LinExpr.make(
        {v: sol[plane_coeff(v)] for v in dims}, sol[qvars[0]]
    )


def build_post_abstraction(
    program: Program,
    dims: Sequence[str],
    regions: Sequence[Region],
) -> AbstractElement:
    """Rows of the post-expectation restricted to the analysis regions.

    Rejects post-expectations that are not a single affine function per
    region (including a region that mixes covered and uncovered parts).
    """
    rows = []
    rest = program.post.support().complement()
    for region in regions:
        seen: list[LinExpr] = []
        for poly in region.polyhedra:
            for piece in program.post.pieces:
                for q in piece.region.polyhedra:
                    if poly_is_empty(poly.intersect(q)):
                        continue
                    if len(piece.value.exprs) > 1:
                        raise PostExpectationError(
                            "post-expectation uses a minimum; not affine per region"
                        )
                    e = piece.value.exprs[0]
                    if e not in seen:
                        seen.append(e)
            if not rest.intersect_poly(poly).is_empty():
                if LinExpr.constant(0) not in seen:
                    seen.append(LinExpr.constant(0))
        if len(seen) > 1:
            raise PostExpectationError(
                "post-expectation is not a single affine function on region "
                f"{region}"
            )
        expr = seen[0] if seen else LinExpr.constant(0)
        extra = expr.variables() - set(dims)
        if extra:
            raise PostExpectationError(
                f"post-expectation mentions {sorted(extra)} outside the template dimensions"
            )
        rows.append((expr.const,) + tuple(expr.coeff(v) for v in dims))
    return AbstractElement.from_rows(dims, regions, rows)


def _pieces_on_region(
    transformed: PiecewiseExpr, region: Region
) -> list[tuple[Polyhedron, MinExpr]]:
    """The transformed expectation's pieces clipped to one region, with
    explicit zero pieces where the region is not covered."""
    out: list[tuple[Polyhedron, MinExpr]] = []
    uncovered = transformed.support().complement()
    for poly in region.polyhedra:
        for piece in transformed.pieces:
            for q in piece.region.polyhedra:
                cell = poly.intersect(q)
                if not poly_is_empty(cell):
                    out.append((cell, piece.value))
        for q in uncovered.polyhedra:
            cell = poly.intersect(q)
            if not poly_is_empty(cell):
                out.append((cell, MIN_ZERO))
    return out


def _worker_count() -> int:
    raw = os.environ.get("PREXPECT_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def abstract_step(
    np: NormalizedProgram,
    beta_abs: AbstractElement,
    element: AbstractElement,
    objective_points: Sequence[Sequence[dict[str, Fraction]]] | None = None,
) -> AbstractElement:
    """One application of the abstract transformer.

    The output is verified, not assumed: each new row provably lies above
    the old row and below the transformed expectation on its region.
    """
    if not beta_abs.same_shape(element):
        raise RegionMismatchError("post-expectation rows use different regions")
    dims = element.dims
    if objective_points is None:
        objective_points = [
            region_objective_points(r, dims) for r in element.regions
        ]
    transformed = loop_functional(np, concretize(beta_abs), concretize(element))

    def synthesize(i: int) -> tuple[Fraction, ...]:
        region = element.regions[i]
        pieces = _pieces_on_region(transformed, region)
        floor = element.row_expr(i)
        plane = lower_bound_plane(pieces, floor, objective_points[i], dims)
        for poly, value in pieces:
            assert farkas_dominates(floor, plane, poly), "chain side violated"
            for term in value.exprs:
                assert farkas_dominates(plane, term, poly), "sound side violated"
        return (plane.const,) + tuple(plane.coeff(v) for v in dims)

    workers = _worker_count()
    indices = range(len(element.regions))
    if workers > 1 and len(element.regions) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(synthesize, indices))
    else:
        rows = [synthesize(i) for i in indices]
    return AbstractElement(dims, element.regions, tuple(rows))
