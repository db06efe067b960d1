"""Polyhedral regions over integer-valued states.

Constraints are kept in a canonical integer form ``expr <= 0``. Because the
semantic domain is the integers, strict inequalities and negations tighten
exactly (``e < 0`` becomes ``e + 1 <= 0`` once coefficients are integral),
so the complement of a polyhedron is again a finite union of polyhedra.

Emptiness and inclusion questions are answered over the rational relaxation
of the (integer-tightened) constraints. A rationally nonempty but
integer-empty set is reported nonempty; for the lower bounds computed by
this package that direction is the safe one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import floor, gcd
from typing import Iterable, Sequence

from .errors import EmptyPolyhedronError
from .linear import Assignment, LinExpr, State
from .lp import LinearProgram, LPStatus

_FALSE_EXPR = LinExpr.constant(1)


@dataclass(frozen=True)
class LinConstraint:
    """Canonical constraint ``expr <= 0`` with coprime integer coefficients."""

    expr: LinExpr

    def negated(self) -> LinConstraint:
        # over the integers: not(e <= 0)  <=>  -e + 1 <= 0
        return LinConstraint(_canonical_leq(-self.expr + 1))

    def holds(self, state: State) -> bool:
        return self.expr.evaluate(state) <= 0

    def __str__(self) -> str:
        return f"{self.expr} <= 0"


def _canonical_leq(expr: LinExpr) -> LinExpr:
    """Clear denominators, divide by the gcd of the variable coefficients and
    tighten the constant to the integer hull."""
    denoms = [c.denominator for _, c in expr.terms] + [expr.const.denominator]
    mult = 1
    for d in denoms:
        mult = mult * d // gcd(mult, d)
    expr = expr.scale(mult)
    if not expr.terms:
        return expr
    g = 0
    for _, c in expr.terms:
        g = gcd(g, abs(c.numerator))
    if g > 1:
        # sum(a_v v) <= -c  tightens to  sum(a_v/g v) <= floor(-c/g)
        bound = floor(Fraction(-expr.const, g))
        expr = LinExpr(tuple((v, c / g) for v, c in expr.terms), Fraction(-bound))
    return expr


def make_constraint(expr: LinExpr, rel: str) -> list[LinConstraint]:
    """Normalize ``expr rel 0`` into canonical <=-constraints.

    Disequality is not convex and must be handled at the guard level.
    """
    if rel == "<=":
        exprs = [expr]
    elif rel == "<":
        exprs = [_strictified(expr)]
    elif rel == ">=":
        exprs = [-expr]
    elif rel == ">":
        exprs = [_strictified(-expr)]
    elif rel in ("=", "=="):
        exprs = [expr, -expr]
    else:
        raise ValueError(f"relation {rel!r} not supported in a conjunction")
    return [LinConstraint(_canonical_leq(e)) for e in exprs]


def _strictified(expr: LinExpr) -> LinExpr:
    # e < 0 over the integers: clear denominators first, then e + 1 <= 0
    denoms = [c.denominator for _, c in expr.terms] + [expr.const.denominator]
    mult = 1
    for d in denoms:
        mult = mult * d // gcd(mult, d)
    return expr.scale(mult) + 1


@dataclass(frozen=True)
class Polyhedron:
    """Conjunction of canonical constraints; no constraints means everything."""

    constraints: tuple[LinConstraint, ...]

    @staticmethod
    def make(constraints: Iterable[LinConstraint]) -> Polyhedron:
        kept: list[LinConstraint] = []
        for c in constraints:
            if not c.expr.terms:
                if c.expr.const > 0:
                    return Polyhedron((LinConstraint(_FALSE_EXPR),))
                continue  # trivially true
            if c not in kept:
                kept.append(c)
        kept.sort(key=lambda c: (c.expr.terms, c.expr.const))
        return Polyhedron(tuple(kept))

    @staticmethod
    def whole_space() -> Polyhedron:
        return Polyhedron(())

    def is_trivially_false(self) -> bool:
        return any(not c.expr.terms and c.expr.const > 0 for c in self.constraints)

    def intersect(self, other: Polyhedron) -> Polyhedron:
        return Polyhedron.make(self.constraints + other.constraints)

    def substitute(self, assignment: Assignment) -> Polyhedron:
        """Exact preimage {s : assignment(s) in self}."""
        out: list[LinConstraint] = []
        for c in self.constraints:
            out.extend(make_constraint(c.expr.substitute(assignment), "<="))
        return Polyhedron.make(out)

    def contains(self, state: State) -> bool:
        return all(c.holds(state) for c in self.constraints)

    def complement_cells(self) -> list[Polyhedron]:
        """Disjoint polyhedra covering the complement."""
        cells: list[Polyhedron] = []
        prefix: list[LinConstraint] = []
        for c in self.constraints:
            cells.append(Polyhedron.make(prefix + [c.negated()]))
            prefix.append(c)
        return [p for p in cells if not poly_is_empty(p)]

    def variables(self) -> frozenset[str]:
        out: set[str] = set()
        for c in self.constraints:
            out |= c.expr.variables()
        return frozenset(out)

    def simplified(self) -> Polyhedron:
        """Drop constraints implied by the remaining ones (cosmetic)."""
        kept = list(self.constraints)
        i = 0
        while i < len(kept):
            others = kept[:i] + kept[i + 1 :]
            if _implied_by(kept[i], others):
                kept.pop(i)
            else:
                i += 1
        return Polyhedron.make(kept)

    def __str__(self) -> str:
        if not self.constraints:
            return "true"
        return " && ".join(str(c) for c in self.constraints)


def _implied_by(c: LinConstraint, others: Sequence[LinConstraint]) -> bool:
    lp = LinearProgram()
    for v in sorted(c.expr.variables() | {v for o in others for v in o.expr.variables()}):
        lp.add_variable(v)
    for o in others:
        lp.add_constraint(o.expr.coeffs, "<=", -o.expr.const)
    res = lp.solve(c.expr.coeffs, sense="max")
    if res.status is LPStatus.INFEASIBLE:
        return True
    if res.status is LPStatus.UNBOUNDED:
        return False
    return res.value + c.expr.const <= 0


@lru_cache(maxsize=500_000)
def poly_is_empty(poly: Polyhedron) -> bool:
    """Rational-relaxation emptiness; Fourier-Motzkin for the small systems
    that dominate partition refinement, LP feasibility as the fallback."""
    if not poly.constraints:
        return False
    if poly.is_trivially_false():
        return True
    by_fm = _fm_empty(poly)
    if by_fm is not None:
        return by_fm
    lp = LinearProgram()
    for v in sorted(poly.variables()):
        lp.add_variable(v)
    for c in poly.constraints:
        lp.add_constraint(c.expr.coeffs, "<=", -c.expr.const)
    return lp.check_feasible().status is LPStatus.INFEASIBLE


_FM_ROW_CAP = 600


def _fm_empty(poly: Polyhedron) -> bool | None:
    """Eliminate variables one by one; None when the system grows too much."""
    system: list[tuple[dict[str, Fraction], Fraction]] = [
        (c.expr.coeffs, c.expr.const) for c in poly.constraints
    ]
    for var in sorted(poly.variables()):
        uppers, lowers, rest = [], [], []
        for coeffs, const in system:
            a = coeffs.get(var)
            if a is None or a == 0:
                rest.append((coeffs, const))
            elif a > 0:
                uppers.append((coeffs, const, a))
            else:
                lowers.append((coeffs, const, -a))
        if len(uppers) * len(lowers) + len(rest) > _FM_ROW_CAP:
            return None
        for cu, ku, au in uppers:
            for cl, kl, al in lowers:
                combined: dict[str, Fraction] = {}
                for name in cu.keys() | cl.keys():
                    if name == var:
                        continue
                    value = al * cu.get(name, Fraction(0)) + au * cl.get(name, Fraction(0))
                    if value:
                        combined[name] = value
                const = al * ku + au * kl
                if combined:
                    rest.append((combined, const))
                elif const > 0:
                    return True
        system = rest
    return any(const > 0 for coeffs, const in system if not coeffs)


@dataclass(frozen=True)
class Region:
    """Finite union of polyhedra. Construction keeps only nonempty disjuncts;
    the partitioning constructors produce pairwise-disjoint ones."""

    polyhedra: tuple[Polyhedron, ...]

    @staticmethod
    def make(polys: Iterable[Polyhedron]) -> Region:
        kept = []
        for p in polys:
            if not poly_is_empty(p) and p not in kept:
                kept.append(p)
        return Region(tuple(kept))

    @staticmethod
    def whole_space() -> Region:
        return Region((Polyhedron.whole_space(),))

    @staticmethod
    def empty() -> Region:
        return Region(())

    def is_empty(self) -> bool:
        return not self.polyhedra

    def contains(self, state: State) -> bool:
        return any(p.contains(state) for p in self.polyhedra)

    def intersect_poly(self, poly: Polyhedron) -> Region:
        return Region.make(p.intersect(poly) for p in self.polyhedra)

    def intersect(self, other: Region) -> Region:
        return Region.make(
            p.intersect(q) for p in self.polyhedra for q in other.polyhedra
        )

    def complement(self) -> Region:
        """Disjoint cover of the complement of this union."""
        return self.complement_within(Polyhedron.whole_space())

    def complement_within(self, bound: Polyhedron) -> Region:
        """Disjoint cover of ``bound`` minus this union."""
        return _complement_within(self, bound)

    def preimage(self, assignment: Assignment) -> Region:
        return Region.make(p.substitute(assignment) for p in self.polyhedra)

    def simplified(self) -> Region:
        return Region(tuple(p.simplified() for p in self.polyhedra))

    def __str__(self) -> str:
        if not self.polyhedra:
            return "false"
        return " || ".join(f"({p})" for p in self.polyhedra)


@lru_cache(maxsize=50_000)
def _complement_within(region: Region, bound: Polyhedron) -> Region:
    current = [bound] if not poly_is_empty(bound) else []
    for poly in region.polyhedra:
        nxt: list[Polyhedron] = []
        for cell in current:
            for piece in poly.complement_cells():
                inter = cell.intersect(piece)
                if not poly_is_empty(inter):
                    nxt.append(inter)
        current = nxt
    return Region(tuple(merge_adjacent(current)))


def region_preimage(region: Region, assignment: Assignment) -> Region:
    return region.preimage(assignment)


def regions_disjoint(a: Region, b: Region) -> bool:
    return all(
        poly_is_empty(p.intersect(q)) for p in a.polyhedra for q in b.polyhedra
    )


def merge_adjacent(polys: Sequence[Polyhedron]) -> list[Polyhedron]:
    """Merge pairs of polyhedra that differ in exactly one negated constraint;
    the union of such a pair is the polyhedron without that constraint."""
    cells = list(polys)
    changed = True
    while changed:
        changed = False
        for i in range(len(cells)):
            for j in range(i + 1, len(cells)):
                merged = _try_merge(cells[i], cells[j])
                if merged is not None:
                    cells[i] = merged
                    cells.pop(j)
                    changed = True
                    break
            if changed:
                break
    return cells


def _try_merge(a: Polyhedron, b: Polyhedron) -> Polyhedron | None:
    sa, sb = set(a.constraints), set(b.constraints)
    extra_a, extra_b = sa - sb, sb - sa
    if len(extra_a) == 1 and len(extra_b) == 1:
        (ca,) = extra_a
        (cb,) = extra_b
        if ca.negated() == cb:
            return Polyhedron.make(sa - {ca})
    return None


def polyhedron_vertices(
    poly: Polyhedron, dims: Sequence[str], lo: int = -100, hi: int = 100
) -> list[tuple[Fraction, ...]]:
    """Vertices of the polyhedron clipped to the box [lo, hi]^d.

    Used to pick objective points for plane synthesis; exact rational output.
    """
    if poly_is_empty(poly):
        raise EmptyPolyhedronError("vertex enumeration on an empty polyhedron")
    d = len(dims)
    exprs = [c.expr for c in poly.constraints]
    for v in dims:
        exprs.append(LinExpr.make({v: 1}, -hi))   # v - hi <= 0
        exprs.append(LinExpr.make({v: -1}, lo))   # lo - v <= 0
    found: list[tuple[Fraction, ...]] = []
    from itertools import combinations

    for combo in combinations(range(len(exprs)), d):
        point = _solve_square([exprs[k] for k in combo], dims)
        if point is None:
            continue
        state = dict(zip(dims, point))
        if all(e.evaluate(state) <= 0 for e in exprs):
            if point not in found:
                found.append(point)
    found.sort()
    return found


def _solve_square(exprs: Sequence[LinExpr], dims: Sequence[str]):
    d = len(dims)
    mat = [[e.coeff(v) for v in dims] + [-e.const] for e in exprs]
    for col in range(d):
        pivot = next((r for r in range(col, d) if mat[r][col] != 0), None)
        if pivot is None:
            return None
        mat[col], mat[pivot] = mat[pivot], mat[col]
        pv = mat[col][col]
        mat[col] = [x / pv for x in mat[col]]
        for r in range(d):
            if r != col and mat[r][col] != 0:
                f = mat[r][col]
                mat[r] = [x - f * y for x, y in zip(mat[r], mat[col])]
    return tuple(mat[r][-1] for r in range(d))
