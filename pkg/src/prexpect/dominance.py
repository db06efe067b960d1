"""Pointwise dominance of affine functions over polyhedra.

``g <= h`` on a nonempty polyhedron ``{x : A x <= b}`` holds exactly when
nonnegative multipliers exist with ``h - g = lambda^T (b - A x) + c0``,
``c0 >= 0``. The multiplier system is itself a linear feasibility problem,
so one exact LP both decides the question and produces a certificate that
can be re-verified by symbolic expansion.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import EmptyPolyhedronError
from .linear import LinExpr, MinExpr
from .lp import LinearProgram, LPStatus
from .polyhedra import Polyhedron, poly_is_empty


@dataclass(frozen=True)
class FarkasCertificate:
    """Multipliers proving ``upper - lower >= 0`` on a polyhedron."""

    polyhedron: Polyhedron
    lower: LinExpr
    upper: LinExpr
    multipliers: tuple[Fraction, ...]  # one per constraint, each >= 0
    slack: Fraction                    # the constant c0 >= 0

    def verify(self) -> bool:
        """Re-check the identity  upper - lower == sum(l_k * -(e_k)) + c0
        exactly in rationals."""
        if any(m < 0 for m in self.multipliers) or self.slack < 0:
            return False
        acc = LinExpr.constant(self.slack)
        for mult, constraint in zip(self.multipliers, self.polyhedron.constraints):
            acc = acc + constraint.expr.scale(-mult)
        return acc == self.upper - self.lower


def farkas_dominates(
    lower: LinExpr, upper: LinExpr, poly: Polyhedron, want_certificate: bool = False
):
    """True iff ``lower(x) <= upper(x)`` for every rational x in ``poly``.

    Returns a bool, or a (bool, certificate-or-None) pair when
    ``want_certificate`` is set. Raises on an empty polyhedron.
    """
    if poly_is_empty(poly):
        raise EmptyPolyhedronError(f"dominance over empty polyhedron {poly}")
    diff = upper - lower
    lp = LinearProgram()
    names = [f"l{k}" for k in range(len(poly.constraints))]
    for name in names:
        lp.add_variable(name, nonneg=True)
    lp.add_variable("c0", nonneg=True)
    variables = sorted(diff.variables() | poly.variables())
    for v in variables:
        coeffs = {
            names[k]: -c.expr.coeff(v) for k, c in enumerate(poly.constraints)
        }
        lp.add_constraint(coeffs, "==", diff.coeff(v))
    const_coeffs = {
        names[k]: -c.expr.const for k, c in enumerate(poly.constraints)
    }
    const_coeffs["c0"] = Fraction(1)
    lp.add_constraint(const_coeffs, "==", diff.const)
    res = lp.check_feasible()
    ok = res.status is LPStatus.OPTIMAL
    if not want_certificate:
        return ok
    if not ok:
        return False, None
    cert = FarkasCertificate(
        polyhedron=poly,
        lower=lower,
        upper=upper,
        multipliers=tuple(res.assignment[n] for n in names),
        slack=res.assignment["c0"],
    )
    return True, cert


def min_dominates(lower: MinExpr, upper: LinExpr, poly: Polyhedron) -> bool:
    """True iff ``min(lower terms) <= upper`` everywhere on ``poly``.

    A minimum can lie below a plane even when no single term does, so the
    general case maximizes the gap ``delta = min_t(t - upper)`` over the
    polyhedron and checks it is not positive.
    """
    if len(lower.exprs) == 1:
        return farkas_dominates(lower.exprs[0], upper, poly)
    if poly_is_empty(poly):
        raise EmptyPolyhedronError(f"dominance over empty polyhedron {poly}")
    lp = LinearProgram()
    variables = sorted(
        poly.variables()
        | upper.variables()
        | frozenset(v for t in lower.exprs for v in t.variables())
    )
    for v in variables:
        lp.add_variable(v)
    lp.add_variable("delta")
    for c in poly.constraints:
        lp.add_constraint(c.expr.coeffs, "<=", -c.expr.const)
    for t in lower.exprs:
        gap = t - upper
        coeffs = dict(gap.coeffs)
        coeffs["delta"] = Fraction(-1)
        lp.add_constraint(coeffs, ">=", -gap.const)  # delta <= t - upper
    res = lp.solve({"delta": 1}, sense="max")
    if res.status is LPStatus.UNBOUNDED:
        return False
    assert res.status is LPStatus.OPTIMAL
    return res.value <= 0
