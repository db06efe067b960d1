"""Exact affine expressions over named variables.

All arithmetic is done with `fractions.Fraction`, so results are exact and
structural equality of the canonical form coincides with semantic equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

Rat = Fraction

State = Mapping[str, Fraction | int]


def _rat(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


@dataclass(frozen=True)
class LinExpr:
    """Affine expression ``sum(coeff_v * v) + const`` with rational coefficients.

    Zero coefficients are normalized away and terms are kept sorted by
    variable name, so equal values compare (and hash) equal.
    """

    terms: tuple[tuple[str, Fraction], ...]
    const: Fraction

    @staticmethod
    def make(coeffs: Mapping[str, Fraction | int] | None = None, const=0) -> LinExpr:
        items = []
        if coeffs:
            for name in sorted(coeffs):
                c = _rat(coeffs[name])
                if c != 0:
                    items.append((name, c))
        return LinExpr(tuple(items), _rat(const))

    @staticmethod
    def constant(value) -> LinExpr:
        return LinExpr((), _rat(value))

    @staticmethod
    def var(name: str, coeff=1) -> LinExpr:
        return LinExpr.make({name: _rat(coeff)})

    @property
    def coeffs(self) -> dict[str, Fraction]:
        return dict(self.terms)

    def coeff(self, name: str) -> Fraction:
        for var, c in self.terms:
            if var == name:
                return c
        return Fraction(0)

    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.terms)

    def is_constant(self) -> bool:
        return not self.terms

    def __add__(self, other: LinExpr | int | Fraction) -> LinExpr:
        if not isinstance(other, LinExpr):
            other = LinExpr.constant(other)
        acc = dict(self.terms)
        for var, c in other.terms:
            acc[var] = acc.get(var, Fraction(0)) + c
        return LinExpr.make(acc, self.const + other.const)

    def __neg__(self) -> LinExpr:
        return LinExpr(tuple((v, -c) for v, c in self.terms), -self.const)

    def __sub__(self, other: LinExpr | int | Fraction) -> LinExpr:
        if not isinstance(other, LinExpr):
            other = LinExpr.constant(other)
        return self + (-other)

    def scale(self, factor) -> LinExpr:
        f = _rat(factor)
        if f == 0:
            return LinExpr.constant(0)
        return LinExpr(tuple((v, c * f) for v, c in self.terms), self.const * f)

    def evaluate(self, state: State) -> Fraction:
        total = self.const
        for var, c in self.terms:
            total += c * _rat(state[var])
        return total

    def substitute(self, assignment: "Assignment") -> LinExpr:
        """Compose with a simultaneous affine assignment: self after assignment."""
        result = LinExpr.constant(self.const)
        for var, c in self.terms:
            result = result + assignment.expr_for(var).scale(c)
        return result

    def __str__(self) -> str:
        parts = []
        for var, c in self.terms:
            if c == 1:
                parts.append(var if not parts else f"+ {var}")
            elif c == -1:
                parts.append(f"-{var}" if not parts else f"- {var}")
            else:
                mag = abs(c)
                coeff = str(mag) if mag.denominator == 1 else f"{mag.numerator}/{mag.denominator}"
                if not parts:
                    parts.append(f"{'-' if c < 0 else ''}{coeff}*{var}")
                else:
                    parts.append(f"{'-' if c < 0 else '+'} {coeff}*{var}")
        if self.const != 0 or not parts:
            mag = abs(self.const)
            lit = str(mag) if mag.denominator == 1 else f"{mag.numerator}/{mag.denominator}"
            if not parts:
                parts.append(f"{'-' if self.const < 0 else ''}{lit}")
            else:
                parts.append(f"{'-' if self.const < 0 else '+'} {lit}")
        return " ".join(parts)


ZERO = LinExpr.constant(0)


@dataclass(frozen=True)
class MinExpr:
    """Pointwise minimum of a nonempty set of affine expressions.

    A single-term MinExpr is the embedding of a plain LinExpr.
    """

    exprs: tuple[LinExpr, ...]

    def __post_init__(self):
        if not self.exprs:
            raise ValueError("MinExpr needs at least one term")
        seen: list[LinExpr] = []
        for e in self.exprs:
            if e not in seen:
                seen.append(e)
        object.__setattr__(self, "exprs", tuple(seen))

    @staticmethod
    def of(*exprs: LinExpr) -> MinExpr:
        return MinExpr(tuple(exprs))

    def evaluate(self, state: State) -> Fraction:
        return min(e.evaluate(state) for e in self.exprs)

    def substitute(self, assignment: "Assignment") -> MinExpr:
        return MinExpr(tuple(e.substitute(assignment) for e in self.exprs))

    def scale(self, factor) -> MinExpr:
        f = _rat(factor)
        if f < 0:
            raise ValueError("scaling a minimum by a negative factor flips it")
        return MinExpr(tuple(e.scale(f) for e in self.exprs))

    def add(self, other: MinExpr) -> MinExpr:
        """Sum of two minima: min over all pairwise term sums."""
        return MinExpr(tuple(a + b for a in self.exprs for b in other.exprs))

    def merge_min(self, other: MinExpr) -> MinExpr:
        return MinExpr(self.exprs + other.exprs)

    def __str__(self) -> str:
        if len(self.exprs) == 1:
            return str(self.exprs[0])
        return "min(" + ", ".join(str(e) for e in self.exprs) + ")"


MIN_ZERO = MinExpr.of(ZERO)


@dataclass(frozen=True)
class Assignment:
    """Simultaneous multi-assignment; variables not mentioned are unchanged."""

    updates: tuple[tuple[str, LinExpr], ...]

    @staticmethod
    def make(updates: Mapping[str, LinExpr]) -> Assignment:
        return Assignment(tuple(sorted(updates.items())))

    @staticmethod
    def identity() -> Assignment:
        return Assignment(())

    def expr_for(self, var: str) -> LinExpr:
        for name, expr in self.updates:
            if name == var:
                return expr
        return LinExpr.var(var)

    def updated_variables(self) -> frozenset[str]:
        return frozenset(name for name, _ in self.updates)

    def apply_to_state(self, state: State) -> dict[str, Fraction]:
        new_state = {v: _rat(c) for v, c in state.items()}
        for name, expr in self.updates:
            new_state[name] = expr.evaluate(state)
        return new_state

    def __str__(self) -> str:
        return ", ".join(f"{v}' = {e}" for v, e in self.updates)


def affine_compose(expr: LinExpr, assignment: Assignment) -> LinExpr:
    """Exact symbolic composition ``expr after assignment``."""
    return expr.substitute(assignment)
