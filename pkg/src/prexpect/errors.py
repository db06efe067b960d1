"""Exception types shared across the package."""

from __future__ import annotations


class PrexpectError(Exception):
    """Base class for all errors raised by this package."""


class EmptyPolyhedronError(PrexpectError):
    """An operation required a nonempty polyhedron but got an empty one."""


class NonAffineAssignmentError(PrexpectError):
    """An assignment update was not affine in the program variables."""


class TooManyGuardsError(PrexpectError):
    """Guard normalization would enumerate more cells than the configured cap."""


class RegionMismatchError(PrexpectError):
    """Two abstract elements do not share the same region list."""


class InfeasibleSandwichError(PrexpectError):
    """No affine plane fits between the previous iterate and the transformed
    expectation on some region.

    This signals a violated monotonicity assumption (or a post-expectation
    that is negative somewhere on a region), so the iteration must abort.
    The partial trace accumulated so far is attached when available.
    """

    def __init__(self, message: str, partial_trace=None):
        super().__init__(message)
        self.partial_trace = partial_trace


class ChainViolationError(PrexpectError):
    """Consecutive iterates failed the exact ascending-chain check."""


class StateBoxEscapeError(PrexpectError):
    """Forward exploration reached a state outside the declared bounds."""


class StateSpaceTooLargeError(PrexpectError):
    """Forward exploration exceeded the safety cap on distinct states."""


class NonIntegerStateError(PrexpectError):
    """A transition produced a non-integer coordinate; the operational
    semantics is defined over integer-valued states."""


class PostExpectationError(PrexpectError):
    """The post-expectation cannot be represented as one affine function per
    analysis region."""


class ParseError(PrexpectError):
    """Syntax or semantic error in a program text; carries a source span."""

    def __init__(self, message: str, span=None):
        super().__init__(message)
        self.span = span

    def __str__(self) -> str:
        base = super().__str__()
        if self.span is not None:
            return f"{self.span}: {base}"
        return base
