"""Kleene iteration of the abstract step, exactness certificate, and the
initialization/correctness checks built on top of it."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .abstraction import (
    AbstractElement,
    abstract_leq,
    abstract_step,
    build_post_abstraction,
    concretize,
    region_objective_points,
)
from .errors import ChainViolationError, InfeasibleSandwichError
from .expectations import PiecewiseExpr, pw_dominates
from .guards import region_partition
from .linear import Assignment
from .polyhedra import Region
from .program import NormalizedProgram, Program, normalize
from .transformer import loop_functional

SNAP_MAX_DENOMINATOR = 10**6


class IterationStatus(Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    MAX_ITERATIONS = "max-iterations"


class Exactness(Enum):
    EXACT = "exact"
    LOWER_BOUND_ONLY = "lower-bound-only"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class IterationTrace:
    rows: tuple[tuple[int, AbstractElement], ...]
    status: IterationStatus
    residual: float

    def final(self) -> AbstractElement:
        return self.rows[-1][1]


@dataclass
class IterationOptions:
    eps: float = 1e-12
    max_iter: int = 10_000
    divergence_bound: float = 1e12


def kleene_iterate(
    np: NormalizedProgram,
    beta_abs: AbstractElement,
    opts: IterationOptions | None = None,
) -> IterationTrace:
    """Iterate the abstract step from the all-zero element.

    Convergence is declared when the largest coefficient change drops below
    ``eps``; a coefficient magnitude above ``divergence_bound`` stops the run
    with the Diverged status, which means "no pre-fixed point detected at
    this bound", not a proof of divergence. Each consecutive pair of rows is
    re-checked to form an ascending chain, exactly.
    """
    opts = opts or IterationOptions()
    if opts.eps <= 0 or opts.max_iter < 1 or opts.divergence_bound <= 0:
        raise ValueError("bad iteration options")
    points = [
        region_objective_points(region, beta_abs.dims)
        for region in beta_abs.regions
    ]
    current = AbstractElement.bottom(beta_abs.dims, beta_abs.regions)
    rows: list[tuple[int, AbstractElement]] = [(0, current)]
    residual = float("inf")
    for k in range(1, opts.max_iter + 1):
        try:
            nxt = abstract_step(np, beta_abs, current, objective_points=points)
        except InfeasibleSandwichError as err:
            err.partial_trace = IterationTrace(
                tuple(rows), IterationStatus.MAX_ITERATIONS, residual
            )
            raise
        if not abstract_leq(current, nxt):
            raise ChainViolationError(f"iterate {k} is not above iterate {k - 1}")
        residual = _residual(current, nxt)
        rows.append((k, nxt))
        current = nxt
        if current.max_abs_coefficient() > opts.divergence_bound:
            return IterationTrace(tuple(rows), IterationStatus.DIVERGED, residual)
        if residual < opts.eps:
            return IterationTrace(tuple(rows), IterationStatus.CONVERGED, residual)
    return IterationTrace(tuple(rows), IterationStatus.MAX_ITERATIONS, residual)


def _residual(a: AbstractElement, b: AbstractElement) -> float:
    worst = 0.0
    for ra, rb in zip(a.rows, b.rows):
        for ca, cb in zip(ra, rb):
            worst = max(worst, abs(float(cb) - float(ca)))
    return worst


def snap_element(
    element: AbstractElement, max_denominator: int = SNAP_MAX_DENOMINATOR
) -> AbstractElement:
    """Round every coefficient to the nearest rational with a small
    denominator (continued-fraction snap)."""
    rows = tuple(
        tuple(Fraction(c).limit_denominator(max_denominator) for c in row)
        for row in element.rows
    )
    return AbstractElement(element.dims, element.regions, rows)


def exactness_check(
    np: NormalizedProgram, beta: PiecewiseExpr, phi: PiecewiseExpr
) -> bool:
    """True iff ``phi`` is a pre-fixed point of the loop functional, i.e. the
    functional applied to ``phi`` stays below ``phi`` everywhere. A true
    answer certifies that a converged lower bound is the exact least fixed
    point; a false answer is not a refutation (the snap may simply have
    missed the true coefficients)."""
    return pw_dominates(loop_functional(np, beta, phi), phi, Region.whole_space())


def apply_init(phi: PiecewiseExpr, init: Assignment) -> PiecewiseExpr:
    """Pre-expectation of the initialization: substitute the initial
    assignment through the expectation (regions become constraints on any
    symbolic constants)."""
    return phi.compose(init)


def check_correctness(alpha: PiecewiseExpr, phi_init: PiecewiseExpr) -> bool:
    """True iff the claimed pre-expectation ``alpha`` lies below the computed
    lower bound at initialization, which certifies the claim."""
    return pw_dominates(alpha, phi_init, Region.whole_space())


@dataclass
class AnalysisReport:
    program: Program
    region_labels: tuple[str, ...]
    dims: tuple[str, ...]
    trace: IterationTrace | None
    snapped: AbstractElement | None
    exact: Exactness
    init_value: PiecewiseExpr | None
    alpha_certified: bool | None
    timings_ms: dict[str, float] = field(default_factory=dict)
    error: str | None = None

    @property
    def failed(self) -> bool:
        if self.error is not None:
            return True
        return self.trace is not None and self.trace.status is IterationStatus.DIVERGED


def analysis_regions(program: Program) -> tuple[tuple[Region, ...], tuple[str, ...]]:
    """The analysis regions: the declared ones, or the guard-algebra cells."""
    if program.regions is not None:
        labels = program.region_labels or tuple(
            f"R{i + 1}" for i in range(len(program.regions))
        )
        return program.regions, labels
    cells = region_partition([cmd.guard for cmd in program.commands])
    labels = tuple(f"A{i + 1}" for i in range(len(cells)))
    return tuple(cells), labels


def analyze(
    program: Program,
    opts: IterationOptions | None = None,
    alpha: PiecewiseExpr | None = None,
) -> AnalysisReport:
    """Full pipeline: normalize, iterate, certify, and apply initialization."""
    opts = opts or IterationOptions()
    timings: dict[str, float] = {}
    start = time.perf_counter()
    np = normalize(program)
    regions, labels = analysis_regions(program)
    dims = program.analysis_dims()
    beta_abs = build_post_abstraction(program, dims, regions)
    timings["setup"] = (time.perf_counter() - start) * 1000

    start = time.perf_counter()
    try:
        trace = kleene_iterate(np, beta_abs, opts)
    except InfeasibleSandwichError as err:
        timings["iterate"] = (time.perf_counter() - start) * 1000
        return AnalysisReport(
            program=program,
            region_labels=labels,
            dims=dims,
            trace=err.partial_trace,
            snapped=None,
            exact=Exactness.UNKNOWN,
            init_value=None,
            alpha_certified=None,
            timings_ms=timings,
            error=str(err),
        )
    timings["iterate"] = (time.perf_counter() - start) * 1000

    snapped = None
    exact = Exactness.UNKNOWN
    start = time.perf_counter()
    if trace.status is IterationStatus.CONVERGED:
        snapped = snap_element(trace.final())
        exact = (
            Exactness.EXACT
            if exactness_check(np, program.post, concretize(snapped))
            else Exactness.LOWER_BOUND_ONLY
        )
    timings["exactness"] = (time.perf_counter() - start) * 1000

    init_value = None
    alpha_certified = None
    start = time.perf_counter()
    if trace.status in (IterationStatus.CONVERGED, IterationStatus.MAX_ITERATIONS):
        best = snapped if exact is Exactness.EXACT else trace.final()
        if program.init is not None:
            init_value = apply_init(concretize(best), program.init)
            if alpha is not None:
                alpha_certified = check_correctness(alpha, init_value)
    timings["init"] = (time.perf_counter() - start) * 1000

    return AnalysisReport(
        program=program,
        region_labels=labels,
        dims=dims,
        trace=trace,
        snapped=snapped,
        exact=exact,
        init_value=init_value,
        alpha_certified=alpha_certified,
        timings_ms=timings,
    )
