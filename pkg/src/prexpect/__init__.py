"""Quantitative analysis of probabilistic guarded-command programs.

Computes (or under-approximates) the demonic expected value of a linear
post-expectation for loops of probabilistic-nondeterministic guarded
commands over integer states: piecewise-linear templates over polyhedral
regions, iterated backward to a fixed point with exact-rational linear
programming, cross-checked by an explicit-state oracle.
"""

from .abstraction import (
    AbstractElement,
    abstract_leq,
    abstract_step,
    build_post_abstraction,
    concretize,
    lower_bound_plane,
    region_objective_points,
)
from .dominance import FarkasCertificate, farkas_dominates, min_dominates
from .engine import (
    AnalysisReport,
    Exactness,
    IterationOptions,
    IterationStatus,
    IterationTrace,
    analysis_regions,
    analyze,
    apply_init,
    check_correctness,
    exactness_check,
    kleene_iterate,
    snap_element,
)
from .errors import (
    ChainViolationError,
    EmptyPolyhedronError,
    InfeasibleSandwichError,
    NonAffineAssignmentError,
    ParseError,
    PostExpectationError,
    PrexpectError,
    RegionMismatchError,
    StateBoxEscapeError,
    TooManyGuardsError,
)
from .expectations import Piece, PiecewiseExpr, pw_dominates, pw_evaluate
from .guards import And, Atom, GuardExpr, Not, Or, guard_to_region, region_partition
from .linear import Assignment, LinExpr, MinExpr, affine_compose
from .oracle import GeneratorSet, build_generators, closure_invariance_check, value_iteration
from .parser import parse_linexpr, parse_pred, parse_program, parse_pwexpr, print_program
from .polyhedra import (
    LinConstraint,
    Polyhedron,
    Region,
    make_constraint,
    poly_is_empty,
    region_preimage,
)
from .program import (
    GuardedCommand,
    NormalizedProgram,
    ProbBranch,
    Program,
    exit_region,
    normalize,
)
from .transformer import loop_functional, wp_step

__all__ = [name for name in dir() if not name.startswith("_")]
