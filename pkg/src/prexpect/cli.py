"""Command-line driver: analyze / oracle / atoms / wp subcommands."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .engine import (
    AnalysisReport,
    Exactness,
    IterationOptions,
    IterationStatus,
    analyze,
)
from .errors import ParseError, PrexpectError
from .oracle import value_iteration
from .parser import parse_program, parse_pwexpr, print_pwexpr, print_region
from .program import normalize
from .transformer import wp_step

DIVERGENCE_CAVEAT = (
    "no pre-fixed point detected at this bound; "
    "this is not a proof of divergence"
)


def main(argv: list[str] | None = None) -> int:
    return run_cli(sys.argv[1:] if argv is None else argv)


def run_cli(argv: list[str]) -> int:
    parser = argparse.ArgumentParser(
        prog="prexpect",
        description="Lower bounds on expected values of probabilistic "
        "guarded-command programs.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_an = sub.add_parser("analyze", help="run the fixed-point analysis")
    p_an.add_argument("file")
    p_an.add_argument("--eps", type=float, default=1e-12)
    p_an.add_argument("--max-iter", type=int, default=10_000)
    p_an.add_argument("--div-bound", type=float, default=1e12)
    p_an.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p_an.add_argument("--alpha", help="pre-expectation claim to certify")

    p_or = sub.add_parser("oracle", help="explicit-state value iteration")
    p_or.add_argument("file")
    p_or.add_argument("--horizon", type=int, required=True)
    p_or.add_argument("--box", help="lo:hi[,lo:hi...] per program variable")
    p_or.add_argument("--from", dest="start", help="comma list var=value")

    p_at = sub.add_parser("atoms", help="print guard cells and exit region")
    p_at.add_argument("file")

    p_wp = sub.add_parser("wp", help="one symbolic transformer step")
    p_wp.add_argument("file")
    p_wp.add_argument("--expect", required=True)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        with open(args.file, "r", encoding="utf-8") as handle:
            text = handle.read()
        program = parse_program(text, filename=args.file)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.cmd == "analyze":
            return _cmd_analyze(program, args)
        if args.cmd == "oracle":
            return _cmd_oracle(program, args)
        if args.cmd == "atoms":
            return _cmd_atoms(program)
        if args.cmd == "wp":
            return _cmd_wp(program, args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PrexpectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


# -- analyze ----------------------------------------------------------------


def _cmd_analyze(program, args) -> int:
    opts = IterationOptions(
        eps=args.eps, max_iter=args.max_iter, divergence_bound=args.div_bound
    )
    alpha = None
    if args.alpha:
        alpha = parse_pwexpr(
            args.alpha, set(program.variables) | set(program.consts)
        )
    report = analyze(program, opts, alpha=alpha)
    if args.format == "table":
        _print_table(report)
    elif args.format == "csv":
        _print_csv(report)
    else:
        print(json.dumps(_report_json(report), indent=2))
    if report.error is not None:
        print(f"error: {report.error}", file=sys.stderr)
        return 1
    if report.trace.status is IterationStatus.DIVERGED:
        print(f"warning: {DIVERGENCE_CAVEAT}", file=sys.stderr)
        return 1
    return 0


def _row_floats(report: AnalysisReport, element) -> list[float]:
    """Region-major coefficients, variable order then constant last."""
    out: list[float] = []
    for row in element.rows:
        out.extend(float(c) for c in row[1:])
        out.append(float(row[0]))
    return out


def _header_cells(report: AnalysisReport) -> list[str]:
    cells = []
    for label in report.region_labels:
        short = label if len(label) <= 18 else label[:15] + "..."
        for v in report.dims:
            cells.append(f"{short}:{v}")
        cells.append(f"{short}:const")
    return cells


def _print_table(report: AnalysisReport) -> None:
    if report.trace is None:
        print("analysis aborted before the first iterate")
        return
    print("iter  " + "  ".join(_header_cells(report)))
    for index, element in report.trace.rows:
        cells = [f"{value:.10g}" for value in _row_floats(report, element)]
        print(f"{index:>4}  " + "  ".join(cells))
    print(f"status: {report.trace.status.value}   residual: {report.trace.residual:.3e}")
    print(f"exact: {_exact_text(report.exact)}")
    if report.init_value is not None:
        print(f"initial-state value: {print_pwexpr(report.init_value)}")
    if report.alpha_certified is not None:
        print(f"claimed pre-expectation certified: {report.alpha_certified}")
    timings = ", ".join(f"{k}={v:.1f}ms" for k, v in report.timings_ms.items())
    print(f"timings: {timings}")


def _exact_text(exact: Exactness) -> str:
    if exact is Exactness.EXACT:
        return "exact (certified pre-fixed point)"
    if exact is Exactness.LOWER_BOUND_ONLY:
        return "lower bound only (inexact or unsnappable)"
    return "unknown"


def _print_csv(report: AnalysisReport) -> None:
    if report.trace is None:
        return
    header = ["iter"] + _header_cells(report)
    print(",".join(header))
    for index, element in report.trace.rows:
        cells = [repr(value) for value in _row_floats(report, element)]
        print(",".join([str(index)] + cells))


def _report_json(report: AnalysisReport) -> dict:
    data: dict = {
        "dims": list(report.dims),
        "regions": list(report.region_labels),
        "status": None if report.trace is None else report.trace.status.value,
        "residual": None if report.trace is None else report.trace.residual,
        "exact": report.exact.value,
        "error": report.error,
        "timings_ms": report.timings_ms,
        "iterations": [],
    }
    if report.trace is not None:
        for index, element in report.trace.rows:
            data["iterations"].append(
                {"iter": index, "coefficients": _row_floats(report, element)}
            )
    if report.snapped is not None:
        data["snapped"] = [
            [str(c) for c in row] for row in report.snapped.rows
        ]
    if report.init_value is not None:
        data["init_value"] = print_pwexpr(report.init_value)
    if report.alpha_certified is not None:
        data["alpha_certified"] = report.alpha_certified
    return data


# -- oracle ------------------------------------------------------------------


def _cmd_oracle(program, args) -> int:
    starts = []
    if args.start:
        state: dict[str, Fraction] = {c: Fraction(0) for c in program.consts}
        for item in args.start.split(","):
            name, _, raw = item.partition("=")
            name = name.strip()
            if name not in program.variables and name not in program.consts:
                print(f"error: unknown variable {name!r} in --from", file=sys.stderr)
                return 2
            state[name] = Fraction(raw.strip())
        missing = [v for v in program.variables if v not in state]
        if missing:
            print(f"error: --from misses variables {missing}", file=sys.stderr)
            return 2
        starts.append(state)
    else:
        if program.init is None:
            print("error: program has no init; pass --from", file=sys.stderr)
            return 2
        state = {c: Fraction(0) for c in program.consts}
        exprs = dict(program.init.updates)
        missing = [v for v in program.variables if v not in exprs]
        if missing:
            print(f"error: init misses variables {missing}; pass --from", file=sys.stderr)
            return 2
        for name, expr in exprs.items():
            if expr.variables() - set(program.consts):
                print("error: init is not constant; pass --from", file=sys.stderr)
                return 2
            if expr.variables():
                print(
                    "error: init uses symbolic constants; pass --from with values",
                    file=sys.stderr,
                )
                return 2
            state[name] = expr.const
        starts.append(state)

    if args.box:
        bounds = []
        for part in args.box.split(","):
            lo, _, hi = part.partition(":")
            bounds.append((int(lo), int(hi)))
        if len(bounds) != len(program.variables):
            print("error: --box needs one lo:hi per program variable", file=sys.stderr)
            return 2
        box = dict(zip(program.variables, bounds))
    else:
        box = {v: (-(10**6), 10**6) for v in program.variables}

    results = value_iteration(program, args.horizon, box, starts)
    order = program.variables + program.consts
    for key, value in results.items():
        named = ", ".join(f"{v}={k}" for v, k in zip(order, key))
        print(f"[{named}]  {value}  (~{float(value):.12g})")
    return 0


# -- atoms and wp -------------------------------------------------------------


def _cmd_atoms(program) -> int:
    np = normalize(program)
    for k, cell in enumerate(np.cells):
        enabled = ",".join(str(i) for i in sorted(cell.enabled))
        print(f"cell {k} (commands {enabled}): {print_region(cell.region)}")
    print(f"exit: {print_region(np.exit_region)}")
    return 0


def _cmd_wp(program, args) -> int:
    pw = parse_pwexpr(args.expect, set(program.variables) | set(program.consts))
    np = normalize(program)
    result = wp_step(np, pw)
    for piece in result.pieces:
        print(f"[{print_region(piece.region)}] * ({piece.value})")
    if not result.pieces:
        print("0")
    return 0


if __name__ == "__main__":
    sys.exit(main())
