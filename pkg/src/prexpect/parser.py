"""Text format for guarded-command programs.

    vars x, i;
    consts C;                 # optional symbolic constants
    init x = 1, i = 0;        # optional deterministic initialization
    command x != 0 -> {x' = 0, i' = i + 1} @ 1/2
                    | {x' = 1, i' = i + 1} @ 1/2;
    post i;
    regions x = 0 && i >= 0; x != 0 && i >= 0;   # optional template regions

Probabilities and coefficients are exact rationals; decimal literals are
read exactly (0.5 is 1/2). `#` starts a line comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParseError
from .expectations import Piece, PiecewiseExpr
from .guards import And, Atom, GuardExpr, Not, Or, guard_to_region
from .linear import Assignment, LinExpr, MinExpr
from .polyhedra import Region, regions_disjoint
from .program import GuardedCommand, ProbBranch, Program

KEYWORDS = {"vars", "consts", "init", "command", "post", "regions", "min"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|\|\||&&|<=|>=|!=|==|[<>=!+\-*/@'{}()\[\],;|])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class Token:
    kind: str  # number | ident | keyword | op | eof
    text: str
    span: SourceSpan


def tokenize(text: str, filename: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {text[pos]!r}",
                SourceSpan(filename, line, col, 1),
            )
        lexeme = m.group(0)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            if kind == "ident" and lexeme in KEYWORDS:
                kind = "keyword"
            tokens.append(
                Token(kind, lexeme, SourceSpan(filename, line, col, len(lexeme)))
            )
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(filename, line, col, 1)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token], declared: set[str] | None = None):
        self.tokens = tokens
        self.pos = 0
        self.declared = declared  # None disables the undeclared-variable check

    # -- token plumbing --------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def accept(self, text: str) -> Token | None:
        if self.peek().text == text and self.peek().kind in ("op", "keyword"):
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        tok = self.advance()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.span)
        return tok

    def expect_ident(self) -> Token:
        tok = self.advance()
        if tok.kind != "ident":
            raise ParseError(f"expected identifier, found {tok.text!r}", tok.span)
        return tok

    def fail(self, message: str) -> ParseError:
        return ParseError(message, self.peek().span)

    # -- numbers and linear expressions ----------------------------------

    def parse_rational(self) -> Fraction:
        tok = self.advance()
        if tok.kind != "number":
            raise ParseError(f"expected a number, found {tok.text!r}", tok.span)
        value = Fraction(tok.text)
        if self.accept("/"):
            den = self.advance()
            if den.kind != "number":
                raise ParseError("expected a denominator", den.span)
            value /= Fraction(den.text)
        return value

    def parse_linexpr(self) -> LinExpr:
        expr = self._term()
        while True:
            nxt = self.peek()
            if nxt.text in ("+", "-") and self.peek(1).text not in ("[", "min"):
                self.advance()
                rhs = self._term()
                expr = expr + rhs if nxt.text == "+" else expr - rhs
            else:
                return expr

    def _term(self) -> LinExpr:
        expr = self._unary()
        while self.peek().text in ("*", "/"):
            op = self.advance()
            rhs = self._unary()
            if op.text == "*":
                if rhs.is_constant():
                    expr = expr.scale(rhs.const)
                elif expr.is_constant():
                    expr = rhs.scale(expr.const)
                else:
                    raise ParseError("product of two non-constant expressions", op.span)
            else:
                if not rhs.is_constant() or rhs.const == 0:
                    raise ParseError("division needs a nonzero constant divisor", op.span)
                expr = expr.scale(Fraction(1) / rhs.const)
        return expr

    def _unary(self) -> LinExpr:
        if self.accept("-"):
            return -self._unary()
        tok = self.advance()
        if tok.kind == "number":
            return LinExpr.constant(Fraction(tok.text))
        if tok.kind == "ident":
            if self.declared is not None and tok.text not in self.declared:
                raise ParseError(f"undeclared variable {tok.text!r}", tok.span)
            return LinExpr.var(tok.text)
        if tok.text == "(":
            inner = self.parse_linexpr()
            self.expect(")")
            return inner
        raise ParseError(f"expected an expression, found {tok.text!r}", tok.span)

    # -- predicates -------------------------------------------------------

    def parse_pred(self) -> GuardExpr:
        parts = [self._pred_and()]
        while self.accept("||"):
            parts.append(self._pred_and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def _pred_and(self) -> GuardExpr:
        parts = [self._pred_unary()]
        while self.accept("&&"):
            parts.append(self._pred_unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def _pred_unary(self) -> GuardExpr:
        if self.accept("!"):
            return Not(self._pred_unary())
        if self.peek().text == "(":
            saved = self.pos
            try:
                return self._comparison()
            except ParseError:
                self.pos = saved
            self.expect("(")
            inner = self.parse_pred()
            self.expect(")")
            return inner
        return self._comparison()

    def _comparison(self) -> GuardExpr:
        lhs = self.parse_linexpr()
        chain: list[GuardExpr] = []
        while True:
            tok = self.peek()
            rel = {"<": "<", "<=": "<=", "=": "=", "==": "=", "!=": "!=",
                   ">": ">", ">=": ">="}.get(tok.text)
            if rel is None:
                break
            self.advance()
            rhs = self.parse_linexpr()
            chain.append(Atom(lhs - rhs, rel))
            lhs = rhs
        if not chain:
            raise ParseError(f"expected a comparison, found {self.peek().text!r}",
                             self.peek().span)
        return chain[0] if len(chain) == 1 else And(tuple(chain))

    # -- piecewise expressions ---------------------------------------------

    def parse_minexpr(self) -> MinExpr:
        if self.accept("min"):
            self.expect("(")
            exprs = [self.parse_linexpr()]
            while self.accept(","):
                exprs.append(self.parse_linexpr())
            self.expect(")")
            return MinExpr(tuple(exprs))
        return MinExpr.of(self.parse_linexpr())

    def parse_pwexpr(self) -> PiecewiseExpr:
        pieces: list[tuple[Region, MinExpr, SourceSpan]] = []
        while True:
            span = self.peek().span
            if self.accept("["):
                pred = self.parse_pred()
                self.expect("]")
                self.expect("*")
                value = self.parse_minexpr()
                region = guard_to_region(pred)
                if region.is_empty():
                    raise ParseError("piece region is empty", span)
                pieces.append((region, value, span))
            else:
                pieces.append((Region.whole_space(), self.parse_minexpr(), span))
            if not self.accept("+"):
                break
        for i in range(len(pieces)):
            for j in range(i + 1, len(pieces)):
                if not regions_disjoint(pieces[i][0], pieces[j][0]):
                    raise ParseError("piece regions overlap", pieces[j][2])
        return PiecewiseExpr.make((r, v) for r, v, _ in pieces)


def parse_linexpr(text: str) -> LinExpr:
    parser = _Parser(tokenize(text))
    expr = parser.parse_linexpr()
    parser.expect("")
    return expr


def parse_pwexpr(text: str, declared: set[str] | None = None) -> PiecewiseExpr:
    parser = _Parser(tokenize(text), declared)
    pw = parser.parse_pwexpr()
    if parser.peek().kind != "eof":
        raise ParseError(
            f"unexpected trailing input {parser.peek().text!r}", parser.peek().span
        )
    return pw


def parse_pred(text: str, declared: set[str] | None = None) -> GuardExpr:
    parser = _Parser(tokenize(text), declared)
    pred = parser.parse_pred()
    if parser.peek().kind != "eof":
        raise ParseError(
            f"unexpected trailing input {parser.peek().text!r}", parser.peek().span
        )
    return pred


def parse_program(text: str, filename: str = "<input>") -> Program:
    tokens = tokenize(text, filename)
    parser = _Parser(tokens)

    parser.expect("vars")
    variables = [parser.expect_ident().text]
    while parser.accept(","):
        variables.append(parser.expect_ident().text)
    parser.expect(";")

    consts: list[str] = []
    if parser.accept("consts"):
        while parser.peek().kind == "ident":
            consts.append(parser.advance().text)
            parser.accept(",")
        parser.expect(";")

    seen: set[str] = set()
    for name in variables + consts:
        if name in seen:
            raise ParseError(f"duplicate declaration of {name!r}",
                             tokens[0].span)
        seen.add(name)
    parser.declared = seen

    init = None
    if parser.accept("init"):
        updates: dict[str, LinExpr] = {}
        while True:
            target = parser.expect_ident()
            if target.text not in variables:
                raise ParseError(
                    f"cannot initialize {target.text!r}: not a program variable",
                    target.span,
                )
            parser.expect("=")
            updates[target.text] = parser.parse_linexpr()
            if not parser.accept(","):
                break
        parser.expect(";")
        init = Assignment.make(updates)

    commands: list[GuardedCommand] = []
    while parser.peek().text == "command":
        parser.advance()
        guard = parser.parse_pred()
        parser.expect("->")
        branches: list[ProbBranch] = []
        while True:
            brace = parser.expect("{")
            updates = {}
            while True:
                target = parser.expect_ident()
                if target.text not in variables:
                    raise ParseError(
                        f"cannot assign to {target.text!r}: not a program variable",
                        target.span,
                    )
                parser.expect("'")
                parser.expect("=")
                updates[target.text] = parser.parse_linexpr()
                if not parser.accept(","):
                    break
            parser.expect("}")
            parser.expect("@")
            prob = parser.parse_rational()
            if not 0 < prob <= 1:
                raise ParseError(f"branch probability {prob} not in (0, 1]", brace.span)
            branches.append(ProbBranch(prob, Assignment.make(updates)))
            if not parser.accept("|"):
                break
        total = sum(b.probability for b in branches)
        if total > 1:
            raise ParseError(f"branch probabilities sum to {total} > 1", brace.span)
        commands.append(GuardedCommand(guard, tuple(branches)))
        parser.expect(";")

    if not parser.accept("post"):
        raise ParseError(
            f"expected 'post', found {parser.peek().text!r}", parser.peek().span
        )
    post = parser.parse_pwexpr()
    parser.expect(";")

    regions = None
    labels = None
    if parser.accept("regions"):
        region_list: list[Region] = []
        label_list: list[str] = []
        while True:
            start = parser.peek().span
            pred = parser.parse_pred()
            end = parser.peek().span
            region = guard_to_region(pred)
            if region.is_empty():
                raise ParseError("region predicate is unsatisfiable", start)
            region_list.append(region)
            label_list.append(_slice_label(text, start, end))
            if not parser.accept(";"):
                raise ParseError("expected ';' after region", parser.peek().span)
            if parser.peek().kind == "eof":
                break
        for i in range(len(region_list)):
            for j in range(i + 1, len(region_list)):
                if not regions_disjoint(region_list[i], region_list[j]):
                    raise ParseError(
                        f"regions {i + 1} and {j + 1} overlap", tokens[0].span
                    )
        regions = tuple(region_list)
        labels = tuple(label_list)

    if parser.peek().kind != "eof":
        raise ParseError(
            f"unexpected trailing input {parser.peek().text!r}", parser.peek().span
        )

    return Program(
        variables=tuple(variables),
        consts=tuple(consts),
        init=init,
        commands=tuple(commands),
        post=post,
        regions=regions,
        region_labels=labels,
    )


def _slice_label(text: str, start: SourceSpan, end: SourceSpan) -> str:
    lines = text.splitlines()
    if start.line == end.line:
        segment = lines[start.line - 1][start.column - 1 : end.column - 1]
    else:
        parts = [lines[start.line - 1][start.column - 1 :]]
        parts.extend(lines[start.line : end.line - 1])
        parts.append(lines[end.line - 1][: end.column - 1])
        segment = " ".join(parts)
    return " ".join(segment.split())


# -- pretty printing ------------------------------------------------------


def print_guard(guard: GuardExpr) -> str:
    if isinstance(guard, Atom):
        return f"{guard.expr} {'=' if guard.rel == '=' else guard.rel} 0"
    if isinstance(guard, Not):
        return f"!({print_guard(guard.child)})"
    if isinstance(guard, And):
        return " && ".join(
            f"({print_guard(c)})" if isinstance(c, Or) else print_guard(c)
            for c in guard.children
        )
    if isinstance(guard, Or):
        return " || ".join(print_guard(c) for c in guard.children)
    raise TypeError(f"not a guard: {guard!r}")


def print_region(region: Region) -> str:
    return " || ".join(
        "(" + (" && ".join(f"{c.expr} <= 0" for c in poly.constraints) or "0 <= 0") + ")"
        for poly in region.polyhedra
    )


def print_pwexpr(pw: PiecewiseExpr) -> str:
    parts = []
    for piece in pw.pieces:
        value = str(piece.value) if len(piece.value.exprs) > 1 else f"({piece.value})"
        if piece.region == Region.whole_space():
            parts.append(value)
        else:
            parts.append(f"[{print_region(piece.region)}] * {value}")
    return " + ".join(parts) if parts else "0"


def print_program(program: Program) -> str:
    lines = [f"vars {', '.join(program.variables)};"]
    if program.consts:
        lines.append(f"consts {' '.join(program.consts)};")
    if program.init is not None:
        inits = ", ".join(f"{v} = {e}" for v, e in program.init.updates)
        lines.append(f"init {inits};")
    for cmd in program.commands:
        branches = " | ".join(
            "{" + ", ".join(f"{v}' = {e}" for v, e in b.assignment.updates) + "}"
            + f" @ {b.probability}"
            for b in cmd.branches
        )
        lines.append(f"command {print_guard(cmd.guard)} -> {branches};")
    lines.append(f"post {print_pwexpr(program.post)};")
    if program.regions is not None:
        if program.region_labels is not None:
            rendered = list(program.region_labels)
        else:
            rendered = [print_region(r) for r in program.regions]
        lines.append("regions " + "; ".join(rendered) + ";")
    return "\n".join(lines) + "\n"
