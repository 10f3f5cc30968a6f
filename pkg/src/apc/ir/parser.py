"""Line-oriented text format for flowgraph programs.

    # comment
    var k, i, n : int
    array A : int[1]
    array W : int[1] = [72, 101, 108, 108, 111]
    node a start
    node h target
    node g
    edge a -> b : k := 0
    edge c -> d : assume i < n

Expressions use + - * / % with the usual precedence (/ and % are Euclidean
division and remainder, matching the solver's semantics); conditions use
== != < <= > >= combined with ! && || and the constants true/false.
Multi-dimensional arrays are read as A[e1, e2].
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .exprs import (
    And,
    ArrayRead,
    BinOp,
    BoolLit,
    Cmp,
    Expr,
    Formula,
    Implies,
    IntLit,
    Not,
    Or,
    Var,
)
from .flowgraph import Assign, Assume, ConstArray, Flowgraph, SemanticError, validate


class ParseError(Exception):
    def __init__(self, line: int, col: int, msg: str):
        super().__init__(f"line {line}, col {col}: {msg}")
        self.line = line
        self.col = col
        self.msg = msg


_KEYWORDS = {
    "var", "array", "node", "edge", "int", "start", "target",
    "assume", "true", "false", "not", "and", "or", "div", "mod",
}

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
# kappaN / tauN are claimed by the analysis for counter output
_RESERVED_NAME_RE = re.compile(r"^(kappa|tau)[0-9]+$")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>[0-9]+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>:=|==|!=|<=|>=|&&|\|\||->|[-+*/%!<>=()\[\],:]))"
)


@dataclass
class _Tok:
    kind: str  # num | name | op | end
    text: str
    col: int


class _Scanner:
    def __init__(self, text: str, line: int, offset: int = 0):
        self.toks: list[_Tok] = []
        self.line = line
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                stripped = text[pos:].lstrip()
                if not stripped:
                    break
                ws = len(text[pos:]) - len(stripped)
                raise ParseError(line, offset + pos + ws + 1,
                                 f"unexpected character {stripped[0]!r}")
            kind = m.lastgroup or "op"
            self.toks.append(_Tok(kind, m.group(kind), offset + m.start(kind) + 1))
            pos = m.end()
        self.toks.append(_Tok("end", "", offset + len(text) + 1))
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        if t.kind != "end":
            self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text:
            got = repr(t.text) if t.kind != "end" else "end of line"
            raise ParseError(self.line, t.col, f"expected {text!r}, got {got}")
        return t

    def error(self, msg: str) -> ParseError:
        t = self.peek()
        return ParseError(self.line, t.col, msg)


# expression / condition grammar (recursive descent) -------------------------
#
#   cond     := or_f ('->' cond)?          (right-assoc implication)
#   or_f     := and_f ('||' and_f)*
#   and_f    := not_f ('&&' not_f)*
#   not_f    := ('!' | 'not') not_f | 'true' | 'false' | cmp | '(' cond ')'
#   cmp      := expr (==|!=|<|<=|>|>=) expr
#   expr     := term (('+'|'-') term)*
#   term     := unary (('*'|'/'|'%'|'div'|'mod') unary)*
#   unary    := '-' unary | atom
#   atom     := NUM | NAME ('[' expr (',' expr)* ']')? | '(' expr ')'


def _parse_cond(s: _Scanner) -> Formula:
    lhs = _parse_or(s)
    if s.peek().text == "->":
        s.next()
        return Implies(lhs, _parse_cond(s))
    return lhs


def _parse_or(s: _Scanner) -> Formula:
    f = _parse_and(s)
    parts = [f]
    while s.peek().text in ("||", "or"):
        s.next()
        parts.append(_parse_and(s))
    return Or(tuple(parts)) if len(parts) > 1 else f


def _parse_and(s: _Scanner) -> Formula:
    f = _parse_not(s)
    parts = [f]
    while s.peek().text in ("&&", "and"):
        s.next()
        parts.append(_parse_not(s))
    return And(tuple(parts)) if len(parts) > 1 else f


def _parse_not(s: _Scanner) -> Formula:
    t = s.peek()
    if t.text in ("!", "not"):
        s.next()
        return Not(_parse_not(s))
    if t.text == "true" and t.kind == "name":
        s.next()
        return BoolLit(True)
    if t.text == "false" and t.kind == "name":
        s.next()
        return BoolLit(False)
    if t.text == "(":
        # could be a parenthesized condition or a parenthesized arithmetic
        # expression starting a comparison; try condition first, fall back
        save = s.i
        try:
            s.next()
            inner = _parse_cond(s)
            s.expect(")")
            if s.peek().text in ("==", "!=", "<", "<=", ">", ">="):
                raise ParseError(s.line, s.peek().col, "comparison of conditions")
            return inner
        except ParseError:
            s.i = save
    return _parse_cmp(s)


def _parse_cmp(s: _Scanner) -> Formula:
    lhs = _parse_expr(s)
    t = s.peek()
    if t.text not in ("==", "!=", "<", "<=", ">", ">="):
        raise s.error("expected a comparison operator")
    s.next()
    rhs = _parse_expr(s)
    return Cmp(t.text, lhs, rhs)


def _parse_expr(s: _Scanner) -> Expr:
    e = _parse_term(s)
    while s.peek().text in ("+", "-"):
        op = s.next().text
        e = BinOp(op, e, _parse_term(s))
    return e


def _parse_term(s: _Scanner) -> Expr:
    e = _parse_unary(s)
    while s.peek().text in ("*", "/", "%", "div", "mod"):
        op = s.next().text
        op = {"/": "div", "%": "mod"}.get(op, op)
        e = BinOp(op, e, _parse_unary(s))
    return e


def _parse_unary(s: _Scanner) -> Expr:
    if s.peek().text == "-":
        s.next()
        inner = _parse_unary(s)
        if isinstance(inner, IntLit):
            return IntLit(-inner.value)
        return BinOp("-", IntLit(0), inner)
    return _parse_atom(s)


def _parse_atom(s: _Scanner) -> Expr:
    t = s.next()
    if t.kind == "num":
        return IntLit(int(t.text))
    if t.kind == "name":
        if t.text in _KEYWORDS:
            raise ParseError(s.line, t.col, f"keyword {t.text!r} used as a name")
        if s.peek().text == "[":
            s.next()
            args = [_parse_expr(s)]
            while s.peek().text == ",":
                s.next()
                args.append(_parse_expr(s))
            s.expect("]")
            return ArrayRead(t.text, tuple(args))
        return Var(t.text)
    if t.text == "(":
        e = _parse_expr(s)
        s.expect(")")
        return e
    got = repr(t.text) if t.kind != "end" else "end of line"
    raise ParseError(s.line, t.col, f"expected an expression, got {got}")


def parse_condition(text: str, line: int = 1, offset: int = 0) -> Formula:
    """Parse a standalone condition (used for frontier files too)."""
    s = _Scanner(text, line, offset)
    f = _parse_cond(s)
    if s.peek().kind != "end":
        raise s.error(f"trailing input {s.peek().text!r}")
    return f


def _check_name(tok: _Tok, line: int) -> str:
    if tok.kind != "name":
        raise ParseError(line, tok.col, f"expected a name, got {tok.text!r}")
    if tok.text in _KEYWORDS:
        raise ParseError(line, tok.col, f"keyword {tok.text!r} used as a name")
    if _RESERVED_NAME_RE.match(tok.text):
        raise ParseError(line, tok.col, f"name {tok.text!r} is reserved for counters")
    return tok.text


def parse_program(text: str) -> Flowgraph:
    """Parse and validate a program; raises ParseError / SemanticError."""
    scalars: list[str] = []
    arrays: dict[str, int] = {}
    const_arrays: dict[str, ConstArray] = {}
    nodes: set[str] = set()
    start: str | None = None
    target: str | None = None
    label: dict[tuple[str, str], object] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        s = _Scanner(line, lineno)

        def check_end() -> None:
            if s.peek().kind != "end":
                raise s.error(f"trailing input {s.peek().text!r}")

        head = s.next()
        if head.text == "var":
            names = [_check_name(s.next(), lineno)]
            while s.peek().text == ",":
                s.next()
                names.append(_check_name(s.next(), lineno))
            s.expect(":")
            s.expect("int")
            check_end()
            scalars.extend(names)
        elif head.text == "array":
            name = _check_name(s.next(), lineno)
            s.expect(":")
            s.expect("int")
            s.expect("[")
            dim_tok = s.next()
            if dim_tok.kind != "num" or int(dim_tok.text) < 1:
                raise ParseError(lineno, dim_tok.col, "array dimension must be a positive integer")
            dim = int(dim_tok.text)
            s.expect("]")
            arrays[name] = dim
            if s.peek().text == "=":
                s.next()
                if dim != 1:
                    raise ParseError(lineno, s.peek().col,
                                     "fixed contents only supported for 1-dimensional arrays")
                s.expect("[")
                values: list[int] = []
                while True:
                    t = s.next()
                    neg = False
                    if t.text == "-":
                        neg = True
                        t = s.next()
                    if t.kind != "num":
                        raise ParseError(lineno, t.col, "expected an integer literal")
                    values.append(-int(t.text) if neg else int(t.text))
                    t = s.next()
                    if t.text == "]":
                        break
                    if t.text != ",":
                        raise ParseError(lineno, t.col, f"expected ',' or ']', got {t.text!r}")
                const_arrays[name] = ConstArray(
                    tuple(((i,), v) for i, v in enumerate(values))
                )
            check_end()
        elif head.text == "node":
            name = _check_name(s.next(), lineno)
            nodes.add(name)
            role = s.peek()
            if role.text in ("start", "target"):
                s.next()
                if role.text == "start":
                    if start is not None:
                        raise ParseError(lineno, role.col, "start node declared twice")
                    start = name
                else:
                    if target is not None:
                        raise ParseError(lineno, role.col, "target node declared twice")
                    target = name
            check_end()
        elif head.text == "edge":
            u = _check_name(s.next(), lineno)
            s.expect("->")
            v = _check_name(s.next(), lineno)
            s.expect(":")
            nodes.update((u, v))
            if (u, v) in label:
                raise ParseError(lineno, head.col, f"duplicate edge {u} -> {v}")
            if s.peek().text == "assume":
                s.next()
                cond = _parse_cond(s)
                if s.peek().kind != "end":
                    raise s.error(f"trailing input {s.peek().text!r}")
                label[(u, v)] = Assume(cond)
            else:
                tgt = s.next()
                if tgt.kind != "name":
                    raise ParseError(lineno, tgt.col, "expected 'assume' or an assignment")
                if s.peek().text == "[":
                    raise SemanticError(
                        f"line {lineno}: arrays are read-only, cannot assign '{tgt.text}[...]'"
                    )
                if tgt.text in _KEYWORDS:
                    raise ParseError(lineno, tgt.col, f"keyword {tgt.text!r} used as a name")
                s.expect(":=")
                rhs = _parse_expr(s)
                if s.peek().kind != "end":
                    raise s.error(f"trailing input {s.peek().text!r}")
                label[(u, v)] = Assign(tgt.text, rhs)
        else:
            raise ParseError(lineno, head.col,
                             f"expected var/array/node/edge, got {head.text!r}")

    if start is None:
        raise SemanticError("no start node declared")
    if target is None:
        raise SemanticError("no target node declared")

    fg = Flowgraph(
        scalars=tuple(scalars),
        arrays=arrays,
        nodes=frozenset(nodes),
        start=start,
        target=target,
        label=dict(label),  # type: ignore[arg-type]
        const_arrays=const_arrays,
    )
    validate(fg)
    return fg
