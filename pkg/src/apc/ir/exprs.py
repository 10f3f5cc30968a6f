"""Term and formula algebra shared by the analyzer.

Two families of leaves coexist in one AST:

* program-side leaves (`Var`, `ArrayRead`) appear in parsed instructions and
  are eliminated the moment a symbolic state is applied;
* symbolic leaves (`Sym`, `ArrayApp`, `Counter`, `FreeConst`, `Star`) appear
  in everything the analysis produces.

All nodes are immutable and compare structurally.  `normalize` rewrites any
integer term into the canonical linear form  c0 + c1*t1 + ... + cn*tn  with
atoms ordered by `sort_key`, which is what makes "is this value exactly
entry + constant * iterations?" a decidable syntactic check.

`Star` is the unknown constant: any arithmetic operator applied to it yields
`Star` again, while comparisons and array applications merely contain it (and
are then treated as tainted by the callers that must drop them).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Union

# ---------------------------------------------------------------------------
# nodes


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class Var:
    """Program variable occurrence (only inside parsed instructions)."""

    name: str


@dataclass(frozen=True)
class ArrayRead:
    """Program array read A[e1, ..., ek] (only inside parsed instructions)."""

    name: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Sym:
    """Input symbol: the value of a scalar variable on entry."""

    name: str


@dataclass(frozen=True)
class ArrayApp:
    """Application of the function symbol standing for an input array."""

    name: str
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Counter:
    """Path counter.  ``step=False`` counts iterations of one backbone of a
    loop; the paired ``step=True`` counter with the same index ranges over
    individual iterations inside quantifiers."""

    idx: int
    step: bool = False

    @property
    def name(self) -> str:
        return ("tau" if self.step else "kappa") + str(self.idx)


@dataclass(frozen=True)
class FreeConst:
    """Uninterpreted integer constant minted when an existential counter is
    freed by the bounded quantifier-elimination step."""

    name: str


@dataclass(frozen=True)
class Star:
    """The unknown value."""


STAR = Star()

_BIN_OPS = ("+", "-", "*", "div", "mod")


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: "Expr"
    rhs: "Expr"


Expr = Union[IntLit, Var, ArrayRead, Sym, ArrayApp, Counter, FreeConst, Star, BinOp]


@dataclass(frozen=True)
class BoolLit:
    value: bool


TRUE = BoolLit(True)
FALSE = BoolLit(False)

_CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Cmp:
    op: str
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Forall:
    vars: tuple[Counter, ...]
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    vars: tuple[Counter, ...]
    body: "Formula"


Formula = Union[BoolLit, Cmp, Not, And, Or, Implies, Forall, Exists]

Node = Union[Expr, Formula]


# ---------------------------------------------------------------------------
# integer division (Euclidean, as in SMT-LIB: remainder is always >= 0)


def ediv(a: int, b: int) -> int | None:
    if b == 0:
        return None
    if b > 0:
        return a // b
    return -(a // -b)


def emod(a: int, b: int) -> int | None:
    q = ediv(a, b)
    if q is None:
        return None
    return a - b * q


# ---------------------------------------------------------------------------
# smart constructors


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Star) or isinstance(b, Star):
        return STAR
    if isinstance(a, IntLit) and isinstance(b, IntLit):
        return IntLit(a.value + b.value)
    if isinstance(a, IntLit) and a.value == 0:
        return b
    if isinstance(b, IntLit) and b.value == 0:
        return a
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Star) or isinstance(b, Star):
        return STAR
    if isinstance(a, IntLit) and isinstance(b, IntLit):
        return IntLit(a.value - b.value)
    if isinstance(b, IntLit) and b.value == 0:
        return a
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Star) or isinstance(b, Star):
        return STAR
    if isinstance(a, IntLit) and isinstance(b, IntLit):
        return IntLit(a.value * b.value)
    if isinstance(a, IntLit) and a.value == 1:
        return b
    if isinstance(b, IntLit) and b.value == 1:
        return a
    return BinOp("*", a, b)


def idiv(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Star) or isinstance(b, Star):
        return STAR
    if isinstance(a, IntLit) and isinstance(b, IntLit):
        q = ediv(a.value, b.value)
        if q is not None:
            return IntLit(q)
    return BinOp("div", a, b)


def imod(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Star) or isinstance(b, Star):
        return STAR
    if isinstance(a, IntLit) and isinstance(b, IntLit):
        r = emod(a.value, b.value)
        if r is not None:
            return IntLit(r)
    return BinOp("mod", a, b)


def and_(*parts: Formula) -> Formula:
    out: list[Formula] = []
    for p in parts:
        if isinstance(p, And):
            items: tuple[Formula, ...] = p.args
        else:
            items = (p,)
        for q in items:
            if q == TRUE:
                continue
            if q == FALSE:
                return FALSE
            if q not in out:
                out.append(q)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def or_(*parts: Formula) -> Formula:
    out: list[Formula] = []
    for p in parts:
        if isinstance(p, Or):
            items: tuple[Formula, ...] = p.args
        else:
            items = (p,)
        for q in items:
            if q == FALSE:
                continue
            if q == TRUE:
                return TRUE
            if q not in out:
                out.append(q)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


_COMPLEMENT = {"==": "!=", "!=": "==", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}


def not_(f: Formula) -> Formula:
    if isinstance(f, BoolLit):
        return BoolLit(not f.value)
    if isinstance(f, Not):
        return f.body
    if isinstance(f, Cmp):
        return Cmp(_COMPLEMENT[f.op], f.lhs, f.rhs)
    if isinstance(f, And):
        return or_(*(not_(a) for a in f.args))
    if isinstance(f, Or):
        return and_(*(not_(a) for a in f.args))
    return Not(f)


def implies_(a: Formula, b: Formula) -> Formula:
    if a == FALSE or b == TRUE:
        return TRUE
    if a == TRUE:
        return b
    if b == FALSE:
        return not_(a)
    return Implies(a, b)


def forall(vars: tuple[Counter, ...], body: Formula) -> Formula:
    if not vars:
        return body
    if body == TRUE:
        return TRUE
    return Forall(vars, body)


def exists(vars: tuple[Counter, ...], body: Formula) -> Formula:
    if not vars:
        return body
    if body == FALSE:
        return FALSE
    return Exists(vars, body)


# ---------------------------------------------------------------------------
# traversal


def children(node: Node) -> tuple[Node, ...]:
    if isinstance(node, BinOp):
        return (node.lhs, node.rhs)
    if isinstance(node, (ArrayRead, ArrayApp)):
        return node.args
    if isinstance(node, Cmp):
        return (node.lhs, node.rhs)
    if isinstance(node, Not):
        return (node.body,)
    if isinstance(node, (And, Or)):
        return node.args
    if isinstance(node, Implies):
        return (node.lhs, node.rhs)
    if isinstance(node, (Forall, Exists)):
        return (node.body,)
    return ()


def subterms(node: Node) -> Iterator[Node]:
    """All subterms, the node itself included; descends under binders."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(children(n))


def contains_star(node: Node) -> bool:
    return any(isinstance(n, Star) for n in subterms(node))


def has_quantifier(node: Node) -> bool:
    return any(isinstance(n, (Forall, Exists)) for n in subterms(node))


def node_count(node: Node) -> int:
    return sum(1 for _ in subterms(node))


def free_counters(node: Node) -> frozenset[Counter]:
    """Counters with at least one free occurrence."""

    def walk(n: Node, bound: frozenset[Counter]) -> frozenset[Counter]:
        if isinstance(n, Counter):
            return frozenset() if n in bound else frozenset((n,))
        if isinstance(n, (Forall, Exists)):
            return walk(n.body, bound | frozenset(n.vars))
        out: frozenset[Counter] = frozenset()
        for c in children(n):
            out |= walk(c, bound)
        return out

    return walk(node, frozenset())


def free_syms(node: Node) -> frozenset[str]:
    return frozenset(n.name for n in subterms(node) if isinstance(n, Sym))


def array_apps(node: Node) -> dict[str, int]:
    """Array function symbols used, mapped to their arity."""
    out: dict[str, int] = {}
    for n in subterms(node):
        if isinstance(n, ArrayApp):
            out[n.name] = len(n.args)
    return out


def free_consts(node: Node) -> frozenset[str]:
    return frozenset(n.name for n in subterms(node) if isinstance(n, FreeConst))


# ---------------------------------------------------------------------------
# deterministic ordering of terms

_KIND_RANK = {
    IntLit: 0,
    Sym: 1,
    Var: 2,
    Counter: 3,
    FreeConst: 4,
    ArrayApp: 5,
    ArrayRead: 6,
    BinOp: 7,
    Star: 8,
    BoolLit: 9,
    Cmp: 10,
    Not: 11,
    And: 12,
    Or: 13,
    Implies: 14,
    Forall: 15,
    Exists: 16,
}


def sort_key(node: Node) -> tuple:
    rank = _KIND_RANK[type(node)]
    if isinstance(node, IntLit):
        return (rank, node.value)
    if isinstance(node, (Sym, Var, FreeConst)):
        return (rank, node.name)
    if isinstance(node, Counter):
        return (rank, node.idx, node.step)
    if isinstance(node, (ArrayRead, ArrayApp)):
        return (rank, node.name) + tuple(sort_key(a) for a in node.args)
    if isinstance(node, BinOp):
        return (rank, node.op, sort_key(node.lhs), sort_key(node.rhs))
    if isinstance(node, Star):
        return (rank,)
    if isinstance(node, BoolLit):
        return (rank, node.value)
    if isinstance(node, Cmp):
        return (rank, node.op, sort_key(node.lhs), sort_key(node.rhs))
    if isinstance(node, Not):
        return (rank, sort_key(node.body))
    if isinstance(node, (And, Or)):
        return (rank,) + tuple(sort_key(a) for a in node.args)
    if isinstance(node, Implies):
        return (rank, sort_key(node.lhs), sort_key(node.rhs))
    if isinstance(node, (Forall, Exists)):
        return (rank, tuple(sort_key(v) for v in node.vars), sort_key(node.body))
    raise TypeError(f"unknown node {node!r}")


# ---------------------------------------------------------------------------
# canonical linear form


def _product_form(e: Expr) -> tuple[int, tuple[Expr, ...]] | None:
    """Decompose a product into (coefficient, sorted non-constant factors).

    Returns None when the product is star-tainted.
    """
    if isinstance(e, BinOp) and e.op == "*":
        left = _product_form(e.lhs)
        right = _product_form(e.rhs)
        if left is None or right is None:
            return None
        c = left[0] * right[0]
        factors = tuple(sorted(left[1] + right[1], key=sort_key))
        return (c, factors)
    lf = _linear_form(e)
    if lf is None:
        return None
    c0, terms = lf
    if not terms:
        return (c0, ())
    if c0 == 0 and len(terms) == 1:
        # pull the lone coefficient out so it can fold with the other factors
        ((atom, coef),) = terms.items()
        return (coef, (atom,))
    return (1, (_rebuild(c0, terms),))


def _linear_form(e: Expr) -> tuple[int, dict[Expr, int]] | None:
    """(constant, atom -> coefficient); None means the value is Star."""
    if isinstance(e, IntLit):
        return (e.value, {})
    if isinstance(e, Star):
        return None
    if isinstance(e, (Sym, Var, Counter, FreeConst)):
        return (0, {e: 1})
    if isinstance(e, (ArrayRead, ArrayApp)):
        args = tuple(normalize(a) for a in e.args)
        atom: Expr = type(e)(e.name, args)
        return (0, {atom: 1})
    if isinstance(e, BinOp):
        if e.op in ("+", "-"):
            left = _linear_form(e.lhs)
            right = _linear_form(e.rhs)
            if left is None or right is None:
                return None
            sign = 1 if e.op == "+" else -1
            const = left[0] + sign * right[0]
            terms = dict(left[1])
            for atom, c in right[1].items():
                terms[atom] = terms.get(atom, 0) + sign * c
            return (const, {a: c for a, c in terms.items() if c != 0})
        if e.op == "*":
            left = _linear_form(e.lhs)
            right = _linear_form(e.rhs)
            if left is None or right is None:
                return None
            if not left[1] or not right[1]:
                # constant times linear distributes exactly
                c, (c0, terms) = (left[0], right) if not left[1] else (right[0], left)
                return (c * c0, {a: c * k for a, k in terms.items() if c * k != 0})
            pf = _product_form(e)
            if pf is None:
                return None
            c, factors = pf
            if c == 0:
                return (0, {})
            atom = factors[0]
            for f in factors[1:]:
                atom = BinOp("*", atom, f)
            return (0, {atom: c})
        if e.op in ("div", "mod"):
            left = _linear_form(e.lhs)
            right = _linear_form(e.rhs)
            if left is None or right is None:
                return None
            if not left[1] and not right[1]:
                v = (ediv if e.op == "div" else emod)(left[0], right[0])
                if v is not None:
                    return (v, {})
            if e.op == "div" and not right[1] and right[0] == 1:
                return left
            atom = BinOp(e.op, _rebuild(*left), _rebuild(*right))
            return (0, {atom: 1})
    raise TypeError(f"not an integer term: {e!r}")


def _rebuild(const: int, terms: dict[Expr, int]) -> Expr:
    ordered = sorted(terms.items(), key=lambda kv: sort_key(kv[0]))
    if not ordered:
        return IntLit(const)
    acc: Expr | None = IntLit(const) if const != 0 else None
    for atom, c in ordered:
        if acc is None:
            acc = atom if c == 1 else BinOp("*", IntLit(c), atom)
        elif c == 1:
            acc = BinOp("+", acc, atom)
        elif c == -1:
            acc = BinOp("-", acc, atom)
        elif c < 0:
            acc = BinOp("-", acc, BinOp("*", IntLit(-c), atom))
        else:
            acc = BinOp("+", acc, BinOp("*", IntLit(c), atom))
    return acc


def normalize(e: Expr) -> Expr:
    """Canonical form: c0 + c1*t1 + ... with atoms ordered by sort_key.

    A star-tainted arithmetic term collapses to Star itself.
    """
    lf = _linear_form(e)
    if lf is None:
        return STAR
    return _rebuild(*lf)


def equal_terms(a: Expr, b: Expr) -> bool:
    return normalize(a) == normalize(b)


# ---------------------------------------------------------------------------
# formula simplification

_CMP_EVAL = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _empty_range(v: Counter, conjuncts: tuple[Formula, ...]) -> bool:
    """True when the conjuncts include bounds forcing an empty 0-based range
    for v: some upper bound v < c with c <= 0 or v <= c with c < 0."""
    for c in conjuncts:
        if isinstance(c, Cmp) and c.lhs == v and isinstance(c.rhs, IntLit):
            if c.op == "<" and c.rhs.value <= 0:
                return True
            if c.op == "<=" and c.rhs.value < 0:
                return True
    return False


def simplify(f: Formula) -> Formula:
    """Bottom-up constant folding, true/false absorption and flattening.

    Also pushes negation through comparisons and discharges quantifiers
    whose counter ranges are syntactically empty (bounds like tau < 0)."""
    if isinstance(f, BoolLit):
        return f
    if isinstance(f, Cmp):
        lhs = normalize(f.lhs)
        rhs = normalize(f.rhs)
        if isinstance(lhs, IntLit) and isinstance(rhs, IntLit):
            return BoolLit(_CMP_EVAL[f.op](lhs.value, rhs.value))
        return Cmp(f.op, lhs, rhs)
    if isinstance(f, Not):
        return not_(simplify(f.body))
    if isinstance(f, And):
        return and_(*(simplify(a) for a in f.args))
    if isinstance(f, Or):
        return or_(*(simplify(a) for a in f.args))
    if isinstance(f, Implies):
        return implies_(simplify(f.lhs), simplify(f.rhs))
    if isinstance(f, Forall):
        body = simplify(f.body)
        if body == TRUE:
            return TRUE
        if isinstance(body, Implies):
            ant = body.lhs.args if isinstance(body.lhs, And) else (body.lhs,)
            if any(_empty_range(v, ant) for v in f.vars):
                return TRUE
        return Forall(f.vars, body)
    if isinstance(f, Exists):
        body = simplify(f.body)
        if body == FALSE:
            return FALSE
        conj = body.args if isinstance(body, And) else (body,)
        if any(_empty_range(v, conj) for v in f.vars):
            return FALSE
        return Exists(f.vars, body)
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# substitution

_rename_ids = itertools.count(1_000_000)

Replaceable = Union[Sym, Counter]


def substitute(node: Node, pairs: dict[Replaceable, Expr]) -> Node:
    """Simultaneous substitution of input symbols and counters.

    Bound counters shadow the substitution; binders are renamed apart when a
    replacement would otherwise capture one of their variables.
    """

    def walk(n: Node, mapping: dict[Replaceable, Expr]) -> Node:
        if not mapping:
            return n
        if isinstance(n, (Sym, Counter)):
            return mapping.get(n, n)
        if isinstance(n, (IntLit, Var, FreeConst, Star, BoolLit)):
            return n
        if isinstance(n, (Forall, Exists)):
            active = {k: v for k, v in mapping.items() if k not in n.vars}
            if not active:
                return n
            used: frozenset[Counter] = frozenset()
            for repl in active.values():
                used |= free_counters(repl)
            vars_out: list[Counter] = []
            renames: dict[Replaceable, Expr] = {}
            for v in n.vars:
                if v in used:
                    fresh = Counter(next(_rename_ids), v.step)
                    renames[v] = fresh
                    vars_out.append(fresh)
                else:
                    vars_out.append(v)
            body = walk(n.body, renames) if renames else n.body
            return type(n)(tuple(vars_out), walk(body, active))
        if isinstance(n, BinOp):
            return BinOp(n.op, walk(n.lhs, mapping), walk(n.rhs, mapping))
        if isinstance(n, (ArrayRead, ArrayApp)):
            return type(n)(n.name, tuple(walk(a, mapping) for a in n.args))
        if isinstance(n, Cmp):
            return Cmp(n.op, walk(n.lhs, mapping), walk(n.rhs, mapping))
        if isinstance(n, Not):
            return Not(walk(n.body, mapping))
        if isinstance(n, (And, Or)):
            return type(n)(tuple(walk(a, mapping) for a in n.args))
        if isinstance(n, Implies):
            return Implies(walk(n.lhs, mapping), walk(n.rhs, mapping))
        raise TypeError(f"unknown node {n!r}")

    return walk(node, dict(pairs))


# ---------------------------------------------------------------------------
# display

_PREC = {"or": 1, "and": 2, "not": 3, "cmp": 4, "+": 5, "-": 5, "*": 6, "div": 6, "mod": 6}


def show(node: Node) -> str:
    """Human-oriented rendering; counters print as kappa/tau with indices."""

    def paren(s: str, outer: int, inner: int) -> str:
        return f"({s})" if inner < outer else s

    def walk(n: Node, prec: int) -> str:
        if isinstance(n, IntLit):
            return str(n.value)
        if isinstance(n, Var):
            return n.name
        if isinstance(n, Sym):
            return n.name + "^"
        if isinstance(n, Counter):
            return n.name
        if isinstance(n, FreeConst):
            return n.name
        if isinstance(n, Star):
            return "*?"
        if isinstance(n, ArrayRead):
            return n.name + "[" + ", ".join(walk(a, 0) for a in n.args) + "]"
        if isinstance(n, ArrayApp):
            return n.name + "^(" + ", ".join(walk(a, 0) for a in n.args) + ")"
        if isinstance(n, BinOp):
            p = _PREC[n.op]
            op = {"div": " div ", "mod": " mod "}.get(n.op, f" {n.op} ")
            s = walk(n.lhs, p) + op + walk(n.rhs, p + 1)
            return paren(s, prec, p)
        if isinstance(n, BoolLit):
            return "true" if n.value else "false"
        if isinstance(n, Cmp):
            s = walk(n.lhs, _PREC["cmp"] + 1) + f" {n.op} " + walk(n.rhs, _PREC["cmp"] + 1)
            return paren(s, prec, _PREC["cmp"])
        if isinstance(n, Not):
            body = walk(n.body, 0)
            if not isinstance(n.body, (BoolLit, Not)):
                body = f"({body})"
            return "!" + body
        if isinstance(n, And):
            if not n.args:
                return "true"
            s = " && ".join(walk(a, _PREC["and"] + 1) for a in n.args)
            return paren(s, prec, _PREC["and"])
        if isinstance(n, Or):
            if not n.args:
                return "false"
            s = " || ".join(walk(a, _PREC["or"] + 1) for a in n.args)
            return paren(s, prec, _PREC["or"])
        if isinstance(n, Implies):
            s = walk(n.lhs, 1) + " -> " + walk(n.rhs, 0)
            return paren(s, prec, 0)
        if isinstance(n, (Forall, Exists)):
            q = "forall" if isinstance(n, Forall) else "exists"
            vs = ", ".join(v.name for v in n.vars)
            return f"({q} {vs}. {walk(n.body, 0)})"
        raise TypeError(f"unknown node {n!r}")

    return walk(node, 0)
