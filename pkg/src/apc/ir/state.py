"""Symbolic states: maps from scalar variables to symbolic integer terms.

Two substitution directions exist and must not be confused:

* `apply_vars(state, f)` rewrites a *program* expression or condition,
  replacing every variable occurrence by the state's term for it and every
  array read by an application of the array's function symbol;
* `apply_syms(state, f)` rewrites a *symbolic* term or formula, replacing
  every input symbol by the state's term for the same-named variable.

Composition chains two effects: running code with net effect `first` and
then code with net effect `second` has net effect
`compose(first, second)(a) = apply_syms(first, second[a])`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .exprs import (
    And,
    ArrayApp,
    ArrayRead,
    BinOp,
    BoolLit,
    Cmp,
    Counter,
    Expr,
    Formula,
    Implies,
    IntLit,
    Node,
    Not,
    Or,
    STAR,
    Star,
    Sym,
    Var,
    normalize,
    show,
    substitute,
)


@dataclass(frozen=True)
class SymbolicState:
    """Frozen mapping: scalar name -> symbolic term (possibly Star)."""

    values: tuple[tuple[str, Expr], ...]

    @staticmethod
    def identity(scalars: Iterable[str]) -> "SymbolicState":
        return SymbolicState(tuple((a, Sym(a)) for a in scalars))

    @staticmethod
    def of(mapping: Mapping[str, Expr], scalars: Iterable[str]) -> "SymbolicState":
        return SymbolicState(tuple((a, mapping.get(a, Sym(a))) for a in scalars))

    @property
    def scalars(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.values)

    def __getitem__(self, name: str) -> Expr:
        for a, e in self.values:
            if a == name:
                return e
        raise KeyError(name)

    def set(self, name: str, e: Expr) -> "SymbolicState":
        if all(a != name for a, _ in self.values):
            raise KeyError(name)
        return SymbolicState(tuple((a, e if a == name else old) for a, old in self.values))

    def as_dict(self) -> dict[str, Expr]:
        return dict(self.values)

    def __str__(self) -> str:
        inner = ", ".join(f"{a} -> {show(e)}" for a, e in self.values)
        return "{" + inner + "}"


def apply_vars(state: SymbolicState, node: Node) -> Node:
    """Evaluate a program expression/condition in the state."""
    values = state.as_dict()

    def walk(n: Node) -> Node:
        if isinstance(n, Var):
            try:
                return values[n.name]
            except KeyError:
                raise KeyError(f"variable '{n.name}' not in state") from None
        if isinstance(n, ArrayRead):
            return ArrayApp(n.name, tuple(walk(a) for a in n.args))
        if isinstance(n, (IntLit, Sym, ArrayApp, Counter, Star, BoolLit)):
            return n
        if isinstance(n, BinOp):
            return normalize(BinOp(n.op, walk(n.lhs), walk(n.rhs)))
        if isinstance(n, Cmp):
            return Cmp(n.op, walk(n.lhs), walk(n.rhs))
        if isinstance(n, Not):
            return Not(walk(n.body))
        if isinstance(n, (And, Or)):
            return type(n)(tuple(walk(a) for a in n.args))
        if isinstance(n, Implies):
            return Implies(walk(n.lhs), walk(n.rhs))
        raise TypeError(f"cannot apply state to {n!r}")

    return walk(node)


def apply_syms(state: SymbolicState, node: Node) -> Node:
    """Replace each input symbol by the state's term for that variable."""
    mapping = {Sym(a): e for a, e in state.values}
    return substitute(node, mapping)


def compose(first: SymbolicState, second: SymbolicState) -> SymbolicState:
    """Effect of running `first` then `second` (same variable universe)."""
    out = []
    for a, e in second.values:
        if isinstance(e, Star):
            out.append((a, STAR))
        else:
            out.append((a, normalize(apply_syms(first, e))))
    return SymbolicState(tuple(out))
