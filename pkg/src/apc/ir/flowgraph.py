"""Flowgraph programs: nodes, labeled edges, scalar/array declarations.

A program is a directed graph with one instruction per edge.  Every node has
at most two out-edges; a node with two out-edges must carry a complementary
pair of assume conditions.  Scalars are mutable integers, arrays are
read-only integer-valued inputs (optionally with fixed contents, which lets
benchmarks embed lookup tables without needing array writes).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from .exprs import (
    ArrayRead,
    Cmp,
    Expr,
    Formula,
    Not,
    Var,
    not_,
    simplify,
    sort_key,
    subterms,
)


class SemanticError(Exception):
    """A structurally well-formed program text violating a program rule."""


@dataclass(frozen=True)
class Assign:
    var: str
    rhs: Expr

    def __str__(self) -> str:
        from .exprs import show

        return f"{self.var} := {show(self.rhs)}"


@dataclass(frozen=True)
class Assume:
    cond: Formula

    def __str__(self) -> str:
        from .exprs import show

        return f"assume {show(self.cond)}"


Instruction = Union[Assign, Assume]


@dataclass(frozen=True)
class ConstArray:
    """Read-only array with fixed contents (row-major entries, default 0)."""

    entries: tuple[tuple[tuple[int, ...], int], ...]
    default: int = 0

    def lookup(self, idx: tuple[int, ...]) -> int:
        for key, val in self.entries:
            if key == idx:
                return val
        return self.default


@dataclass
class Flowgraph:
    """Immutable-by-convention program representation.

    `scalars` keeps declaration order (the analysis resolves summary values
    in that order), `arrays` maps array name to dimension.  Node and label
    containers are never mutated after construction.
    """

    scalars: tuple[str, ...]
    arrays: dict[str, int]
    nodes: frozenset[str]
    start: str
    target: str
    label: dict[tuple[str, str], Instruction]
    const_arrays: dict[str, ConstArray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        succ: dict[str, list[str]] = {n: [] for n in self.nodes}
        for (u, v) in self.label:
            succ[u].append(v)
        for outs in succ.values():
            outs.sort()
        self._succ = succ

    @property
    def edges(self) -> Iterable[tuple[str, str]]:
        return self.label.keys()

    def successors(self, u: str) -> list[str]:
        return self._succ.get(u, [])

    def out_edges(self, u: str) -> list[tuple[tuple[str, str], Instruction]]:
        return [((u, v), self.label[(u, v)]) for v in self.successors(u)]


def _orient(f: Formula) -> Formula:
    """Canonical comparison orientation so that e.g. i >= n and n <= i meet."""
    if isinstance(f, Cmp):
        op, lhs, rhs = f.op, f.lhs, f.rhs
        if op in (">", ">="):
            op = "<" if op == ">" else "<="
            lhs, rhs = rhs, lhs
        if op in ("==", "!=") and sort_key(rhs) < sort_key(lhs):
            lhs, rhs = rhs, lhs
        return Cmp(op, lhs, rhs)
    return f


def _complementary(f: Formula, g: Formula) -> bool:
    """f and g are syntactic complements: one is the negation of the other,
    possibly written as the complementary comparison."""
    for a, b in ((f, g), (g, f)):
        if _orient(simplify(not_(a))) == _orient(simplify(b)):
            return True
        if isinstance(a, Not) and _orient(simplify(a.body)) == _orient(simplify(b)):
            return True
    return False


def _check_expr_vars(e, fg: Flowgraph, where: str) -> None:
    for n in subterms(e):
        if isinstance(n, Var):
            if n.name not in fg.scalars:
                raise SemanticError(f"{where}: undeclared variable '{n.name}'")
        elif isinstance(n, ArrayRead):
            dim = fg.arrays.get(n.name)
            if dim is None:
                raise SemanticError(f"{where}: undeclared array '{n.name}'")
            if len(n.args) != dim:
                raise SemanticError(
                    f"{where}: array '{n.name}' expects {dim} "
                    f"index{'es' if dim != 1 else ''}, got {len(n.args)}"
                )


def validate(fg: Flowgraph) -> None:
    """Check the structural program rules, raising SemanticError on the
    first violation."""
    if fg.start not in fg.nodes:
        raise SemanticError(f"start node '{fg.start}' is not a node")
    if fg.target not in fg.nodes:
        raise SemanticError(f"target node '{fg.target}' is not a node")
    if fg.start == fg.target:
        raise SemanticError("start and target must be distinct nodes")
    seen = set(fg.scalars)
    if len(seen) != len(fg.scalars):
        raise SemanticError("duplicate scalar declaration")
    clash = seen & set(fg.arrays)
    if clash:
        raise SemanticError(f"name declared both scalar and array: {sorted(clash)}")
    for (u, v), ins in fg.label.items():
        where = f"edge {u} -> {v}"
        if u not in fg.nodes or v not in fg.nodes:
            raise SemanticError(f"{where}: endpoint is not a node")
        if isinstance(ins, Assign):
            if ins.var not in fg.scalars:
                if ins.var in fg.arrays:
                    raise SemanticError(f"{where}: arrays are read-only, cannot assign '{ins.var}'")
                raise SemanticError(f"{where}: undeclared variable '{ins.var}'")
            _check_expr_vars(ins.rhs, fg, where)
        else:
            _check_expr_vars(ins.cond, fg, where)
    for u in fg.nodes:
        outs = fg.out_edges(u)
        if len(outs) > 2:
            raise SemanticError(f"node '{u}' has {len(outs)} out-edges (at most 2 allowed)")
        if len(outs) == 2:
            (e1, i1), (e2, i2) = outs
            if not (isinstance(i1, Assume) and isinstance(i2, Assume)):
                raise SemanticError(
                    f"node '{u}' branches, so both out-edges must be assume instructions"
                )
            if not _complementary(i1.cond, i2.cond):
                raise SemanticError(
                    f"node '{u}' branches, but its out-edge conditions are not "
                    f"complementary: '{i1}' vs '{i2}'"
                )
