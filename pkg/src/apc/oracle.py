"""Reference interpreter and brute-force reachability search.

This module is the ground truth the analysis is tested against, so it
deliberately shares no evaluation machinery with the symbolic side: the
interpreter below walks instruction expressions directly with its own
little evaluator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .ir import (
    And,
    ArrayRead,
    Assign,
    Assume,
    BinOp,
    BoolLit,
    Cmp,
    Flowgraph,
    Implies,
    IntLit,
    Not,
    Or,
    Var,
)
from .ir.concrete import ArrayFunc
from .paths import backbone_of, induced_flowgraph, loops_along

STEP_BOUND = 100_000
ENUM_CAP = 10_000_000


class EnumerationTooLarge(Exception):
    pass


@dataclass(frozen=True)
class ConcreteInput:
    """An assignment of integers to scalar inputs and finite-table functions
    to array inputs."""

    scalars: dict[str, int] = field(default_factory=dict)
    arrays: dict[str, ArrayFunc] = field(default_factory=dict)

    def scalar(self, name: str) -> int:
        return self.scalars.get(name, 0)

    def array(self, name: str) -> ArrayFunc:
        return self.arrays.get(name, ArrayFunc())

    def freeze(self) -> tuple:
        return (
            tuple(sorted(self.scalars.items())),
            tuple(sorted((n, a.entries, a.default) for n, a in self.arrays.items())),
        )


@dataclass(frozen=True)
class Trace:
    visited: tuple[str, ...]
    final_store: dict[str, int]
    reached_target: bool
    steps: int
    stuck: bool = False
    # (loop entry, induced backbone) -> number of excursions with that shape;
    # entries are the loops along this trace's own backbone
    iteration_counts: dict[tuple[str, tuple[str, ...]], int] = field(default_factory=dict)


class _Stuck(Exception):
    pass


def _eval(e, store: dict[str, int], arrays: dict[str, ArrayFunc]):
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, Var):
        return store[e.name]
    if isinstance(e, ArrayRead):
        args = tuple(_eval(a, store, arrays) for a in e.args)
        return arrays[e.name](args)
    if isinstance(e, BinOp):
        a = _eval(e.lhs, store, arrays)
        b = _eval(e.rhs, store, arrays)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b == 0:
            raise _Stuck("division by zero")
        # Euclidean convention: remainder is always non-negative
        q, r = divmod(a, b)
        if r < 0:
            q += 1 if b < 0 else -1
            r = a - q * b
        return q if e.op == "div" else r
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, Cmp):
        a = _eval(e.lhs, store, arrays)
        b = _eval(e.rhs, store, arrays)
        return {
            "==": a == b,
            "!=": a != b,
            "<": a < b,
            "<=": a <= b,
            ">": a > b,
            ">=": a >= b,
        }[e.op]
    if isinstance(e, Not):
        return not _eval(e.body, store, arrays)
    if isinstance(e, And):
        return all(_eval(x, store, arrays) for x in e.args)
    if isinstance(e, Or):
        return any(_eval(x, store, arrays) for x in e.args)
    if isinstance(e, Implies):
        return (not _eval(e.lhs, store, arrays)) or _eval(e.rhs, store, arrays)
    raise TypeError(f"cannot evaluate {e!r} concretely")


def _excursion_counts(
    fg: Flowgraph, visited: tuple[str, ...]
) -> dict[tuple[str, tuple[str, ...]], int]:
    """Decompose the trace into its backbone plus per-entry loop excursions,
    then classify each excursion by its backbone in the induced flowgraph."""
    # peel cycles leftmost-first, remembering what was removed at each node
    path = list(visited)
    removed: dict[str, list[list[str]]] = {}
    while True:
        seen: dict[str, int] = {}
        pos = None
        for idx, v in enumerate(path):
            if v in seen:
                pos = seen[v]
                break
            seen[v] = idx
        if pos is None:
            break
        v = path[pos]
        last = len(path) - 1 - path[::-1].index(v)
        cut = path[pos : last + 1]  # v ... v, possibly several rounds
        # split the cut at each occurrence of v: one excursion per round trip
        rounds: list[list[str]] = []
        cur: list[str] = [cut[0]]
        for node in cut[1:]:
            cur.append(node)
            if node == v:
                rounds.append(cur)
                cur = [node]
        removed.setdefault(v, []).extend(rounds)
        path = path[:pos] + path[last:]

    backbone = tuple(path)
    counts: dict[tuple[str, tuple[str, ...]], int] = {}
    for loop in loops_along(fg, backbone):
        sub = induced_flowgraph(fg, loop)
        exit_node = sub.target
        for exc in removed.get(loop.entry, []):
            induced_path = tuple(exc[:-1]) + (exit_node,)
            bb = backbone_of(induced_path)
            key = (loop.entry, bb)
            counts[key] = counts.get(key, 0) + 1
        for induced_bb in _induced_backbones(sub):
            counts.setdefault((loop.entry, induced_bb), 0)
    return counts


def _induced_backbones(sub: Flowgraph) -> list[tuple[str, ...]]:
    from .paths import enumerate_backbones

    try:
        return enumerate_backbones(sub)
    except Exception:
        return []


def concrete_run(
    fg: Flowgraph,
    inp: ConcreteInput,
    step_bound: int = STEP_BOUND,
) -> Trace:
    """Deterministic execution from the start node.

    Stops on reaching the target, on a node with no enabled out-edge
    (including failed assumes and division by zero), or on the step bound.
    """
    if step_bound < 0:
        raise ValueError("step_bound must be >= 0")
    store = {a: inp.scalar(a) for a in fg.scalars}
    arrays = {name: inp.array(name) for name in fg.arrays}
    for name, table in fg.const_arrays.items():
        # fixed contents are part of the program, not the input
        arrays[name] = ArrayFunc(table.entries, table.default)
    node = fg.start
    visited = [node]
    steps = 0
    stuck = False
    while node != fg.target and steps < step_bound:
        outs = fg.out_edges(node)
        if not outs:
            break
        enabled = []
        try:
            for (u, v), ins in outs:
                if isinstance(ins, Assume):
                    if _eval(ins.cond, store, arrays):
                        enabled.append(((u, v), ins))
                else:
                    enabled.append(((u, v), ins))
        except _Stuck:
            stuck = True
            break
        if len(outs) == 2:
            assert len(enabled) <= 1, (
                f"branching node {node} has {len(enabled)} enabled edges"
            )
        if not enabled:
            break
        (edge, ins) = enabled[0]
        if isinstance(ins, Assign):
            try:
                store[ins.var] = _eval(ins.rhs, store, arrays)
            except _Stuck:
                stuck = True
                break
        node = edge[1]
        visited.append(node)
        steps += 1
    return Trace(
        visited=tuple(visited),
        final_store=dict(store),
        reached_target=node == fg.target,
        steps=steps,
        stuck=stuck,
        iteration_counts=_excursion_counts(fg, tuple(visited)),
    )


def _array_inputs(
    names: list[str],
    dims: dict[str, int],
    values: range,
    indices: range,
) -> list[dict[str, ArrayFunc]]:
    """All assignments of finite tables over indices^dim -> values."""
    out: list[dict[str, ArrayFunc]] = [{}]
    for name in names:
        points = list(itertools.product(indices, repeat=dims[name]))
        tables = []
        for combo in itertools.product(values, repeat=len(points)):
            entries = {p: v for p, v in zip(points, combo) if v != 0}
            tables.append(ArrayFunc.from_dict(entries, default=0))
        out = [dict(d, **{name: t}) for d in out for t in tables]
    return out


def bounded_reachability(
    fg: Flowgraph,
    scalar_domain: range | dict[str, range],
    array_values: range = range(0, 1),
    array_indices: range = range(0, 0),
    step_bound: int = STEP_BOUND,
    cap: int = ENUM_CAP,
) -> list[ConcreteInput]:
    """Exhaustively run every input over the given finite domains and return
    those that reach the target.  Refuses to enumerate more than `cap`
    inputs."""
    if isinstance(scalar_domain, dict):
        domains = {a: scalar_domain.get(a, range(0, 1)) for a in fg.scalars}
    else:
        domains = {a: scalar_domain for a in fg.scalars}
    array_names = [n for n in sorted(fg.arrays) if n not in fg.const_arrays]
    total = 1
    for a in fg.scalars:
        total *= max(1, len(domains[a]))
    for name in array_names:
        points = len(array_indices) ** fg.arrays[name]
        total *= max(1, len(array_values) ** points)
    if total > cap:
        raise EnumerationTooLarge(f"{total} inputs exceed the cap of {cap}")

    const_funcs = {
        name: ArrayFunc(table.entries, table.default)
        for name, table in fg.const_arrays.items()
    }
    reaching: list[ConcreteInput] = []
    scalar_grid = itertools.product(*(domains[a] for a in fg.scalars))
    array_grid = _array_inputs(array_names, fg.arrays, array_values, array_indices)
    for combo in scalar_grid:
        scalars = dict(zip(fg.scalars, combo))
        for arrs in array_grid:
            inp = ConcreteInput(scalars=dict(scalars), arrays={**arrs, **const_funcs})
            if concrete_run(fg, inp, step_bound).reached_target:
                reaching.append(inp)
    return reaching
