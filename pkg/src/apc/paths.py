"""Backbones and loops of a flowgraph.

The backbone of a complete path is the acyclic path left after repeatedly
deleting the segment between the first and the last occurrence of the
leftmost repeated node.  Conversely, every acyclic start-to-target path is
the backbone of all its "pumped" variants, so enumerating acyclic paths
enumerates all backbones.

A loop relative to a backbone prefix ending at v collects every node lying
on some cycle through v that avoids all earlier backbone nodes; that set is
exactly the strongly connected component of v in the graph with the prefix
removed (provided v actually lies on a cycle there).  Each loop induces its
own flowgraph: the loop body with entry v as start and a fresh copy of v as
target, so that complete paths of the induced graph are single iterations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .ir import Flowgraph


class CapExceeded(Exception):
    """An enumeration limit was hit; results would be incomplete."""


def backbone_of(path: Sequence[str]) -> tuple[str, ...]:
    """Collapse a path to its backbone.

    Repeatedly: find the leftmost node that occurs more than once, keep its
    first occurrence and drop everything up to and including its last."""
    p = list(path)
    while True:
        first: dict[str, int] = {}
        cut = None
        for i, n in enumerate(p):
            if n in first:
                cut = first[n]
                break
            first[n] = i
        if cut is None:
            return tuple(p)
        node = p[cut]
        last = len(p) - 1 - p[::-1].index(node)
        p = p[: cut + 1] + p[last + 1 :]


def enumerate_backbones(fg: Flowgraph, max_backbones: int = 10_000) -> list[tuple[str, ...]]:
    """All acyclic start-to-target paths, in DFS order with successors
    visited lexicographically (hence deterministic)."""
    out: list[tuple[str, ...]] = []
    path = [fg.start]
    on_path = {fg.start}

    def dfs(u: str) -> None:
        if u == fg.target:
            if len(out) >= max_backbones:
                raise CapExceeded(
                    f"more than {max_backbones} backbones; raise the limit to proceed"
                )
            out.append(tuple(path))
            return
        for v in fg.successors(u):
            if v in on_path:
                continue
            path.append(v)
            on_path.add(v)
            dfs(v)
            path.pop()
            on_path.remove(v)

    dfs(fg.start)
    return out


@dataclass(frozen=True)
class Loop:
    """A loop met along a backbone: entry node, body set, and the index of
    the entry within the backbone."""

    entry: str
    body: frozenset[str]
    position: int


def _scc_of(fg: Flowgraph, v: str, removed: frozenset[str]) -> frozenset[str]:
    """Nodes u with v ->* u and u ->* v in the graph minus `removed`."""

    def reach(src: str, forward: bool) -> set[str]:
        seen = {src}
        work = [src]
        preds: dict[str, list[str]] | None = None
        if not forward:
            preds = {}
            for (a, b) in fg.edges:
                preds.setdefault(b, []).append(a)
        while work:
            u = work.pop()
            nxt = fg.successors(u) if forward else (preds.get(u, []) if preds else [])
            for w in nxt:
                if w in removed or w in seen:
                    continue
                seen.add(w)
                work.append(w)
        return seen

    fwd = reach(v, True)
    bwd = reach(v, False)
    return frozenset(fwd & bwd)


def loops_along(fg: Flowgraph, backbone: Sequence[str]) -> list[Loop]:
    """Loops relative to each prefix of the backbone.

    The start node itself can be a loop entry (its prefix is empty, so any
    cycle through it counts).  The final node is skipped: execution stops
    there, so a summary at the target would never be consumed."""
    out: list[Loop] = []
    for idx in range(len(backbone) - 1):
        v = backbone[idx]
        removed = frozenset(backbone[:idx])
        scc = _scc_of(fg, v, removed)
        # v must actually lie on a cycle: some successor inside the scc
        # (the scc alone is not enough -- a trivial scc {v} has no cycle
        # unless v carries a self-loop, which the successor test covers)
        has_cycle = any(w in scc for w in fg.successors(v))
        if has_cycle:
            out.append(Loop(entry=v, body=scc, position=idx))
    return out


def fresh_exit_name(body: Iterable[str], entry: str) -> str:
    name = entry + "'"
    taken = set(body)
    while name in taken:
        name += "'"
    return name


def induced_flowgraph(fg: Flowgraph, loop: Loop) -> Flowgraph:
    """The loop body as a flowgraph: start at the entry, edges returning to
    the entry redirected to a fresh exit node, edges leaving the body
    dropped."""
    exit_node = fresh_exit_name(loop.body, loop.entry)
    label = {}
    for (u, v), ins in fg.label.items():
        if u not in loop.body:
            continue
        if v == loop.entry:
            label[(u, exit_node)] = ins
        elif v in loop.body:
            label[(u, v)] = ins
    return Flowgraph(
        scalars=fg.scalars,
        arrays=fg.arrays,
        nodes=frozenset(loop.body) | {exit_node},
        start=loop.entry,
        target=exit_node,
        label=label,
        const_arrays=fg.const_arrays,
    )
