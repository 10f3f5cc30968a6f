"""Backbone collapse, backbone enumeration, and loop extraction."""

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gen
from apc import benchmarks
from apc.ir import Assume, Cmp, Flowgraph, IntLit
from apc.paths import (
    CapExceeded,
    Loop,
    backbone_of,
    enumerate_backbones,
    fresh_exit_name,
    induced_flowgraph,
    loops_along,
)


def test_backbone_collapse_examples():
    assert backbone_of(("a", "b", "c", "b", "c", "e")) == ("a", "b", "c", "e")
    assert backbone_of(("a", "b", "a", "b", "a")) == ("a",)
    # collapse works outside-in: removing the leftmost repeat first means a
    # cycle nested inside another disappears with its host
    assert backbone_of(("s", "x", "y", "z", "y", "x", "t")) == ("s", "x", "t")
    assert backbone_of(("s",)) == ("s",)
    assert backbone_of(()) == ()


def test_running_example_has_one_backbone_and_one_loop():
    fg = benchmarks.load("running_example")
    bbs = enumerate_backbones(fg)
    assert bbs == [("a", "b", "c", "g", "h")]
    assert loops_along(fg, bbs[0]) == [
        Loop(entry="c", body=frozenset({"c", "d", "e", "f"}), position=2)
    ]


def test_induced_flowgraph_of_running_example_loop():
    fg = benchmarks.load("running_example")
    (loop,) = loops_along(fg, enumerate_backbones(fg)[0])
    body = induced_flowgraph(fg, loop)
    assert (body.start, body.target) == ("c", "c'")
    assert body.nodes == frozenset({"c", "d", "e", "f", "c'"})
    # the exit edge to g is dropped, the back edge is redirected to c'
    assert set(body.label) == {("c", "d"), ("d", "e"), ("d", "f"), ("e", "f"), ("f", "c'")}
    assert body.label[("f", "c'")] == fg.label[("f", "c")]
    assert enumerate_backbones(body) == [
        ("c", "d", "e", "f", "c'"),
        ("c", "d", "f", "c'"),
    ]


def _graph(edges, start, target):
    label = {e: Assume(Cmp("==", IntLit(0), IntLit(0))) for e in edges}
    nodes = frozenset(n for e in edges for n in e) | {start, target}
    return Flowgraph(
        scalars=(), arrays={}, nodes=nodes, start=start, target=target, label=label
    )


def test_loop_at_start_node_is_detected():
    fg = _graph([("s", "a"), ("a", "s"), ("s", "t")], "s", "t")
    assert loops_along(fg, ("s", "t")) == [
        Loop(entry="s", body=frozenset({"s", "a"}), position=0)
    ]


def test_cycle_through_target_is_ignored():
    fg = _graph([("s", "t"), ("t", "t")], "s", "t")
    assert loops_along(fg, ("s", "t")) == []


def test_later_loop_entry_sees_prefix_removed():
    # h1's component swallows the h2 cycle (reachable and co-reachable via
    # y -> h1), but from h2 the prefix node h1 is gone, leaving just {h2, y}
    edges = [
        ("s", "h1"), ("h1", "x"), ("x", "h1"),
        ("h1", "h2"), ("h2", "y"), ("y", "h2"), ("y", "h1"),
        ("h2", "t"),
    ]
    fg = _graph(edges, "s", "t")
    assert loops_along(fg, ("s", "h1", "h2", "t")) == [
        Loop(entry="h1", body=frozenset({"h1", "x", "h2", "y"}), position=1),
        Loop(entry="h2", body=frozenset({"h2", "y"}), position=2),
    ]


def test_fresh_exit_name_avoids_collisions():
    assert fresh_exit_name({"h", "g"}, "h") == "h'"
    assert fresh_exit_name({"h", "h'"}, "h") == "h''"


def _diamond_chain(k):
    edges = []
    for i in range(k):
        edges += [
            (f"n{i}", f"u{i}"), (f"u{i}", f"n{i+1}"),
            (f"n{i}", f"l{i}"), (f"l{i}", f"n{i+1}"),
        ]
    return _graph(edges, "n0", f"n{k}")


def test_enumeration_cap():
    fg = _diamond_chain(3)  # 8 acyclic paths
    assert len(enumerate_backbones(fg, max_backbones=8)) == 8
    with pytest.raises(CapExceeded):
        enumerate_backbones(fg, max_backbones=7)


@st.composite
def pumped_paths(draw):
    """An acyclic path plus a variant with cycles spliced in.

    Each splice picks a position i and inserts fresh nodes followed by a
    second copy of the node at i, i.e. a cycle returning to that node.
    Splices may land inside earlier splices."""
    base = draw(
        st.lists(st.sampled_from("abcdefghij"), min_size=1, max_size=8, unique=True)
    )
    path = list(base)
    fresh = 0
    for _ in range(draw(st.integers(0, 4))):
        i = draw(st.integers(0, len(path) - 1))
        seg = [f"q{fresh + j}" for j in range(draw(st.integers(0, 3)))]
        fresh += len(seg)
        path[i + 1 : i + 1] = seg + [path[i]]
    return tuple(base), tuple(path)


def _is_subsequence(short, long):
    it = iter(long)
    return all(x in it for x in short)


@settings(max_examples=200)
@given(ex=pumped_paths(), raw=gen.node_paths())
def test_suite_backbone_collapse(ex, raw):
    """Collapse is idempotent, yields a duplicate-free subsequence with the
    original endpoints, and recovers the path a pumped variant came from."""
    base, pumped = ex
    assert backbone_of(pumped) == base

    bb = backbone_of(raw)
    assert backbone_of(bb) == bb
    assert len(set(bb)) == len(bb)
    assert _is_subsequence(bb, raw)
    assert bb[0] == raw[0] and bb[-1] == raw[-1]


@settings(max_examples=200)
@given(fg=gen.digraphs())
def test_suite_enumeration_matches_simple_paths(fg):
    """On arbitrary digraphs of up to 12 nodes the enumeration agrees with
    networkx's simple-path search, with no duplicates and a stable order."""
    got = enumerate_backbones(fg, max_backbones=100_000)
    g = nx.DiGraph()
    g.add_nodes_from(fg.nodes)
    g.add_edges_from(fg.label.keys())
    assert set(got) == {tuple(p) for p in nx.all_simple_paths(g, fg.start, fg.target)}
    assert len(set(got)) == len(got)
    assert got == enumerate_backbones(fg, max_backbones=100_000)


@settings(max_examples=200)
@given(fg=gen.digraphs(), data=st.data())
def test_walked_paths_collapse_to_enumerated_backbones(fg, data):
    """The backbone of any complete path (possibly revisiting nodes) shows
    up in the enumeration."""
    path = [fg.start]
    for _ in range(20):
        if path[-1] == fg.target:
            break
        succs = sorted(fg.successors(path[-1]))
        if not succs:
            break
        path.append(data.draw(st.sampled_from(succs)))
    if path[-1] != fg.target:
        return
    assert backbone_of(path) in set(enumerate_backbones(fg, max_backbones=100_000))
