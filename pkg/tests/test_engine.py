"""Symbolic execution, loop summaries, and the necessary condition."""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gen
from apc import benchmarks
from apc.engine import (
    AnalysisContext,
    CounterSource,
    compute_summary,
    execute_backbones,
    iterated_state,
    loop_condition,
    necessary_condition,
)
from apc.ir import (
    STAR,
    TRUE,
    BinOp,
    Cmp,
    Counter,
    Exists,
    IntLit,
    Star,
    Sym,
    and_,
    eval_concrete,
    forall,
    free_counters,
    implies_,
    normalize,
    parse_program,
    subterms,
)
from apc.oracle import ConcreteInput, concrete_run
from apc.paths import CapExceeded, enumerate_backbones, loops_along

K1, T1 = Counter(1), Counter(1, step=True)
K2 = Counter(2)


def test_loop_free_program_gives_plain_path_condition():
    fg = parse_program(
        "var x : int\nnode a start\nnode t target\n"
        "edge a -> b : x := x + 1\nedge b -> t : assume x > 5\n"
    )
    phi, results = necessary_condition(fg)
    assert phi == Cmp(">", BinOp("+", IntLit(1), Sym("x")), IntLit(5))
    assert len(results) == 1 and results[0].summaries == ()


COUNT_UP = """
var x, y, n : int
node s start
node t target
edge s -> h : x := 0
edge h -> b : assume x < n
edge b -> h : x := x + y
edge h -> t : assume x >= n
"""


def test_summary_of_untouched_variable_increment():
    fg = parse_program(COUNT_UP)
    (loop,) = loops_along(fg, enumerate_backbones(fg)[0])
    summ = compute_summary(fg, loop, AnalysisContext())
    assert summ.counters == (K1,)
    assert summ.backbones == (("h", "b", "h'"),)
    # x grows by the loop-invariant amount y each round; y and n are untouched
    assert summ.iterated_state["x"] == normalize(
        BinOp("+", Sym("x"), BinOp("*", Sym("y"), K1))
    )
    assert summ.iterated_state["y"] == Sym("y")
    assert summ.iterated_state["n"] == Sym("n")
    # every earlier round saw the guard hold on the iterated value
    guard_at_tau = Cmp(
        "<", normalize(BinOp("+", Sym("x"), BinOp("*", Sym("y"), T1))), Sym("n")
    )
    assert summ.condition == forall(
        (T1,),
        implies_(and_(Cmp("<=", IntLit(0), T1), Cmp("<", T1, K1)), guard_at_tau),
    )


def test_summary_with_two_body_backbones():
    fg = parse_program(
        "var x, n : int\nnode s start\nnode t target\n"
        "edge s -> h : x := 0\n"
        "edge h -> b : assume x < n\nedge h -> t : assume x >= n\n"
        "edge b -> c : assume n > 10\nedge b -> d : assume n <= 10\n"
        "edge c -> h : x := x + 2\nedge d -> h : x := x + 3\n"
    )
    (loop,) = loops_along(fg, enumerate_backbones(fg)[0])
    summ = compute_summary(fg, loop, AnalysisContext())
    assert summ.backbones == (("h", "b", "c", "h'"), ("h", "b", "d", "h'"))
    assert summ.counters == (K1, K2)
    assert summ.iterated_state["x"] == normalize(
        BinOp(
            "+",
            Sym("x"),
            BinOp("+", BinOp("*", IntLit(2), K1), BinOp("*", IntLit(3), K2)),
        )
    )


def test_resets_and_scalings_become_unknown():
    fg = parse_program(
        "var x, y, n : int\nnode s start\nnode t target\n"
        "edge s -> h : x := 0\n"
        "edge h -> b : assume x < n\nedge b -> c : x := 2 * x\n"
        "edge c -> h : y := 7\nedge h -> t : assume x >= n\n"
    )
    (loop,) = loops_along(fg, enumerate_backbones(fg)[0])
    summ = compute_summary(fg, loop, AnalysisContext())
    assert isinstance(summ.iterated_state["x"], Star)
    assert isinstance(summ.iterated_state["y"], Star)
    # with both tested variables unknown, nothing survives of the condition:
    # the overall necessary condition degenerates to `true`
    phi, _ = necessary_condition(fg)
    assert phi == TRUE


def test_t2witness_keeps_only_counter_bookkeeping():
    phi, _ = necessary_condition(benchmarks.load("t2witness"))
    assert isinstance(phi, Exists)
    assert {c.name for c in phi.vars} == {"kappa1", "kappa2"}
    # no input symbol survives, so satisfiability is input-independent
    assert not any(isinstance(t, Sym) for t in subterms(phi))


def test_summaries_are_memoized_across_backbones():
    fg = parse_program(
        "var x, n : int\nnode s start\nnode t target\n"
        "edge s -> p : assume x > 0\nedge s -> q : assume x <= 0\n"
        "edge p -> h : x := 1\nedge q -> h : x := 2\n"
        "edge h -> b : assume x < n\nedge b -> h : x := x + 1\n"
        "edge h -> t : assume x >= n\n"
    )
    ctx = AnalysisContext()
    _, results = necessary_condition(fg, ctx)
    assert [r.backbone for r in results] == [("s", "p", "h", "t"), ("s", "q", "h", "t")]
    (_, s0), = results[0].summaries
    (_, s1), = results[1].summaries
    # one summary, one counter pair, shared by both backbones
    assert s0.counters == s1.counters == (K1,)
    assert s0.condition == s1.condition
    assert len(ctx._memo) == 1


NESTED = """
var x, y, n, m : int
node s start
node t target
edge s -> h1 : x := 0
edge h1 -> a1 : assume x < n
edge h1 -> t : assume x >= n
edge a1 -> h2 : y := 0
edge h2 -> b2 : assume y < m
edge b2 -> h2 : y := y + 1
edge h2 -> e : assume y >= m
edge e -> h1 : x := x + 1
"""


def test_nesting_depth_limit():
    with pytest.raises(RecursionError, match="nesting deeper than 1"):
        necessary_condition(parse_program(NESTED), AnalysisContext(max_depth=1))
    phi, _ = necessary_condition(parse_program(NESTED))
    assert isinstance(phi, Exists)
    assert free_counters(phi) == frozenset()


def test_backbone_cap_propagates():
    fg = parse_program(
        "var x : int\nnode s start\nnode t target\n"
        "edge s -> a : assume x > 0\nedge s -> b : assume x <= 0\n"
        "edge a -> t : x := 1\nedge b -> t : x := 2\n"
    )
    with pytest.raises(CapExceeded):
        necessary_condition(fg, AnalysisContext(max_backbones=1))


def test_running_example_summary_values():
    fg = benchmarks.load("running_example")
    (loop,) = loops_along(fg, enumerate_backbones(fg)[0])
    summ = compute_summary(fg, loop, AnalysisContext())
    # counting round first (visits e), skipping round second
    assert summ.backbones == (("c", "d", "e", "f", "c'"), ("c", "d", "f", "c'"))
    assert summ.iterated_state["i"] == normalize(BinOp("+", Sym("i"), BinOp("+", K1, K2)))
    assert summ.iterated_state["k"] == normalize(BinOp("+", Sym("k"), K1))
    assert summ.iterated_state["n"] == Sym("n")


@settings(max_examples=200)
@given(fg=gen.dag_flowgraphs())
def test_suite_loop_free_exactness(fg):
    """Without loops nothing is approximated: over every store in a small
    finite domain, the computed condition holds iff the run reaches the
    target."""
    phi, _ = necessary_condition(fg)
    assert free_counters(phi) == frozenset()
    for combo in itertools.product(range(4), repeat=len(fg.scalars)):
        store = dict(zip(fg.scalars, combo))
        reached = concrete_run(fg, ConcreteInput(scalars=store)).reached_target
        assert eval_concrete(phi, store) is reached


@settings(max_examples=200)
@given(body=gen.loop_bodies(), data=st.data())
def test_suite_summary_covers_realizable_iterations(body, data):
    """Walk a loop body concretely for up to five rounds.  After every
    prefix, each closed-form iterated value matches the concrete store, and
    the looping condition accepts the realized iteration counts."""
    bbs = enumerate_backbones(body)
    results = execute_backbones(body, bbs)
    src = CounterSource()
    counters = tuple(src.fresh_pair()[0] for _ in results)
    theta = iterated_state(results, counters, body.scalars)
    psi = loop_condition(results, counters, theta)

    store0 = dict(
        zip(body.scalars, data.draw(st.tuples(*[st.integers(-3, 3)] * len(body.scalars))))
    )
    store = dict(store0)
    counts = [0] * len(results)
    for _ in range(6):  # prefixes of length 0..5
        cenv = {k: c for k, c in zip(counters, counts)}
        for a in body.scalars:
            if not isinstance(theta[a], Star):
                assert eval_concrete(theta[a], store0, counters=cenv) == store[a]
        assert eval_concrete(psi, store0, counters=cenv) is True
        trace = concrete_run(body, ConcreteInput(scalars=store))
        assert trace.reached_target
        counts[bbs.index(trace.visited)] += 1
        store = trace.final_store
