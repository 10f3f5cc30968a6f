"""Bound-K expansion of universals and freeing of existentials."""

import functools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apc import benchmarks
from apc.engine import necessary_condition
from apc.ir import (
    And,
    ArrayFunc,
    BinOp,
    Cmp,
    Counter,
    FreeConst,
    Implies,
    IntLit,
    Sym,
    and_,
    eval_concrete,
    exists,
    forall,
    free_counters,
    has_quantifier,
    implies_,
)
from apc.qelim import TransformError, expand_universals, k_bound_transform

K1, T1 = Counter(1), Counter(1, step=True)
K2, T2 = Counter(2), Counter(2, step=True)

# forall tau1 . 0 <= tau1 && tau1 < kappa1  ->  x + tau1 < n
GUARDED = forall(
    (T1,),
    implies_(
        and_(Cmp("<=", IntLit(0), T1), Cmp("<", T1, K1)),
        Cmp("<", BinOp("+", Sym("x"), T1), Sym("n")),
    ),
)


def test_expansion_instances():
    def inst(t, lhs):
        return Implies(Cmp("<", IntLit(t), K1), Cmp("<", lhs, Sym("n")))

    assert expand_universals(GUARDED, 0) == inst(0, Sym("x"))
    assert expand_universals(GUARDED, 2) == And(
        (
            inst(0, Sym("x")),
            inst(1, BinOp("+", IntLit(1), Sym("x"))),
            inst(2, BinOp("+", IntLit(2), Sym("x"))),
        )
    )


def test_expansion_rejects_negative_bound():
    with pytest.raises(ValueError):
        expand_universals(GUARDED, -1)
    with pytest.raises(ValueError):
        k_bound_transform(GUARDED, -1)


def test_expansion_requires_the_guarded_shape():
    body = Cmp("<", T1, Sym("n"))
    with pytest.raises(TransformError, match="binds 2 counters"):
        expand_universals(forall((T1, T2), implies_(Cmp("<", T1, K1), body)), 1)
    with pytest.raises(TransformError, match="not an implication"):
        expand_universals(forall((T1,), Cmp("<", T1, K1)), 1)
    with pytest.raises(TransformError, match="unexpected antecedent conjunct"):
        expand_universals(
            forall((T1,), implies_(and_(Cmp(">", T1, IntLit(3)), Cmp("<", T1, K1)), body)),
            1,
        )
    with pytest.raises(TransformError, match="no strict upper bound"):
        expand_universals(forall((T1,), implies_(Cmp("<=", IntLit(0), T1), body)), 1)


def test_dropped_instances_weaken_the_formula():
    # with kappa1 = 5 and x = 0, n = 3 the full universal fails at tau1 = 3,
    # but an expansion that stops at tau1 = 2 never looks that far
    env = {"x": 0, "n": 3}
    assert eval_concrete(GUARDED, env, counters={K1: 5}) is False
    assert eval_concrete(expand_universals(GUARDED, 2), env, counters={K1: 5}) is True
    assert eval_concrete(expand_universals(GUARDED, 4), env, counters={K1: 5}) is False


def test_freeing_preserves_bounds_and_names():
    phi = exists((K1,), and_(Cmp(">=", K1, IntLit(0)), Cmp(">", K1, IntLit(5))))
    kb = k_bound_transform(phi, 3)
    assert kb.k == 3
    assert kb.freed == (FreeConst("kappa1#1"),)
    assert not has_quantifier(kb.formula)
    assert free_counters(kb.formula) == frozenset()
    assert eval_concrete(kb.formula, {}, free_consts={"kappa1#1": 6}) is True
    assert eval_concrete(kb.formula, {}, free_consts={"kappa1#1": 3}) is False


def test_each_expanded_instance_frees_its_own_witness():
    inner = exists(
        (T2,),
        and_(Cmp("<=", IntLit(0), T2), Cmp("<=", T2, K2), Cmp(">", T2, T1)),
    )
    phi = exists(
        (K2,),
        and_(
            Cmp(">=", K2, IntLit(0)),
            forall(
                (T1,),
                implies_(and_(Cmp("<=", IntLit(0), T1), Cmp("<", T1, Sym("n"))), inner),
            ),
        ),
    )
    kb = k_bound_transform(phi, 2)
    names = [c.name for c in kb.freed]
    # the outer witness once, the inner one per expanded instance
    assert names == ["kappa2#1", "tau2#2", "tau2#3", "tau2#4"]
    assert len(set(names)) == len(names)


def test_transform_of_the_bundled_programs_is_reproducible():
    phi, _ = necessary_condition(benchmarks.load("running_example"))
    kb = k_bound_transform(phi, 25)
    assert kb.k == 25
    assert len(kb.freed) == 54
    assert [c.name for c in kb.freed[:3]] == ["kappa1#1", "kappa2#2", "tau2#3"]
    assert len({c.name for c in kb.freed}) == 54
    assert not has_quantifier(kb.formula)
    again = k_bound_transform(phi, 25)
    assert again.formula == kb.formula and again.freed == kb.freed


EVAL_CORPUS = (
    "running_example",
    "hello",
    "oneloop",
    "twoloops",
    "windriver",
    "t2witness",
)


@functools.lru_cache(maxsize=None)
def _phi(name):
    return necessary_condition(benchmarks.load(name))[0]


@settings(max_examples=200)
@given(data=st.data())
def test_suite_expansion_weakens_and_is_monotone_in_k(data):
    """Ground check over the bundled programs: whenever the full condition
    holds for an input (with existential witnesses up to a fixed bound), so
    does every expansion; and raising K only tightens the expansion."""
    name = data.draw(st.sampled_from(EVAL_CORPUS))
    fg = benchmarks.load(name)
    phi = _phi(name)
    k = data.draw(st.integers(0, 4))
    scalars = {
        a: data.draw(st.integers(-2, 8), label=f"scalar {a}") for a in fg.scalars
    }
    arrays = {
        name: ArrayFunc(table.entries, table.default)
        for name, table in fg.const_arrays.items()
    }
    for arr in sorted(fg.arrays):
        if arr in fg.const_arrays:
            continue
        entries = data.draw(
            st.dictionaries(
                st.tuples(st.integers(0, 7)), st.integers(-1, 2), max_size=6
            ),
            label=f"array {arr}",
        )
        arrays[arr] = ArrayFunc.from_dict(entries, default=data.draw(st.integers(0, 1)))

    bound = 6
    full = eval_concrete(phi, scalars, arrays=arrays, exists_bound=bound)
    at_k = eval_concrete(
        expand_universals(phi, k), scalars, arrays=arrays, exists_bound=bound
    )
    above = eval_concrete(
        expand_universals(phi, k + 1), scalars, arrays=arrays, exists_bound=bound
    )
    if full is True:
        assert at_k is True and above is True
    if above is True:
        assert at_k is True
