"""Symbolic execution of backbones with loops replaced by summaries.

Execution walks an acyclic backbone keeping a symbolic state and a path
condition.  Whenever the walk stands at the entry of a loop, the loop's
summary is spliced in before the next edge:

* the summary's *iterated state* gives each variable's value after an
  arbitrary number of iterations, expressed with one fresh counter per
  backbone of the loop body (or the unknown value when no such closed form
  exists);
* the summary's *loop condition* constrains those counters to iteration
  counts that the body can actually realize, quantifying over individual
  iterations.

Summaries are computed by recursively analyzing the loop body as its own
flowgraph.  A tested condition that mentions the unknown value is simply not
recorded, which keeps the final condition necessary (never sufficient) for
reaching the target.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field

from .ir import (
    And,
    BinOp,
    Cmp,
    Counter,
    Expr,
    Formula,
    IntLit,
    FALSE,
    STAR,
    Star,
    Sym,
    SymbolicState,
    TRUE,
    and_,
    apply_syms,
    apply_vars,
    compose,
    contains_star,
    exists,
    forall,
    free_counters,
    implies_,
    normalize,
    simplify,
    substitute,
    subterms,
)
from .ir.flowgraph import Assign, Assume, Flowgraph
from .paths import Loop, enumerate_backbones, induced_flowgraph, loops_along


class CounterSource:
    """Monotone source of counter indices, shared by one whole analysis so
    that every loop backbone gets a globally fresh pair (kappa_i, tau_i)."""

    def __init__(self, start: int = 1):
        self._it = itertools.count(start)
        self._lock = threading.Lock()

    def fresh_pair(self) -> tuple[Counter, Counter]:
        with self._lock:
            idx = next(self._it)
        return Counter(idx), Counter(idx, step=True)


@dataclass(frozen=True)
class LoopSummary:
    """Net effect of iterating a loop an arbitrary number of times."""

    loop: Loop
    backbones: tuple[tuple[str, ...], ...]
    counters: tuple[Counter, ...]  # one per body backbone, same order
    iterated_state: SymbolicState
    condition: Formula  # constrains the counters; quantifies iteration steps


@dataclass(frozen=True)
class BackboneResult:
    backbone: tuple[str, ...]
    state: SymbolicState
    condition: Formula
    summaries: tuple[tuple[int, LoopSummary], ...] = ()  # (position, summary)


@dataclass
class AnalysisContext:
    counters: CounterSource = field(default_factory=CounterSource)
    max_backbones: int = 10_000
    max_depth: int = 50
    _memo: dict = field(default_factory=dict)
    _depth: int = 0


# ---------------------------------------------------------------------------
# iterated state


def _improved_value(
    var: str,
    results: list[BackboneResult],
    iterated: dict[str, Expr],
    counters: tuple[Counter, ...],
) -> Expr:
    """Closed form for `var` after (k_1, ..., k_l) iterations, if one exists.

    Either the variable is untouched by every body backbone, or every
    backbone adds a per-iteration increment whose value is already known to
    be iteration-independent; anything else is unknown."""
    sym = Sym(var)
    finals = [normalize(r.state[var]) for r in results]
    if all(f == sym for f in finals):
        return sym
    acc: Expr = sym
    for final, kappa in zip(finals, counters):
        if final == sym:
            continue
        if isinstance(final, Star):
            return STAR
        delta = normalize(BinOp("-", final, sym))
        if any(n == sym for n in subterms(delta)):
            return STAR
        lifted = normalize(substitute(delta, {Sym(a): v for a, v in iterated.items()}))
        if isinstance(lifted, Star) or free_counters(lifted):
            return STAR
        acc = normalize(BinOp("+", acc, BinOp("*", delta, kappa)))
    return acc


def iterated_state(
    results: list[BackboneResult],
    counters: tuple[Counter, ...],
    scalars: tuple[str, ...],
) -> SymbolicState:
    """Fixpoint over the variables: start all-unknown, repeatedly resolve
    variables whose increments are expressible with the values found so far.
    Declaration order makes runs reproducible; the fixpoint makes the result
    order-independent."""
    values: dict[str, Expr] = {a: STAR for a in scalars}
    changed = True
    while changed:
        changed = False
        for a in scalars:
            if not isinstance(values[a], Star):
                continue
            e = _improved_value(a, results, values, counters)
            if not isinstance(e, Star):
                values[a] = e
                changed = True
    return SymbolicState(tuple((a, values[a]) for a in scalars))


# ---------------------------------------------------------------------------
# loop condition


def _drop_star_conjuncts(f: Formula) -> Formula:
    parts = f.args if isinstance(f, And) else (f,)
    kept = [p for p in parts if not contains_star(p)]
    return and_(*kept)


def loop_condition(
    results: list[BackboneResult],
    counters: tuple[Counter, ...],
    iterated: SymbolicState,
) -> Formula:
    """Conjunction over body backbones i of:

        forall tau_i (0 <= tau_i < kappa_i ->
            exists {tau_j}_{j!=i} (0 <= tau_j <= kappa_j /\\
                exists inner (inner >= 0 /\\ gamma_i)))

    where gamma_i re-expresses backbone i's condition at the iteration
    indexed by the tau counters (conditions on unknown values dropped) and
    `inner` collects counters of loops nested inside that backbone."""
    taus = tuple(Counter(k.idx, step=True) for k in counters)
    rename = {k: t for k, t in zip(counters, taus)}
    psis: list[Formula] = []
    for i, res in enumerate(results):
        inner = tuple(sorted(free_counters(res.condition), key=lambda c: (c.idx, c.step)))
        gamma = apply_syms(iterated, res.condition)
        gamma = substitute(gamma, rename)  # type: ignore[arg-type]
        gamma = _drop_star_conjuncts(simplify(gamma))
        if inner and gamma != TRUE:
            nonneg = [Cmp(">=", k, IntLit(0)) for k in inner]
            gamma = exists(inner, and_(*nonneg, gamma))
        if gamma == FALSE:
            # backbone i can never execute, so its counter is pinned at zero
            psis.append(Cmp("<=", counters[i], IntLit(0)))
            continue
        others = [(taus[j], counters[j]) for j in range(len(results)) if j != i]
        if others:
            bounds: list[Formula] = []
            for t, k in others:
                bounds.append(Cmp("<=", IntLit(0), t))
                bounds.append(Cmp("<=", t, k))
            gamma = exists(tuple(t for t, _ in others), and_(*bounds, gamma))
        ant = and_(Cmp("<=", IntLit(0), taus[i]), Cmp("<", taus[i], counters[i]))
        psis.append(forall((taus[i],), implies_(ant, gamma)))
    return and_(*psis)


# ---------------------------------------------------------------------------
# the two mutually recursive passes


def compute_summary(fg: Flowgraph, loop: Loop, ctx: AnalysisContext) -> LoopSummary:
    """Summary of one loop, memoized on (body, entry) per analysis."""
    key = (loop.body, loop.entry)
    if key in ctx._memo:
        cached: LoopSummary = ctx._memo[key]
        return LoopSummary(loop, cached.backbones, cached.counters,
                           cached.iterated_state, cached.condition)
    if ctx._depth >= ctx.max_depth:
        raise RecursionError(
            f"loop nesting deeper than {ctx.max_depth} at entry '{loop.entry}'"
        )
    body_fg = induced_flowgraph(fg, loop)
    bbs = enumerate_backbones(body_fg, ctx.max_backbones)
    ctx._depth += 1
    try:
        results = execute_backbones(body_fg, bbs, ctx)
    finally:
        ctx._depth -= 1
    counters = []
    for _ in results:
        kappa, _tau = ctx.counters.fresh_pair()
        counters.append(kappa)
    counters = tuple(counters)
    state = iterated_state(results, counters, fg.scalars)
    cond = loop_condition(results, counters, state)
    summary = LoopSummary(loop, tuple(r.backbone for r in results), counters, state, cond)
    ctx._memo[key] = summary
    return summary


def execute_backbones(
    fg: Flowgraph,
    backbones: list[tuple[str, ...]],
    ctx: AnalysisContext | None = None,
) -> list[BackboneResult]:
    """Symbolically execute each backbone, splicing in loop summaries."""
    ctx = ctx or AnalysisContext()
    out: list[BackboneResult] = []
    for bb in backbones:
        summaries: dict[int, LoopSummary] = {}
        for loop in loops_along(fg, bb):
            summaries[loop.position] = compute_summary(fg, loop, ctx)
        state = SymbolicState.identity(fg.scalars)
        conjuncts: list[Formula] = []
        for j in range(len(bb) - 1):
            if j in summaries:
                summ = summaries[j]
                spliced = simplify(apply_syms(state, summ.condition))
                conjuncts.append(_drop_star_conjuncts(spliced))
                state = compose(state, summ.iterated_state)
            ins = fg.label[(bb[j], bb[j + 1])]
            if isinstance(ins, Assume):
                cond = simplify(apply_vars(state, ins.cond))
                if not contains_star(cond):
                    conjuncts.append(cond)
            else:
                assert isinstance(ins, Assign)
                state = state.set(ins.var, normalize(apply_vars(state, ins.rhs)))
        out.append(
            BackboneResult(
                backbone=bb,
                state=state,
                condition=and_(*conjuncts),
                summaries=tuple(sorted(summaries.items())),
            )
        )
    return out


def necessary_condition(
    fg: Flowgraph,
    ctx: AnalysisContext | None = None,
) -> tuple[Formula, list[BackboneResult]]:
    """Disjunction over backbones of the path condition with its free
    counters existentially quantified (each at least 0).  Unsatisfiability
    proves the target unreachable; satisfiability proves nothing by itself.
    """
    from .ir import or_

    ctx = ctx or AnalysisContext()
    bbs = enumerate_backbones(fg, ctx.max_backbones)
    results = execute_backbones(fg, bbs, ctx)
    disjuncts: list[Formula] = []
    for res in results:
        ks = tuple(sorted(free_counters(res.condition), key=lambda c: (c.idx, c.step)))
        phi = res.condition
        if ks:
            nonneg = [Cmp(">=", k, IntLit(0)) for k in ks]
            phi = exists(ks, and_(*nonneg, phi))
        disjuncts.append(phi)
    return simplify(or_(*disjuncts)), results
