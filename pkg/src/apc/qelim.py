"""Bound-K elimination of quantifiers.

Every universal the analysis produces has the shape

    forall tau (0 <= tau && tau < bound -> body)

Replacing it by the conjunction over tau = 0..K of (tau < bound -> body)
yields a weaker formula (iterations beyond K are no longer constrained), so
unsatisfiability of the result still proves the target unreachable.  After
the expansion only existential counters remain and each becomes a distinct
uninterpreted constant -- its bounding conjuncts stay in place, and every
freed constant is additionally pinned to be non-negative at the top level
(sound: the constants are fresh, and a model of the original formula always
admits non-negative witnesses).

The transform is applied innermost-first so nested loop conditions expand
before the universal wrapping them duplicates the result.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .ir import (
    And,
    BoolLit,
    Cmp,
    Counter,
    Exists,
    Forall,
    Formula,
    FreeConst,
    Implies,
    IntLit,
    Not,
    Or,
    and_,
    free_consts,
    has_quantifier,
    implies_,
    simplify,
    substitute,
)

DEFAULT_K = 25


class TransformError(Exception):
    """A universal quantifier did not have the expected bounded shape."""


@dataclass(frozen=True)
class KBoundedFormula:
    formula: Formula
    k: int
    freed: tuple[FreeConst, ...]


def _split_forall(node: Forall) -> tuple[Counter, Formula, Formula]:
    """Return (counter, upper bound expr as formula-side, body)."""
    if len(node.vars) != 1:
        raise TransformError(
            f"universal quantifier binds {len(node.vars)} counters, expected 1"
        )
    v = node.vars[0]
    body = node.body
    if not isinstance(body, Implies):
        raise TransformError(f"universal over {v.name} is not an implication")
    ant = body.lhs.args if isinstance(body.lhs, And) else (body.lhs,)
    upper = None
    for c in ant:
        if isinstance(c, Cmp) and c.op == "<" and c.lhs == v:
            upper = c.rhs
        elif isinstance(c, Cmp) and c.op == "<=" and c.lhs == IntLit(0) and c.rhs == v:
            continue
        elif isinstance(c, Cmp) and c.op == ">=" and c.lhs == v and c.rhs == IntLit(0):
            continue
        else:
            raise TransformError(
                f"universal over {v.name} has unexpected antecedent conjunct"
            )
    if upper is None:
        raise TransformError(f"universal over {v.name} has no strict upper bound")
    return v, upper, body.rhs


def expand_universals(phi: Formula, k: int) -> Formula:
    """Replace every universal by the conjunction of its first K+1 instances.

    Existential quantifiers are left in place, so the result is a plain
    weakening of `phi` (each dropped instance was one more constraint); the
    full transform additionally frees the existentials, which preserves
    satisfiability instance by instance."""
    if k < 0:
        raise ValueError("bound K must be >= 0")

    def expand(f: Formula) -> Formula:
        if isinstance(f, (BoolLit, Cmp)):
            return f
        if isinstance(f, Not):
            return Not(expand(f.body))
        if isinstance(f, (And, Or)):
            return type(f)(tuple(expand(a) for a in f.args))
        if isinstance(f, Implies):
            return Implies(expand(f.lhs), expand(f.rhs))
        if isinstance(f, Exists):
            return Exists(f.vars, expand(f.body))
        if isinstance(f, Forall):
            v, upper, body = _split_forall(f)
            body = expand(body)  # innermost-first
            insts = []
            for t in range(k + 1):
                inst = substitute(body, {v: IntLit(t)})
                insts.append(implies_(simplify(Cmp("<", IntLit(t), upper)), simplify(inst)))
            return and_(*insts)
        raise TransformError(f"unexpected formula node {type(f).__name__}")

    return expand(phi)


def k_bound_transform(phi: Formula, k: int = DEFAULT_K) -> KBoundedFormula:
    """Expand universals to K+1 instances, then free all existentials."""
    ids = itertools.count(1)
    freed: list[FreeConst] = []

    def free(f: Formula) -> Formula:
        if isinstance(f, (BoolLit, Cmp)):
            return f
        if isinstance(f, Not):
            return Not(free(f.body))
        if isinstance(f, (And, Or)):
            return type(f)(tuple(free(a) for a in f.args))
        if isinstance(f, Implies):
            return Implies(free(f.lhs), free(f.rhs))
        if isinstance(f, Forall):
            raise TransformError("universal quantifier survived expansion")
        if isinstance(f, Exists):
            mapping = {}
            for v in f.vars:
                const = FreeConst(f"{v.name}#{next(ids)}")
                freed.append(const)
                mapping[v] = const
            return free(substitute(f.body, mapping))
        raise TransformError(f"unexpected formula node {type(f).__name__}")

    core = free(expand_universals(phi, k))
    nonneg = [Cmp(">=", c, IntLit(0)) for c in freed]
    out = simplify(and_(*nonneg, core))
    assert not has_quantifier(out)
    return KBoundedFormula(formula=out, k=k, freed=tuple(freed))
