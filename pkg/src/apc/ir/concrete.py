"""Ground evaluation of symbolic terms and formulas.

Inputs bind scalar symbols to integers and array symbols to total functions
(finite table + default).  Quantified counters are evaluated by enumeration:
universally quantified counters must have a syntactic upper bound in the
antecedent, existentially quantified ones use an in-formula bound when one
is present and otherwise fall back to `exists_bound` (which must then be
supplied — every quantifier this analysis produces carries explicit bound
conjuncts, so enumeration beyond them is harmless).

Division or modulo by zero makes a term undefined; undefinedness propagates
to `None` results (an undefined condition is neither true nor false).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from .exprs import (
    And,
    ArrayApp,
    BinOp,
    BoolLit,
    Cmp,
    Counter,
    Exists,
    Expr,
    Forall,
    Formula,
    FreeConst,
    Implies,
    IntLit,
    Node,
    Not,
    Or,
    Star,
    Sym,
    ediv,
    emod,
)


class EvalError(Exception):
    pass


@dataclass(frozen=True)
class ArrayFunc:
    """Total integer function over index tuples: finite table + default."""

    entries: tuple[tuple[tuple[int, ...], int], ...] = ()
    default: int = 0

    def __call__(self, idx: tuple[int, ...]) -> int:
        for key, val in self.entries:
            if key == idx:
                return val
        return self.default

    def as_dict(self) -> dict[tuple[int, ...], int]:
        return dict(self.entries)

    @staticmethod
    def from_dict(d: Mapping[tuple[int, ...], int], default: int = 0) -> "ArrayFunc":
        return ArrayFunc(tuple(sorted(d.items())), default)


_CMP = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _counter_range(
    v: Counter,
    conjuncts: tuple[Formula, ...],
    env: dict,
    eval_expr,
    exists_bound: Optional[int],
    universal: bool,
) -> range:
    """Enumeration range for a quantified counter, from its bound conjuncts.

    Recognizes 0 <= v / v >= 0 lower bounds and v < e / v <= e upper bounds
    where e evaluates in the current environment."""
    upper: Optional[int] = None
    for c in conjuncts:
        if not isinstance(c, Cmp):
            continue
        try:
            if c.op in ("<", "<=") and c.lhs == v and v not in _counters_of(c.rhs):
                val = eval_expr(c.rhs, env)
                if val is None:
                    continue
                bound = val - 1 if c.op == "<" else val
                upper = bound if upper is None else min(upper, bound)
            if c.op in (">", ">=") and c.rhs == v and v not in _counters_of(c.lhs):
                val = eval_expr(c.lhs, env)
                if val is None:
                    continue
                bound = val - 1 if c.op == ">" else val
                upper = bound if upper is None else min(upper, bound)
        except EvalError:
            continue
    if upper is None:
        if universal:
            raise EvalError(f"universal counter {v.name} has no evaluable upper bound")
        if exists_bound is None:
            raise EvalError(
                f"existential counter {v.name} is unbounded; pass exists_bound"
            )
        upper = exists_bound
    return range(0, upper + 1)


def _counters_of(e: Expr) -> set:
    from .exprs import free_counters

    return set(free_counters(e))


def eval_concrete(
    node: Node,
    inputs: Mapping[str, int],
    arrays: Mapping[str, ArrayFunc] | None = None,
    counters: Mapping[Counter, int] | None = None,
    exists_bound: Optional[int] = None,
    free_consts: Mapping[str, int] | None = None,
) -> Union[int, bool, None]:
    """Evaluate a symbolic term or formula to an int, bool, or None."""
    arrays = arrays or {}
    env: dict = dict(counters or {})
    fcs = dict(free_consts or {})

    def ee(e: Expr, env: dict) -> Optional[int]:
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, Sym):
            if e.name not in inputs:
                raise EvalError(f"unbound input symbol '{e.name}'")
            return inputs[e.name]
        if isinstance(e, Counter):
            if e not in env:
                raise EvalError(f"unbound counter {e.name}")
            return env[e]
        if isinstance(e, FreeConst):
            if e.name not in fcs:
                raise EvalError(f"unbound constant '{e.name}'")
            return fcs[e.name]
        if isinstance(e, Star):
            raise EvalError("cannot evaluate the unknown value")
        if isinstance(e, ArrayApp):
            if e.name not in arrays:
                raise EvalError(f"unbound array symbol '{e.name}'")
            args = tuple(ee(a, env) for a in e.args)
            if any(a is None for a in args):
                return None
            return arrays[e.name](args)  # type: ignore[arg-type]
        if isinstance(e, BinOp):
            a = ee(e.lhs, env)
            b = ee(e.rhs, env)
            if a is None or b is None:
                return None
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "div":
                return ediv(a, b)
            if e.op == "mod":
                return emod(a, b)
        raise EvalError(f"cannot evaluate term {e!r}")

    def ef(f: Formula, env: dict) -> Optional[bool]:
        if isinstance(f, BoolLit):
            return f.value
        if isinstance(f, Cmp):
            a = ee(f.lhs, env)
            b = ee(f.rhs, env)
            if a is None or b is None:
                return None
            return _CMP[f.op](a, b)
        if isinstance(f, Not):
            v = ef(f.body, env)
            return None if v is None else not v
        if isinstance(f, And):
            saw_none = False
            for a in f.args:
                v = ef(a, env)
                if v is False:
                    return False
                if v is None:
                    saw_none = True
            return None if saw_none else True
        if isinstance(f, Or):
            saw_none = False
            for a in f.args:
                v = ef(a, env)
                if v is True:
                    return True
                if v is None:
                    saw_none = True
            return None if saw_none else False
        if isinstance(f, Implies):
            a = ef(f.lhs, env)
            if a is False:
                return True
            b = ef(f.rhs, env)
            if b is True:
                return True
            if a is None or b is None:
                return None
            return b
        if isinstance(f, Forall):
            return _quant(f.vars, f.body, env, True)
        if isinstance(f, Exists):
            return _quant(f.vars, f.body, env, False)
        raise EvalError(f"cannot evaluate formula {f!r}")

    def _bound_conjuncts(body: Formula, universal: bool) -> tuple[Formula, ...]:
        if universal and isinstance(body, Implies):
            ant = body.lhs
            return ant.args if isinstance(ant, And) else (ant,)
        if not universal and isinstance(body, And):
            return body.args
        return (body,)

    def _quant(vars: tuple[Counter, ...], body: Formula, env: dict, universal: bool) -> Optional[bool]:
        if not vars:
            return ef(body, env)
        v, rest = vars[0], vars[1:]
        conj = _bound_conjuncts(body, universal)
        rng = _counter_range(v, conj, env, ee, exists_bound, universal)
        saw_none = False
        for val in rng:
            env2 = dict(env)
            env2[v] = val
            r = _quant(rest, body, env2, universal)
            if universal and r is False:
                return False
            if not universal and r is True:
                return True
            if r is None:
                saw_none = True
        if saw_none:
            return None
        return universal

    if isinstance(node, (BoolLit, Cmp, Not, And, Or, Implies, Forall, Exists)):
        return ef(node, env)
    return ee(node, env)
