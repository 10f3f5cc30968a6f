"""Program representation and the symbolic term/formula algebra."""

from .exprs import (
    And,
    ArrayApp,
    ArrayRead,
    BinOp,
    BoolLit,
    Cmp,
    Counter,
    Exists,
    Expr,
    FALSE,
    Forall,
    Formula,
    FreeConst,
    Implies,
    IntLit,
    Node,
    Not,
    Or,
    STAR,
    Star,
    Sym,
    TRUE,
    Var,
    add,
    and_,
    array_apps,
    contains_star,
    ediv,
    emod,
    equal_terms,
    exists,
    forall,
    free_consts,
    free_counters,
    free_syms,
    has_quantifier,
    idiv,
    imod,
    implies_,
    mul,
    node_count,
    normalize,
    not_,
    or_,
    show,
    simplify,
    sort_key,
    sub,
    substitute,
    subterms,
)
from .flowgraph import Assign, Assume, ConstArray, Flowgraph, Instruction, SemanticError, validate
from .parser import ParseError, parse_condition, parse_program
from .state import SymbolicState, apply_syms, apply_vars, compose
from .concrete import ArrayFunc, EvalError, eval_concrete

__all__ = [name for name in dir() if not name.startswith("_")]
