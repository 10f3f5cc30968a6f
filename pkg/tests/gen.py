"""Random programs, formulas, and a tiny reference interpreter.

Everything here is deliberately primitive: generated programs use only
+/-/* arithmetic (so no undefinedness questions), at most three scalars,
and graph shapes where the intended property is easy to state.  The
`step_instr`/`eval_prog` helpers form an in-test interpreter that shares
no code with the package's own evaluators.
"""

from __future__ import annotations

from hypothesis import strategies as st

from apc.ir import (
    Assign,
    Assume,
    BinOp,
    Cmp,
    Flowgraph,
    Formula,
    IntLit,
    Var,
    and_,
    not_,
    or_,
    validate,
)

VARS = ("x", "y", "z")

CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")


# ---------------------------------------------------------------------------
# reference evaluation of program expressions/conditions (no package code)


def eval_expr(e, store):
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, Var):
        return store[e.name]
    if isinstance(e, BinOp):
        a, b = eval_expr(e.lhs, store), eval_expr(e.rhs, store)
        return {"+": a + b, "-": a - b, "*": a * b}[e.op]
    raise TypeError(f"unsupported expr {e!r}")


def eval_cond(f, store):
    if isinstance(f, Cmp):
        a, b = eval_expr(f.lhs, store), eval_expr(f.rhs, store)
        return {
            "==": a == b,
            "!=": a != b,
            "<": a < b,
            "<=": a <= b,
            ">": a > b,
            ">=": a >= b,
        }[f.op]
    if hasattr(f, "args") and type(f).__name__ == "And":
        return all(eval_cond(a, store) for a in f.args)
    if hasattr(f, "args") and type(f).__name__ == "Or":
        return any(eval_cond(a, store) for a in f.args)
    if type(f).__name__ == "Not":
        return not eval_cond(f.body, store)
    if type(f).__name__ == "BoolLit":
        return f.value
    raise TypeError(f"unsupported cond {f!r}")


def run_flowgraph(fg: Flowgraph, store: dict, max_steps: int = 500):
    """Walk the flowgraph deterministically; returns (reached, final store)."""
    store = dict(store)
    node = fg.start
    for _ in range(max_steps):
        if node == fg.target:
            return True, store
        enabled = []
        for (u, v), ins in sorted(fg.label.items()):
            if u != node:
                continue
            if isinstance(ins, Assume):
                if eval_cond(ins.cond, store):
                    enabled.append((v, ins))
            else:
                enabled.append((v, ins))
        if not enabled:
            return False, store
        v, ins = enabled[0]
        if isinstance(ins, Assign):
            store[ins.var] = eval_expr(ins.rhs, store)
        node = v
    return node == fg.target, store


# ---------------------------------------------------------------------------
# strategies


@st.composite
def linear_exprs(draw, scalars):
    e = IntLit(draw(st.integers(-3, 3)))
    for v in scalars:
        c = draw(st.integers(-2, 2))
        if c == 0:
            continue
        term = Var(v) if c == 1 else BinOp("*", IntLit(c), Var(v))
        e = BinOp("+", e, term)
    return e


@st.composite
def atom_conds(draw, scalars):
    op = draw(st.sampled_from(CMP_OPS))
    return Cmp(op, draw(linear_exprs(scalars)), draw(linear_exprs(scalars)))


@st.composite
def conds(draw, scalars):
    """A comparison, or a shallow and/or of two comparisons."""
    shape = draw(st.sampled_from(["atom", "atom", "and", "or", "neg"]))
    if shape == "atom":
        return draw(atom_conds(scalars))
    a, b = draw(atom_conds(scalars)), draw(atom_conds(scalars))
    if shape == "and":
        return and_(a, b)
    if shape == "or":
        return or_(a, b)
    return not_(a)


@st.composite
def dag_flowgraphs(draw):
    """Loop-free program: forward edges over v0..v{n-1}, v0 start, last target.

    Branching nodes get complementary assumes by construction; other nodes
    get one assignment or one plain assume.
    """
    nv = draw(st.integers(1, 3))
    scalars = VARS[:nv]
    n = draw(st.integers(3, 7))
    names = [f"v{i}" for i in range(n)]
    label = {}
    for i in range(n - 1):
        succs = list(range(i + 1, n))
        if len(succs) >= 2 and draw(st.booleans()):
            pair = draw(
                st.lists(st.sampled_from(succs), min_size=2, max_size=2, unique=True)
            )
            c = draw(conds(scalars))
            label[(names[i], names[pair[0]])] = Assume(c)
            label[(names[i], names[pair[1]])] = Assume(not_(c))
        else:
            j = draw(st.sampled_from(succs))
            if draw(st.integers(0, 2)) == 0:
                label[(names[i], names[j])] = Assume(draw(conds(scalars)))
            else:
                var = draw(st.sampled_from(scalars))
                label[(names[i], names[j])] = Assign(var, draw(linear_exprs(scalars)))
    fg = Flowgraph(
        scalars=tuple(scalars),
        arrays={},
        nodes=frozenset(names),
        start=names[0],
        target=names[-1],
        label=label,
    )
    validate(fg)
    return fg


def _increment(draw, scalars, var):
    """Assignment kinds stressing the improved-value analysis."""
    kind = draw(st.sampled_from(["step", "step", "step", "reset", "mix"]))
    if kind == "step":
        return Assign(var, BinOp("+", Var(var), IntLit(draw(st.integers(-3, 3)))))
    if kind == "reset":
        return Assign(var, IntLit(draw(st.integers(-2, 2))))
    other = draw(st.sampled_from(scalars))
    return Assign(var, BinOp("+", Var(var), Var(other)))


@st.composite
def loop_bodies(draw):
    """A loop body as its own flowgraph: start h, one or two backbones of
    one intermediate node each, target the fresh exit h_out."""
    nv = draw(st.integers(1, 3))
    scalars = VARS[:nv]
    m = draw(st.integers(1, 2))
    label = {}
    if m == 1:
        label[("h", "u0")] = _increment(draw, scalars, draw(st.sampled_from(scalars)))
        label[("u0", "h_out")] = _increment(draw, scalars, draw(st.sampled_from(scalars)))
        nodes = frozenset(["h", "u0", "h_out"])
    else:
        g = draw(conds(scalars))
        label[("h", "u0")] = Assume(g)
        label[("h", "u1")] = Assume(not_(g))
        label[("u0", "h_out")] = _increment(draw, scalars, draw(st.sampled_from(scalars)))
        label[("u1", "h_out")] = _increment(draw, scalars, draw(st.sampled_from(scalars)))
        nodes = frozenset(["h", "u0", "u1", "h_out"])
    fg = Flowgraph(
        scalars=tuple(scalars),
        arrays={},
        nodes=nodes,
        start="h",
        target="h_out",
        label=label,
    )
    validate(fg)
    return fg


@st.composite
def loopy_flowgraphs(draw):
    """A full program with one loop: init, guarded body back to the head,
    then a final assume in front of the target."""
    nv = draw(st.integers(2, 3))
    scalars = VARS[:nv]
    g = draw(atom_conds(scalars))
    label = {
        ("s", "h"): Assign(
            draw(st.sampled_from(scalars)), draw(linear_exprs(scalars))
        ),
        ("h", "b"): Assume(g),
        ("h", "e"): Assume(not_(g)),
    }
    nodes = {"s", "h", "b", "e", "t"}
    if draw(st.booleans()):
        # two body backbones through a diamond
        g2 = draw(atom_conds(scalars))
        label[("b", "d0")] = Assume(g2)
        label[("b", "d1")] = Assume(not_(g2))
        label[("d0", "h")] = _increment(draw, scalars, draw(st.sampled_from(scalars)))
        label[("d1", "h")] = _increment(draw, scalars, draw(st.sampled_from(scalars)))
        nodes |= {"d0", "d1"}
    else:
        label[("b", "h")] = _increment(draw, scalars, draw(st.sampled_from(scalars)))
    if draw(st.booleans()):
        label[("e", "t")] = Assume(draw(atom_conds(scalars)))
    else:
        label[("e", "t")] = Assign(
            draw(st.sampled_from(scalars)), draw(linear_exprs(scalars))
        )
    fg = Flowgraph(
        scalars=tuple(scalars),
        arrays={},
        nodes=frozenset(nodes),
        start="s",
        target="t",
        label=label,
    )
    validate(fg)
    return fg


@st.composite
def digraphs(draw):
    """Arbitrary digraph (start v0, target v{n-1}) for path enumeration."""
    n = draw(st.integers(2, 12))
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))
    edges = draw(st.sets(pairs, max_size=min(3 * n, 24)))
    label = {(f"v{u}", f"v{v}"): Assume(Cmp("==", IntLit(0), IntLit(0))) for u, v in edges}
    nodes = frozenset(f"v{i}" for i in range(n))
    return Flowgraph(
        scalars=(),
        arrays={},
        nodes=nodes,
        start="v0",
        target=f"v{n - 1}",
        label=label,
    )


@st.composite
def node_paths(draw):
    """A node sequence that starts at s and ends at t, repeats allowed."""
    mid = draw(st.lists(st.sampled_from("abcdefg"), max_size=14))
    return ("s", *mid, "t")
