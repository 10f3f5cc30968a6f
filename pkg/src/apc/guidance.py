"""Frontier pruning and test-input extraction around the necessary condition.

A symbolic-execution host hands us a frontier: program locations paired with
the exact path conditions under which they were reached.  Any location whose
condition is jointly unsatisfiable with the necessary condition can never be
extended to the target, so it is discarded.  Sat models, conversely, are
projected onto the program's input symbols to produce concrete test inputs.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .ir import (
    And,
    ArrayApp,
    ArrayRead,
    BinOp,
    BoolLit,
    Cmp,
    Flowgraph,
    Formula,
    Implies,
    IntLit,
    Not,
    Or,
    ParseError,
    Sym,
    Var,
    and_,
    contains_star,
    free_counters,
    parse_condition,
)
from .ir.concrete import ArrayFunc
from .oracle import ConcreteInput
from .smt import SolverConfig, Verdict, race_check

__all__ = [
    "ConcreteInput",
    "FrontierEntry",
    "GuidanceConfig",
    "extract_input",
    "parse_frontier",
    "parse_input_file",
    "prune_frontier",
    "render_input",
    "symbolize",
]


@dataclass(frozen=True)
class FrontierEntry:
    """A pending location v and the path condition under which the host's
    symbolic executor reached it (quantifier-free, over input symbols)."""

    location: str
    condition: Formula

    def __post_init__(self) -> None:
        if contains_star(self.condition):
            raise ValueError("frontier condition contains the unknown value")
        if free_counters(self.condition):
            raise ValueError("frontier condition contains path counters")


@dataclass(frozen=True)
class GuidanceConfig:
    solver: SolverConfig = field(default_factory=SolverConfig)
    k: int = 25
    jobs: int = 2


def symbolize(f: Formula) -> Formula:
    """Rewrite program variables a / A[...] to their input symbols."""
    if isinstance(f, Var):
        return Sym(f.name)
    if isinstance(f, ArrayRead):
        return ArrayApp(f.name, tuple(symbolize(a) for a in f.args))
    if isinstance(f, BinOp):
        return BinOp(f.op, symbolize(f.lhs), symbolize(f.rhs))
    if isinstance(f, Cmp):
        return Cmp(f.op, symbolize(f.lhs), symbolize(f.rhs))
    if isinstance(f, Not):
        return Not(symbolize(f.body))
    if isinstance(f, And):
        return And(tuple(symbolize(a) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(symbolize(a) for a in f.args))
    if isinstance(f, Implies):
        return Implies(symbolize(f.lhs), symbolize(f.rhs))
    if isinstance(f, (IntLit, BoolLit, Sym, ArrayApp)):
        return f
    raise TypeError(f"cannot symbolize {f!r}")


def parse_frontier(text: str) -> list[FrontierEntry]:
    """One `<node> ; <formula>` per line; blank lines and # comments skipped."""
    entries: list[FrontierEntry] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ";" not in line:
            raise ParseError(lineno, 1, "expected '<node> ; <formula>'")
        node, _, rest = line.partition(";")
        node = node.strip()
        if not node:
            raise ParseError(lineno, 1, "missing node name")
        cond = parse_condition(rest.strip(), line=lineno)
        entries.append(FrontierEntry(node, symbolize(cond)))
    return entries


def unsymbolize(f: Formula) -> Formula:
    """Inverse of symbolize, for writing conditions back in file syntax."""
    if isinstance(f, Sym):
        return Var(f.name)
    if isinstance(f, ArrayApp):
        return ArrayRead(f.name, tuple(unsymbolize(a) for a in f.args))
    if isinstance(f, BinOp):
        return BinOp(f.op, unsymbolize(f.lhs), unsymbolize(f.rhs))
    if isinstance(f, Cmp):
        return Cmp(f.op, unsymbolize(f.lhs), unsymbolize(f.rhs))
    if isinstance(f, Not):
        return Not(unsymbolize(f.body))
    if isinstance(f, And):
        return And(tuple(unsymbolize(a) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(unsymbolize(a) for a in f.args))
    if isinstance(f, Implies):
        return Implies(unsymbolize(f.lhs), unsymbolize(f.rhs))
    if isinstance(f, (IntLit, BoolLit, Var, ArrayRead)):
        return f
    raise TypeError(f"cannot render {f!r} in file syntax")


def render_frontier(entries: list[FrontierEntry]) -> str:
    from .ir import show

    return "".join(f"{e.location} ; {show(unsymbolize(e.condition))}\n" for e in entries)


def prune_frontier(
    frontier: list[FrontierEntry],
    phi_hat: Formula,
    config: GuidanceConfig | None = None,
    const_arrays=None,
) -> list[FrontierEntry]:
    """Drop entries whose condition contradicts the necessary condition.

    Only a definitive unsat removes an entry; unknown, timeout, and solver
    errors keep it (with a warning), so pruning can only err on the side of
    keeping work."""
    config = config or GuidanceConfig()

    def verdict(entry: FrontierEntry) -> Verdict:
        query = and_(entry.condition, phi_hat)
        try:
            return race_check(
                query, k=config.k, config=config.solver, const_arrays=const_arrays
            )
        except Exception as exc:
            return Verdict("error", detail=f"{type(exc).__name__}: {exc}")

    with ThreadPoolExecutor(max_workers=max(1, config.jobs)) as pool:
        verdicts = list(pool.map(verdict, frontier))
    kept: list[FrontierEntry] = []
    for entry, v in zip(frontier, verdicts):
        if v.status == "unsat":
            continue
        if v.status in ("unknown", "timeout", "error"):
            warnings.warn(
                f"frontier entry at {entry.location} kept on {v.status}"
                + (f": {v.detail}" if v.detail else "")
            )
        kept.append(entry)
    return kept


def extract_input(verdict: Verdict, fg: Flowgraph) -> ConcreteInput:
    """Project a sat model onto the program's inputs.

    Solver-internal constants (the ``#``-suffixed freed counters) are
    dropped; scalars and array cells the model leaves open default to 0."""
    if verdict.status != "sat" or verdict.model is None:
        raise ValueError(f"cannot extract an input from a {verdict.status} verdict")
    model = verdict.model
    scalars = {a: model.scalars.get(a, 0) for a in fg.scalars}
    arrays: dict[str, ArrayFunc] = {}
    for name in fg.arrays:
        if name in fg.const_arrays:
            continue
        arrays[name] = model.arrays.get(name, ArrayFunc())
    return ConcreteInput(scalars=scalars, arrays=arrays)


# ---------------------------------------------------------------------------
# concrete-input files: `n = 16`, `A[3] = 1`, `A default 1`


def parse_input_file(text: str) -> ConcreteInput:
    scalars: dict[str, int] = {}
    cells: dict[str, dict[tuple[int, ...], int]] = {}
    defaults: dict[str, int] = {}

    def parse_int(tok: str, lineno: int) -> int:
        try:
            return int(tok)
        except ValueError:
            raise ParseError(lineno, 1, f"expected an integer, got {tok!r}") from None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "default" in line.split("=", 1)[0]:
            name, _, val = line.partition("default")
            defaults[name.strip()] = parse_int(val.strip(), lineno)
            continue
        if "=" not in line:
            raise ParseError(lineno, 1, "expected 'name = value'")
        lhs, _, val = line.partition("=")
        lhs = lhs.strip()
        if "[" in lhs:
            name, _, idx = lhs.partition("[")
            if not idx.endswith("]"):
                raise ParseError(lineno, 1, f"malformed array cell {lhs!r}")
            point = tuple(parse_int(p.strip(), lineno) for p in idx[:-1].split(","))
            cells.setdefault(name.strip(), {})[point] = parse_int(val.strip(), lineno)
        else:
            scalars[lhs] = parse_int(val.strip(), lineno)
    arrays = {
        name: ArrayFunc.from_dict(cells.get(name, {}), default=defaults.get(name, 0))
        for name in set(cells) | set(defaults)
    }
    return ConcreteInput(scalars=scalars, arrays=arrays)


def render_input(inp: ConcreteInput) -> str:
    lines = [f"{name} = {val}" for name, val in sorted(inp.scalars.items())]
    for name in sorted(inp.arrays):
        fn = inp.arrays[name]
        if fn.default:
            lines.append(f"{name} default {fn.default}")
        for point, val in sorted(fn.entries):
            idx = ", ".join(str(p) for p in point)
            lines.append(f"{name}[{idx}] = {val}")
    return "\n".join(lines) + "\n" if lines else ""
