"""SMT-LIB 2 emission and the external solver driver.

The solver is any executable that reads an SMT-LIB 2 script and prints
sat/unsat/unknown on the first line, followed by a (get-model) s-expression
for sat.  The command comes from the APC_SOLVER environment variable (or
explicit configuration); `{file}` in the command is replaced by the script
path, otherwise the path is appended (or the script is piped on stdin).

`race_check` runs the quantified query and its bound-K counterpart
concurrently and returns the first definitive verdict.  Both formulas are
necessary conditions, so unsat from either proves unreachability; sat means
"not refuted" and carries a candidate model.
"""

from __future__ import annotations

import os
import re
import shlex
import subprocess
import tempfile
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from .ir import (
    And,
    ArrayApp,
    BinOp,
    BoolLit,
    Cmp,
    Counter,
    Exists,
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
    Var,
    array_apps,
    contains_star,
    free_consts,
    free_counters,
    free_syms,
    has_quantifier,
    subterms,
)
from .ir.concrete import ArrayFunc
from .ir.flowgraph import ConstArray
from .qelim import KBoundedFormula, k_bound_transform


class SolverUnavailable(Exception):
    pass


class EmitError(Exception):
    pass


@dataclass(frozen=True)
class SolverConfig:
    cmd: Optional[str] = None  # None -> look up APC_SOLVER
    timeout: float = 60.0
    stdin_mode: bool = False

    def resolve_cmd(self) -> list[str]:
        cmd = self.cmd or os.environ.get("APC_SOLVER")
        if not cmd:
            raise SolverUnavailable(
                "no solver configured: set APC_SOLVER or pass --solver-cmd"
            )
        return shlex.split(cmd)


@dataclass(frozen=True)
class Model:
    scalars: dict[str, int] = field(default_factory=dict)
    arrays: dict[str, ArrayFunc] = field(default_factory=dict)


@dataclass(frozen=True)
class Verdict:
    status: str  # sat | unsat | unknown | timeout | error
    model: Optional[Model] = None
    elapsed: float = 0.0
    source: str = ""  # quantified | k-bounded | ""
    detail: str = ""


# ---------------------------------------------------------------------------
# emission

_SIMPLE_SYMBOL = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
# names that would collide with SMT-LIB syntax if left bare
_DENY = {
    "and", "or", "not", "xor", "ite", "let", "forall", "exists", "assert",
    "div", "mod", "abs", "true", "false", "select", "store", "Int", "Bool",
    "par", "as", "distinct", "check-sat", "model",
}


def _sym_name(name: str) -> str:
    if _SIMPLE_SYMBOL.match(name) and name not in _DENY:
        return name
    return "|" + name + "|"


def _emit_expr(e) -> str:
    if isinstance(e, IntLit):
        return str(e.value) if e.value >= 0 else f"(- {-e.value})"
    if isinstance(e, Sym):
        return _sym_name(e.name)
    if isinstance(e, Counter):
        return _sym_name(e.name)
    if isinstance(e, FreeConst):
        return _sym_name(e.name)
    if isinstance(e, ArrayApp):
        return "(" + " ".join([_sym_name(e.name)] + [_emit_expr(a) for a in e.args]) + ")"
    if isinstance(e, BinOp):
        op = {"+": "+", "-": "-", "*": "*", "div": "div", "mod": "mod"}[e.op]
        return f"({op} {_emit_expr(e.lhs)} {_emit_expr(e.rhs)})"
    if isinstance(e, Star):
        raise EmitError("formula contains the unknown value")
    if isinstance(e, Var):
        raise EmitError(f"program variable '{e.name}' in a symbolic formula")
    raise EmitError(f"cannot emit {e!r}")


def _emit_formula(f: Formula) -> str:
    if isinstance(f, BoolLit):
        return "true" if f.value else "false"
    if isinstance(f, Cmp):
        a, b = _emit_expr(f.lhs), _emit_expr(f.rhs)
        if f.op == "==":
            return f"(= {a} {b})"
        if f.op == "!=":
            return f"(not (= {a} {b}))"
        return f"({f.op} {a} {b})"
    if isinstance(f, Not):
        return f"(not {_emit_formula(f.body)})"
    if isinstance(f, And):
        if not f.args:
            return "true"
        return "(and " + " ".join(_emit_formula(a) for a in f.args) + ")"
    if isinstance(f, Or):
        if not f.args:
            return "false"
        return "(or " + " ".join(_emit_formula(a) for a in f.args) + ")"
    if isinstance(f, Implies):
        return f"(=> {_emit_formula(f.lhs)} {_emit_formula(f.rhs)})"
    if isinstance(f, (Forall, Exists)):
        q = "forall" if isinstance(f, Forall) else "exists"
        binds = " ".join(f"({_sym_name(v.name)} Int)" for v in f.vars)
        return f"({q} ({binds}) {_emit_formula(f.body)})"
    raise EmitError(f"cannot emit {f!r}")


def _is_nonlinear(f: Formula) -> bool:
    for n in subterms(f):
        if isinstance(n, BinOp):
            if n.op in ("div", "mod"):
                return True
            if n.op == "*" and not (isinstance(n.lhs, IntLit) or isinstance(n.rhs, IntLit)):
                return True
    return False


def pick_logic(f: Formula) -> str:
    nl = "N" if _is_nonlinear(f) else "L"
    if has_quantifier(f):
        return f"UF{nl}IA"
    return f"QF_UF{nl}IA"


def _emit_const_array(name: str, table: ConstArray) -> str:
    arg = "i0"
    body = str(table.default)
    for (idx,), val in reversed(table.entries):
        v = str(val) if val >= 0 else f"(- {-val})"
        i = str(idx) if idx >= 0 else f"(- {-idx})"
        body = f"(ite (= {arg} {i}) {v} {body})"
    return f"(define-fun {_sym_name(name)} (({arg} Int)) Int {body})"


def emit_smtlib(
    phi: Formula | KBoundedFormula,
    const_arrays: dict[str, ConstArray] | None = None,
    get_model: bool = True,
    logic: str | None = None,
) -> str:
    """Complete SMT-LIB 2 script for a satisfiability query."""
    if isinstance(phi, KBoundedFormula):
        phi = phi.formula
    if contains_star(phi):
        raise EmitError("formula contains the unknown value")
    const_arrays = const_arrays or {}
    lines = ["(set-option :produce-models true)"]
    lines.append(f"(set-logic {logic or pick_logic(phi)})")
    consts = sorted(free_syms(phi) | free_consts(phi))
    counters = sorted(free_counters(phi), key=lambda c: (c.idx, c.step))
    funcs = array_apps(phi)
    for name in sorted(funcs):
        if name in const_arrays:
            continue
        arity = funcs[name]
        args = " ".join(["Int"] * arity)
        lines.append(f"(declare-fun {_sym_name(name)} ({args}) Int)")
    for name in sorted(const_arrays):
        if name in funcs:
            lines.append(_emit_const_array(name, const_arrays[name]))
    for name in consts:
        lines.append(f"(declare-const {_sym_name(name)} Int)")
    for c in counters:
        lines.append(f"(declare-const {_sym_name(c.name)} Int)")
    lines.append(f"(assert {_emit_formula(phi)})")
    lines.append("(check-sat)")
    if get_model:
        lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# model parsing


def _tokenize_sexp(text: str) -> list[str]:
    out: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in "()":
            out.append(ch)
            i += 1
        elif ch == "|":
            j = text.index("|", i + 1)
            out.append(text[i : j + 1])
            i = j + 1
        elif ch.isspace():
            i += 1
        elif ch == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()|;":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def _parse_sexps(tokens: list[str]) -> list:
    pos = 0

    def parse():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while pos < len(tokens) and tokens[pos] != ")":
                items.append(parse())
            pos += 1  # consume ')'
            return items
        return tok

    out = []
    while pos < len(tokens):
        if tokens[pos] == ")":
            pos += 1
            continue
        out.append(parse())
    return out


def _unquote(name: str) -> str:
    if name.startswith("|") and name.endswith("|"):
        return name[1:-1]
    return name


def _eval_model_body(body, env: dict[str, int]) -> int | bool:
    if isinstance(body, str):
        if body in env:
            return env[body]
        if body == "true":
            return True
        if body == "false":
            return False
        if _unquote(body) in env:
            return env[_unquote(body)]
        return int(body)
    head = body[0]
    if head == "-" and len(body) == 2:
        return -_eval_model_body(body[1], env)  # type: ignore[operator]
    if head == "let":
        env2 = dict(env)
        for name, val in body[1]:
            env2[_unquote(name)] = _eval_model_body(val, env)  # type: ignore[assignment]
        return _eval_model_body(body[2], env2)
    if head == "ite":
        return (
            _eval_model_body(body[2], env)
            if _eval_model_body(body[1], env)
            else _eval_model_body(body[3], env)
        )
    args = [_eval_model_body(a, env) for a in body[1:]]
    if head == "and":
        return all(args)
    if head == "or":
        return any(args)
    if head == "not":
        return not args[0]
    if head == "=":
        return args[0] == args[1]
    if head == "<=":
        return args[0] <= args[1]
    if head == "<":
        return args[0] < args[1]
    if head == ">=":
        return args[0] >= args[1]
    if head == ">":
        return args[0] > args[1]
    if head == "+":
        return sum(args)  # type: ignore[arg-type]
    if head == "-":
        return args[0] - args[1]  # type: ignore[operator]
    if head == "*":
        out = 1
        for a in args:
            out *= a  # type: ignore[assignment]
        return out
    if head == "div":
        from .ir import ediv

        return ediv(args[0], args[1])  # type: ignore[arg-type, return-value]
    if head == "mod":
        from .ir import emod

        return emod(args[0], args[1])  # type: ignore[arg-type, return-value]
    raise ValueError(f"cannot evaluate model term {body!r}")


def _candidates(body) -> set[int]:
    """Integer literals mentioned in a model function body (probe points)."""
    out: set[int] = set()

    def walk(n):
        if isinstance(n, str):
            try:
                out.add(int(n))
            except ValueError:
                pass
            return
        if n and n[0] == "-" and len(n) == 2 and isinstance(n[1], str):
            try:
                out.add(-int(n[1]))
                return
            except ValueError:
                pass
        for c in n:
            walk(c)

    walk(body)
    return out


def _interpret_function(params, body) -> ArrayFunc:
    names = [_unquote(p[0]) for p in params]
    cand = sorted(_candidates(body) | {0})
    far = (max(cand) if cand else 0) + 17
    default = _eval_model_body(body, {n: far + i for i, n in enumerate(names)})
    entries: dict[tuple[int, ...], int] = {}
    if len(cand) ** len(names) <= 100_000:
        grids: list[tuple[int, ...]] = [()]
        for _ in names:
            grids = [g + (c,) for g in grids for c in cand]
        for point in grids:
            val = _eval_model_body(body, dict(zip(names, point)))
            if val != default:
                entries[point] = int(val)
    return ArrayFunc.from_dict(entries, default=int(default))


def parse_model(text: str) -> Model:
    """Parse (get-model) output: 0-ary define-funs become scalars, others
    become finite tables probed at the integer literals they mention."""
    tokens = _tokenize_sexp(text)
    sexps = _parse_sexps(tokens)
    items: list = []
    for s in sexps:
        if isinstance(s, list):
            if s and s[0] == "model":
                items.extend(s[1:])
            elif s and isinstance(s[0], list):
                items.extend(s)
            elif s and s[0] == "define-fun":
                items.append(s)
    scalars: dict[str, int] = {}
    arrays: dict[str, ArrayFunc] = {}
    for item in items:
        if not (isinstance(item, list) and len(item) >= 5 and item[0] == "define-fun"):
            continue
        name = _unquote(item[1])
        params = item[2]
        ret = item[3]
        body = item[4]
        if ret != "Int":
            continue
        if not params:
            val = _eval_model_body(body, {})
            scalars[name] = int(val)
        else:
            arrays[name] = _interpret_function(params, body)
    return Model(scalars=scalars, arrays=arrays)


# ---------------------------------------------------------------------------
# solver driver

_POLL_S = 0.03


def check_sat(
    phi: Formula | KBoundedFormula,
    config: SolverConfig | None = None,
    const_arrays: dict[str, ConstArray] | None = None,
    _cancel: threading.Event | None = None,
) -> Verdict:
    """Run one satisfiability query through the external solver."""
    config = config or SolverConfig()
    argv = config.resolve_cmd()
    script = emit_smtlib(phi, const_arrays=const_arrays)
    t0 = time.monotonic()
    with tempfile.TemporaryDirectory(prefix="apc-smt-") as tmp:
        path = os.path.join(tmp, "query.smt2")
        with open(path, "w") as fh:
            fh.write(script)
        if any("{file}" in a for a in argv):
            argv = [a.replace("{file}", path) for a in argv]
            stdin_data = None
        elif config.stdin_mode:
            stdin_data = script
        else:
            argv = argv + [path]
            stdin_data = None
        out_file = open(os.path.join(tmp, "out.txt"), "w+")
        err_file = open(os.path.join(tmp, "err.txt"), "w+")
        try:
            proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE if stdin_data is not None else subprocess.DEVNULL,
                stdout=out_file,
                stderr=err_file,
                text=True,
                start_new_session=True,
            )
        except FileNotFoundError as exc:
            out_file.close()
            err_file.close()
            raise SolverUnavailable(f"solver executable not found: {argv[0]}") from exc
        try:
            if stdin_data is not None:
                try:
                    proc.stdin.write(stdin_data)  # type: ignore[union-attr]
                    proc.stdin.close()  # type: ignore[union-attr]
                except BrokenPipeError:
                    pass
            deadline = t0 + config.timeout
            while proc.poll() is None:
                if _cancel is not None and _cancel.is_set():
                    _kill(proc)
                    return Verdict("cancelled", elapsed=time.monotonic() - t0)
                if time.monotonic() > deadline:
                    _kill(proc)
                    return Verdict("timeout", elapsed=time.monotonic() - t0)
                time.sleep(_POLL_S)
            out_file.seek(0)
            output = out_file.read()
            err_file.seek(0)
            errout = err_file.read()
        finally:
            out_file.close()
            err_file.close()
            if proc.poll() is None:
                _kill(proc)
    elapsed = time.monotonic() - t0
    first = ""
    for line in output.splitlines():
        line = line.strip()
        if line in ("sat", "unsat", "unknown"):
            first = line
            break
    if first == "sat":
        rest = output.split("sat", 1)[1]
        try:
            model = parse_model(rest)
        except Exception:
            model = Model()
        return Verdict("sat", model=model, elapsed=elapsed)
    if first == "unsat":
        return Verdict("unsat", elapsed=elapsed)
    if first == "unknown":
        return Verdict("unknown", elapsed=elapsed)
    detail = (output + "\n" + errout).strip()[:2000]
    return Verdict("error", elapsed=elapsed, detail=detail or f"exit {proc.returncode}")


def _kill(proc: subprocess.Popen) -> None:
    import signal

    try:
        os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        try:
            proc.kill()
        except ProcessLookupError:
            pass
    try:
        proc.wait(timeout=5)
    except subprocess.TimeoutExpired:
        pass


def race_check(
    phi: Formula,
    k: int = 25,
    config: SolverConfig | None = None,
    const_arrays: dict[str, ConstArray] | None = None,
) -> Verdict:
    """Decide phi by racing the quantified query against its bound-K
    counterpart; the first sat/unsat wins and the loser is killed."""
    config = config or SolverConfig()
    config.resolve_cmd()  # fail fast if unconfigured
    cancel_q = threading.Event()
    cancel_k = threading.Event()
    verdicts: dict[str, Verdict] = {}
    lock = threading.Lock()
    done = threading.Event()

    def run(source: str, cancel: threading.Event, other: threading.Event) -> None:
        try:
            if source == "k-bounded":
                target: Formula | KBoundedFormula = k_bound_transform(phi, k)
            else:
                target = phi
            v = check_sat(target, config, const_arrays=const_arrays, _cancel=cancel)
        except Exception as exc:  # transform or driver failure
            v = Verdict("error", detail=f"{type(exc).__name__}: {exc}")
        with lock:
            verdicts[source] = Verdict(v.status, v.model, v.elapsed, source, v.detail)
            if v.status in ("sat", "unsat"):
                other.set()
            if len(verdicts) == 2 or v.status in ("sat", "unsat"):
                done.set()

    threads = [
        threading.Thread(target=run, args=("quantified", cancel_q, cancel_k), daemon=True),
        threading.Thread(target=run, args=("k-bounded", cancel_k, cancel_q), daemon=True),
    ]
    for t in threads:
        t.start()
    done.wait()
    with lock:
        for source in ("quantified", "k-bounded"):
            v = verdicts.get(source)
            if v is not None and v.status in ("sat", "unsat"):
                winner = v
                break
        else:
            winner = None
    if winner is None:
        # both finished without a definitive answer
        for t in threads:
            t.join()
        vs = [verdicts[s] for s in ("quantified", "k-bounded")]
        if all(v.status == "error" for v in vs):
            return Verdict("error", detail="; ".join(f"{v.source}: {v.detail}" for v in vs))
        status = "timeout" if all(v.status in ("timeout", "error") for v in vs) else "unknown"
        return Verdict(
            status,
            elapsed=max(v.elapsed for v in vs),
            detail="; ".join(f"{v.source}: {v.status}" for v in vs),
        )
    for t in threads:
        t.join(timeout=10)
    return winner
