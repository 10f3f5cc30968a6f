"""Command-line front end: parse, analyze, solve, report.

Subcommands
-----------
analyze   full pipeline on one program: backbones -> necessary condition ->
          solver race -> verdict, with test-input extraction on sat
emit      write the two SMT-LIB scripts (quantified / bound-K) without solving
run       execute one concrete input and report whether the target was reached
prune     drop frontier entries whose branch condition contradicts the
          necessary condition
bench     run the packaged corpus and print a summary table (one row per
          program: build / transform+solve-K / solve-quantified timings)

Exit codes: 0 target may be reachable (sat), 10 proven unreachable (unsat),
20 undecided, 1 parse or semantic error, 2 solver unavailable or failed,
3 enumeration cap exceeded.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass
from typing import Optional, Sequence

from . import benchmarks
from .engine import AnalysisContext, necessary_condition
from .guidance import (
    GuidanceConfig,
    extract_input,
    parse_frontier,
    parse_input_file,
    prune_frontier,
    render_frontier,
    render_input,
)
from .ir import Flowgraph, ParseError, SemanticError, node_count, parse_program, validate
from .oracle import ConcreteInput, Trace, concrete_run
from .paths import CapExceeded
from .qelim import DEFAULT_K, TransformError, k_bound_transform
from .smt import SolverConfig, SolverUnavailable, Verdict, check_sat, emit_smtlib, race_check

EXIT_SAT = 0
EXIT_UNSAT = 10
EXIT_UNKNOWN = 20
EXIT_INPUT_ERROR = 1
EXIT_SOLVER = 2
EXIT_CAPS = 3

# step budget when replaying an extracted model; reaching runs on the corpus
# need ~1e5 steps (triangle scan with solver-chosen matrix size), so leave
# headroom rather than reusing the oracle's enumeration default
CONFIRM_STEP_BOUND = 1_000_000


@dataclass
class AnalysisReport:
    """Everything `analyze` learned about one program."""

    name: str
    backbone_count: int
    formula_sizes: tuple[int, ...]  # per-backbone node counts
    k: int
    build_s: float
    transform_s: float
    solve_s: Optional[float] = None
    verdict: Optional[Verdict] = None
    input: Optional[ConcreteInput] = None
    confirmed: Optional[bool] = None  # replay reached the target
    confirm_steps: Optional[int] = None
    emitted: tuple[str, ...] = ()

    def exit_code(self) -> int:
        if self.verdict is None:
            return EXIT_SAT  # emit-only invocation
        return {
            "sat": EXIT_SAT,
            "unsat": EXIT_UNSAT,
            "unknown": EXIT_UNKNOWN,
            "timeout": EXIT_UNKNOWN,
        }.get(self.verdict.status, EXIT_SOLVER)

    def to_json(self) -> dict:
        out: dict = {
            "benchmark": self.name,
            "backbones": self.backbone_count,
            "formula_sizes": list(self.formula_sizes),
            "k": self.k,
            "build_s": round(self.build_s, 4),
            "transform_s": round(self.transform_s, 4),
            "solve_s": None if self.solve_s is None else round(self.solve_s, 4),
            "verdict": None,
            "source": None,
            "input": None,
            "confirmed": self.confirmed,
            "confirm_steps": self.confirm_steps,
            "emitted": list(self.emitted),
            "exit": self.exit_code(),
        }
        if self.verdict is not None:
            out["verdict"] = self.verdict.status
            out["source"] = self.verdict.source
            out["detail"] = self.verdict.detail
        if self.input is not None:
            out["input"] = _input_to_json(self.input)
        return out


def _input_to_json(inp: ConcreteInput) -> dict:
    return {
        "scalars": dict(inp.scalars),
        "arrays": {
            name: {
                "entries": [[list(idx), val] for idx, val in fn.entries],
                "default": fn.default,
            }
            for name, fn in inp.arrays.items()
        },
    }


class _CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load_program(spec: str, target: Optional[str]) -> tuple[str, Flowgraph]:
    """Accept either a DSL file path or a packaged benchmark name."""
    if os.path.exists(spec):
        name = os.path.splitext(os.path.basename(spec))[0]
        try:
            with open(spec, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise _CliError(f"cannot read {spec}: {e}", EXIT_INPUT_ERROR)
        try:
            fg = parse_program(text)
        except (ParseError, SemanticError) as e:
            raise _CliError(f"{spec}: {e}", EXIT_INPUT_ERROR)
    elif spec in benchmarks.NAMES:
        name = spec
        fg = benchmarks.load(spec)
    else:
        raise _CliError(
            f"no such file or benchmark: {spec} (benchmarks: {', '.join(benchmarks.NAMES)})",
            EXIT_INPUT_ERROR,
        )
    if target is not None:
        if target not in fg.nodes:
            raise _CliError(f"--target {target}: not a node of {name}", EXIT_INPUT_ERROR)
        fg = dataclasses.replace(fg, target=target)
        try:
            validate(fg)
        except SemanticError as e:
            raise _CliError(f"--target {target}: {e}", EXIT_INPUT_ERROR)
    return name, fg


def _solver_config(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(cmd=args.solver_cmd, timeout=args.timeout)


# ---------------------------------------------------------------------------
# analyze / emit


def _build(name: str, fg: Flowgraph, k: int, max_backbones: int) -> tuple[AnalysisReport, object]:
    ctx = AnalysisContext(max_backbones=max_backbones)
    t0 = time.monotonic()
    try:
        phi_hat, results = necessary_condition(fg, ctx)
    except CapExceeded as e:
        raise _CliError(str(e), EXIT_CAPS)
    build_s = time.monotonic() - t0
    report = AnalysisReport(
        name=name,
        backbone_count=len(results),
        formula_sizes=tuple(node_count(r.condition) for r in results),
        k=k,
        build_s=build_s,
        transform_s=0.0,
    )
    return report, (phi_hat, results)


def _emit_files(phi_hat, kb, fg: Flowgraph, out_dir: str, k: int) -> tuple[str, ...]:
    os.makedirs(out_dir, exist_ok=True)
    quant = os.path.join(out_dir, "phi_hat.smt2")
    bounded = os.path.join(out_dir, f"phi_hat_k{k}.smt2")
    with open(quant, "w", encoding="utf-8") as fh:
        fh.write(emit_smtlib(phi_hat, const_arrays=fg.const_arrays))
    with open(bounded, "w", encoding="utf-8") as fh:
        fh.write(emit_smtlib(kb, const_arrays=fg.const_arrays))
    return quant, bounded


def _confirm(fg: Flowgraph, inp: ConcreteInput) -> Trace:
    return concrete_run(fg, inp, step_bound=CONFIRM_STEP_BOUND)


def cmd_analyze(args: argparse.Namespace) -> int:
    name, fg = _load_program(args.program, args.target)
    report, (phi_hat, results) = _build(name, fg, args.k, args.max_backbones)
    if args.dump_backbones:
        for r in results:
            print(" -> ".join(r.backbone))

    t0 = time.monotonic()
    try:
        kb = k_bound_transform(phi_hat, args.k)
    except TransformError as e:
        raise _CliError(f"bound-{args.k} transform failed: {e}", EXIT_INPUT_ERROR)
    report.transform_s = time.monotonic() - t0

    if args.emit_smt:
        report.emitted = _emit_files(phi_hat, kb, fg, args.emit_smt, args.k)
        _finish(report, args)
        return report.exit_code()

    config = _solver_config(args)
    t0 = time.monotonic()
    verdict = race_check(phi_hat, k=args.k, config=config, const_arrays=fg.const_arrays)
    report.solve_s = time.monotonic() - t0
    report.verdict = verdict

    if verdict.status == "sat" and verdict.model is not None:
        inp = extract_input(verdict, fg)
        trace = _confirm(fg, inp)
        report.input, report.confirmed = inp, trace.reached_target
        report.confirm_steps = trace.steps
        if not trace.reached_target:
            # the winner's model satisfies a necessary condition only; the
            # other query may yield a model that actually drives execution
            # to the target, so spend one more solver call on it
            other = kb if verdict.source == "quantified" else phi_hat
            second = check_sat(other, config=config, const_arrays=fg.const_arrays)
            if second.status == "sat" and second.model is not None:
                cand = extract_input(second, fg)
                trace = _confirm(fg, cand)
                if trace.reached_target:
                    report.input, report.confirmed = cand, True
                    report.confirm_steps = trace.steps
    _finish(report, args)
    return report.exit_code()


def cmd_emit(args: argparse.Namespace) -> int:
    name, fg = _load_program(args.program, args.target)
    report, (phi_hat, _) = _build(name, fg, args.k, args.max_backbones)
    t0 = time.monotonic()
    try:
        kb = k_bound_transform(phi_hat, args.k)
    except TransformError as e:
        raise _CliError(f"bound-{args.k} transform failed: {e}", EXIT_INPUT_ERROR)
    report.transform_s = time.monotonic() - t0
    report.emitted = _emit_files(phi_hat, kb, fg, args.out, args.k)
    _finish(report, args)
    return report.exit_code()


def _finish(report: AnalysisReport, args: argparse.Namespace) -> None:
    print(_render_report(report))
    json_path = getattr(args, "json", None)
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, indent=2)
            fh.write("\n")


def _render_report(r: AnalysisReport) -> str:
    lines = [
        f"benchmark      : {r.name}",
        f"backbones      : {r.backbone_count}",
        f"formula nodes  : {' + '.join(str(s) for s in r.formula_sizes) or '0'}",
        f"build          : {r.build_s:.3f} s",
        f"transform K={r.k:<3}: {r.transform_s:.3f} s",
    ]
    if r.emitted:
        lines.extend(f"wrote          : {p}" for p in r.emitted)
    if r.verdict is not None:
        v = r.verdict
        src = f"  ({v.source})" if v.source else ""
        lines.append(f"solve          : {r.solve_s:.3f} s{src}")
        lines.append(f"verdict        : {v.status}")
        if v.detail and v.status in ("error", "unknown", "timeout"):
            lines.append(f"detail         : {v.detail}")
    if r.input is not None:
        lines.append("input          :")
        rendered = render_input(r.input) or "(empty)"
        lines.extend("  " + ln for ln in rendered.splitlines())
        if r.confirmed:
            lines.append(f"confirmed      : reaches target in {r.confirm_steps} steps")
        else:
            lines.append("confirmed      : no (model satisfies the necessary condition only)")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# run / prune


def cmd_run(args: argparse.Namespace) -> int:
    _, fg = _load_program(args.program, args.target)
    try:
        with open(args.input, encoding="utf-8") as fh:
            inp = parse_input_file(fh.read())
    except OSError as e:
        raise _CliError(f"cannot read {args.input}: {e}", EXIT_INPUT_ERROR)
    except ValueError as e:
        raise _CliError(f"{args.input}: {e}", EXIT_INPUT_ERROR)
    trace = concrete_run(fg, inp, step_bound=args.step_bound)
    status = (
        "reached target"
        if trace.reached_target
        else ("stuck" if trace.stuck else "stopped" if trace.steps < args.step_bound else "step bound hit")
    )
    print(f"{status} after {trace.steps} steps at node {trace.visited[-1]}")
    print("store:", " ".join(f"{k}={v}" for k, v in sorted(trace.final_store.items())))
    if trace.reached_target:
        return EXIT_SAT
    if trace.steps >= args.step_bound:
        return EXIT_UNKNOWN
    return EXIT_UNSAT


def cmd_prune(args: argparse.Namespace) -> int:
    name, fg = _load_program(args.program, args.target)
    try:
        with open(args.frontier, encoding="utf-8") as fh:
            entries = parse_frontier(fh.read())
    except OSError as e:
        raise _CliError(f"cannot read {args.frontier}: {e}", EXIT_INPUT_ERROR)
    except ValueError as e:
        raise _CliError(f"{args.frontier}: {e}", EXIT_INPUT_ERROR)
    _, (phi_hat, _) = _build(name, fg, args.k, 10_000)
    config = GuidanceConfig(solver=_solver_config(args), k=args.k, jobs=args.jobs)
    kept = prune_frontier(entries, phi_hat, config, const_arrays=fg.const_arrays)
    text = render_frontier(kept)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"kept {len(kept)} of {len(entries)} entries -> {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_SAT


# ---------------------------------------------------------------------------
# bench


def cmd_bench(args: argparse.Namespace) -> int:
    names = args.names or list(benchmarks.NAMES)
    unknown = [n for n in names if n not in benchmarks.NAMES]
    if unknown:
        raise _CliError(f"unknown benchmark(s): {', '.join(unknown)}", EXIT_INPUT_ERROR)
    config = _solver_config(args)
    rows = []
    header = f"{'benchmark':<16} {'paths':>5} {'bld(s)':>7} {'K-query(s)':>11} {'quant(s)':>9}  verdict"
    print(header)
    print("-" * len(header))
    for name in names:
        fg = benchmarks.load(name)
        t0 = time.monotonic()
        phi_hat, results = necessary_condition(fg, AnalysisContext())
        build_s = time.monotonic() - t0

        t0 = time.monotonic()
        kb = k_bound_transform(phi_hat, args.k)
        kv = check_sat(kb, config=config, const_arrays=fg.const_arrays)
        k_s = time.monotonic() - t0

        t0 = time.monotonic()
        qv = check_sat(phi_hat, config=config, const_arrays=fg.const_arrays)
        q_s = time.monotonic() - t0

        # the bound-K query strengthens the quantified one, so `sat` there
        # implies `sat` here; prefer whichever run was definitive
        statuses = {kv.status, qv.status}
        if "unsat" in statuses and "sat" in statuses:
            verdict = "DISAGREE"  # would indicate a transform bug
        elif "sat" in statuses:
            verdict = "sat"
        elif "unsat" in statuses:
            verdict = "unsat"
        else:
            verdict = kv.status if kv.status == qv.status else f"{kv.status}/{qv.status}"

        def cell(v: Verdict, secs: float) -> str:
            return f"{secs:7.2f}" if v.status in ("sat", "unsat") else f"{'t/o' if v.status == 'timeout' else v.status:>7}"

        print(
            f"{name:<16} {len(results):>5} {build_s:>7.3f} {cell(kv, k_s):>11} {cell(qv, q_s):>9}  {verdict}"
        )
        rows.append(
            {
                "benchmark": name,
                "paths": len(results),
                "build_s": round(build_s, 4),
                "k_query_s": round(k_s, 4),
                "k_query_status": kv.status,
                "quantified_s": round(q_s, 4),
                "quantified_status": qv.status,
                "verdict": verdict,
                "k": args.k,
            }
        )
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
            fh.write("\n")
    return EXIT_SAT


# ---------------------------------------------------------------------------
# argument parsing


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--solver-cmd", default=None, help="solver command line (default: $APC_SOLVER)")
    p.add_argument("--timeout", type=float, default=120.0, help="per-query timeout in seconds")


def _add_program_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("program", help="DSL file path or packaged benchmark name")
    p.add_argument("--target", default=None, help="override the target node")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="apc",
        description="necessary-condition reachability analysis for flowgraph programs",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="full analysis of one program")
    _add_program_flags(pa)
    pa.add_argument("--k", type=int, default=DEFAULT_K, help="instantiation bound")
    _add_solver_flags(pa)
    pa.add_argument("--emit-smt", metavar="DIR", default=None, help="write SMT scripts and skip solving")
    pa.add_argument("--json", metavar="PATH", default=None, help="write the report as JSON")
    pa.add_argument("--dump-backbones", action="store_true", help="print one backbone per line")
    pa.add_argument("--max-backbones", type=int, default=10_000)
    pa.set_defaults(fn=cmd_analyze)

    pe = sub.add_parser("emit", help="write SMT-LIB scripts without solving")
    _add_program_flags(pe)
    pe.add_argument("--k", type=int, default=DEFAULT_K)
    pe.add_argument("-o", "--out", default=".", help="output directory")
    pe.add_argument("--json", metavar="PATH", default=None)
    pe.add_argument("--max-backbones", type=int, default=10_000)
    pe.set_defaults(fn=cmd_emit)

    pr = sub.add_parser("run", help="execute one concrete input")
    _add_program_flags(pr)
    pr.add_argument("--input", required=True, help="input file (name = value / A[i] = v lines)")
    pr.add_argument("--step-bound", type=int, default=100_000)
    pr.set_defaults(fn=cmd_run)

    pp = sub.add_parser("prune", help="drop contradicted frontier entries")
    _add_program_flags(pp)
    pp.add_argument("--frontier", required=True, help="file of '<node> ; <formula>' lines")
    pp.add_argument("--k", type=int, default=DEFAULT_K)
    pp.add_argument("--jobs", type=int, default=2)
    _add_solver_flags(pp)
    pp.add_argument("-o", "--out", default=None, help="write survivors here instead of stdout")
    pp.set_defaults(fn=cmd_prune)

    pb = sub.add_parser("bench", help="run the packaged corpus")
    pb.add_argument("names", nargs="*", help=f"subset of: {', '.join(benchmarks.NAMES)}")
    pb.add_argument("--k", type=int, default=DEFAULT_K)
    _add_solver_flags(pb)
    pb.add_argument("--json", metavar="PATH", default=None)
    pb.set_defaults(fn=cmd_bench)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except _CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except SolverUnavailable as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except (ParseError, SemanticError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
