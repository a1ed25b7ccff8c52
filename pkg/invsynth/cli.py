"""
cli.py

Command-line front door.

    invsynth check  corpus/array_shift.tcs --invariant "forall i:int . a[i] <= a[i+1]"
    invsynth synth  corpus/parity_steps.tcs --max-iters 6
    invsynth elim   corpus/monotone_bridge.tcs --verify
    invsynth qe     "exists x:int . 0 <= x & x <= 2 & y = 2*x"

Stdout carries the report, stderr the log. Exit codes:

    check   0 inductive, 1 not inductive, 30 unknown, 64 spec error
    synth   0 invariant, 10 no universal invariant, 20 diverged / budget,
            30 unknown, 64 spec error, 70 QE blowup
    elim    0 ok, 1 --verify found a model, 30 unknown, 64, 70
    qe      0 ok, 64 parse error, 70 QE blowup
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from dataclasses import asdict
from pathlib import Path
from typing import Optional

from invsynth.config import DEFAULT_SOLVER, DEFAULT_TIMEOUT, ConstantPolicy, CongruenceExpansion, ElimMode, SolverConfig
from invsynth.errors import DivisibilityError, ParseError, QEBlowupError, RoleConflictError, SolverError, SpecError
from invsynth.hierarchy import dumps
from invsynth.invariant_loop import (
    OutcomeKind,
    TransitionSystem,
    certify,
    check_consecution,
    check_initiation,
    config_for,
    locality_caveats,
    synthesize,
)
from invsynth.log import configure, get_logger
from invsynth.logic_core import ClauseSet, clause_symbols, const, make_clause, render_clause, render_conj
from invsynth.qelim import eliminate
from invsynth.reports import RunReport, dump_trace, format_text, spec_digest, write_records
from invsynth.simplify import cleanup
from invsynth.smt_client import SmtClient, render_script
from invsynth.spec_checks import theory_chain
from invsynth.specfile import load, parse, parse_clause, parse_clauses, tokenize
from invsynth.symbol_elim import ElimRequest, eliminate_symbols, verify_gamma
from invsynth.transforms import clause_alternatives, dnf_product, skolemize_clause

log = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_NO_INVARIANT = 10
EXIT_NO_RESULT = 20
EXIT_UNKNOWN = 30
EXIT_SPEC = 64
EXIT_BLOWUP = 70

SYNTH_EXIT = {
    OutcomeKind.INVARIANT: EXIT_OK,
    OutcomeKind.NO_UNIVERSAL_INVARIANT: EXIT_NO_INVARIANT,
    OutcomeKind.DIVERGED: EXIT_NO_RESULT,
    OutcomeKind.BUDGET_EXHAUSTED: EXIT_NO_RESULT,
    OutcomeKind.UNKNOWN: EXIT_UNKNOWN,
}


# ======================================================================
# Helpers
# ======================================================================
def _names(values: Optional[list[str]]) -> Optional[frozenset[str]]:
    if not values:
        return None
    out: set[str] = set()
    for v in values:
        out.update(n.strip() for n in v.split(",") if n.strip())
    return frozenset(out)


def _solver_config(args, emit_dir: Optional[Path]) -> SolverConfig:
    extra = args.solver_arg if args.solver_arg else ["-in", "-smt2"]
    return SolverConfig(executable=args.solver, extra_args=extra, timeout_s=args.timeout, emit_dir=emit_dir)


def _out_dir(args) -> Path:
    return Path(args.dump_trace or "invsynth-out")


def _emit_dir(args) -> Optional[Path]:
    if "smt2" in (args.emit or []):
        return _out_dir(args) / "smt2"
    return None


def _print(report: RunReport, args) -> None:
    if args.format == "records":
        write_records(report, sys.stdout)
    else:
        print(format_text(report))


def _loop_overrides(args) -> dict:
    return {
        "max_iterations": getattr(args, "max_iters", None),
        "mode": getattr(args, "mode", None),
        "keep": _names(args.keep),
        "eliminate_constants": _names(args.eliminate_const),
        "constant_policy": getattr(args, "constant_policy", None),
        "semantics": getattr(args, "semantics", None),
        "apf_guard": True if getattr(args, "apf_guard", False) else None,
        "congruence_expansion": args.congruence,
        "verify": True if getattr(args, "verify", False) else None,
    }


def _check_roles(clauses: ClauseSet, allowed: frozenset[str], source: Optional[str]) -> None:
    for c in clauses.clauses:
        bad = sorted(clause_symbols(c) - allowed)
        if bad:
            raise RoleConflictError(f"candidate mentions non-parameter symbol(s) {', '.join(bad)}", source=source)


# ======================================================================
# Commands
# ======================================================================
def cmd_check(args) -> int:
    start = time.perf_counter()
    spec = load(args.spec)
    config = config_for(spec, **_loop_overrides(args))
    candidate = spec.property + parse_clauses(args.invariant or [], spec)
    report = RunReport(command="check", spec=args.spec, spec_digest=spec_digest(Path(args.spec).read_text()), outcome="", exit_code=0)
    with SmtClient(_solver_config(args, _emit_dir(args))) as client:
        exclusive, caveats = certify(spec, client, strict=False)
        ts = TransitionSystem(spec, config, exclusive)
        _check_roles(candidate, ts.signature.allowed_in_invariant(), spec.source)
        report.caveats = locality_caveats(spec) + caveats
        report.formula = [render_clause(c) for c in candidate.clauses]
        cons = None
        init = check_initiation(ts, candidate, client)
        if init.holds:
            cons = check_consecution(ts, candidate, candidate, client)
        if init.unknown or (cons is not None and cons.unknown):
            report.outcome, report.exit_code = "unknown", EXIT_UNKNOWN
            report.reason = init.unknown or cons.unknown or ""
        elif not init.holds:
            report.outcome, report.exit_code = "not-inductive", EXIT_FAILED
            report.reason = "initiation fails"
            report.countermodel = {k: str(v) for k, v in (init.model or {}).items()}
        elif not cons.holds:
            first = cons.violations[0]
            report.outcome, report.exit_code = "not-inductive", EXIT_FAILED
            report.reason = f"consecution fails for {first.update} on clause {first.clause_index}"
            report.countermodel = {k: str(v) for k, v in first.model.items()}
        else:
            report.outcome, report.exit_code = "inductive", EXIT_OK
    report.timings["total"] = time.perf_counter() - start
    _print(report, args)
    return report.exit_code


def cmd_synth(args) -> int:
    start = time.perf_counter()
    spec = load(args.spec)
    config = config_for(spec, **_loop_overrides(args))
    with SmtClient(_solver_config(args, _emit_dir(args))) as client:
        outcome = synthesize(spec, config, client)
        solver = client.stats
    report = RunReport(
        command="synth",
        spec=args.spec,
        spec_digest=spec_digest(Path(args.spec).read_text()),
        outcome=outcome.kind.value,
        exit_code=SYNTH_EXIT[outcome.kind],
        iterations=outcome.iteration,
        formula=[render_clause(c) for c in outcome.invariant.clauses] if outcome.invariant else [],
        reason=outcome.reason,
        countermodel={k: str(v) for k, v in outcome.countermodel.items()},
        termination=str(outcome.termination) if outcome.termination else None,
        growth=outcome.growth,
        caveats=outcome.caveats,
        trace=outcome.trace,
    )
    report.timings = {"total": time.perf_counter() - start, "solver": solver.seconds}
    if "trace" in (args.emit or []) or args.dump_trace:
        report.artifacts.append(str(dump_trace(report, _out_dir(args))))
    if _emit_dir(args) is not None:
        report.artifacts.append(str(_emit_dir(args)))
    _print(report, args)
    return report.exit_code


def cmd_elim(args) -> int:
    start = time.perf_counter()
    spec = load(args.spec)
    if spec.elim_goal is None:
        raise SpecError("spec has no elim block", source=spec.source)
    keep = _names(args.keep)
    sig = spec.resolved_signature(keep)
    eliminate_constants = spec.options.eliminate_constants | (_names(args.eliminate_const) or frozenset())
    levels = tuple(theory_chain(spec))
    taken = frozenset(sig.functions)
    report = RunReport(command="elim", spec=args.spec, spec_digest=spec_digest(Path(args.spec).read_text()), outcome="ok", exit_code=0)
    clauses = []
    with SmtClient(_solver_config(args, _emit_dir(args))) as client:
        for k, goal_clause in enumerate(spec.elim_goal.clauses):
            g = skolemize_clause(goal_clause, k, taken)
            req = ElimRequest(
                levels=levels,
                goal=tuple(make_clause([l]) for l in g.literals),
                signature=sig,
                eliminate_constants=eliminate_constants,
                mode=ElimMode(args.mode),
                constant_policy=ConstantPolicy(args.constant_policy or spec.options.constant_policy or "unguarded"),
                congruence=CongruenceExpansion(args.congruence or spec.options.congruence or "implied"),
                skolems=g.skolems,
            )
            res = eliminate_symbols(req)
            clauses.extend(res.gamma.clauses)
            if args.dump_reduction:
                print(dumps(res.reduction))
                print(render_script(res.reduction.formula(), header=False))
            if args.dump_trace:
                path = Path(args.dump_trace)
                path.mkdir(parents=True, exist_ok=True)
                target = path / f"elim-trace-{k}.json"
                target.write_text(json.dumps(asdict(res.trace), indent=2), encoding="utf-8")
                report.artifacts.append(str(target))
            if args.verify:
                v = verify_gamma(req, res, client)
                if v.is_sat:
                    report.outcome, report.exit_code = "not-verified", EXIT_FAILED
                    report.countermodel = {n: str(x) for n, x in (v.model or {}).items()}
                elif not v.is_unsat and report.exit_code == EXIT_OK:
                    report.outcome, report.exit_code = "unknown", EXIT_UNKNOWN
                    report.reason = f"verification: solver {v.status.value}"
    report.formula = [render_clause(c) for c in cleanup(clauses)]
    report.timings["total"] = time.perf_counter() - start
    _print(report, args)
    return report.exit_code


_QE_RE = re.compile(r"^\s*exists\s+([^.]*)\.(.*)$", re.S)
_KEYWORDS = {"forall", "exists", "divides", "true", "false", "int", "real"}


def qe_problem(line: str, sort: str = "int"):
    """Parse `exists x:s, ... . formula` into (variables, DNF over constants)."""
    m = _QE_RE.match(line)
    if m is None:
        raise ParseError("expected 'exists x:s, ... . formula'", 1, 1, "<qe>")
    bound: dict[str, str] = {}
    for part in m.group(1).split(","):
        name, _, s = part.partition(":")
        if not name.strip() or s.strip() not in ("int", "real"):
            raise ParseError(f"bad variable declaration '{part.strip()}'", 1, 1, "<qe>")
        bound[name.strip()] = s.strip()
    body = m.group(2)
    tokens = tokenize(body, "<qe>")
    free: dict[str, str] = {}
    for i, t in enumerate(tokens):
        if t.kind != "ident" or t.text in _KEYWORDS or t.text in bound:
            continue
        if tokens[i + 1].text in ("(", "["):
            raise ParseError(f"qe accepts constants only, got application of '{t.text}'", t.line, t.col, "<qe>")
        free[t.text] = sort
    decls = {**free, **bound}
    lines = ["version 1;", "base LIA+LRA;", "signature"]
    lines += [f"  const {n} : {s};" for n, s in decls.items()]
    lines.append("end")
    spec = parse("\n".join(lines), "<qe>")
    clauses = parse_clause(body, spec)
    dnf = dnf_product([clause_alternatives(c) for c in clauses], site="qe input")
    variables = [const(n, spec.signature.function(n).result) for n in bound]
    return variables, dnf


def cmd_qe(args) -> int:
    variables, dnf = qe_problem(args.formula, args.sort)
    out = eliminate(variables, dnf)
    if not out:
        print("false")
    else:
        print(" | ".join(f"({render_conj(c)})" if c else "true" for c in out))
    return EXIT_OK


# ======================================================================
# Parser
# ======================================================================
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="invsynth", description="Universally quantified invariant synthesis")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default from INVSYNTH_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--solver", default=DEFAULT_SOLVER, help="SMT-LIB solver executable")
    solver.add_argument("--solver-arg", action="append", help="Argument passed to the solver (repeatable)")
    solver.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="Per-query timeout in seconds")
    solver.add_argument("--emit", action="append", choices=("smt2", "trace"), help="Write solver scripts or trace records")
    solver.add_argument("--dump-trace", metavar="DIR", help="Directory for emitted artifacts")
    solver.add_argument("--format", choices=("text", "records"), default="text")
    solver.add_argument("--keep", action="append", help="Kept (parameter) symbols, comma separated")
    solver.add_argument("--eliminate-const", action="append", help="Extra symbols to eliminate, comma separated")
    solver.add_argument("--congruence", choices=("implied", "split"))
    solver.add_argument("--constant-policy", choices=("none", "unguarded"))

    loop = argparse.ArgumentParser(add_help=False)
    loop.add_argument("--max-iters", type=int)
    loop.add_argument("--mode", choices=("naive", "refined"))
    loop.add_argument("--semantics", choices=("simultaneous", "interleaved"))
    loop.add_argument("--apf-guard", action="store_true")
    loop.add_argument("--verify", action="store_true", help="Verify every strengthening step")

    p = sub.add_parser("check", parents=[solver, loop], help="Check that the property (plus candidates) is inductive")
    p.add_argument("spec")
    p.add_argument("--invariant", action="append", help="Extra candidate clause conjoined to the property")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("synth", parents=[solver, loop], help="Synthesize an inductive invariant")
    p.add_argument("spec")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("elim", parents=[solver], help="Symbol elimination for the spec's elim block")
    p.add_argument("spec")
    p.add_argument("--mode", choices=("full", "split"), default="full")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--dump-reduction", action="store_true")
    p.set_defaults(func=cmd_elim)

    p = sub.add_parser("qe", help="Quantifier elimination on one formula")
    p.add_argument("formula")
    p.add_argument("--sort", choices=("int", "real"), default="int", help="Sort of free constants")
    p.set_defaults(func=cmd_qe)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure(args.log_level)
    try:
        return args.func(args)
    except SpecError as e:
        print(str(e), file=sys.stderr)
        return EXIT_SPEC
    except (QEBlowupError, DivisibilityError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BLOWUP
    except SolverError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_UNKNOWN


if __name__ == "__main__":
    sys.exit(main())
