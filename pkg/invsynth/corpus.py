"""
corpus.py

Regression corpus: every `corpus/<name>.tcs` has a `<name>.expected.json`
sidecar listing runs of the command-line front door and what they must
produce.

    {"runs": [{"name": "default", "command": "synth", "args": [],
               "outcome": ["invariant"], "exit_code": 0,
               "iterations": 2, "max_iterations": 3,
               "formula": ["x = y | x = y + 2"]}]}

Formulae are compared up to equivalence modulo the problem's theory chain,
never textually.
"""

from __future__ import annotations

import contextlib
import io
import json
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field

from invsynth.cli import main as cli_main
from invsynth.log import get_logger
from invsynth.logic_core import render_clause
from invsynth.reports import read_records_text
from invsynth.smt_client import Equivalence, SmtClient
from invsynth.spec_checks import theory_chain
from invsynth.specfile import load, parse_clauses

log = get_logger(__name__)

CORPUS_DIR = Path(__file__).resolve().parent.parent / "corpus"


# ---------------------- Pydantic Models -----------------------
class ExpectedRun(BaseModel):
    name: str
    command: str
    args: list[str] = Field(default_factory=list)
    outcome: list[str]
    exit_code: int
    iterations: Optional[int] = None
    max_iterations: Optional[int] = None
    formula: Optional[list[str]] = None
    apf: Optional[str] = None


class Expectation(BaseModel):
    description: str = ""
    runs: list[ExpectedRun]


class RunCheck(BaseModel):
    problem: str
    run: str
    passed: bool
    problems: list[str] = Field(default_factory=list)
    outcome: str = ""
    exit_code: int = 0
    iterations: int = 0


# ---------------------- Loading -----------------------
def problems(directory: Path = CORPUS_DIR) -> list[Path]:
    return sorted(p for p in directory.glob("*.tcs") if p.with_suffix(".expected.json").exists())


def load_expectation(spec_path: Path) -> Expectation:
    return Expectation.model_validate_json(spec_path.with_suffix(".expected.json").read_text(encoding="utf-8"))


# ---------------------- Running -----------------------
def invoke(command: str, spec_path: Path, args: list[str]) -> tuple[int, str]:
    """Run the CLI in-process with records output; returns (exit code, stdout)."""
    out = io.StringIO()
    argv = [command, str(spec_path), "--format", "records", *args]
    with contextlib.redirect_stdout(out):
        code = cli_main(argv)
    return code, out.getvalue()


def solver_free(run: ExpectedRun) -> bool:
    """elim without --verify and qe never start the solver."""
    return run.command == "qe" or (run.command == "elim" and "--verify" not in run.args)


def _shape(spec_path: Path, got: list[str], want: list[str]) -> Optional[str]:
    """Solver-free formula check: same symbols, never `false` unless expected."""
    spec = load(spec_path)
    mine, theirs = parse_clauses(got, spec), parse_clauses(want, spec)
    if "false" in map(render_clause, mine) and "false" not in map(render_clause, theirs):
        return "formula is false"
    if mine.symbols() != theirs.symbols():
        return f"formula symbols {sorted(mine.symbols())}, expected {sorted(theirs.symbols())}"
    return None


def _equivalent(spec_path: Path, got: list[str], want: list[str], client: SmtClient) -> Optional[str]:
    spec = load(spec_path)
    verdict = client.check_equivalence(
        parse_clauses(got, spec), parse_clauses(want, spec), theory_chain(spec), label="corpus"
    )
    if verdict.verdict is Equivalence.EQUIVALENT:
        return None
    if verdict.verdict is Equivalence.UNKNOWN:
        return "formula equivalence undecided"
    return f"formula not equivalent ({verdict.direction})"


def check_run(
    spec_path: Path, run: ExpectedRun, client: Optional[SmtClient] = None, *, equivalence: bool = True
) -> RunCheck:
    """Run one sidecar entry. Without `equivalence` formulae are only compared by shape."""
    code, stdout = invoke(run.command, spec_path, run.args)
    iterations, summary = read_records_text(stdout)
    result = RunCheck(problem=spec_path.stem, run=run.name, passed=True, exit_code=code)
    issues = result.problems
    if summary is None:
        issues.append("no summary record")
    else:
        result.outcome = summary.outcome
        result.iterations = summary.iterations
        if summary.outcome not in run.outcome:
            issues.append(f"outcome {summary.outcome}, expected one of {run.outcome}")
        if run.iterations is not None and summary.iterations != run.iterations:
            issues.append(f"{summary.iterations} iterations, expected {run.iterations}")
        if run.max_iterations is not None and summary.iterations > run.max_iterations:
            issues.append(f"{summary.iterations} iterations, bound {run.max_iterations}")
        if run.formula is not None and not equivalence:
            problem = _shape(spec_path, summary.formula, run.formula)
            if problem:
                issues.append(problem)
        elif run.formula is not None:
            with contextlib.ExitStack() as stack:
                solver = client or stack.enter_context(SmtClient())
                problem = _equivalent(spec_path, summary.formula, run.formula, solver)
            if problem:
                issues.append(problem)
    if code != run.exit_code:
        issues.append(f"exit code {code}, expected {run.exit_code}")
    if run.apf is not None:
        bad = [r.iteration for r in iterations if r.apf is not None and r.apf != run.apf]
        if bad:
            issues.append(f"apf verdict differs at iteration(s) {bad}")
    result.passed = not issues
    log.info(f"[corpus] {spec_path.stem}/{run.name}: {'ok' if result.passed else '; '.join(issues)}")
    return result


def check_problem(spec_path: Path, client: Optional[SmtClient] = None) -> list[RunCheck]:
    return [check_run(spec_path, run, client) for run in load_expectation(spec_path).runs]


def write_summary(checks: list[RunCheck], out_dir: Path) -> tuple[Path, Path]:
    """corpus-results.json plus a markdown table."""
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "corpus-results.json"
    json_path.write_text(json.dumps([c.model_dump() for c in checks], indent=2), encoding="utf-8")
    lines = ["| problem | run | outcome | iterations | exit | status |", "|---|---|---|---|---|---|"]
    for c in checks:
        status = "pass" if c.passed else "FAIL: " + "; ".join(c.problems)
        lines.append(f"| {c.problem} | {c.run} | {c.outcome} | {c.iterations} | {c.exit_code} | {status} |")
    md_path = out_dir / "corpus-results.md"
    md_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return json_path, md_path
