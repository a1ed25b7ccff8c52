"""
reports.py

Run reports and the per-iteration trace records of `synth`.

Records mode writes one JSON object per line: an `iteration` record per
loop iteration followed by a single `summary` record. The schema is
documented in docs/trace-format.md.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional, TextIO

from pydantic import BaseModel, Field


# ---------------------- Pydantic Models -----------------------
class ViolationRecord(BaseModel):
    update: str
    clause_index: int
    goal: list[str]
    model: dict[str, str] = Field(default_factory=dict)


class LengthRecord(BaseModel):
    """Quantities of the clause-count bound, observed next to the bound."""

    updates: int
    max_cases: int
    max_vars: int
    max_effect: int
    max_update_clause: int
    k1: int
    observed_ratio: Optional[float] = None


class IterationRecord(BaseModel):
    kind: Literal["iteration"] = "iteration"
    iteration: int
    candidate: list[str]
    violations: list[ViolationRecord] = Field(default_factory=list)
    gamma: list[str] = Field(default_factory=list)
    clause_count: int = 0
    max_clause_length: int = 0
    max_variables: int = 0
    new_shapes: int = 0
    monitor_alarms: list[str] = Field(default_factory=list)
    apf: Optional[str] = None
    apf_predicted: Optional[bool] = None
    verified: Optional[bool] = None
    length: Optional[LengthRecord] = None
    solver_queries: int = 0
    solver_seconds: float = 0.0


class GrowthRecord(BaseModel):
    rate: Optional[float] = None
    clause_counts: list[int] = Field(default_factory=list)
    new_shapes: list[int] = Field(default_factory=list)
    outside_family: bool = False


class RunReport(BaseModel):
    kind: Literal["summary"] = "summary"
    command: str
    spec: Optional[str] = None
    spec_digest: Optional[str] = None
    outcome: str
    exit_code: int
    iterations: int = 0
    formula: list[str] = Field(default_factory=list)
    reason: str = ""
    countermodel: dict[str, str] = Field(default_factory=dict)
    termination: Optional[str] = None
    growth: Optional[GrowthRecord] = None
    caveats: list[str] = Field(default_factory=list)
    timings: dict[str, float] = Field(default_factory=dict)
    artifacts: list[str] = Field(default_factory=list)
    trace: list[IterationRecord] = Field(default_factory=list, exclude=True)


# ---------------------- Helpers -----------------------
def spec_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def write_records(report: RunReport, out: TextIO) -> None:
    for rec in report.trace:
        out.write(rec.model_dump_json() + "\n")
    out.write(report.model_dump_json() + "\n")


def dump_trace(report: RunReport, directory: str | Path) -> Path:
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    target = path / f"{report.command}-trace.jsonl"
    with target.open("w", encoding="utf-8") as fh:
        write_records(report, fh)
    return target


def read_records(path: str | Path) -> tuple[list[IterationRecord], Optional[RunReport]]:
    return read_records_text(Path(path).read_text(encoding="utf-8"))


def read_records_text(text: str) -> tuple[list[IterationRecord], Optional[RunReport]]:
    iterations: list[IterationRecord] = []
    summary: Optional[RunReport] = None
    for line in text.splitlines():
        if not line.strip():
            continue
        data = json.loads(line)
        if data.get("kind") == "iteration":
            iterations.append(IterationRecord.model_validate(data))
        else:
            summary = RunReport.model_validate(data)
    return iterations, summary


def format_text(report: RunReport) -> str:
    lines = [f"{report.command}: {report.outcome}"]
    if report.spec:
        lines[0] += f" ({report.spec})"
    if report.iterations:
        lines.append(f"iterations: {report.iterations}")
    if report.reason:
        lines.append(f"reason: {report.reason}")
    if report.formula:
        lines.append("formula:")
        lines.extend(f"  {c}" for c in report.formula)
    if report.countermodel:
        lines.append("countermodel:")
        lines.extend(f"  {k} = {v}" for k, v in report.countermodel.items())
    for rec in report.trace:
        lines.append(
            f"  [{rec.iteration}] {len(rec.violations)} violation(s), "
            f"gamma {rec.clause_count} clause(s), max length {rec.max_clause_length}"
        )
    if report.growth is not None and report.growth.rate is not None:
        lines.append(f"clause growth factor: {report.growth.rate:.2f} per iteration")
    if report.growth is not None and report.growth.outside_family:
        lines.append("ground terms outside fixed family")
    if report.termination:
        lines.append(f"termination: {report.termination}")
    for c in report.caveats:
        lines.append(f"caveat: {c}")
    for a in report.artifacts:
        lines.append(f"artifact: {a}")
    return "\n".join(lines)
