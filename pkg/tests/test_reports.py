import io

from invsynth.reports import (
    GrowthRecord,
    IterationRecord,
    RunReport,
    ViolationRecord,
    dump_trace,
    format_text,
    read_records,
    read_records_text,
    spec_digest,
    write_records,
)


def sample_report() -> RunReport:
    first = IterationRecord(
        iteration=1,
        candidate=["y <= x", "x <= y + 2"],
        violations=[ViolationRecord(update="step", clause_index=1, goal=["x <= y + 1", "y + 2 < x'"], model={"x": "1"})],
        gamma=["x = y | x = y + 2"],
        clause_count=1,
        max_clause_length=2,
    )
    second = IterationRecord(iteration=2, candidate=["y <= x", "x <= y + 2", "x = y | x = y + 2"])
    return RunReport(
        command="synth",
        spec="corpus/parity_steps.tcs",
        outcome="invariant",
        exit_code=0,
        iterations=2,
        formula=second.candidate,
        termination="NoGuarantee(base theory is not linear rational arithmetic)",
        growth=GrowthRecord(rate=1.5, clause_counts=[1, 2]),
        caveats=["locality assumed for level k"],
        trace=[first, second],
    )


def test_records_are_one_object_per_line():
    out = io.StringIO()
    write_records(sample_report(), out)
    lines = out.getvalue().splitlines()
    assert len(lines) == 3
    assert '"kind":"iteration"' in lines[0]
    assert '"kind":"summary"' in lines[-1]
    assert '"trace"' not in lines[-1]


def test_records_read_back():
    report = sample_report()
    out = io.StringIO()
    write_records(report, out)
    iterations, summary = read_records_text(out.getvalue() + "\n")
    assert [r.iteration for r in iterations] == [1, 2]
    assert iterations[0].violations[0].goal == ["x <= y + 1", "y + 2 < x'"]
    assert summary is not None
    assert summary.outcome == "invariant"
    assert summary.formula == report.formula
    assert summary.trace == []


def test_dump_trace_writes_jsonl(tmp_path):
    target = dump_trace(sample_report(), tmp_path / "out")
    assert target.name == "synth-trace.jsonl"
    iterations, summary = read_records(target)
    assert len(iterations) == 2
    assert summary.iterations == 2


def test_text_format():
    text = format_text(sample_report())
    assert text.splitlines()[0] == "synth: invariant (corpus/parity_steps.tcs)"
    assert "  x = y | x = y + 2" in text
    assert "  [1] 1 violation(s), gamma 1 clause(s), max length 2" in text
    assert "clause growth factor: 1.50 per iteration" in text
    assert "caveat: locality assumed for level k" in text


def test_digest_is_stable():
    assert spec_digest("version 1;") == spec_digest("version 1;")
    assert spec_digest("version 1;") != spec_digest("version 2;")
    assert len(spec_digest("")) == 16
