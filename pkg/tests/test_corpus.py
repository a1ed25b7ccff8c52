import pytest

from invsynth.corpus import CORPUS_DIR as CORPUS
from invsynth.corpus import ExpectedRun, check_run, load_expectation, problems, solver_free

CASES = [
    pytest.param(path, run, id=f"{path.stem}-{run.name}")
    for path in problems(CORPUS)
    for run in load_expectation(path).runs
]

SOLVER_FREE = [case for case in CASES if solver_free(case.values[1])]


def test_every_problem_has_runs():
    assert CASES
    assert SOLVER_FREE
    assert len(problems(CORPUS)) == len(list(CORPUS.glob("*.tcs")))


def test_solver_free_runs():
    assert solver_free(ExpectedRun(name="a", command="elim", outcome=["ok"], exit_code=0))
    assert not solver_free(ExpectedRun(name="b", command="elim", args=["--verify"], outcome=["ok"], exit_code=0))
    assert not solver_free(ExpectedRun(name="c", command="synth", outcome=["invariant"], exit_code=0))


@pytest.mark.parametrize("path, run", SOLVER_FREE)
def test_corpus_run_shape(path, run):
    result = check_run(path, run, equivalence=False)
    assert result.passed, "; ".join(result.problems)


def test_shape_check_compares_symbols():
    path = CORPUS / "monotone_bridge.tcs"
    (run,) = [r for r in load_expectation(path).runs if r.name == "default"]
    wrong = run.model_copy(update={"formula": ["forall x:real . f(x) <= f(x + 1)"]})
    result = check_run(path, wrong, equivalence=False)
    assert not result.passed
    assert result.problems == ["formula symbols ['c', 'f', 'h'], expected ['f']"]


@pytest.mark.slow
@pytest.mark.requires_z3
@pytest.mark.parametrize("path, run", CASES)
def test_corpus_run(path, run, solver):
    result = check_run(path, run, solver)
    assert result.passed, "; ".join(result.problems)
