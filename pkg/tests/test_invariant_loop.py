import pytest

from invsynth.config import LoopConfig, LoopMode, Semantics
from invsynth.invariant_loop import (
    CandidateInvariant,
    OutcomeKind,
    TransitionSystem,
    apf_guard,
    check_consecution,
    check_initiation,
    classify_termination,
    config_for,
    resolve_keep,
    synthesize,
)
from invsynth.logic_core import ClauseSet, render_clause
from invsynth.smt_client import Equivalence
from invsynth.spec_checks import theory_chain
from invsynth.specfile import parse_clause, parse_clauses

TWO_COUNTERS = """version 1;
base {base};

signature
  ext x, y : {sort};
end

init
  x = 0;
  y = 0;
end

update x
  case true -> x' = x + 1;
end

update y
  case true -> y' = y + 1;
end

property
  x <= y + 1;
end
{options}"""


def counters(spec_text, base="LIA", sort="int", options=""):
    return spec_text(TWO_COUNTERS.format(base=base, sort=sort, options=options))


def test_options_block_sits_between_defaults_and_overrides(spec_text):
    spec = counters(spec_text, options="options\n  mode naive;\n  max-iterations 4;\n  eliminate-const y;\nend\n")
    config = config_for(spec)
    assert config.mode is LoopMode.NAIVE
    assert config.max_iterations == 4
    assert config.eliminate_constants == {"y"}

    config = config_for(spec, mode=LoopMode.REFINED, max_iterations=None, eliminate_constants={"x"})
    assert config.mode is LoopMode.REFINED
    assert config.max_iterations == 4
    assert config.eliminate_constants == {"x", "y"}


def test_keep_defaults_to_every_symbol(spec_text):
    spec = counters(spec_text)
    assert resolve_keep(spec, LoopConfig()) == {"x", "y"}
    assert resolve_keep(spec, LoopConfig(keep=frozenset({"x"}))) == {"x"}
    kept = counters(spec_text, options="options\n  keep y;\nend\n")
    assert resolve_keep(kept, LoopConfig()) == {"y"}


def test_interleaved_semantics_gives_one_step_per_update(spec_text):
    spec = counters(spec_text)
    simultaneous = TransitionSystem(spec, LoopConfig())
    assert [s.label for s in simultaneous.steps] == ["step"]
    interleaved = TransitionSystem(spec, LoopConfig(semantics=Semantics.INTERLEAVED))
    assert [s.label for s in interleaved.steps] == ["x", "y"]
    assert interleaved.step("y").label == "y"
    with pytest.raises(KeyError):
        interleaved.step("z")
    assert interleaved.primed_heads == frozenset()


def test_primed_candidate_renames_updated_symbols(spec_text):
    spec = counters(spec_text)
    ts = TransitionSystem(spec, LoopConfig())
    (clause,) = spec.property.clauses
    assert render_clause(ts.primed_clause(clause)) == "x' <= y' + 1"


def test_termination_class(spec_text):
    assert str(classify_termination(counters(spec_text, base="LRA", sort="real"))) == "GuaranteedTerminating"
    lia = classify_termination(counters(spec_text))
    assert not lia.guaranteed
    assert str(lia) == "NoGuarantee(base theory is not linear rational arithmetic)"
    partial = classify_termination(counters(spec_text, base="LRA", sort="real"), keep=frozenset({"x"}))
    assert partial.reason == "kept symbols are not the full signature"


def test_termination_rejects_nested_reads(spec_text):
    spec = spec_text(
        """version 1;
base LRA;
signature
  ext a : real -> real;
  ext x : real;
end
update x
  case true -> x' = a(a(x));
end
property
  x <= 1;
end
"""
    )
    verdict = classify_termination(spec)
    assert not verdict.guaranteed
    assert verdict.reason.startswith("ground terms outside fixed family")


def test_apf_guard_verdicts(spec_text):
    spec = spec_text(
        """version 1;
base LIA;
signature
  ext a : int -> int;
end
property
  forall i:int . a(i) <= 0;
end
"""
    )
    sorted_reads = ClauseSet(tuple(parse_clause("forall i:int, j:int . i <= j -> a(i) <= a(j)", spec)))
    shifted = ClauseSet(tuple(parse_clause("forall i:int . a(i) <= a(i + 1)", spec)))
    ok = apf_guard(sorted_reads)
    assert ok.in_fragment and ok.predicted is None
    assert str(ok) == "InFragment"
    bad = apf_guard(sorted_reads + shifted)
    assert str(bad) == "OutOfFragment(variable outside direct read)"


def test_conjoin_tracks_provenance(spec_text):
    spec = counters(spec_text)
    start = CandidateInvariant(spec.property, 1, ("property",))
    gamma = ClauseSet(tuple(parse_clause("x <= y", spec) + parse_clause("0 <= y", spec)))
    nxt = start.conjoin(gamma, "gamma_1")
    assert nxt.iteration == 2
    assert nxt.provenance == ("property", "gamma_1", "gamma_1")
    assert len(nxt.clauses) == 3
    assert len(start.clauses) == 1


@pytest.mark.requires_z3
def test_initiation_and_consecution(corpus_spec, solver):
    spec = corpus_spec("parity_steps")
    ts = TransitionSystem(spec, config_for(spec))
    assert check_initiation(ts, spec.property, solver).holds
    cons = check_consecution(ts, spec.property, spec.property, solver)
    assert not cons.holds
    assert cons.violations
    assert {v.update for v in cons.violations} == {"step"}


@pytest.mark.requires_z3
@pytest.mark.parametrize("mode", ["refined", "naive"])
def test_parity_invariant(corpus_spec, solver, mode):
    spec = corpus_spec("parity_steps")
    outcome = synthesize(spec, config_for(spec, mode=mode, max_iterations=3), solver)
    assert outcome.kind is OutcomeKind.INVARIANT, outcome.reason
    if mode == "refined":
        assert outcome.iteration == 2
    expected = spec.property + parse_clauses(["x = y | x = y + 2"], spec)
    same = solver.check_equivalence(outcome.invariant.clauses, expected, theory_chain(spec))
    assert same.verdict is Equivalence.EQUIVALENT, same.direction
    assert outcome.trace[0].violations


@pytest.mark.requires_z3
def test_counter_overflow_has_no_universal_invariant(corpus_spec, solver):
    spec = corpus_spec("counter_overflow")
    outcome = synthesize(spec, client=solver)
    assert outcome.kind is OutcomeKind.NO_UNIVERSAL_INVARIANT
    assert outcome.iteration == 2
    assert str(outcome.termination).startswith("NoGuarantee")


@pytest.mark.requires_z3
def test_budget_is_reported(corpus_spec, solver):
    spec = corpus_spec("parity_steps")
    outcome = synthesize(spec, config_for(spec, max_iterations=1), solver)
    assert outcome.kind is OutcomeKind.BUDGET_EXHAUSTED
    assert outcome.growth is not None
