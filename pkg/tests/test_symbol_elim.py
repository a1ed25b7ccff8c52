import pytest

from invsynth.config import ElimMode
from invsynth.logic_core import ClauseSet, clause_symbols, make_clause, render_clause
from invsynth.smt_client import Equivalence
from invsynth.spec_checks import theory_chain
from invsynth.specfile import parse_clauses
from invsynth.symbol_elim import (
    ElimRequest,
    eliminate_symbols,
    eliminate_symbols_split,
    gamma_level_index,
    verify_gamma,
    without_clause,
)
from invsynth.hierarchy import Level
from invsynth.transforms import skolemize_clause

BRIDGE_GAMMA = [
    "forall x:real, y:real . x <= y & y <= c -> f(x) <= f(y)",
    "forall x:real, y:real . x <= y & c < x -> h(x) <= h(y)",
    "forall x:real, y:real . x <= y & x <= c & c < y -> f(x) <= h(y)",
]


def bridge_request(spec, mode=ElimMode.FULL):
    sig = spec.resolved_signature()
    (goal,) = spec.elim_goal.clauses
    g = skolemize_clause(goal, 0, frozenset(sig.functions))
    return ElimRequest(
        levels=tuple(theory_chain(spec)),
        goal=tuple(make_clause([l]) for l in g.literals),
        signature=sig,
        mode=mode,
        skolems=g.skolems,
    )


def test_gamma_mentions_only_kept_symbols(corpus_spec):
    spec = corpus_spec("monotone_bridge")
    res = eliminate_symbols(bridge_request(spec))
    assert len(res.gamma) > 0
    assert "level glue owns g\n" in res.trace.reduction
    assert all(render_clause(c) != "false" for c in res.gamma)
    for c in res.gamma:
        assert clause_symbols(c) <= {"c", "f", "h"}
        assert [v.name for v in c.variables] == ["x", "y"]
    assert len(res.trace.existential) == 2
    assert all(name.startswith("g_") for name in res.trace.existential)
    assert res.trace.generalized == {"sk_0_x": "x", "sk_0_y": "y"}
    assert res.trace.instances > 0


def test_split_mode_leaves_out_kept_only_clauses(spec_text):
    spec = spec_text(
        """version 1;
base LRA;
signature
  param c : real;
  param f, h : real -> real;
  ext g : real -> real;
end
theory level glue closure identity
  forall x:real . x <= c -> g(x) = f(x);
  forall x:real . c < x -> g(x) = h(x);
  0 <= c;
end
elim
  goal forall x:real, y:real . x <= y -> g(x) <= g(y);
end
options
  keep c, f, h;
end
"""
    )
    full = eliminate_symbols(bridge_request(spec))
    split = eliminate_symbols_split(bridge_request(spec))
    assert full.trace.excluded == []
    assert split.trace.excluded == ["glue: 0 <= c"]
    assert split.gamma.symbols() <= {"c", "f", "h"}


def test_without_clause_drops_one(corpus_spec):
    res = eliminate_symbols(bridge_request(corpus_spec("monotone_bridge")))
    smaller = without_clause(res, 0)
    assert len(smaller.gamma) == len(res.gamma) - 1
    assert smaller.gamma.clauses == res.gamma.clauses[1:]


def test_gamma_level_sits_below_update_definitions():
    from invsynth.hierarchy import CaseDefinition

    plain = Level("theory")
    update = Level("update", definitions=(CaseDefinition("a'", (), ()),))
    assert gamma_level_index([plain, update]) == 1
    assert gamma_level_index([plain]) == 1
    assert gamma_level_index([]) == 0


@pytest.mark.requires_z3
def test_bridge_gamma_is_the_expected_condition(corpus_spec, solver):
    spec = corpus_spec("monotone_bridge")
    res = eliminate_symbols(bridge_request(spec))
    expected = parse_clauses(BRIDGE_GAMMA, spec)
    result = solver.check_equivalence(res.gamma, expected, theory_chain(spec))
    assert result.verdict is Equivalence.EQUIVALENT, result.direction


@pytest.mark.requires_z3
def test_gamma_verifies_and_is_needed(corpus_spec, solver):
    spec = corpus_spec("monotone_bridge")
    req = bridge_request(spec)
    res = eliminate_symbols(req)
    assert verify_gamma(req, res, solver).is_unsat
    empty = res
    while len(empty.gamma):
        empty = without_clause(empty, 0)
    assert verify_gamma(req, empty, solver).is_sat


@pytest.mark.requires_z3
def test_dropping_an_expected_clause_breaks_verification(corpus_spec, solver):
    spec = corpus_spec("monotone_bridge")
    req = bridge_request(spec)
    res = eliminate_symbols(req)
    expected = parse_clauses(BRIDGE_GAMMA, spec)
    for k in range(len(expected)):
        weaker = ClauseSet(tuple(c for i, c in enumerate(expected.clauses) if i != k))
        mutated = type(res)(weaker, res.trace, res.reduction)
        assert verify_gamma(req, mutated, solver).is_sat, BRIDGE_GAMMA[k]
