import stat
from fractions import Fraction

import pytest
from pydantic import ValidationError

from invsynth.config import SolverConfig
from invsynth.errors import SolverError
from invsynth.hierarchy import Level
from invsynth.logic_core import (
    INT,
    REAL,
    App,
    ClauseSet,
    DivLit,
    GroundFormula,
    Var,
    const,
    eq,
    le,
    lt,
    make_clause,
    num,
    plus,
)
from invsynth.smt_client import (
    Equivalence,
    SmtClient,
    Status,
    parse_model,
    parse_verdict,
    render_script,
    session_body,
    session_status,
    smt_num,
    smt_symbol,
)

x, y = const("x", INT), const("y", INT)
p = const("p", REAL)


def test_symbols_and_numerals():
    assert smt_symbol("x_1") == "x_1"
    assert smt_symbol("a'") == "|a'|"
    assert smt_symbol("div") == "|div|"
    assert smt_num(Fraction(-3), INT) == "(- 3)"
    assert smt_num(Fraction(1, 2), REAL) == "(/ 1.0 2.0)"
    assert smt_num(Fraction(2), REAL) == "2.0"


def test_script_declares_and_picks_logic():
    f = GroundFormula((make_clause([le(App("a", (x,), INT), y)]),))
    script = render_script(f, produce_model=True)
    lines = script.splitlines()
    assert lines[0] == "(set-option :produce-models true)"
    assert lines[1] == "(set-logic QF_UFLIA)"
    assert "(declare-fun a (Int) Int)" in lines
    assert lines[-2:] == ["(check-sat)", "(get-model)"]
    mixed = render_script(GroundFormula((make_clause([le(x, y)]), make_clause([le(p, num(0, REAL))]))))
    assert "(set-logic QF_AUFLIRA)" in mixed


def test_script_without_header():
    script = render_script(GroundFormula((make_clause([le(x, y)]),)), header=False)
    assert not script.startswith("(set-")


def test_divisibility_rendering():
    f = GroundFormula((make_clause([DivLit(3, x)]), make_clause([DivLit(2, y, positive=False)])))
    ground = render_script(f)
    assert "(declare-fun div_q_1 () Int)" in ground
    assert "(= x (* 3 div_q_1))" in ground
    assert "(= y (+ (* 2 div_q_2) 1))" in ground
    v = Var("v", INT)
    quantified = render_script(GroundFormula((make_clause([DivLit(3, v)]),)), quantified=True)
    assert "(forall ((v Int)) (= (mod v 3) 0))" in quantified
    assert "(set-logic UFLIA)" in quantified


def test_quotients_avoid_formula_symbols():
    user = const("div_q_1", INT)
    script = render_script(GroundFormula((make_clause([DivLit(3, x)]), make_clause([le(user, x)]))))
    assert "(declare-fun div_q_1_ () Int)" in script
    assert "(= x (* 3 div_q_1_))" in script
    assert script.count("(declare-fun div_q_1 () Int)") == 1


def test_groups_are_disjunctions_of_conjunctions():
    f = GroundFormula(groups=(((le(x, y), lt(y, num(3, INT))), (eq(x, y),)),))
    assert "(assert (or (and (<= x y) (< y 3)) (= x y)))" in render_script(f)


def test_parse_model():
    text = """(
  (define-fun x () Int 3)
  (define-fun y () Int (- 2))
  (define-fun p () Real (/ 1.0 3.0))
  (define-fun |a'| () Int 0)
  (define-fun div_q_1 () Int 7)
  (define-fun f ((x!0 Int)) Int 1)
)"""
    assert parse_model(text) == {"x": 3, "y": -2, "p": Fraction(1, 3), "a'": 0}


def test_parse_verdict():
    assert parse_verdict("unsat\n", False)[0] is Status.UNSAT
    status, model, _ = parse_verdict("sat\n((define-fun x () Int 1))\n", True)
    assert status is Status.SAT and model == {"x": 1}
    assert parse_verdict("unknown", False)[0] is Status.UNKNOWN
    assert parse_verdict("", False)[0] is Status.PROCESS_ERROR
    assert parse_verdict('(error "line 1")', False)[0] is Status.PROCESS_ERROR


def test_config_rejects_nonpositive_timeout():
    with pytest.raises(ValidationError):
        SolverConfig(timeout_s=0)


def test_missing_executable_is_a_solver_error():
    client = SmtClient(SolverConfig(executable="invsynth-no-such-solver"))
    with pytest.raises(SolverError):
        client.check_sat(GroundFormula((make_clause([le(x, y)]),)))


def _fake_solver(tmp_path, answer):
    path = tmp_path / "fake-solver"
    path.write_text(f"#!/bin/sh\ncat > /dev/null\necho {answer}\n")
    path.chmod(path.stat().st_mode | stat.S_IXUSR)
    return str(path)


def test_stats_and_emitted_queries(tmp_path):
    config = SolverConfig(executable=_fake_solver(tmp_path, "unsat"), extra_args=[], emit_dir=tmp_path / "smt")
    with SmtClient(config) as client:
        v = client.check_sat(GroundFormula((make_clause([le(x, y)]),)), label="first query")
        assert v.is_unsat and v.decided
        assert v.query_bytes > 0
        client.check_sat(GroundFormula((make_clause([le(y, x)]),)), label="second")
    assert client.stats.queries == 2 and client.stats.unsat == 2
    emitted = sorted(p.name for p in (tmp_path / "smt").iterdir())
    assert emitted == ["0001_first_query.smt2", "0002_second.smt2"]
    assert (tmp_path / "smt" / emitted[0]).read_text().endswith("; verdict: unsat\n")


def test_session_body_drops_options_and_logic():
    script = render_script(GroundFormula((make_clause([le(x, y)]),)), produce_model=True)
    body = session_body(script).splitlines()
    assert not [l for l in body if l.startswith(("(set-option", "(set-logic"))]
    assert body[-2:] == ["(check-sat)", "(get-model)"]
    assert "(declare-fun x () Int)" in body


def test_session_unknown_past_timeout_is_a_timeout():
    assert session_status(Status.UNKNOWN, 2.0, 1.0) is Status.TIMEOUT
    assert session_status(Status.UNKNOWN, 0.5, 1.0) is Status.UNKNOWN
    assert session_status(Status.SAT, 2.0, 1.0) is Status.SAT


def _session_solver(tmp_path, delay):
    log = tmp_path / "session.log"
    path = tmp_path / "session-solver"
    path.write_text(
        "#!/bin/sh\n"
        "while IFS= read -r line; do\n"
        f'  echo "$line" >> {log}\n'
        '  case "$line" in\n'
        f'    "(check-sat)") sleep {delay}; echo unknown ;;\n'
        "    \"(echo \"*) echo '\"invsynth-end\"' ;;\n"
        "  esac\n"
        "done\n"
    )
    path.chmod(path.stat().st_mode | stat.S_IXUSR)
    return str(path), log


def test_incremental_session_sets_models_once_and_reports_timeouts(tmp_path):
    executable, log = _session_solver(tmp_path, 0.3)
    config = SolverConfig(executable=executable, extra_args=[], incremental=True, timeout_s=0.1)
    with SmtClient(config) as client:
        first = client.check_sat(GroundFormula((make_clause([le(x, y)]),)))
        second = client.check_sat(GroundFormula((make_clause([le(y, x)]),)))
    assert first.status is Status.TIMEOUT and second.status is Status.TIMEOUT
    sent = log.read_text().splitlines()
    assert sent[0] == "(set-option :produce-models true)"
    assert sent.count("(set-option :produce-models true)") == 1
    assert sent.count("(push 1)") == 2
    assert not [l for l in sent if l.startswith("(set-logic")]


@pytest.mark.requires_z3
def test_sat_with_model(solver):
    f = GroundFormula((make_clause([le(x, num(3, INT))]), make_clause([lt(num(2, INT), x)])))
    v = solver.check_sat(f)
    assert v.is_sat and v.model["x"] == 3


@pytest.mark.requires_z3
def test_reduced_model_is_translated(solver):
    from invsynth.hierarchy import reduce_chain

    a_x = App("a", (x,), INT)
    red = reduce_chain([], [make_clause([eq(a_x, num(5, INT))])])
    v = solver.check_reduced(red)
    assert v.is_sat and v.model["a(x)"] == 5


@pytest.mark.requires_z3
def test_entailment_and_equivalence(solver):
    i, j = Var("i", INT), Var("j", INT)
    mono = Level("mono", ClauseSet((make_clause([lt(j, i), le(App("a", (i,), INT), App("a", (j,), INT))]),)))
    goal = ClauseSet((make_clause([le(App("a", (x,), INT), App("a", (plus(x, num(2, INT)),), INT))]),))
    assert solver.check_entailment([mono], goal).is_unsat
    phi = ClauseSet((make_clause([le(x, y)]),))
    psi = ClauseSet((make_clause([lt(x, plus(y, num(1, INT)))]),))
    assert solver.check_equivalence(phi, psi).verdict is Equivalence.EQUIVALENT
    weaker = ClauseSet((make_clause([le(x, plus(y, num(1, INT)))]),))
    result = solver.check_equivalence(phi, weaker)
    assert result.verdict is Equivalence.INEQUIVALENT
    assert result.direction == "rhs does not entail lhs"
