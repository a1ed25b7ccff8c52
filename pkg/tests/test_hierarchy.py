import random

import pytest

from invsynth.errors import QEBlowupError
from invsynth.hierarchy import (
    CaseDefinition,
    Closure,
    Level,
    build_congruence,
    dumps,
    inline_unit_definitions,
    instantiate,
    known_distinct,
    purify,
    reduce_chain,
    strict_facts,
    unpurify_term,
)
from invsynth.logic_core import (
    INT,
    REAL,
    App,
    ClauseSet,
    GuardedCase,
    Var,
    const,
    eq,
    le,
    lt,
    make_clause,
    num,
    plus,
    render_clause,
)

a, b, c, d = (const(n, REAL) for n in "abcd")
i, j = Var("i", REAL), Var("j", REAL)


def f(t):
    return App("f", (t,), REAL)


def g(t):
    return App("g", (t,), REAL)


def unit(lit):
    return make_clause([lit])


MONOTONE = Level("mono", ClauseSet((make_clause([lt(j, i), le(g(i), g(j))]),)))


def test_purification_names_follow_symbol():
    red = reduce_chain([], [unit(le(f(f(c)), d))])
    defs = {k.symbol: v for k, v in red.defs.items()}
    assert defs["f_1"] is f(c)
    assert defs["f_2"] is App("f", (const("f_1", REAL),), REAL)
    assert [render_clause(x) for x in red.clauses] == ["f_2 <= d"]
    assert unpurify_term(const("f_2", REAL), red.defs) is f(f(c))


def test_purification_skips_taken_names():
    red = reduce_chain([], [unit(le(f(c), d))], taken={"f_1"})
    assert [k.symbol for k in red.defs] == ["f_2"]


def test_purify_returns_definitions():
    group = ((le(g(a), num(0, REAL)),), (le(num(1, REAL), g(a)),))
    clauses, groups, defs = purify([unit(le(f(f(c)), d))], [group], taken={"g_1"})
    assert [render_clause(x) for x in clauses] == ["f_2 <= d"]
    assert sorted(k.symbol for k in defs) == ["f_1", "f_2", "g_2"]
    (alternatives,) = groups
    assert alternatives[0] == (le(const("g_2", REAL), num(0, REAL)),)


def test_instantiate_one_level():
    report = instantiate(MONOTONE, {g(a), g(b)})
    assert report.owned == {"g"}
    assert report.groups == []
    assert len(report.instances) == 2
    assert all(len(x.literals) == 2 and not x.variables for x in report.instances)
    idle = instantiate(MONOTONE, {f(a)})
    assert idle.instances == [] and idle.dropped == []


def test_shared_symbols_are_not_owned():
    clauses = ClauseSet((make_clause([eq(g(i), f(i))]),))
    goal = [unit(lt(g(b), g(a)))]
    glue = Level("glue", clauses, shared=frozenset({"f"}))
    red = reduce_chain([glue], goal)
    assert red.reports[0].owned == {"g"}
    assert len(red.reports[0].instances) == 2
    assert all("f(" in render_clause(x) for x in red.reports[0].instances)
    assert "level glue owns g\n" in dumps(red)
    # owning f filters every instance, since no f term occurs yet
    assert reduce_chain([Level("glue", clauses)], goal).reports[0].instances == []


def test_clause_without_candidates_is_dropped_and_listed():
    low = Level("low", ClauseSet((make_clause([le(f(i), c)]),)))
    up = Level("up", ClauseSet((make_clause([le(g(a), f(i))]),)))
    red = reduce_chain([low, up], [unit(lt(c, g(a)))])
    top, bottom = red.reports
    assert top.name == "up"
    assert [render_clause(x) for x in top.dropped] == ["forall i:real . g(a) <= f(i)"]
    assert top.instances == []
    # nothing of f occurs, so the lower clause is simply not needed
    assert bottom.dropped == []
    assert "  drop  forall i:real . g(a) <= f(i)" in dumps(red)


def test_congruence_between_same_head_definitions():
    red = reduce_chain([], [unit(le(f(a), f(b)))])
    (cong,) = red.congruence
    assert cong.symbol == "f"
    assert render_clause(cong.as_clause()) == "a != b | f_1 = f_2"


def test_congruence_pruned_by_known_distinct_arguments():
    red = reduce_chain([], [unit(lt(f(a), f(b))), unit(lt(a, b))])
    assert red.congruence == []
    red = reduce_chain([], [unit(lt(f(a), f(plus(a, num(1, REAL)))))])
    assert red.congruence == []


def test_congruence_with_known_distinct_values_becomes_disequality():
    fa, fb = const("f_1", REAL), const("f_2", REAL)
    defs = {fa: f(a), fb: f(b)}
    kept, replaced = build_congruence(defs, [lt(fa, fb)])
    assert kept == []
    assert [render_clause(x) for x in replaced] == ["a != b"]


def test_known_distinct():
    facts = strict_facts([lt(a, b), le(c, d)])
    assert known_distinct(a, b, facts)
    assert known_distinct(b, a, facts)
    assert not known_distinct(c, d, facts)
    assert known_distinct(a, plus(a, num(2, REAL)), set())


def test_identity_closure_instantiates_on_present_terms():
    goal = [unit(le(a, b)), unit(lt(g(b), g(a)))]
    red = reduce_chain([MONOTONE], goal)
    (report,) = red.reports
    assert report.owned == frozenset({"g"})
    assert sorted(render_clause(x) for x in report.instances) == [
        "a < b | g(b) <= g(a)",
        "b < a | g(a) <= g(b)",
    ]


def test_identity_closure_with_offsets_keeps_terms_closed():
    k = Var("k", INT)
    x = const("x", INT)

    def arr(t):
        return App("arr", (t,), INT)

    level = Level("sorted", ClauseSet((make_clause([le(arr(k), arr(plus(k, num(1, INT))))]),)))
    red = reduce_chain([level], [unit(lt(arr(plus(x, num(1, INT))), arr(x)))])
    assert [render_clause(x) for x in red.reports[0].instances] == ["arr(x) <= arr(x + 1)"]

    apf = Level("sorted", level.clauses, Closure.APF)
    red = reduce_chain([apf], [unit(lt(arr(plus(x, num(1, INT))), arr(x)))])
    assert len(red.reports[0].instances) == 2


def test_apf_closure_uses_index_terms():
    level = Level("mono", MONOTONE.clauses, Closure.APF)
    red = reduce_chain([level], [unit(lt(g(a), c))])
    assert red.reports[0].instances == []
    red = reduce_chain([level], [unit(lt(g(a), c))], index_terms=[b])
    assert sorted(render_clause(x) for x in red.reports[0].instances) == [
        "a < b | g(b) <= g(a)",
        "b < a | g(a) <= g(b)",
    ]


def test_levels_instantiate_top_down():
    bridge = Level("bridge", ClauseSet((make_clause([eq(g(i), f(i))]),)))
    red = reduce_chain([MONOTONE, bridge], [unit(lt(f(b), f(a))), unit(le(a, b))])
    names = [r.name for r in red.reports]
    assert names == ["bridge", "mono"]
    assert len(red.reports[0].instances) == 2
    assert len(red.reports[1].instances) == 2


def test_case_definition_instances():
    n = const("n", INT)
    x = const("x", INT)
    p = Var("p", INT)

    def arr(t, primed=False):
        return App("arr'" if primed else "arr", (t,), INT)

    cases = (
        GuardedCase((le(p, n),), (eq(arr(p, True), plus(arr(p), num(1, INT))),)),
        GuardedCase((lt(n, p),), (eq(arr(p, True), arr(p)),)),
    )
    goal = [unit(lt(arr(x, True), num(0, INT)))]

    exclusive = Level("update", definitions=(CaseDefinition("arr'", (p,), cases, exclusive=True),))
    red = reduce_chain([exclusive], goal)
    (group,) = red.reports[0].groups
    assert len(group) == 2

    plain = Level("update", definitions=(CaseDefinition("arr'", (p,), cases),))
    red = reduce_chain([plain], goal)
    assert sorted(render_clause(x) for x in red.reports[0].instances) == [
        "n < x | arr'(x) = arr(x) + 1",
        "x <= n | arr'(x) = arr(x)",
    ]


def test_instantiation_cap():
    level = Level("mono", MONOTONE.clauses, Closure.APF)
    with pytest.raises(QEBlowupError):
        reduce_chain([level], [unit(lt(g(a), g(b)))], index_terms=[c, d], cap=3)


def test_inline_unit_definitions():
    x, y, z = (const(n, INT) for n in "xyz")
    clauses = [unit(eq(z, plus(x, num(1, INT)))), unit(le(z, y))]
    rest, mapping = inline_unit_definitions(clauses, frozenset({"z"}))
    assert [render_clause(x) for x in rest] == ["x + 1 <= y"]
    assert mapping == {z: plus(x, num(1, INT))}
    rest, mapping = inline_unit_definitions(clauses, frozenset())
    assert rest == clauses and mapping == {}


def test_dumps_lists_sections():
    red = reduce_chain([MONOTONE], [unit(le(a, b)), unit(lt(g(b), g(a)))])
    text = dumps(red)
    assert "level mono owns g" in text
    assert "g_1 := g(b)" in text and "g_2 := g(a)" in text
    assert text.index("definitions") < text.index("congruence") < text.index("ground")


# ---------------------------------------------
# Reduced formula is equisatisfiable with the quantified one
# ---------------------------------------------
@pytest.mark.requires_z3
def test_reduction_is_equisatisfiable(solver):
    rng = random.Random(13)
    consts = [a, b, c]
    undecided = 0
    for _ in range(30):
        goal = []
        for _ in range(rng.randint(2, 4)):
            s, t = rng.sample(consts, 2)
            if rng.random() < 0.5:
                goal.append(unit(rng.choice([le, lt, eq])(s, t)))
            else:
                goal.append(unit(rng.choice([le, lt])(g(s), plus(g(t), num(rng.randint(-1, 1), REAL)))))
        red = reduce_chain([MONOTONE], goal)
        reduced = solver.check_reduced(red, "reduced")
        direct = solver.check_sat_quantified(list(MONOTONE.clauses) + goal, label="direct")
        if not (reduced.decided and direct.decided):
            undecided += 1
            continue
        assert reduced.is_sat == direct.is_sat, [render_clause(x) for x in goal]
    assert undecided < 5
