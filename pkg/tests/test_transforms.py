import random
from fractions import Fraction

import pytest

from invsynth.errors import ContractViolation, QEBlowupError
from invsynth.linear import atom_of_literal
from invsynth.logic_core import (
    FALSE,
    INT,
    REAL,
    TRUE,
    App,
    ClauseSet,
    FunctionSymbol,
    GuardedCase,
    Role,
    Signature,
    Var,
    const,
    eq,
    le,
    lt,
    make_clause,
    ne,
    num,
    plus,
    render_clause,
    substitute_literal,
)
from invsynth.transforms import (
    clause_alternatives,
    clean_conj,
    collect_est,
    dnf_product,
    is_trivially_false,
    negate_conj,
    prime,
    skolemize_clause,
    skolemize_negation,
    to_dnf_guarded,
)

v, w = Var("v", INT), Var("w", INT)
x, y = const("x", INT), const("y", INT)


def _sig():
    funcs = {
        "a": FunctionSymbol("a", (INT,), INT, Role.EXT),
        "x": FunctionSymbol("x", (), INT, Role.EXT),
        "y": FunctionSymbol("y", (), INT, Role.EXT),
        "n": FunctionSymbol("n", (), INT, Role.PARAM),
    }
    return Signature({"int": INT}, funcs, updated={"a", "x"})


def test_prime_renames_only_updated_symbols():
    sig = _sig()
    c = make_clause([le(App("a", (v,), INT), plus(x, y))])
    primed = prime(c, ["a", "x"], sig)
    assert render_clause(primed) == "forall v:int . a'(v) <= x' + y"
    assert prime(c, [], sig) is c


def test_skolemize_uses_clause_index_names():
    c = make_clause([le(w, v)])
    g = skolemize_clause(c, 3)
    assert [s.constant.symbol for s in g.skolems] == ["sk_3_v", "sk_3_w"]
    sk_v, sk_w = (s.constant for s in g.skolems)
    assert g.literals == (lt(sk_v, sk_w),)


def test_skolem_names_avoid_taken_symbols():
    g = skolemize_clause(make_clause([le(v, x)]), 0, frozenset({"sk_0_v"}))
    assert g.skolems[0].constant.symbol == "sk_0_v_"


def test_skolemized_negation_one_conjunction_per_clause():
    psi = ClauseSet((make_clause([le(v, x)]), make_clause([eq(x, y)])))
    out = skolemize_negation(psi)
    assert [g.clause_index for g in out] == [0, 1]
    assert out[1].literals == (ne(x, y),)


def test_negate_conj_drops_true():
    c = negate_conj((TRUE, le(x, y)))
    assert c.literals == (lt(y, x),)


def test_clean_conj():
    assert clean_conj((le(x, y), TRUE, le(x, y))) == (le(x, y),)
    assert clean_conj((le(x, y), lt(y, x))) is None
    assert clean_conj((FALSE,)) is None
    assert is_trivially_false((eq(x, y), ne(x, y)))


def test_dnf_product_multiplies_and_prunes():
    c1 = make_clause([le(x, num(0, INT)), le(y, num(0, INT))])
    c2 = make_clause([lt(num(0, INT), x)])
    out = dnf_product([clause_alternatives(c1), clause_alternatives(c2)])
    # x <= 0 & 0 < x is dropped as complementary
    assert out == [(le(y, num(0, INT)), lt(num(0, INT), x))]
    pruned = dnf_product(
        [clause_alternatives(c1), clause_alternatives(c2)],
        prune=lambda conj: le(y, num(0, INT)) in conj,
    )
    assert pruned == []


def test_dnf_product_cap():
    groups = [[(eq(x, num(i, INT)),), (eq(y, num(i, INT)),)] for i in range(6)]
    with pytest.raises(QEBlowupError):
        dnf_product(groups, cap=8)


def test_guarded_dnf_requires_certified_guards():
    case = GuardedCase((le(v, num(0, INT)),), (eq(App("a'", (v,), INT), num(0, INT)),))
    with pytest.raises(ContractViolation):
        to_dnf_guarded([case], [{v: x}], exclusive=False)


def test_collect_extension_terms_inner_first():
    inner = App("a", (x,), INT)
    outer = App("a", (inner,), INT)
    c = make_clause([le(outer, App("a", (v,), INT))])
    assert collect_est([c], [eq(y, inner)], frozenset({"a"})) == [inner, outer]


# ---------------------------------------------
# Guarded DNF agrees with the implication form
# ---------------------------------------------
def _random_system(rng):
    c = const("c", INT)
    cut = rng.randint(0, 3)
    if rng.random() < 0.5:
        guards = [(le(v, plus(c, num(cut, INT))),), (lt(plus(c, num(cut, INT)), v),)]
    else:
        guards = [
            (lt(v, c),),
            (eq(v, c),),
            (lt(c, v),),
        ]
    cases = []
    for g in guards:
        rhs = rng.choice([plus(App("a", (v,), INT), num(rng.randint(-1, 1), INT)), num(rng.randint(0, 3), INT), c])
        cases.append(GuardedCase(g, (eq(App("a'", (v,), INT), rhs),)))
    return cases


def _holds(lits, assignment):
    for lit in lits:
        atom = atom_of_literal(lit)
        if atom is False or (atom is not True and not atom.evaluate(assignment)):
            return False
    return True


def test_guarded_dnf_matches_implications():
    rng = random.Random(5)
    i1, i2, c = const("i1", INT), const("i2", INT), const("c", INT)
    atoms = [i1, i2, c]
    atoms += [App(f, (i,), INT) for f in ("a", "a'") for i in (i1, i2)]
    for _ in range(100):
        cases = _random_system(rng)
        instances = [{v: i1}, {v: i2}]
        dnf = to_dnf_guarded(cases, instances, exclusive=True)
        for _ in range(60):
            assignment = {t: Fraction(rng.randint(0, 3)) for t in atoms}
            expected = all(
                not _holds([substitute_literal(l, inst) for l in case.guard], assignment)
                or _holds([substitute_literal(l, inst) for l in case.effect], assignment)
                for inst in instances
                for case in cases
            )
            got = any(_holds(conj, assignment) for conj in dnf)
            assert got == expected


def test_prime_on_real_terms():
    funcs = {"g": FunctionSymbol("g", (REAL,), REAL, Role.EXT)}
    sig = Signature({"real": REAL}, funcs, updated={"g"})
    t = App("g", (const("p", REAL),), REAL)
    assert prime(t, ["g"], sig) is App("g'", (const("p", REAL),), REAL)
