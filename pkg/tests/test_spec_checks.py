import pytest

from invsynth.errors import RoleConflictError
from invsynth.hierarchy import Closure, Level
from invsynth.logic_core import INT, App, ClauseSet, Var, const, eq, le, lt, make_clause, num, plus
from invsynth.spec_checks import (
    LocalityClass,
    ObligationKind,
    ObligationStatus,
    apf_violation,
    certify_updates,
    check_locality_class,
    check_property_roles,
    syntactically_partitioned,
    theory_chain,
    validate_a3,
)

x, n = const("x", INT), const("n", INT)
i, j = Var("i", INT), Var("j", INT)


def arr(t):
    return App("arr", (t,), INT)


def spec_with(spec_text, cases, extra=""):
    body = "\n".join(f"  case {c};" for c in cases)
    return spec_text(
        f"""version 1;
base LIA;
signature
  const n : int;
  param arr : int -> int;
  ext x : int;
end
{extra}
update x
{body}
end
property
  x <= n;
end
"""
    )


def test_syntactic_partition():
    assert syntactically_partitioned([[le(x, n)], [lt(n, x)]])
    assert not syntactically_partitioned([[le(x, n)], [le(n, x)]])
    assert not syntactically_partitioned([[le(x, n)]])


def test_certify_without_solver(spec_text):
    good = spec_with(spec_text, ["x <= n -> x' = x + 1", "n < x -> x' = 0"])
    assert certify_updates(good, None) == {"x": True}
    bad = spec_with(spec_text, ["x <= n -> x' = x + 1", "n <= x -> x' = 0"])
    assert certify_updates(bad, None) == {"x": False}
    single = spec_with(spec_text, ["true -> x' = x + 1"])
    assert certify_updates(single, None) == {"x": True}


def test_property_roles(spec_text):
    spec = spec_with(spec_text, ["true -> x' = x + 1"])
    check_property_roles(spec, frozenset({"x", "n"}))
    with pytest.raises(RoleConflictError):
        check_property_roles(spec, frozenset({"n"}))


def test_theory_chain_keeps_closure(spec_text):
    spec = spec_with(
        spec_text,
        ["true -> x' = x + 1"],
        extra="theory level sorted closure apf\n  forall i:int, j:int . i <= j -> arr(i) <= arr(j);\nend",
    )
    (level,) = theory_chain(spec)
    assert level.name == "sorted" and level.closure is Closure.APF
    assert check_locality_class(spec.levels[0]) is LocalityClass.APF


def _level(*clauses, closure=Closure.IDENTITY):
    return Level("l", ClauseSet(tuple(make_clause(c) for c in clauses)), closure)


def test_locality_classes():
    assert check_locality_class(_level([le(arr(x), n)])) is LocalityClass.FREE
    monotone = _level([lt(j, i), le(arr(i), arr(j))])
    assert check_locality_class(monotone) is LocalityClass.MONOTONE
    cases = _level([lt(n, i), eq(arr(i), num(0, INT))], [le(i, n), eq(arr(i), num(1, INT))])
    assert check_locality_class(cases) is LocalityClass.CASE_DEFINITION
    nested = _level([le(arr(arr(i)), n)])
    assert check_locality_class(nested) is LocalityClass.UNVERIFIED
    shifted = _level([le(arr(i), arr(plus(i, num(1, INT))))], closure=Closure.APF)
    assert check_locality_class(shifted) is LocalityClass.UNVERIFIED


def test_apf_violations():
    assert apf_violation(make_clause([lt(j, i), le(arr(i), arr(j))])) is None
    assert apf_violation(make_clause([le(arr(arr(i)), n)])) == "nested read"
    assert apf_violation(make_clause([le(arr(plus(i, num(1, INT))), n)])) == "variable outside direct read"
    assert apf_violation(make_clause([le(arr(i), i)])) == "variable outside direct read"
    assert apf_violation(make_clause([eq(i, j), le(arr(i), arr(j))])) == (
        "index guard not a positive combination of <= and ="
    )


@pytest.mark.requires_z3
def test_validate_partitioned_update(spec_text, solver):
    spec = spec_with(spec_text, ["x <= n -> x' = x + 1", "n < x -> x' = 0"])
    report = validate_a3(spec.updates[0], spec, solver)
    kinds = [o.kind for o in report.obligations]
    assert kinds == [ObligationKind.EXCLUSIVITY, ObligationKind.EXHAUSTIVENESS] + [ObligationKind.SATISFIABILITY] * 2
    assert report.passed()
    assert report.exclusive_and_exhaustive


@pytest.mark.requires_z3
def test_validate_reports_overlap_and_empty_effect(spec_text, solver):
    spec = spec_with(spec_text, ["x <= n -> x' = x + 1", "n <= x -> x' < x & x < x'"])
    report = validate_a3(spec.updates[0], spec, solver)
    by_kind = {(o.kind, o.cases): o.status for o in report.obligations}
    assert by_kind[(ObligationKind.EXCLUSIVITY, (0, 1))] is ObligationStatus.FAIL
    assert by_kind[(ObligationKind.EXHAUSTIVENESS, (0, 1))] is ObligationStatus.PASS
    assert by_kind[(ObligationKind.SATISFIABILITY, (0,))] is ObligationStatus.PASS
    assert by_kind[(ObligationKind.SATISFIABILITY, (1,))] is ObligationStatus.FAIL
    assert not report.exclusive_and_exhaustive
