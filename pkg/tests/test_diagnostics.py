import pytest

from invsynth.diagnostics import ShapeTracker, clause_stats, growth_rate, length_record, monitor_alarms, term_shapes
from invsynth.logic_core import INT, App, ClauseSet, Var, const, le, make_clause, num, plus

v, w = Var("v", INT), Var("w", INT)
n = const("n", INT)


def a(t):
    return App("a", (t,), INT)


def gamma(*clauses):
    return ClauseSet(tuple(make_clause(c) for c in clauses))


def test_clause_stats():
    g = gamma([le(a(v), n)], [le(a(v), a(w)), le(v, w)])
    stats = clause_stats(g)
    assert (stats.count, stats.max_length, stats.max_vars) == (2, 2, 2)
    assert clause_stats(ClauseSet()).count == 0


def test_monitor_alarms():
    g = gamma([le(a(v), n)], [le(a(plus(v, num(1, INT))), n)], [le(a(v), a(w)), le(v, w)])
    alarms = monitor_alarms(g, 1, frozenset({"a"}))
    assert alarms == ["clause 1 is not flat", "clause 2 has 2 variables (bound 1)"]


def test_shapes_rename_variables():
    assert term_shapes(gamma([le(a(v), n)])) == term_shapes(gamma([le(a(w), n)]))


def test_shape_tracker_family():
    t = ShapeTracker()
    assert t.observe(gamma([le(a(v), n)])) == 1
    assert t.observe(gamma([le(a(w), n)])) == 0
    assert not t.outside_family()
    t.observe(gamma([le(a(plus(v, num(1, INT))), n)]))
    t.observe(gamma([le(a(plus(v, num(2, INT))), n)]))
    assert t.outside_family()


def test_growth_rate():
    assert growth_rate([2, 4, 8, 16]) == pytest.approx(2.0)
    assert growth_rate([3, 3, 3]) == pytest.approx(1.0)
    assert growth_rate([0, 5]) is None
    assert growth_rate([]) is None


def test_length_record(spec_text):
    spec = spec_text(
        """version 1;
base LIA;
signature
  const n : int;
  ext a : int -> int;
end
update a(i: int)
  case i <= n -> a'(i) = a(i) + 1;
  case n < i -> a'(i) = 0;
end
property
  forall k:int . a(k) <= n;
end
"""
    )
    rec = length_record(spec, previous=2, current=6)
    assert (rec.updates, rec.max_cases, rec.max_vars) == (1, 2, 1)
    assert (rec.max_effect, rec.max_update_clause) == (1, 2)
    assert rec.k1 == 2
    assert rec.observed_ratio == pytest.approx(3.0)
    assert length_record(spec).observed_ratio is None
