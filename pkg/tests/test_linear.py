from fractions import Fraction

from invsynth.linear import LinAtom, LinExpr, Op, atom_of_literal, literal_of_atom, literal_truth, normalize
from invsynth.logic_core import INT, REAL, DivLit, const, eq, le, lt, ne, num, plus, scale

x, y = const("x", INT), const("y", INT)
p, q = const("p", REAL), const("q", REAL)


def _atom(lit):
    a = atom_of_literal(lit)
    assert isinstance(a, LinAtom)
    return a


def test_strict_integer_bound_becomes_non_strict():
    n = normalize(_atom(lt(x, y)))
    assert n.op is Op.LE
    assert n.expr == LinExpr.of({x: 1, y: -1}, 1, INT)


def test_integer_bound_is_tightened_by_gcd():
    n = normalize(_atom(le(scale(2, x), num(3, INT))))
    assert n == LinAtom(Op.LE, LinExpr.of({x: 1}, -1, INT))


def test_integer_equality_without_solution_is_false():
    assert normalize(_atom(eq(scale(2, x), num(3, INT)))) is False
    assert normalize(_atom(ne(scale(2, x), num(3, INT)))) is True


def test_rational_bound_scaled_to_unit_leading_coefficient():
    n = normalize(_atom(le(scale(3, p), q)))
    assert n.expr.coeff(p) == 1
    assert n.expr.coeff(q) == Fraction(-1, 3)


def test_divisibility_reduced_by_common_factor():
    a = _atom(DivLit(4, plus(scale(2, x), num(2, INT))))
    assert normalize(a) == LinAtom(Op.DIV, LinExpr.of({x: 1}, 1, INT), 2)
    assert normalize(_atom(DivLit(3, scale(3, x)))) is True


def test_negation_is_complementary():
    a = _atom(le(x, y))
    for values in ((0, 0), (1, 0), (0, 1)):
        assignment = {x: Fraction(values[0]), y: Fraction(values[1])}
        assert a.evaluate(assignment) != a.negate().evaluate(assignment)


def test_literal_round_trip_keeps_meaning():
    a = _atom(le(plus(x, num(2, INT)), scale(3, y)))
    lit = literal_of_atom(a)
    back = _atom(lit)
    for vx in range(-3, 4):
        for vy in range(-3, 4):
            assignment = {x: Fraction(vx), y: Fraction(vy)}
            assert a.evaluate(assignment) == back.evaluate(assignment)


def test_literal_truth_of_constant_literals():
    assert literal_truth(le(num(1, INT), num(2, INT))) is True
    assert literal_truth(eq(plus(x, num(1, INT)), x)) is False
    assert literal_truth(le(x, y)) is None
