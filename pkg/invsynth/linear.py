"""
linear.py

Linear expressions over term atoms and the normalized atoms (`expr OP 0`,
`m | expr`) the quantifier-elimination engines work on.

An "atom" of a linear expression is any non-arithmetic term: a variable, a
constant, or a function application such as a(i) which is treated as an
opaque value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping

from invsynth.logic_core import (
    REAL,
    BoolLit,
    Cmp,
    DivLit,
    Literal,
    Num,
    Rel,
    Sort,
    Term,
    from_linear_parts,
    linear_parts,
)


@dataclass(frozen=True)
class LinExpr:
    coeffs: tuple[tuple[Term, Fraction], ...]
    const: Fraction
    sort: Sort

    @staticmethod
    def of(coeffs: Mapping[Term, Fraction], const: Fraction, sort: Sort) -> "LinExpr":
        items = sorted(((a, Fraction(k)) for a, k in coeffs.items() if k != 0), key=lambda p: p[0].text)
        return LinExpr(tuple(items), Fraction(const), sort)

    @staticmethod
    def from_term(t: Term) -> "LinExpr":
        coeffs, c = linear_parts(t)
        return LinExpr.of(coeffs, c, t.sort)

    def as_dict(self) -> dict[Term, Fraction]:
        return dict(self.coeffs)

    def coeff(self, atom: Term) -> Fraction:
        for a, k in self.coeffs:
            if a is atom:
                return k
        return Fraction(0)

    def atoms(self) -> tuple[Term, ...]:
        return tuple(a for a, _ in self.coeffs)

    @property
    def is_const(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "LinExpr") -> "LinExpr":
        d = self.as_dict()
        for a, k in other.coeffs:
            d[a] = d.get(a, Fraction(0)) + k
        return LinExpr.of(d, self.const + other.const, self.sort)

    def __sub__(self, other: "LinExpr") -> "LinExpr":
        return self + other.scaled(-1)

    def scaled(self, k: Fraction | int) -> "LinExpr":
        k = Fraction(k)
        return LinExpr.of({a: v * k for a, v in self.coeffs}, self.const * k, self.sort)

    def plus_const(self, c: Fraction | int) -> "LinExpr":
        return LinExpr(self.coeffs, self.const + c, self.sort)

    def without(self, atom: Term) -> "LinExpr":
        return LinExpr(tuple(p for p in self.coeffs if p[0] is not atom), self.const, self.sort)

    def substitute(self, atom: Term, repl: "LinExpr") -> "LinExpr":
        k = self.coeff(atom)
        if k == 0:
            return self
        return self.without(atom) + repl.scaled(k)

    def relaxed(self) -> "LinExpr":
        return LinExpr(self.coeffs, self.const, REAL)

    def key(self) -> tuple:
        return tuple((a, k) for a, k in self.coeffs)

    def to_term(self) -> Term:
        return from_linear_parts(self.as_dict(), self.const, self.sort)

    def evaluate(self, assignment: Mapping[Term, Fraction]) -> Fraction:
        return sum((k * Fraction(assignment[a]) for a, k in self.coeffs), self.const)


class Op(str, Enum):
    EQ = "="
    NE = "!="
    LE = "<="
    LT = "<"
    DIV = "|"
    NDIV = "!|"


@dataclass(frozen=True)
class LinAtom:
    """`expr OP 0`, or `modulus | expr` for the divisibility operators."""

    op: Op
    expr: LinExpr
    modulus: int = 0

    def mentions(self, atom: Term) -> bool:
        return self.expr.coeff(atom) != 0

    def negate(self) -> "LinAtom":
        if self.op is Op.EQ:
            return LinAtom(Op.NE, self.expr)
        if self.op is Op.NE:
            return LinAtom(Op.EQ, self.expr)
        if self.op is Op.LE:
            return LinAtom(Op.LT, self.expr.scaled(-1))
        if self.op is Op.LT:
            return LinAtom(Op.LE, self.expr.scaled(-1))
        if self.op is Op.DIV:
            return LinAtom(Op.NDIV, self.expr, self.modulus)
        return LinAtom(Op.DIV, self.expr, self.modulus)

    def evaluate(self, assignment: Mapping[Term, Fraction]) -> bool:
        return _holds(self.op, self.expr.evaluate(assignment), self.modulus)


def _holds(op: Op, value: Fraction, modulus: int = 0) -> bool:
    if op is Op.EQ:
        return value == 0
    if op is Op.NE:
        return value != 0
    if op is Op.LE:
        return value <= 0
    if op is Op.LT:
        return value < 0
    divisible = value.denominator == 1 and value.numerator % modulus == 0
    return divisible if op is Op.DIV else not divisible


# ---------------------------------------------
# Normalization
# ---------------------------------------------
def _int_gcd(values) -> int:
    g = 0
    for v in values:
        g = math.gcd(g, int(v))
    return g


def normalize(atom: LinAtom) -> LinAtom | bool:
    """Canonical form; a bool when the atom is constant."""
    e = atom.expr
    if atom.op in (Op.DIV, Op.NDIV):
        return _normalize_div(atom)
    if e.is_const:
        return _holds(atom.op, e.const)
    if e.sort.is_int:
        return _normalize_int(atom)
    lead = e.coeffs[0][1]
    factor = 1 / abs(lead) if atom.op in (Op.LE, Op.LT) else 1 / lead
    return LinAtom(atom.op, e.scaled(factor))


def _normalize_int(atom: LinAtom) -> LinAtom | bool:
    op, e = atom.op, atom.expr
    if op is Op.LT:
        op, e = Op.LE, e.plus_const(1)
    g = _int_gcd(k for _, k in e.coeffs)
    c = e.const
    if op is Op.LE:
        coeffs = {a: k / g for a, k in e.coeffs}
        return LinAtom(Op.LE, LinExpr.of(coeffs, Fraction(math.ceil(c / g)), e.sort))
    if c % g != 0:
        return op is Op.NE
    e = e.scaled(Fraction(1, g))
    if e.coeffs[0][1] < 0:
        e = e.scaled(-1)
    return LinAtom(op, e)


def _normalize_div(atom: LinAtom) -> LinAtom | bool:
    m = atom.modulus
    e = atom.expr
    coeffs = {a: Fraction(int(k) % m) for a, k in e.coeffs}
    const = Fraction(int(e.const) % m)
    coeffs = {a: k for a, k in coeffs.items() if k != 0}
    if not coeffs:
        holds = const == 0
        return holds if atom.op is Op.DIV else not holds
    g = math.gcd(m, _int_gcd(list(coeffs.values()) + [const]))
    if g > 1:
        m //= g
        coeffs = {a: k / g for a, k in coeffs.items()}
        const = const / g
    if m == 1:
        return atom.op is Op.DIV
    return LinAtom(atom.op, LinExpr.of(coeffs, const, e.sort), m)


# ---------------------------------------------
# Conversion to and from literals
# ---------------------------------------------
_REL_OP = {Rel.EQ: Op.EQ, Rel.LE: Op.LE, Rel.LT: Op.LT}


def atom_of_literal(lit: Literal) -> LinAtom | bool | None:
    """None for literals that are not arithmetic (predicates)."""
    if isinstance(lit, BoolLit):
        return lit.value
    if isinstance(lit, Cmp):
        e = LinExpr.from_term(lit.lhs) - LinExpr.from_term(lit.rhs)
        op = _REL_OP[lit.rel] if lit.positive else Op.NE
        return LinAtom(op, e)
    if isinstance(lit, DivLit):
        return LinAtom(Op.DIV if lit.positive else Op.NDIV, LinExpr.from_term(lit.term), lit.modulus)
    return None


def literal_of_atom(atom: LinAtom) -> Literal:
    e = atom.expr
    if atom.op in (Op.DIV, Op.NDIV):
        return DivLit(atom.modulus, e.to_term(), atom.op is Op.DIV)
    pos = {a: k for a, k in e.coeffs if k > 0}
    neg = {a: -k for a, k in e.coeffs if k < 0}
    lc = e.const if e.const > 0 else Fraction(0)
    rc = -e.const if e.const < 0 else Fraction(0)
    lhs = from_linear_parts(pos, lc, e.sort) if pos or lc else Num(0, e.sort)
    rhs = from_linear_parts(neg, rc, e.sort) if neg or rc else Num(0, e.sort)
    if atom.op is Op.EQ:
        return Cmp(Rel.EQ, lhs, rhs)
    if atom.op is Op.NE:
        return Cmp(Rel.EQ, lhs, rhs, positive=False)
    return Cmp(Rel.LE if atom.op is Op.LE else Rel.LT, lhs, rhs)


def literal_truth(lit: Literal) -> bool | None:
    """Truth value of a literal that normalizes to a constant, else None."""
    atom = atom_of_literal(lit)
    if atom is None or isinstance(atom, bool):
        return atom
    out = normalize(atom)
    return out if isinstance(out, bool) else None
