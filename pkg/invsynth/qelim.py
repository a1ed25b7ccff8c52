"""
qelim.py

Quantifier elimination for linear arithmetic on DNF inputs.

    eliminate_lra   Fourier-Motzkin, equalities substituted first
    eliminate_lia   Cooper's method, equalities substituted first
    eliminate       per-variable dispatch on sort (int and real atoms never mix)

Only the part of a disjunct that mentions an eliminated variable is touched;
the rest of the conjunction is carried over verbatim. Variables are picked
equality-first, then fewest-occurrences-first, ties by name.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from invsynth.config import DISJUNCT_CAP
from invsynth.errors import ContractViolation, QEBlowupError
from invsynth.linear import LinAtom, LinExpr, Op, atom_of_literal, literal_of_atom, normalize
from invsynth.log import get_logger
from invsynth.logic_core import Conj, Literal, PredLit, Term, literal_subterms

log = get_logger(__name__)


@dataclass(frozen=True)
class QETask:
    eliminate: tuple[Term, ...]
    matrix: tuple[Conj, ...]


# ---------------------------------------------
# Conjunction simplification
# ---------------------------------------------
def simplify_atoms(atoms: Iterable[LinAtom]) -> list[LinAtom] | None:
    """Normalize, dedupe, merge parallel bounds. None means false."""
    out: dict[LinAtom, None] = {}
    for a in atoms:
        n = normalize(a)
        if n is True:
            continue
        if n is False:
            return None
        out[n] = None
    atoms = list(out)

    # tightest bound per coefficient vector
    bounds: dict[tuple, LinAtom] = {}
    fixed: dict[tuple, Fraction] = {}
    rest: list[LinAtom] = []
    for a in atoms:
        k = a.expr.key()
        if a.op in (Op.LE, Op.LT):
            old = bounds.get(k)
            if old is None or _stronger(a, old):
                bounds[k] = a
        elif a.op is Op.EQ:
            value = -a.expr.const
            if k in fixed and fixed[k] != value:
                return None
            fixed[k] = value
            rest.append(a)
        else:
            rest.append(a)

    kept: list[LinAtom] = []
    for k, a in bounds.items():
        status = _against_fixed(a, fixed)
        if status is False:
            return None
        if status is True:
            continue
        neg_key = tuple((t, -c) for t, c in k)
        other = bounds.get(neg_key)
        if other is not None:
            total = a.expr.const + other.expr.const
            strict = a.op is Op.LT or other.op is Op.LT
            if total > 0 or (strict and total == 0):
                return None
            if total == 0 and not strict:
                if k < neg_key:
                    kept.append(normalize(LinAtom(Op.EQ, a.expr)))  # type: ignore[arg-type]
                continue
        kept.append(a)
    result = [a for a in rest if _against_fixed(a, fixed, equality_self=True) is not True]
    for a in result:
        if _against_fixed(a, fixed, equality_self=True) is False:
            return None
    return list(dict.fromkeys(kept + result))


def _stronger(a: LinAtom, b: LinAtom) -> bool:
    if a.expr.const != b.expr.const:
        return a.expr.const > b.expr.const
    return a.op is Op.LT and b.op is Op.LE


def _against_fixed(a: LinAtom, fixed: dict[tuple, Fraction], equality_self: bool = False):
    """Evaluate `a` when an equality pins its linear form; None when unknown."""
    if a.op in (Op.DIV, Op.NDIV) or not fixed:
        return None
    k = a.expr.key()
    if a.op is Op.EQ and equality_self:
        return None
    sign = 1
    if k not in fixed:
        k = tuple((t, -c) for t, c in k)
        sign = -1
        if k not in fixed:
            return None
    value = sign * fixed[k] + a.expr.const
    if a.op is Op.LE:
        return value <= 0
    if a.op is Op.LT:
        return value < 0
    if a.op is Op.NE:
        return value != 0
    return value == 0


# ---------------------------------------------
# Single-variable steps
# ---------------------------------------------
def _fm_step(v: Term, atoms: list[LinAtom]) -> list[list[LinAtom]]:
    with_v = [a for a in atoms if a.mentions(v)]
    without = [a for a in atoms if not a.mentions(v)]
    for a in with_v:
        if a.op is Op.EQ:
            k = a.expr.coeff(v)
            repl = a.expr.without(v).scaled(-1 / k)
            return [without + [LinAtom(b.op, b.expr.substitute(v, repl), b.modulus) for b in with_v if b is not a]]
    for a in with_v:
        if a.op is Op.NE:
            others = [b for b in with_v if b is not a]
            return [
                without + others + [LinAtom(Op.LT, a.expr)],
                without + others + [LinAtom(Op.LT, a.expr.scaled(-1))],
            ]
    lowers = [a for a in with_v if a.expr.coeff(v) < 0]
    uppers = [a for a in with_v if a.expr.coeff(v) > 0]
    combined: list[LinAtom] = []
    for lo in lowers:
        for up in uppers:
            kl, ku = -lo.expr.coeff(v), up.expr.coeff(v)
            e = up.expr.scaled(kl) + lo.expr.scaled(ku)
            op = Op.LT if Op.LT in (lo.op, up.op) else Op.LE
            combined.append(LinAtom(op, e.without(v)))
    return [without + combined]


def _scale_atom(a: LinAtom, f: int) -> LinAtom:
    if a.op in (Op.DIV, Op.NDIV):
        return LinAtom(a.op, a.expr.scaled(f), a.modulus * f)
    return LinAtom(a.op, a.expr.scaled(f))


def _with_v(e: LinExpr, v: Term, k: Fraction) -> LinExpr:
    return e.without(v) + LinExpr.of({v: k}, Fraction(0), e.sort)


def _cooper_step(v: Term, atoms: list[LinAtom], cap: int) -> list[list[LinAtom]]:
    with_v = [a for a in atoms if a.mentions(v)]
    without = [a for a in atoms if not a.mentions(v)]

    eqs = sorted((a for a in with_v if a.op is Op.EQ), key=lambda a: abs(a.expr.coeff(v)))
    if eqs:
        eq = eqs[0]
        a = eq.expr.coeff(v)
        r = eq.expr.without(v)
        if abs(a) == 1:
            repl = r.scaled(-1 / a)
            return [without + [LinAtom(b.op, b.expr.substitute(v, repl), b.modulus) for b in with_v if b is not eq]]
        mag = int(abs(a))
        sign = 1 if a > 0 else -1
        out = list(without)
        for b in with_v:
            if b is eq:
                continue
            kb = b.expr.coeff(v)
            scaled = _scale_atom(b, mag)
            e = b.expr.without(v).scaled(mag) + r.scaled(-sign * kb)
            out.append(LinAtom(scaled.op, e, scaled.modulus))
        out.append(LinAtom(Op.DIV, r, mag))
        return [out]

    # unit coefficient on v after scaling every atom to the lcm
    lcm = 1
    for b in with_v:
        lcm = math.lcm(lcm, int(abs(b.expr.coeff(v))))
    unit: list[LinAtom] = []
    for b in with_v:
        k = b.expr.coeff(v)
        f = lcm // int(abs(k))
        s = _scale_atom(b, f)
        unit.append(LinAtom(s.op, _with_v(s.expr, v, Fraction(1 if k > 0 else -1)), s.modulus))
    if lcm > 1:
        unit.append(LinAtom(Op.DIV, LinExpr.of({v: Fraction(1)}, Fraction(0), with_v[0].expr.sort), lcm))

    n_lower = sum(1 for b in unit if b.op is Op.LE and b.expr.coeff(v) < 0)
    n_upper = sum(1 for b in unit if b.op is Op.LE and b.expr.coeff(v) > 0)
    if n_upper < n_lower:
        unit = [LinAtom(b.op, _with_v(b.expr, v, -b.expr.coeff(v)), b.modulus) for b in unit]
        n_lower = n_upper

    delta = 1
    for b in unit:
        if b.op in (Op.DIV, Op.NDIV):
            delta = math.lcm(delta, b.modulus)

    # v >= r from -v + r <= 0 gives point r - 1; v != t gives point t
    points: list[LinExpr] = []
    for b in unit:
        rest = b.expr.without(v)
        c = b.expr.coeff(v)
        if b.op is Op.LE and c < 0:
            points.append(rest.plus_const(-1))
        elif b.op is Op.NE:
            points.append(rest.scaled(-1 / c))
    points = list(dict.fromkeys(points))

    size = delta * (len(points) + (0 if n_lower else 1))
    if size > cap:
        raise QEBlowupError("cooper", size, cap)

    branches: list[list[LinAtom]] = []
    if n_lower == 0:
        minus_inf = [b for b in unit if not (b.op is Op.LE and b.expr.coeff(v) > 0) and b.op is not Op.NE]
        for j in range(1, delta + 1):
            value = LinExpr.of({}, Fraction(j), unit[0].expr.sort)
            branches.append(without + [LinAtom(b.op, b.expr.substitute(v, value), b.modulus) for b in minus_inf])
    for p in points:
        for j in range(1, delta + 1):
            value = p.plus_const(j)
            branches.append(without + [LinAtom(b.op, b.expr.substitute(v, value), b.modulus) for b in unit])
    return branches


# ---------------------------------------------
# Per-conjunction driver
# ---------------------------------------------
def _pick(vars_left: Sequence[Term], atoms: list[LinAtom]) -> Term:
    def has_unit_eq(v):
        return any(a.op is Op.EQ and abs(a.expr.coeff(v)) == 1 for a in atoms)

    def has_eq(v):
        return any(a.op is Op.EQ and a.mentions(v) for a in atoms)

    def count(v):
        return sum(1 for a in atoms if a.mentions(v))

    return min(vars_left, key=lambda v: (not has_unit_eq(v), not has_eq(v), count(v), v.text))


def _qe_conj(atoms: list[LinAtom], elim: frozenset[Term], cap: int, budget: list[int]) -> list[list[LinAtom]]:
    simplified = simplify_atoms(atoms)
    if simplified is None:
        return []
    touched = [a for a in simplified if any(a.mentions(v) for v in elim)]
    carried = [a for a in simplified if a not in touched]
    present = sorted({v for v in elim for a in touched if a.mentions(v)}, key=lambda t: t.text)
    if not present:
        return [simplified]
    v = _pick(present, touched)
    step = _cooper_step(v, touched, cap) if v.sort.is_int else _fm_step(v, touched)
    budget[0] += len(step)
    if budget[0] > cap:
        raise QEBlowupError(f"eliminating {v.text}", budget[0], cap)
    out: list[list[LinAtom]] = []
    for branch in step:
        for sub in _qe_conj(branch, elim, cap, budget):
            out.append(carried + sub)
    return out


def _split_conj(conj: Conj, elim: frozenset[Term]) -> tuple[list[LinAtom], list[Literal]] | None:
    atoms: list[LinAtom] = []
    others: list[Literal] = []
    for lit in conj:
        a = atom_of_literal(lit)
        if a is True:
            continue
        if a is False:
            return None
        if a is None:
            if isinstance(lit, PredLit) and any(s in elim for s in literal_subterms(lit)):
                raise ContractViolation(f"predicate literal over an eliminated variable: {lit}")
            others.append(lit)
            continue
        _check_sorts(a, elim)
        atoms.append(a)
    return atoms, others


def _check_sorts(a: LinAtom, elim: frozenset[Term]) -> None:
    sorts = {t.sort for t in a.expr.atoms()}
    if len(sorts) > 1 and any(a.mentions(v) for v in elim):
        raise ContractViolation("eliminated variable occurs in a mixed-sort atom")


def eliminate(
    variables: Iterable[Term], dnf: Sequence[Conj], cap: int = DISJUNCT_CAP
) -> list[Conj]:
    """Exists variables . OR dnf, as an equivalent quantifier-free DNF."""
    elim = frozenset(variables)
    if not elim:
        return [tuple(c) for c in dnf]
    budget = [0]
    out: dict[Conj, None] = {}
    for conj in dnf:
        split = _split_conj(conj, elim)
        if split is None:
            continue
        atoms, others = split
        for branch in _qe_conj(atoms, elim, cap, budget):
            lits = tuple(others) + tuple(literal_of_atom(a) for a in branch)
            out[tuple(dict.fromkeys(lits))] = None
            if len(out) > cap:
                raise QEBlowupError("qe result", len(out), cap)
    log.debug(f"[qe] {len(elim)} variables, {len(dnf)} -> {len(out)} disjuncts")
    return list(out)


def eliminate_lra(variables: Iterable[Term], dnf: Sequence[Conj], cap: int = DISJUNCT_CAP) -> list[Conj]:
    variables = tuple(variables)
    if any(v.sort.is_int for v in variables):
        raise ContractViolation("eliminate_lra called with an integer variable")
    return eliminate(variables, dnf, cap)


def eliminate_lia(variables: Iterable[Term], dnf: Sequence[Conj], cap: int = DISJUNCT_CAP) -> list[Conj]:
    variables = tuple(variables)
    if any(not v.sort.is_int for v in variables):
        raise ContractViolation("eliminate_lia called with a rational variable")
    return eliminate(variables, dnf, cap)


def run_task(task: QETask, cap: int = DISJUNCT_CAP) -> list[Conj]:
    return eliminate(task.eliminate, task.matrix, cap)


# ---------------------------------------------
# Cheap unsatisfiability filter
# ---------------------------------------------
_RELAX_LIMIT = 120


def quick_unsat(conj: Conj) -> bool:
    """True only when the rational relaxation of the conjunction is infeasible.

    Integer atoms are tightened before relaxing. Disequalities, divisibility
    and predicates are ignored. Gives up (returns False) on large inputs.
    """
    atoms: list[LinAtom] = []
    seen: dict[Literal, None] = {}
    for lit in conj:
        if lit.negate() in seen:
            return True
        seen[lit] = None
        a = atom_of_literal(lit)
        if a is False:
            return True
        if a is None or a is True or a.op in (Op.NE, Op.DIV, Op.NDIV):
            continue
        n = normalize(a)
        if n is False:
            return True
        if n is True:
            continue
        atoms.append(LinAtom(n.op, n.expr.relaxed()))
    current = simplify_atoms(atoms)
    while current:
        if len(current) > _RELAX_LIMIT:
            return False
        candidates = sorted({t for a in current for t in a.expr.atoms()}, key=lambda t: t.text)
        if not candidates:
            return False
        v = _pick(candidates, current)
        branches = _fm_step(v, current)
        if len(branches) != 1:
            return False
        current = simplify_atoms(branches[0])
    return current is None
