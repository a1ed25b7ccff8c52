"""
simplify.py

Equivalence-preserving cleanup of universally quantified clause sets
produced by symbol elimination: canonical literals, tautology removal,
merging of parallel bounds inside a clause, subsumption and unit pruning
against known ground facts.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Optional, Sequence

from invsynth.config import MAX_RESIDUE_MODULUS
from invsynth.errors import DivisibilityError
from invsynth.linear import LinAtom, Op, atom_of_literal, literal_of_atom, normalize
from invsynth.logic_core import (
    Clause,
    DivLit,
    Literal,
    Term,
    Var,
    make_clause,
    minus,
    num,
    render_literal,
    substitute_literal,
)


def canonical_literal(lit: Literal) -> Literal | bool:
    atom = atom_of_literal(lit)
    if atom is None:
        return lit
    if isinstance(atom, bool):
        return atom
    n = normalize(atom)
    if isinstance(n, bool):
        return n
    return literal_of_atom(n)


def expand_divisibility(lits: Sequence[Literal], cap: int = MAX_RESIDUE_MODULUS) -> list[Literal]:
    """Rewrite `not k | e` inside a disjunction as the residues `k | e - r`."""
    out: list[Literal] = []
    for lit in lits:
        if isinstance(lit, DivLit) and not lit.positive:
            if lit.modulus > cap:
                raise DivisibilityError(lit.modulus, render_literal(lit))
            out.extend(DivLit(lit.modulus, minus(lit.term, num(r, lit.term.sort))) for r in range(1, lit.modulus))
        else:
            out.append(lit)
    return out


def _bound(atom: LinAtom) -> Optional[tuple[tuple, Fraction, Fraction, bool]]:
    """(direction-free key, sign, bound, strict) for `expr OP 0` inequalities."""
    if atom.op not in (Op.LE, Op.LT):
        return None
    e = atom.expr
    lead = e.coeffs[0][1]
    sign = Fraction(1) if lead > 0 else Fraction(-1)
    unit = e.scaled(1 / abs(lead))
    key = unit.scaled(sign).key()
    return key, sign, -unit.const, atom.op is Op.LT


def _merge_bounds(atoms: list[LinAtom]) -> Optional[list[LinAtom]]:
    """Inside a disjunction keep the weakest bound per direction. None: tautology."""
    upper: dict[tuple, LinAtom] = {}
    lower: dict[tuple, LinAtom] = {}
    rest: list[LinAtom] = []
    for a in atoms:
        b = _bound(a)
        if b is None:
            rest.append(a)
            continue
        key, sign, _, _ = b
        table = upper if sign > 0 else lower
        old = table.get(key)
        if old is None or _weaker(a, old):
            table[key] = a
    for key, up in upper.items():
        low = lower.get(key)
        if low is not None and _covers(up, low):
            return None
    return rest + list(upper.values()) + list(lower.values())


def _weaker(a: LinAtom, b: LinAtom) -> bool:
    # same key and direction; a larger bound is weaker, non-strict beats strict on a tie
    _, _, ca, sa = _bound(a)  # type: ignore[misc]
    _, _, cb, sb = _bound(b)  # type: ignore[misc]
    return ca > cb or (ca == cb and sb and not sa)


def _covers(up: LinAtom, low: LinAtom) -> bool:
    """`e <= a or e >= b` is valid."""
    _, _, a, sa = _bound(up)  # type: ignore[misc]
    _, _, neg_b, sb = _bound(low)  # type: ignore[misc]
    b = -neg_b
    lead = abs(up.expr.coeffs[0][1])
    integral = up.expr.sort.is_int and all((k / lead).denominator == 1 for _, k in up.expr.coeffs)
    if integral and b <= a + 1:
        return True
    return b < a or (b == a and not (sa and sb))


def simplify_clause(c: Clause) -> Optional[Clause]:
    """Canonical literals, bound merging. None when the clause is valid."""
    others: list[Literal] = []
    atoms: list[LinAtom] = []
    for lit in c.literals:
        canon = canonical_literal(lit)
        if canon is True:
            return None
        if canon is False:
            continue
        atom = atom_of_literal(canon)
        if isinstance(atom, LinAtom) and atom.op in (Op.LE, Op.LT):
            n = normalize(atom)
            if isinstance(n, LinAtom):
                atoms.append(n)
                continue
        others.append(canon)
    merged = _merge_bounds(atoms)
    if merged is None:
        return None
    lits = list(dict.fromkeys(others + [literal_of_atom(a) for a in merged]))
    seen = set(lits)
    if any(l.negate() in seen for l in lits):
        return None
    for lit in lits:
        if canonical_literal(lit.negate()) in seen:
            return None
    return make_clause(lits)


def shape_key(c: Clause) -> tuple:
    """Clause identity up to consistent renaming of its variables."""
    rename: dict[Term, Term] = {}
    for i, v in enumerate(c.variables):
        rename[v] = Var(f"_v{i}", v.sort)
    lits = sorted(render_literal(substitute_literal(l, rename)) for l in c.literals)
    return tuple(lits)


def subsumes(a: Clause, b: Clause) -> bool:
    """Syntactic: a's literals are a subset of b's (variables compared by name)."""
    if len(a.literals) > len(b.literals):
        return False
    return set(a.literals) <= set(b.literals)


def prune_units(c: Clause, facts: frozenset[Literal]) -> Optional[Clause]:
    """Drop clauses satisfied by a fact and literals refuted by one."""
    kept = []
    for lit in c.literals:
        if lit in facts:
            return None
        canon = canonical_literal(lit.negate())
        if lit.negate() in facts or (not isinstance(canon, bool) and canon in facts):
            continue
        kept.append(lit)
    return make_clause(kept)


def cleanup(clauses: Iterable[Clause], facts: Iterable[Literal] = ()) -> list[Clause]:
    fact_set: set[Literal] = set()
    for f in facts:
        canon = canonical_literal(f)
        if not isinstance(canon, bool):
            fact_set.add(canon)
        fact_set.add(f)
    frozen = frozenset(fact_set)
    out: list[Clause] = []
    seen: set[tuple] = set()
    for c in clauses:
        s = simplify_clause(make_clause(expand_divisibility(c.literals)))
        if s is None:
            continue
        if frozen:
            s = prune_units(s, frozen)
            if s is None:
                continue
        key = shape_key(s)
        if key in seen:
            continue
        seen.add(key)
        out.append(s)
    result = []
    for i, c in enumerate(out):
        if any(j != i and subsumes(d, c) and (len(d.literals) < len(c.literals) or j < i) for j, d in enumerate(out)):
            continue
        result.append(c)
    return result
