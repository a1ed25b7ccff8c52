"""
transforms.py

Syntactic transformations shared by the checking and elimination paths:
priming, Skolemized negation, guarded DNF expansion, plain DNF products and
extension-term collection.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence, TypeVar

from invsynth.config import DISJUNCT_CAP
from invsynth.errors import ContractViolation, QEBlowupError
from invsynth.logic_core import (
    FALSE,
    TRUE,
    App,
    BoolLit,
    Clause,
    ClauseSet,
    Conj,
    GroundConj,
    GuardedCase,
    Literal,
    Signature,
    SkolemConst,
    Term,
    Var,
    const,
    is_ground_term,
    literal_subterms,
    make_clause,
    rename_symbols,
    substitute,
)

T = TypeVar("T", Term, Literal, Clause, ClauseSet, GroundConj)
Prune = Callable[[Conj], bool]


# ---------------------------------------------
# Priming
# ---------------------------------------------
def prime(obj: T, updated: Iterable[str], sig: Signature) -> T:
    """Replace every f in `updated` by f'. Other symbols are untouched."""
    names = {f: sig.prime_of(f) for f in updated}
    if not names:
        return obj
    rename = lambda t: rename_symbols(t, names)  # noqa: E731
    if isinstance(obj, Term):
        return rename(obj)  # type: ignore[return-value]
    if isinstance(obj, Clause):
        return Clause(tuple(lit.map(rename) for lit in obj.literals), obj.variables)  # type: ignore[return-value]
    if isinstance(obj, ClauseSet):
        return ClauseSet(tuple(prime(c, updated, sig) for c in obj.clauses))  # type: ignore[return-value]
    if isinstance(obj, GroundConj):
        return GroundConj(
            tuple(lit.map(rename) for lit in obj.literals), obj.skolems, obj.clause_index
        )  # type: ignore[return-value]
    return obj.map(rename)  # type: ignore[union-attr]


# ---------------------------------------------
# Skolemized negation
# ---------------------------------------------
def skolem_name(clause_index: int, var: Var, taken: frozenset[str] = frozenset()) -> str:
    name = f"sk_{clause_index}_{var.name}"
    while name in taken:
        name += "_"
    return name


def skolemize_clause(clause: Clause, index: int, taken: frozenset[str] = frozenset()) -> GroundConj:
    mapping: dict[Term, Term] = {}
    skolems = []
    for v in clause.variables:
        c = const(skolem_name(index, v, taken), v.sort)
        mapping[v] = c
        skolems.append(SkolemConst(c, index, v))
    lits = []
    for lit in clause.literals:
        neg = lit.negate().map(lambda t: substitute(t, mapping))
        if neg == TRUE:
            continue
        lits.append(neg)
    return GroundConj(tuple(dict.fromkeys(lits)), tuple(skolems), index)


def skolemize_negation(psi: ClauseSet, taken: frozenset[str] = frozenset()) -> list[GroundConj]:
    """not(forall C_1 & ... & C_n) as one ground conjunction per clause."""
    return [skolemize_clause(c, k, taken) for k, c in enumerate(psi.clauses)]


def negate_conj(conj: Iterable[Literal]) -> Clause:
    return make_clause(lit.negate() for lit in conj if lit != TRUE)


# ---------------------------------------------
# DNF construction
# ---------------------------------------------
def clean_conj(conj: Iterable[Literal]) -> Conj | None:
    """Drop `true`, dedupe; None when the conjunction is syntactically false."""
    out: dict[Literal, None] = {}
    for lit in conj:
        if lit == TRUE:
            continue
        if lit == FALSE or lit.negate() in out:
            return None
        out[lit] = None
    return tuple(out)


def dnf_product(
    groups: Sequence[Sequence[Conj]],
    prune: Prune | None = None,
    cap: int = DISJUNCT_CAP,
    site: str = "dnf",
) -> list[Conj]:
    """Conjunction of disjunctions, multiplied out. `prune(conj)` True drops a branch."""
    current: list[Conj] = [()]
    for group in groups:
        nxt: dict[Conj, None] = {}
        for left in current:
            for alt in group:
                merged = clean_conj(left + tuple(alt))
                if merged is None or (prune is not None and prune(merged)):
                    continue
                nxt[merged] = None
        if len(nxt) > cap:
            raise QEBlowupError(site, len(nxt), cap)
        current = list(nxt)
        if not current:
            break
    return current


def clause_alternatives(clause: Clause) -> tuple[Conj, ...]:
    return tuple((lit,) for lit in clause.literals)


def to_dnf_guarded(
    cases: Sequence[GuardedCase],
    instances: Sequence[dict[Term, Term]],
    exclusive: bool,
    prune: Prune | None = None,
    cap: int = DISJUNCT_CAP,
) -> list[Conj]:
    """Conjunction over instances of AND_i (guard_i -> effect_i) as a DNF.

    Each instance is a substitution for the update's parameters. Valid only
    when the guards are exclusive and exhaustive; at most n**k disjuncts.
    """
    if not exclusive:
        raise ContractViolation("guards are not certified exclusive and exhaustive")
    groups: list[list[Conj]] = []
    for inst in instances:
        alts = []
        for case in cases:
            memo: dict = {}
            alts.append(
                tuple(lit.map(lambda t: substitute(t, inst, memo)) for lit in case.guard + case.effect)
            )
        groups.append(alts)
    return dnf_product(groups, prune, cap, site="guarded update")


# ---------------------------------------------
# Extension terms
# ---------------------------------------------
def collect_est(
    clauses: Iterable[Clause], ground: Iterable[Literal], symbols: frozenset[str]
) -> list[App]:
    """Ground terms headed by `symbols`, inner terms first, deduplicated."""
    found: dict[App, None] = {}
    lits: list[Literal] = [lit for c in clauses for lit in c.literals]
    lits.extend(ground)
    for lit in lits:
        for s in literal_subterms(lit):
            if isinstance(s, App) and s.symbol in symbols and s.args:
                if is_ground_term(s):
                    found[s] = None
    return list(found)


def is_trivially_false(conj: Conj) -> bool:
    return clean_conj(conj) is None or any(isinstance(l, BoolLit) and not l.value for l in conj)
