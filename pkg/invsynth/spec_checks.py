"""
spec_checks.py

Semantic checks on a parsed spec:

* validate_a3           guard exclusivity, exhaustiveness and effect
                        satisfiability for each update, via the solver
* check_locality_class  syntactic classification of a theory level
* apf_violation         array-property-fragment membership of one clause
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from invsynth.errors import ContractViolation, QEBlowupError, RoleConflictError
from invsynth.hierarchy import Closure, Level, reduce_chain
from invsynth.linear import LinAtom, atom_of_literal, normalize
from invsynth.log import get_logger
from invsynth.logic_core import (
    ARITH,
    App,
    Clause,
    Cmp,
    Literal,
    Rel,
    Term,
    Var,
    applications,
    const,
    free_vars,
    literal_subterms,
    literal_symbols,
    literal_vars,
    make_clause,
    subterms,
    substitute,
    substitute_literal,
)
from invsynth.qelim import eliminate
from invsynth.smt_client import SmtClient
from invsynth.specfile import ProblemSpec, TheoryLevel, UpdateSpec

log = get_logger(__name__)


# ---------------------------------------------
# A3 obligations
# ---------------------------------------------
class ObligationKind(str, Enum):
    EXCLUSIVITY = "exclusivity"
    EXHAUSTIVENESS = "exhaustiveness"
    SATISFIABILITY = "satisfiability"


class ObligationStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    UNKNOWN = "unknown"


@dataclass
class Obligation:
    kind: ObligationKind
    cases: tuple[int, ...]
    status: ObligationStatus
    detail: str = ""


@dataclass
class A3Report:
    function: str
    obligations: list[Obligation] = field(default_factory=list)

    def passed(self, *kinds: ObligationKind) -> bool:
        wanted = kinds or tuple(ObligationKind)
        return all(o.status is ObligationStatus.PASS for o in self.obligations if o.kind in wanted)

    @property
    def exclusive_and_exhaustive(self) -> bool:
        return self.passed(ObligationKind.EXCLUSIVITY, ObligationKind.EXHAUSTIVENESS)


def shared_symbols(spec: ProblemSpec) -> frozenset[str]:
    return spec.signature.parameters | spec.signature.base_constants


def theory_chain(spec: ProblemSpec) -> list[Level]:
    shared = shared_symbols(spec)
    return [Level(t.name, t.clauses, t.closure, shared=shared) for t in spec.levels]


def _fresh_args(u: UpdateSpec, taken: set[str]) -> dict[Term, Term]:
    mapping: dict[Term, Term] = {}
    for p in u.params:
        name = f"arg_{p.name}"
        while name in taken:
            name += "_"
        taken.add(name)
        mapping[p] = const(name, p.sort)
    return mapping


def _status(v) -> tuple[ObligationStatus, str]:
    if v.is_unsat:
        return ObligationStatus.PASS, ""
    if v.is_sat:
        shown = ", ".join(f"{k}={val}" for k, val in (v.model or {}).items())
        return ObligationStatus.FAIL, f"witness: {shown}" if shown else "satisfiable"
    return ObligationStatus.UNKNOWN, v.status.value


def validate_a3(u: UpdateSpec, spec: ProblemSpec, client: SmtClient) -> A3Report:
    """Discharge the n(n-1)/2 + 1 + n obligations of one update modulo the theory levels."""
    chain = theory_chain(spec)
    taken = set(spec.signature.functions)
    mapping = _fresh_args(u, taken)
    guards = [[substitute_literal(l, mapping) for l in case.guard] for case in u.cases]
    report = A3Report(u.function)

    def solve(clauses: list[Clause], label: str):
        red = reduce_chain(chain, clauses, taken=taken)
        return client.check_reduced(red, label)

    for i, j in itertools.combinations(range(len(u.cases)), 2):
        units = [make_clause([l]) for l in guards[i] + guards[j]]
        status, detail = _status(solve(units, f"a3-{u.function}-excl-{i}-{j}"))
        report.obligations.append(Obligation(ObligationKind.EXCLUSIVITY, (i, j), status, detail))

    negated = [make_clause(l.negate() for l in g) for g in guards]
    status, detail = _status(solve(negated, f"a3-{u.function}-exh"))
    report.obligations.append(
        Obligation(ObligationKind.EXHAUSTIVENESS, tuple(range(len(u.cases))), status, detail)
    )

    target = App(u.function + "'", tuple(u.params), spec.signature.function(u.function).result)
    for i, case in enumerate(u.cases):
        status, detail = _effect_satisfiable(case.effect, guards[i], target, mapping, solve, f"a3-{u.function}-sat-{i}")
        report.obligations.append(Obligation(ObligationKind.SATISFIABILITY, (i,), status, detail))

    log.info(
        f"[a3] {u.function}: "
        + ", ".join(f"{o.kind.value}{list(o.cases)}={o.status.value}" for o in report.obligations)
    )
    return report


def _effect_satisfiable(effect, guard, target: App, mapping, solve, label: str):
    value = const(f"val_{target.symbol.rstrip(chr(39))}", target.sort)
    renamed = {**mapping, target: value}
    lits = tuple(l.map(lambda t: substitute(t, renamed)) for l in effect)
    try:
        projected = eliminate([value], [lits])
    except (ContractViolation, QEBlowupError) as e:
        return ObligationStatus.UNKNOWN, str(e)
    # guard & not(exists value . effect) must be unsat
    clauses = [make_clause([l]) for l in guard]
    clauses += [make_clause(l.negate() for l in conj) for conj in projected]
    return _status(solve(clauses, label))


def certify_updates(spec: ProblemSpec, client: Optional[SmtClient]) -> dict[str, bool]:
    """Per update: are the guards exclusive and exhaustive?

    Without a client a syntactic check is used (complementary literals).
    """
    out: dict[str, bool] = {}
    for u in spec.updates:
        if len(u.cases) == 1 and not u.cases[0].guard:
            out[u.function] = True
        elif client is None:
            out[u.function] = syntactically_partitioned([c.guard for c in u.cases])
        else:
            out[u.function] = validate_a3(u, spec, client).exclusive_and_exhaustive
    return out


def _norm(lit: Literal):
    a = atom_of_literal(lit)
    if isinstance(a, LinAtom):
        n = normalize(a)
        return n if isinstance(n, LinAtom) else None
    return lit if a is None else None


def syntactically_partitioned(guards: Sequence[Sequence[Literal]]) -> bool:
    """Guards over complementary atoms whose truth table is covered exactly once."""
    atoms: list = []
    for g in guards:
        for lit in g:
            n = _norm(lit)
            if n is None:
                return False
            neg = _norm(lit.negate())
            if n not in atoms and neg not in atoms:
                atoms.append(n)
    if len(atoms) > 8:
        return False
    for values in itertools.product((True, False), repeat=len(atoms)):
        truth = dict(zip(atoms, values))
        hits = 0
        for g in guards:
            ok = True
            for lit in g:
                n = _norm(lit)
                ok = ok and (truth[n] if n in truth else not truth[_norm(lit.negate())])
            hits += ok
        if hits != 1:
            return False
    return True


def check_property_roles(spec: ProblemSpec, allowed: frozenset[str]) -> None:
    """Raise unless the property mentions only base constants and parameters."""
    for c in spec.property:
        for lit in c.literals:
            bad = sorted(literal_symbols(lit) - allowed)
            if bad:
                raise RoleConflictError(
                    f"property mentions non-parameter symbol(s) {', '.join(bad)}", source=spec.source
                )


# ---------------------------------------------
# Locality classification
# ---------------------------------------------
class LocalityClass(str, Enum):
    FREE = "free-functions"
    MONOTONE = "monotone"
    CASE_DEFINITION = "case-definition"
    APF = "apf"
    UNVERIFIED = "unverified"


def _nested(c: Clause) -> bool:
    for app in applications(c.literals):
        for arg in app.args:
            if any(isinstance(s, App) and s.args and s.symbol not in ARITH for s in subterms(arg)):
                return True
    return False


def _is_case_definition(clauses: Sequence[Clause]) -> bool:
    """Some symbol h is applied to exactly the clause variables in exactly one literal per clause."""
    common: Optional[set[str]] = None
    for c in clauses:
        variables = set(c.variables)
        qualifying = set()
        for lit in c.literals:
            for a in applications([lit]):
                if len(set(a.args)) == len(a.args) and set(a.args) == variables:
                    qualifying.add(a.symbol)
        for sym in list(qualifying):
            uses = [lit for lit in c.literals if any(a.symbol == sym for a in applications([lit]))]
            if len(uses) != 1:
                qualifying.discard(sym)
        common = qualifying if common is None else common & qualifying
        if not common:
            return False
    return bool(common)


def _is_monotone(clauses: Sequence[Clause]) -> bool:
    for c in clauses:
        if len(c.variables) != 2 or len(c.literals) != 2:
            return False
        x, y = c.variables
        order = [l for l in c.literals if not applications([l])]
        value = [l for l in c.literals if applications([l])]
        if len(order) != 1 or len(value) != 1:
            return False
        o, v = order[0], value[0]
        if not (isinstance(o, Cmp) and o.positive and o.rel in (Rel.LE, Rel.LT)):
            return False
        if literal_vars(o) != {x, y} or not all(isinstance(t, Var) for t in o.terms):
            return False
        if not (isinstance(v, Cmp) and v.positive and v.rel in (Rel.LE, Rel.LT)):
            return False
        lhs, rhs = v.lhs, v.rhs
        if not (isinstance(lhs, App) and isinstance(rhs, App) and lhs.symbol == rhs.symbol):
            return False
        if {lhs.args, rhs.args} != {(x,), (y,)}:
            return False
    return True


def apf_violation(c: Clause) -> Optional[str]:
    """None when the clause is in the array property fragment, else the reason."""
    if _nested(c):
        return "nested read"
    for v in c.variables:
        if not v.sort.is_int:
            return f"non-integer index variable {v.name}"
    reads = set(applications(c.literals))
    for lit in c.literals:
        lit_reads = [r for r in reads if any(s is r for s in literal_subterms(lit))]
        if lit_reads:
            for r in lit_reads:
                for a in r.args:
                    if free_vars(a) and not isinstance(a, Var):
                        return "variable outside direct read"
            stripped = lit.map(lambda t: substitute(t, {r: const("_read", r.sort) for r in lit_reads}))
            if literal_vars(stripped):
                return "variable outside direct read"
            continue
        if not literal_vars(lit):
            continue
        if not isinstance(lit, Cmp) or not all(t.sort.is_int for t in lit.terms):
            return "index guard not over integers"
        guard = lit.negate()
        if not (isinstance(guard, Cmp) and guard.positive and guard.rel in (Rel.LE, Rel.LT, Rel.EQ)):
            return "index guard not a positive combination of <= and ="
    return None


def check_locality_class(level: TheoryLevel | Level) -> LocalityClass:
    clauses = level.clauses.clauses
    if any(_nested(c) for c in clauses):
        return LocalityClass.UNVERIFIED
    quantified = [c for c in clauses if c.variables]
    if not quantified:
        return LocalityClass.FREE
    if level.closure is Closure.APF:
        if all(apf_violation(c) is None for c in quantified):
            return LocalityClass.APF
        return LocalityClass.UNVERIFIED
    if _is_case_definition(quantified):
        return LocalityClass.CASE_DEFINITION
    if _is_monotone(quantified):
        return LocalityClass.MONOTONE
    return LocalityClass.UNVERIFIED
