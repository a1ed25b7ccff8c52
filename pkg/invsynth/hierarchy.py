"""
hierarchy.py

Hierarchical reduction of ground satisfiability in a chain of local theory
extensions to a ground problem over the base theory.

A chain is a list of levels, bottom first. A level owns the extension
symbols of its clauses that no lower level mentions. Parameter and base
symbols are shared: no level owns them. Reduction walks the
chain top-down: at each level the clauses are instantiated against the
ground terms currently present, then everything is purified in one pass
(one fresh constant per extension term) and the congruence axioms between
purified terms with the same head are added.

    red = reduce_chain(levels, goal_clauses, taken=sig_names)
    red.formula()       # ground base-theory formula, equisatisfiable
    red.defs            # fresh constant -> f(constants)
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional, Sequence

from invsynth.config import CLAUSE_CAP
from invsynth.errors import QEBlowupError
from invsynth.linear import LinAtom, LinExpr, Op, atom_of_literal, literal_truth, normalize
from invsynth.log import get_logger
from invsynth.logic_core import (
    FALSE,
    TIMES,
    App,
    Clause,
    ClauseSet,
    Cmp,
    Conj,
    GroundFormula,
    GuardedCase,
    Literal,
    PLUS,
    Term,
    Var,
    applications,
    const,
    eq,
    is_ground_term,
    linear_parts,
    make_clause,
    minus,
    ne,
    num,
    plus,
    render_clause,
    render_conj,
    scale,
    substitute,
    substitute_literal,
    term_symbols,
)

log = get_logger(__name__)


class Closure(str, Enum):
    """How a level's variables are instantiated.

    IDENTITY: only instances whose extension terms already occur.
    APF: index variables range over every ground read argument.
    """

    IDENTITY = "identity"
    APF = "apf"


@dataclass(frozen=True)
class CaseDefinition:
    """f'(params) given by guarded cases; `exclusive` when guards partition the domain."""

    symbol: str
    params: tuple[Var, ...]
    cases: tuple[GuardedCase, ...]
    exclusive: bool = False


@dataclass(frozen=True)
class Level:
    name: str
    clauses: ClauseSet = field(default_factory=ClauseSet)
    closure: Closure = Closure.IDENTITY
    definitions: tuple[CaseDefinition, ...] = ()
    # parameter and base symbols the level mentions but never owns
    shared: frozenset[str] = frozenset()

    def heads(self) -> frozenset[str]:
        lits = [l for c in self.clauses for l in c.literals]
        for d in self.definitions:
            for case in d.cases:
                lits.extend(case.guard + case.effect)
        found = {a.symbol for a in applications(lits)}
        found.update(d.symbol for d in self.definitions)
        return frozenset(found)

    def owned_heads(self) -> frozenset[str]:
        return self.heads() - self.shared


@dataclass(frozen=True)
class Congruence:
    """left = f(left_args), right = f(right_args): args equal implies left = right."""

    symbol: str
    left: App
    right: App
    left_args: tuple[Term, ...]
    right_args: tuple[Term, ...]

    def arg_disequalities(self) -> list[Literal]:
        return [ne(a, b) for a, b in zip(self.left_args, self.right_args) if a is not b]

    def as_clause(self) -> Clause:
        return make_clause(self.arg_disequalities() + [eq(self.left, self.right)])


@dataclass
class LevelReport:
    name: str
    owned: frozenset[str]
    instances: list[Clause] = field(default_factory=list)
    groups: list[tuple[Conj, ...]] = field(default_factory=list)
    dropped: list[Clause] = field(default_factory=list)


@dataclass
class Reduction:
    clauses: list[Clause]
    groups: list[tuple[Conj, ...]]
    congruence: list[Congruence]
    defs: dict[App, App]
    reports: list[LevelReport]

    def formula(self) -> GroundFormula:
        clauses = list(self.clauses) + [c.as_clause() for c in self.congruence]
        return GroundFormula(tuple(clauses), tuple(self.groups))

    def def_constants(self) -> frozenset[App]:
        return frozenset(self.defs)

    def unit_literals(self) -> list[Literal]:
        return [c.literals[0] for c in self.clauses if len(c.literals) == 1]


def owned_symbols(levels: Sequence[Level]) -> list[frozenset[str]]:
    """Per level, the extension symbols first mentioned there (bottom-up).

    Shared symbols are never owned, so their new ground terms are not filtered.
    """
    below: set[str] = set()
    out = []
    for level in levels:
        heads = level.heads()
        out.append(frozenset(level.owned_heads() - below))
        below |= heads
    return out


# ---------------------------------------------
# Literal and clause cleanup
# ---------------------------------------------
def simplify_clause(c: Clause) -> Optional[Clause]:
    """Evaluate constant literals. None when the clause is a tautology."""
    kept: list[Literal] = []
    for lit in c.literals:
        truth = literal_truth(lit)
        if truth is True:
            return None
        if truth is False:
            continue
        if lit.negate() in kept:
            return None
        kept.append(lit)
    return make_clause(kept)


def simplify_conj(conj: Iterable[Literal]) -> Optional[Conj]:
    """Evaluate constant literals. None when the conjunction is false."""
    kept: dict[Literal, None] = {}
    for lit in conj:
        truth = literal_truth(lit)
        if truth is True:
            continue
        if truth is False or lit.negate() in kept:
            return None
        kept[lit] = None
    return tuple(kept)


# ---------------------------------------------
# Instantiation
# ---------------------------------------------
def _ground_apps(lits: Iterable[Literal]) -> set[App]:
    return {a for a in applications(lits) if is_ground_term(a)}


def _offset_pattern(arg: Term) -> Optional[tuple[Var, object]]:
    """`x` or `x + k` as (x, k); None otherwise."""
    coeffs, k = linear_parts(arg)
    if len(coeffs) != 1:
        return None
    (atom, coeff), = coeffs.items()
    if not isinstance(atom, Var) or coeff != 1:
        return None
    return atom, k


def _candidates(clause_lits: Sequence[Literal], heads: frozenset[str], terms: dict[str, list[App]]) -> dict[Var, dict[Term, None]]:
    cands: dict[Var, dict[Term, None]] = {}
    for occ in applications(clause_lits, heads):
        for pos, arg in enumerate(occ.args):
            pat = _offset_pattern(arg)
            if pat is None:
                continue
            v, k = pat
            bucket = cands.setdefault(v, {})
            for g in terms.get(occ.symbol, ()):
                value = g.args[pos]
                if value.sort != v.sort:
                    continue
                bucket[minus(value, num(k, v.sort)) if k else value] = None
    return cands


def _instances_identity(
    clause: Clause, owned: frozenset[str], present: set[App], cap: int, site: str
) -> Optional[list[Clause]]:
    """Instances over `present`. None: owned terms occur but some variable has no candidate."""
    by_head: dict[str, list[App]] = {}
    for t in present:
        by_head.setdefault(t.symbol, []).append(t)
    for ts in by_head.values():
        ts.sort()
    lits = clause.literals
    clause_heads = {a.symbol for a in applications(lits)}
    cands = _candidates(lits, frozenset(clause_heads & owned), by_head)
    if any(not cands.get(v) for v in clause.variables):
        fallback = _candidates(lits, frozenset(clause_heads), by_head)
        for v in clause.variables:
            if not cands.get(v):
                cands[v] = fallback.get(v, {})
    if any(not cands.get(v) for v in clause.variables):
        return None if any(by_head.get(h) for h in clause_heads & owned) else []
    domains = [list(cands[v]) for v in clause.variables]
    _check_product(domains, cap, site)
    out: list[Clause] = []
    for values in itertools.product(*domains):
        mapping = dict(zip(clause.variables, values))
        inst = [substitute_literal(l, mapping) for l in lits]
        new_apps = applications(inst, owned)
        if any(a not in present for a in new_apps):
            continue
        simplified = simplify_clause(make_clause(inst))
        if simplified is not None:
            out.append(simplified)
    return out


def _index_set(present: Iterable[App], extra: Iterable[Term]) -> dict:
    index: dict = {}
    for t in sorted(present):
        for a in t.args:
            index.setdefault(a.sort, {})[a] = None
    for t in extra:
        index.setdefault(t.sort, {})[t] = None
    return index


def _instances_apf(clause: Clause, index: dict, cap: int, site: str) -> list[Clause]:
    domains = [list(index.get(v.sort, {})) for v in clause.variables]
    if any(not d for d in domains):
        return []
    _check_product(domains, cap, site)
    out = []
    for values in itertools.product(*domains):
        mapping = dict(zip(clause.variables, values))
        simplified = simplify_clause(make_clause(substitute_literal(l, mapping) for l in clause.literals))
        if simplified is not None:
            out.append(simplified)
    return out


def _check_product(domains: Sequence[Sequence], cap: int, site: str) -> None:
    size = 1
    for d in domains:
        size *= len(d)
    if size > cap:
        raise QEBlowupError(site, size, cap)


def definition_instance(
    d: CaseDefinition, mapping: dict[Term, Term]
) -> tuple[list[Clause], list[tuple[Conj, ...]]]:
    """One instance of a case definition: a guarded group when exclusive, else implications."""
    clauses: list[Clause] = []
    groups: list[tuple[Conj, ...]] = []
    if d.exclusive:
        alts: dict[Conj, None] = {}
        for case in d.cases:
            conj = simplify_conj(substitute_literal(l, mapping) for l in case.guard + case.effect)
            if conj is not None:
                alts[conj] = None
        alternatives = tuple(alts)
        if len(alternatives) == 1:
            clauses.extend(make_clause([l]) for l in alternatives[0])
        elif alternatives:
            groups.append(alternatives)
        else:
            clauses.append(make_clause([FALSE]))
        return clauses, groups
    for case in d.cases:
        guard = simplify_conj(substitute_literal(l, mapping) for l in case.guard)
        if guard is None:
            continue
        for lit in case.effect:
            c = simplify_clause(make_clause([g.negate() for g in guard] + [substitute_literal(lit, mapping)]))
            if c is not None:
                clauses.append(c)
    return clauses, groups


def _instantiate_definition(
    d: CaseDefinition, present: set[App]
) -> tuple[list[Clause], list[tuple[Conj, ...]]]:
    clauses: list[Clause] = []
    groups: list[tuple[Conj, ...]] = []
    for target in sorted(t for t in present if t.symbol == d.symbol):
        c, g = definition_instance(d, dict(zip(d.params, target.args)))
        clauses.extend(c)
        groups.extend(g)
    return clauses, groups


def instantiate(
    level: Level,
    present: set[App],
    owned: Optional[frozenset[str]] = None,
    *,
    index_terms: Iterable[Term] = (),
    cap: int = CLAUSE_CAP,
) -> LevelReport:
    """Ground instances of one level at the ground terms `present`.

    Case definitions give implications or guarded groups. Quantified clauses are
    matched against `present` (identity closure) or range over its index set (APF).
    A clause whose variables cannot all be bound although its owned symbols occur
    is logged and listed in `dropped`.
    """
    site = f"instantiation of level {level.name}"
    mine = owned if owned is not None else level.owned_heads()
    report = LevelReport(level.name, mine)
    for d in level.definitions:
        inst, g = _instantiate_definition(d, present)
        report.instances.extend(inst)
        report.groups.extend(g)
    if level.closure is Closure.APF:
        index = _index_set(present, index_terms)
        for c in level.clauses.quantified:
            report.instances.extend(_instances_apf(c, index, cap, site))
        return report
    for c in level.clauses.quantified:
        inst = _instances_identity(c, mine, present, cap, site)
        if inst is None:
            log.warning(f"[hierarchy] level {level.name}: no ground instance of {render_clause(c)}, clause dropped")
            report.dropped.append(c)
            continue
        report.instances.extend(inst)
    return report


# ---------------------------------------------
# Purification
# ---------------------------------------------
class _Purifier:
    def __init__(self, taken: Iterable[str]):
        self.taken = set(taken)
        self.counters: dict[str, int] = {}
        self.by_term: dict[App, App] = {}
        self.defs: dict[App, App] = {}
        self.memo: dict[Term, Term] = {}

    def fresh(self, symbol: str, sort) -> App:
        n = self.counters.get(symbol, 0)
        while True:
            n += 1
            name = f"{symbol}_{n}"
            if name not in self.taken:
                break
        self.counters[symbol] = n
        self.taken.add(name)
        return const(name, sort)

    def term(self, t: Term) -> Term:
        if not isinstance(t, App) or not t.args:
            return t
        if t in self.memo:
            return self.memo[t]
        args = tuple(self.term(a) for a in t.args)
        if t.symbol == PLUS:
            out = plus(*args)
        elif t.symbol == TIMES:
            out = scale(args[0].value, args[1])  # type: ignore[attr-defined]
        else:
            flat = App(t.symbol, args, t.sort)
            out = self.by_term.get(flat)
            if out is None:
                out = self.fresh(t.symbol, t.sort)
                self.by_term[flat] = out
                self.defs[out] = flat
        self.memo[t] = out
        return out

    def literal(self, lit: Literal) -> Literal:
        return lit.map(self.term)


def purify(
    clauses: Iterable[Clause],
    groups: Iterable[tuple[Conj, ...]] = (),
    taken: Iterable[str] = (),
) -> tuple[list[Clause], list[tuple[Conj, ...]], dict[App, App]]:
    """Name every non-arithmetic application by a fresh constant; returns the definitions too."""
    purifier = _Purifier(taken)
    pure_clauses = [make_clause(purifier.literal(l) for l in c.literals) for c in clauses]
    pure_groups = [tuple(tuple(purifier.literal(l) for l in conj) for conj in g) for g in groups]
    return pure_clauses, pure_groups, purifier.defs


def strict_facts(units: Iterable[Literal]) -> set[LinAtom]:
    facts: set[LinAtom] = set()
    for lit in units:
        a = atom_of_literal(lit)
        if not isinstance(a, LinAtom) or a.op not in (Op.LT, Op.NE, Op.LE):
            continue
        n = normalize(a)
        if isinstance(n, LinAtom):
            facts.add(n)
    return facts


def known_distinct(a: Term, b: Term, facts: set[LinAtom]) -> bool:
    d = LinExpr.from_term(a) - LinExpr.from_term(b)
    if d.is_const:
        return d.const != 0
    if a.sort != b.sort:
        return False
    for op, e in ((Op.NE, d), (Op.LT, d), (Op.LT, d.scaled(-1))):
        n = normalize(LinAtom(op, e))
        if isinstance(n, LinAtom) and n in facts:
            return True
    return False


def build_congruence(
    defs: dict[App, App],
    units: Iterable[Literal],
    semantic_prune: Optional[Callable[[Congruence], bool]] = None,
) -> tuple[list[Congruence], list[Clause]]:
    """Congruence axioms between same-head definitions, after syntactic pruning.

    Returns the kept axioms and the plain clauses that replace axioms whose
    conclusion is already known false.
    """
    facts = strict_facts(units)
    by_symbol: dict[str, list[App]] = {}
    for c, t in defs.items():
        by_symbol.setdefault(t.symbol, []).append(c)
    kept: list[Congruence] = []
    replaced: list[Clause] = []
    for symbol in sorted(by_symbol):
        consts = sorted(by_symbol[symbol])
        for left, right in itertools.combinations(consts, 2):
            la, ra = defs[left].args, defs[right].args
            if any(known_distinct(a, b, facts) for a, b in zip(la, ra)):
                continue
            cong = Congruence(symbol, left, right, la, ra)
            if known_distinct(left, right, facts):
                replaced.append(make_clause(cong.arg_disequalities()))
                continue
            if semantic_prune is not None and semantic_prune(cong):
                continue
            kept.append(cong)
    return kept, replaced


# ---------------------------------------------
# Chain reduction
# ---------------------------------------------
def reduce_chain(
    levels: Sequence[Level],
    goal: Iterable[Clause],
    groups: Iterable[tuple[Conj, ...]] = (),
    *,
    taken: Iterable[str] = (),
    index_terms: Iterable[Term] = (),
    cap: int = CLAUSE_CAP,
    semantic_prune: Optional[Callable[[Congruence], bool]] = None,
) -> Reduction:
    """Reduce levels (bottom first) plus the ground goal to a purified ground formula."""
    owned = owned_symbols(levels)
    clauses: dict[Clause, None] = {}
    for c in goal:
        s = simplify_clause(c)
        if s is not None:
            clauses[s] = None
    grps: dict[tuple[Conj, ...], None] = dict.fromkeys(groups)
    for level in levels:
        for c in level.clauses.ground:
            s = simplify_clause(c)
            if s is not None:
                clauses[s] = None

    def current_lits() -> list[Literal]:
        lits = [l for c in clauses for l in c.literals]
        for g in grps:
            for conj in g:
                lits.extend(conj)
        return lits

    reports: list[LevelReport] = []
    total = 0
    for level, mine in reversed(list(zip(levels, owned))):
        present = _ground_apps(current_lits())
        report = instantiate(level, present, mine, index_terms=index_terms, cap=cap)
        for c in report.instances:
            clauses[c] = None
        for g in report.groups:
            grps[g] = None
        total += len(report.instances) + len(report.groups)
        if total > cap:
            raise QEBlowupError("instantiation", total, cap)
        log.debug(
            f"[hierarchy] level {level.name}: owns {sorted(mine)}, "
            f"{len(report.instances)} instances, {len(report.groups)} guarded groups"
        )
        reports.append(report)

    pure_clauses, pure_groups, defs = purify(clauses, grps, taken)
    units = [c.literals[0] for c in pure_clauses if len(c.literals) == 1]
    congruence, replaced = build_congruence(defs, units, semantic_prune)
    log.debug(
        f"[hierarchy] {len(defs)} definitions, {len(congruence)} congruence axioms "
        f"({len(replaced)} reduced to disequalities)"
    )
    return Reduction(
        clauses=list(dict.fromkeys(pure_clauses + replaced)),
        groups=list(dict.fromkeys(pure_groups)),
        congruence=congruence,
        defs=defs,
        reports=reports,
    )


def unpurify_term(t: Term, defs: dict[App, App]) -> Term:
    mapping: dict[Term, Term] = dict(defs)
    for _ in range(len(defs) + 1):
        nxt = substitute(t, mapping)
        if nxt is t:
            return t
        t = nxt
    return t


def unpurify(lit: Literal, defs: dict[App, App]) -> Literal:
    return lit.map(lambda t: unpurify_term(t, defs))


def inline_unit_definitions(
    clauses: Sequence[Clause], eliminable: frozenset[str]
) -> tuple[list[Clause], dict[Term, Term]]:
    """Substitute ground unit equalities `c = t` for 0-ary `c` in `eliminable`.

    `c` must not occur in `t`. Returns the remaining clauses and the
    substitution applied (constant -> term).
    """
    mapping: dict[Term, Term] = {}
    rest = list(clauses)
    changed = True
    while changed:
        changed = False
        for i, c in enumerate(rest):
            if len(c.literals) != 1 or c.variables:
                continue
            lit = c.literals[0]
            if not (isinstance(lit, Cmp) and lit.positive and lit.rel.value == "="):
                continue
            for side, other in ((lit.lhs, lit.rhs), (lit.rhs, lit.lhs)):
                if (
                    isinstance(side, App)
                    and side.is_constant
                    and side.symbol in eliminable
                    and side not in mapping
                    and side.symbol not in term_symbols(other)
                ):
                    step = {side: other}
                    mapping = {k: substitute(v, step) for k, v in mapping.items()}
                    mapping[side] = other
                    rest = [
                        make_clause(substitute_literal(l, step) for l in d.literals)
                        for j, d in enumerate(rest)
                        if j != i
                    ]
                    changed = True
                    break
            if changed:
                break
    return rest, mapping


def dumps(red: Reduction) -> str:
    """Human-readable listing of a reduction (for --trace)."""
    lines: list[str] = []
    for rep in red.reports:
        lines.append(f"level {rep.name} owns {', '.join(sorted(rep.owned)) or '-'}")
        lines.extend(f"  inst  {render_clause(c)}" for c in rep.instances)
        lines.extend(f"  drop  {render_clause(c)}" for c in rep.dropped)
        for g in rep.groups:
            lines.append("  case  " + " || ".join(render_conj(conj) for conj in g))
    lines.append("definitions")
    lines.extend(f"  {c.text} := {t.text}" for c, t in red.defs.items())
    lines.append("congruence")
    lines.extend(f"  {render_clause(c.as_clause())}" for c in red.congruence)
    lines.append("ground")
    lines.extend(f"  {render_clause(c)}" for c in red.clauses)
    for g in red.groups:
        lines.append("  " + " || ".join(render_conj(conj) for conj in g))
    return "\n".join(lines)
