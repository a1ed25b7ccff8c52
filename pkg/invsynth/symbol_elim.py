"""
symbol_elim.py

Symbol elimination in local theory extensions.

Given a chain of levels and a ground goal G, compute a universally
quantified clause set Gamma over base constants and parameters only, such
that the chain plus Gamma plus G is unsatisfiable, and Gamma is the weakest
such constraint:

    1. reduce the chain (instantiate, purify, congruence)
    2. classify constants: kept (parameters, parameter definitions and their
       arguments) vs existential (everything else plus the requested extras)
    3. eliminate the existential constants disjunct by disjunct
    4. restore parameter terms, turn non-parameter arguments into variables
    5. negate every disjunct into a clause and clean up

    res = eliminate_symbols(ElimRequest(levels, goal, signature=sig))
    res.gamma           # ClauseSet
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

from invsynth.config import DISJUNCT_CAP, ConstantPolicy, CongruenceExpansion, ElimMode
from invsynth.errors import ContractViolation
from invsynth.hierarchy import Congruence, Level, Reduction, dumps, reduce_chain, unpurify_term
from invsynth.log import get_logger
from invsynth.logic_core import (
    App,
    Clause,
    ClauseSet,
    Conj,
    Literal,
    Role,
    Signature,
    SkolemConst,
    Term,
    Var,
    clause_symbols,
    constants_of,
    eq,
    ne,
    render_clause,
    render_conj,
    substitute,
    subterms,
    term_symbols,
)
from invsynth.qelim import eliminate, quick_unsat
from invsynth.simplify import cleanup
from invsynth.smt_client import SmtClient, SolverVerdict
from invsynth.transforms import clause_alternatives, dnf_product, negate_conj

log = get_logger(__name__)


@dataclass(frozen=True)
class ElimRequest:
    levels: tuple[Level, ...]
    goal: tuple[Clause, ...]
    signature: Signature
    groups: tuple[tuple[Conj, ...], ...] = ()
    eliminate_constants: frozenset[str] = frozenset()
    mode: ElimMode = ElimMode.FULL
    constant_policy: ConstantPolicy = ConstantPolicy.UNGUARDED
    congruence: CongruenceExpansion = CongruenceExpansion.IMPLIED
    skolems: tuple[SkolemConst, ...] = ()
    facts: tuple[Literal, ...] = ()
    cap: int = DISJUNCT_CAP


@dataclass
class ElimTrace:
    excluded: list[str] = field(default_factory=list)
    instances: int = 0
    definitions: dict[str, str] = field(default_factory=dict)
    existential: list[str] = field(default_factory=list)
    kept: list[str] = field(default_factory=list)
    generalized: dict[str, str] = field(default_factory=dict)
    pre_qe: list[str] = field(default_factory=list)
    post_qe: list[str] = field(default_factory=list)
    reduction: str = ""


@dataclass
class ElimResult:
    gamma: ClauseSet
    trace: ElimTrace
    reduction: Reduction


# ---------------------------------------------
# Step 2: classification
# ---------------------------------------------
@dataclass
class _Classes:
    kept_defs: dict[App, App]
    existential: list[App]
    generalize: list[App]


def _mentions(t: Term, names: frozenset[str]) -> bool:
    return bool(term_symbols(t) & names)


def _classify(red: Reduction, req: ElimRequest, present: frozenset[App]) -> _Classes:
    sig = req.signature
    ce = req.eliminate_constants
    defs = red.defs
    expanded = {c: unpurify_term(c, defs) for c in defs}

    kept_defs: dict[App, App] = {}
    for c, t in defs.items():
        if sig.role(t.symbol) is not Role.PARAM or t.symbol in ce:
            continue
        if any(_mentions(unpurify_term(a, defs), ce) for a in t.args):
            continue
        kept_defs[c] = t

    arg_consts = {
        s
        for t in kept_defs.values()
        for a in t.args
        for s in subterms(a)
        if isinstance(s, App) and s.is_constant
    }

    skolem_names = {s.constant.symbol for s in req.skolems}
    existential: list[App] = []
    generalize: list[App] = []
    for c in sorted(present):
        name = c.symbol
        if c in kept_defs:
            continue
        role = sig.role(name)
        rigid = role in (Role.BASE, Role.PARAM) and name not in ce
        if rigid:
            continue
        if c in arg_consts and not _mentions(expanded.get(c, c), ce):
            generalize.append(c)
            continue
        if req.constant_policy is ConstantPolicy.NONE and name in skolem_names and name not in ce:
            generalize.append(c)
            continue
        existential.append(c)
    return _Classes(kept_defs, existential, generalize)


# ---------------------------------------------
# Step 1 helpers
# ---------------------------------------------
def _exclude_kept(req: ElimRequest) -> tuple[list[Level], list[str], list[Literal]]:
    """Split mode: drop clauses whose non-base symbols are all kept parameters."""
    sig = req.signature
    params = sig.parameters - req.eliminate_constants
    base = sig.base_constants
    levels: list[Level] = []
    excluded: list[str] = []
    facts: list[Literal] = []
    for level in req.levels:
        kept_clauses = []
        for c in level.clauses:
            symbols = clause_symbols(c) - base
            if symbols <= params:
                excluded.append(f"{level.name}: {render_clause(c)}")
                if c.is_ground and len(c.literals) == 1:
                    facts.append(c.literals[0])
                continue
            kept_clauses.append(c)
        if kept_clauses or level.definitions:
            levels.append(replace(level, clauses=ClauseSet(tuple(kept_clauses))))
    return levels, excluded, facts


def _congruence_alternatives(cong: Congruence, mode: CongruenceExpansion) -> list[Conj]:
    diffs = [(a, b) for a, b in zip(cong.left_args, cong.right_args) if a is not b]
    alts: list[Conj] = [(ne(a, b),) for a, b in diffs]
    if mode is CongruenceExpansion.SPLIT:
        alts.append(tuple(eq(a, b) for a, b in diffs) + (eq(cong.left, cong.right),))
    else:
        alts.append((eq(cong.left, cong.right),))
    return alts


# ---------------------------------------------
# Step 4 helpers
# ---------------------------------------------
def _variable_names(generalize: Sequence[App], req: ElimRequest) -> dict[Term, Term]:
    provenance = {s.constant: s.variable.name for s in req.skolems}
    reserved = set(req.signature.functions) | set(req.signature.predicates)
    used: set[str] = set()
    mapping: dict[Term, Term] = {}
    for c in generalize:
        base = provenance.get(c, c.symbol).replace("'", "p")
        name, n = base, 0
        while name in reserved or name in used:
            n += 1
            name = f"{base}{n}"
        used.add(name)
        mapping[c] = Var(name, c.sort)
    return mapping


def _restore(conj: Conj, kept_defs: dict[App, App], generalized: dict[Term, Term]) -> Conj:
    out = []
    for lit in conj:
        lit = lit.map(lambda t: unpurify_term(t, kept_defs))
        out.append(lit.map(lambda t: substitute(t, generalized)))
    return tuple(out)


def _assert_pure(gamma: Sequence[Clause], sig: Signature) -> None:
    allowed = sig.allowed_in_invariant()
    for c in gamma:
        bad = clause_symbols(c) - allowed
        if bad:
            raise ContractViolation(f"gamma mentions non-parameter symbols {sorted(bad)}: {render_clause(c)}")


# ---------------------------------------------
# Algorithm
# ---------------------------------------------
def eliminate_symbols(req: ElimRequest) -> ElimResult:
    trace = ElimTrace()
    levels = list(req.levels)
    facts = list(req.facts)
    if req.mode is ElimMode.SPLIT:
        levels, trace.excluded, extra = _exclude_kept(req)
        facts.extend(extra)

    taken = set(req.signature.functions)
    for c in req.goal:
        taken |= clause_symbols(c)
    red = reduce_chain(levels, req.goal, req.groups, taken=taken, cap=req.cap)
    trace.instances = sum(len(r.instances) + len(r.groups) for r in red.reports)
    trace.definitions = {c.text: unpurify_term(c, red.defs).text for c in red.defs}
    trace.reduction = dumps(red)

    lits: list[Literal] = [l for c in red.clauses for l in c.literals]
    for g in red.groups:
        for conj in g:
            lits.extend(conj)
    for cong in red.congruence:
        lits.extend(cong.as_clause().literals)
    present = constants_of(lits)
    classes = _classify(red, req, present)
    trace.existential = sorted(c.text for c in classes.existential)
    trace.kept = sorted(c.text for c in present if c not in classes.existential)

    groups: list[Sequence[Conj]] = [clause_alternatives(c) for c in red.clauses]
    groups.extend(red.groups)
    for cong in red.congruence:
        if cong.left in classes.kept_defs and cong.right in classes.kept_defs:
            continue
        groups.append(_congruence_alternatives(cong, req.congruence))
    groups.sort(key=len)
    dnf = dnf_product(groups, prune=quick_unsat, cap=req.cap, site="elimination input")
    trace.pre_qe = [render_conj(d) for d in dnf]
    log.debug(f"[elim] {len(dnf)} disjuncts, eliminating {trace.existential}")

    post: dict[Conj, None] = {}
    for conj in dnf:
        mentioned = constants_of(conj)
        for out in eliminate([v for v in classes.existential if v in mentioned], [conj], req.cap):
            if not quick_unsat(out):
                post[out] = None
    trace.post_qe = [render_conj(d) for d in post]

    generalized = _variable_names(classes.generalize, req)
    trace.generalized = {c.text: v.text for c, v in generalized.items()}
    clauses = [negate_conj(_restore(conj, classes.kept_defs, generalized)) for conj in post]
    gamma = cleanup(clauses, facts)
    _assert_pure(gamma, req.signature)
    log.info(f"[elim] gamma has {len(gamma)} clause(s) from {len(dnf)} disjunct(s)")
    return ElimResult(ClauseSet(tuple(gamma)), trace, red)


def eliminate_symbols_split(req: ElimRequest) -> ElimResult:
    return eliminate_symbols(replace(req, mode=ElimMode.SPLIT))


def gamma_level_index(levels: Sequence[Level]) -> int:
    """Gamma sits just below the first level carrying update definitions."""
    for i, level in enumerate(levels):
        if level.definitions:
            return i
    return len(levels)


def verify_gamma(req: ElimRequest, res: ElimResult, client: SmtClient) -> SolverVerdict:
    """Chain + Gamma + G must be unsatisfiable."""
    levels = list(req.levels)
    levels.insert(gamma_level_index(levels), Level("gamma", res.gamma))
    taken = set(req.signature.functions)
    for c in req.goal:
        taken |= clause_symbols(c)
    red = reduce_chain(levels, req.goal, req.groups, taken=taken, cap=req.cap)
    return client.check_reduced(red, "verify-gamma")


def without_clause(res: ElimResult, index: int) -> ElimResult:
    """Gamma with one clause dropped, for mutation checks."""
    clauses = tuple(c for i, c in enumerate(res.gamma.clauses) if i != index)
    return ElimResult(ClauseSet(clauses), res.trace, res.reduction)



__all__ = [
    "ElimRequest",
    "ElimResult",
    "ElimTrace",
    "eliminate_symbols",
    "eliminate_symbols_split",
    "verify_gamma",
    "gamma_level_index",
    "without_clause",
]
