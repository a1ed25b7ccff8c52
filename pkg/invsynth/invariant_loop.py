"""
invariant_loop.py

Successive strengthening of a safety property into a universally
quantified inductive invariant over the kept symbols.

    I := property
    loop:
        Init |= I ?                 no  -> NoUniversalInvariant
        I & step |= I' ?            yes -> Invariant (after a full re-check)
        for every violating disjunct G of not I':
            Gamma_G := symbol elimination on step & G
        I := I & Gamma

In refined mode consecution after the first iteration only re-checks the
clauses added last, and strengthening runs elimination in split mode
(clauses over kept symbols only are left out of the elimination input).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

from invsynth.config import ConstantPolicy, ElimMode, LoopConfig, LoopMode, Semantics
from invsynth.diagnostics import ShapeTracker, clause_stats, growth_record, length_record, monitor_alarms
from invsynth.errors import SpecError
from invsynth.hierarchy import (
    CaseDefinition,
    Closure,
    Level,
    definition_instance,
    inline_unit_definitions,
    known_distinct,
    reduce_chain,
    strict_facts,
)
from invsynth.log import get_logger
from invsynth.logic_core import (
    App,
    Clause,
    ClauseSet,
    Cmp,
    GroundConj,
    GuardedCase,
    Role,
    Term,
    Var,
    is_arith,
    linear_parts,
    literal_symbols,
    eq,
    make_clause,
    primed,
    render_clause,
    render_literal,
)
from invsynth.reports import GrowthRecord, IterationRecord, ViolationRecord
from invsynth.simplify import cleanup
from invsynth.smt_client import SmtClient, SolverVerdict
from invsynth.spec_checks import (
    LocalityClass,
    ObligationKind,
    ObligationStatus,
    apf_violation,
    check_locality_class,
    check_property_roles,
    shared_symbols,
    theory_chain,
    validate_a3,
)
from invsynth.specfile import BaseTheory, ProblemSpec, UpdateSpec
from invsynth.symbol_elim import ElimRequest, ElimResult, eliminate_symbols, verify_gamma
from invsynth.transforms import collect_est, prime, skolemize_clause

log = get_logger(__name__)


# ---------------------------------------------
# Configuration
# ---------------------------------------------
_OPTION_FIELDS = {
    "keep": "keep",
    "max_iterations": "max_iterations",
    "mode": "mode",
    "constant_policy": "constant_policy",
    "semantics": "semantics",
    "apf_guard": "apf_guard",
    "congruence": "congruence_expansion",
}


def config_for(spec: ProblemSpec, **overrides) -> LoopConfig:
    """Defaults, then the spec's options block, then explicit overrides."""
    o = spec.options
    from_spec = {target: getattr(o, name) for name, target in _OPTION_FIELDS.items()}
    if o.eliminate_constants:
        from_spec["eliminate_constants"] = o.eliminate_constants
    config = LoopConfig().merged(**from_spec)
    extra = overrides.pop("eliminate_constants", None)
    config = config.merged(**overrides)
    if extra:
        config = config.merged(eliminate_constants=config.eliminate_constants | frozenset(extra))
    return config


def resolve_keep(spec: ProblemSpec, config: LoopConfig) -> frozenset[str]:
    """Kept symbols: configured, else every non-primed parameter or extension symbol."""
    if config.keep is not None:
        return config.keep
    if spec.options.keep is not None:
        return spec.options.keep
    return frozenset(n for n, f in spec.signature.functions.items() if f.role in (Role.PARAM, Role.EXT))


# ---------------------------------------------
# Transition system
# ---------------------------------------------
@dataclass(frozen=True)
class Step:
    """One transition relation: update definitions plus ground step clauses."""

    label: str
    level: Level
    clauses: tuple[Clause, ...]
    groups: tuple[tuple[tuple, ...], ...]


class TransitionSystem:
    def __init__(self, spec: ProblemSpec, config: LoopConfig, exclusive: Optional[dict[str, bool]] = None):
        self.spec = spec
        self.config = config
        self.keep = resolve_keep(spec, config)
        self.signature = spec.signature.with_keep(self.keep)
        self.theory = theory_chain(spec)
        self.shared = shared_symbols(spec)
        self.exclusive = dict(exclusive) if exclusive is not None else {}
        self.closure = Closure.APF if config.apf_guard else Closure.IDENTITY
        if config.semantics is Semantics.INTERLEAVED and len(spec.updates) > 1:
            self.steps = [self._step(u.function, u.function) for u in spec.updates]
        else:
            self.steps = [self._step("step", None)]
        self.inlinable = self._inlinable()

    def _definition(self, u: UpdateSpec, framed: bool) -> CaseDefinition:
        name = primed(u.function)
        if framed:
            sort = self.signature.function(u.function).result
            frame = eq(App(name, u.params, sort), App(u.function, u.params, sort))
            return CaseDefinition(name, u.params, (GuardedCase((), (frame,)),), exclusive=True)
        exclusive = self.exclusive.get(u.function, len(u.cases) == 1 and not u.cases[0].guard)
        return CaseDefinition(name, u.params, u.cases, exclusive)

    def _step(self, label: str, active: Optional[str]) -> Step:
        defs: list[CaseDefinition] = []
        clauses = [make_clause([l]) for l in self.spec.guard]
        groups: list = []
        for u in self.spec.updates:
            d = self._definition(u, framed=active is not None and u.function != active)
            if u.params:
                defs.append(d)
                continue
            c, g = definition_instance(d, {})
            clauses.extend(c)
            groups.extend(g)
        level = Level(f"update_{label}", ClauseSet(), Closure.IDENTITY, tuple(defs))
        return Step(label, level, tuple(clauses), tuple(groups))

    def _inlinable(self) -> frozenset[str]:
        """0-ary symbols whose unit definitions may be substituted away before elimination."""
        in_definitions: set[str] = set()
        for step in self.steps:
            for d in step.level.definitions:
                for case in d.cases:
                    for lit in case.guard + case.effect:
                        in_definitions |= literal_symbols(lit)
        names = {
            n
            for n, f in self.signature.functions.items()
            if f.arity == 0 and (f.role is Role.PRIMED or n in self.config.eliminate_constants)
        }
        return frozenset(names - in_definitions)

    def step(self, label: str) -> Step:
        for s in self.steps:
            if s.label == label:
                return s
        raise KeyError(label)

    def chain(self, inv: ClauseSet, step: Step) -> list[Level]:
        return [*self.theory, Level("invariant", inv, self.closure, shared=self.shared), step.level]

    def names(self) -> frozenset[str]:
        return frozenset(self.signature.functions) | frozenset(self.signature.predicates)

    def primed_clause(self, c: Clause) -> Clause:
        return prime(c, self.spec.updated, self.signature)

    @property
    def primed_heads(self) -> frozenset[str]:
        return frozenset(primed(u.function) for u in self.spec.updates if u.params)


# ---------------------------------------------
# Checks
# ---------------------------------------------
@dataclass
class Violation:
    update: str
    clause_index: int
    goal: GroundConj
    model: dict[str, Fraction] = field(default_factory=dict)

    def record(self) -> ViolationRecord:
        return ViolationRecord(
            update=self.update,
            clause_index=self.clause_index,
            goal=[render_literal(l) for l in self.goal.literals],
            model={k: str(v) for k, v in self.model.items()},
        )


@dataclass
class CheckResult:
    holds: bool
    violations: list[Violation] = field(default_factory=list)
    model: Optional[dict[str, Fraction]] = None
    unknown: Optional[str] = None


def _undecided(v: SolverVerdict) -> str:
    return f"solver {v.status.value}" + (f": {v.detail}" if v.detail else "")


def check_initiation(ts: TransitionSystem, clauses: ClauseSet, client: SmtClient) -> CheckResult:
    """Init |= clauses, reduced through the theory chain."""
    levels = [*ts.theory, Level("init", ts.spec.init, shared=ts.shared)]
    v = client.check_entailment(levels, clauses, label="initiation")
    if v.is_unsat:
        return CheckResult(True)
    if v.is_sat:
        return CheckResult(False, model=v.model or {})
    return CheckResult(False, unknown=_undecided(v))


def check_consecution(
    ts: TransitionSystem, inv: ClauseSet, targets: ClauseSet, client: SmtClient
) -> CheckResult:
    """inv & step |= targets' for every step; collects every violating (step, clause)."""
    taken = ts.names()
    result = CheckResult(True)
    for step in ts.steps:
        levels = ts.chain(inv, step)
        for k, clause in enumerate(targets.clauses):
            g = skolemize_clause(ts.primed_clause(clause), k, taken)
            goal = list(step.clauses) + [make_clause([l]) for l in g.literals]
            names = taken | {s.constant.symbol for s in g.skolems}
            red = reduce_chain(levels, goal, step.groups, taken=names)
            v = client.check_reduced(red, f"consecution-{step.label}-{k}")
            if v.is_sat:
                result.holds = False
                result.violations.append(Violation(step.label, k, g, v.model or {}))
            elif not v.is_unsat:
                return CheckResult(False, unknown=_undecided(v))
    return result


def verify_invariant(ts: TransitionSystem, inv: ClauseSet, client: SmtClient) -> CheckResult:
    """Both inductiveness conditions from scratch, against the full primed candidate."""
    init = check_initiation(ts, inv, client)
    if not init.holds:
        return init
    return check_consecution(ts, inv, inv, client)


def entails(ts: TransitionSystem, inv: ClauseSet, gamma: ClauseSet, client: SmtClient) -> bool:
    levels = [*ts.theory, Level("invariant", inv, ts.closure, shared=ts.shared)]
    v = client.check_entailment(levels, gamma, label="fixpoint")
    if not v.decided:
        log.warning(f"[synth] fixpoint check undecided ({v.status.value}); continuing")
    return v.is_unsat


# ---------------------------------------------
# Strengthening
# ---------------------------------------------
@dataclass
class Strengthening:
    gamma: ClauseSet
    results: list[ElimResult]
    verified: Optional[bool] = None


def elim_request(ts: TransitionSystem, inv: ClauseSet, step: Step, goal: GroundConj) -> ElimRequest:
    clauses = list(step.clauses) + [make_clause([l]) for l in goal.literals]
    clauses, _ = inline_unit_definitions(clauses, ts.inlinable)
    cfg = ts.config
    return ElimRequest(
        levels=tuple(ts.chain(inv, step)),
        goal=tuple(clauses),
        signature=ts.signature,
        groups=step.groups,
        eliminate_constants=cfg.eliminate_constants,
        mode=ElimMode.SPLIT if cfg.mode is LoopMode.REFINED else ElimMode.FULL,
        constant_policy=cfg.constant_policy,
        congruence=cfg.congruence_expansion,
        skolems=goal.skolems,
    )


def strengthen(
    ts: TransitionSystem,
    inv: ClauseSet,
    violations: Sequence[Violation],
    client: Optional[SmtClient] = None,
) -> Strengthening:
    """Conjunction of the eliminated constraints of every violating disjunct."""
    clauses: list[Clause] = []
    results: list[ElimResult] = []
    verified: Optional[bool] = None
    for v in violations:
        req = elim_request(ts, inv, ts.step(v.update), v.goal)
        res = eliminate_symbols(req)
        results.append(res)
        clauses.extend(res.gamma.clauses)
        if ts.config.verify and client is not None:
            ok = verify_gamma(req, res, client).is_unsat
            verified = ok if verified is None else verified and ok
            if not ok:
                log.warning(f"[synth] gamma for {v.update}/{v.clause_index} did not verify")
        log.debug(
            f"[synth] {v.update}/{v.clause_index}: "
            + "; ".join(render_clause(c) for c in res.gamma.clauses)
        )
    return Strengthening(ClauseSet(tuple(cleanup(clauses))), results, verified)


# ---------------------------------------------
# Array property fragment guard
# ---------------------------------------------
@dataclass(frozen=True)
class ApfVerdict:
    in_fragment: bool
    reason: str = ""
    predicted: Optional[bool] = None

    def __str__(self) -> str:
        return "InFragment" if self.in_fragment else f"OutOfFragment({self.reason})"


def apf_prediction(goal: GroundConj, heads: frozenset[str]) -> bool:
    """One extension term in G, or pairwise disequal arguments: no congruence instances needed."""
    est = collect_est([], goal.literals, heads)
    if len(est) <= 1:
        return True
    facts = strict_facts(goal.literals)
    for a, b in itertools.combinations(est, 2):
        if a.symbol != b.symbol:
            continue
        if not any(known_distinct(x, y, facts) for x, y in zip(a.args, b.args)):
            return False
    return True


def apf_guard(
    gamma: ClauseSet, goals: Sequence[GroundConj] = (), heads: frozenset[str] = frozenset()
) -> ApfVerdict:
    predicted = all(apf_prediction(g, heads) for g in goals) if goals else None
    for c in gamma.clauses:
        reason = apf_violation(c)
        if reason is not None:
            return ApfVerdict(False, reason, predicted)
    return ApfVerdict(True, predicted=predicted)


# ---------------------------------------------
# Termination class
# ---------------------------------------------
@dataclass(frozen=True)
class TerminationClass:
    guaranteed: bool
    reason: str = ""

    def __str__(self) -> str:
        return "GuaranteedTerminating" if self.guaranteed else f"NoGuarantee({self.reason})"


def _simple(t: Term) -> bool:
    """Linear combination of variables, constants and unary reads at a variable."""
    atoms, _ = linear_parts(t)
    for a in atoms:
        if isinstance(a, Var):
            continue
        if not isinstance(a, App) or is_arith(a):
            return False
        if not (a.is_constant or (len(a.args) == 1 and isinstance(a.args[0], Var))):
            return False
    return True


def classify_termination(spec: ProblemSpec, keep: Optional[frozenset[str]] = None) -> TerminationClass:
    """Syntactic class with a finite family of ground terms, over rationals, keeping everything."""
    lits = [l for c in spec.property.clauses for l in c.literals]
    lits.extend(spec.guard)
    for u in spec.updates:
        for case in u.cases:
            lits.extend(case.guard + case.effect)
    for lit in lits:
        if not isinstance(lit, Cmp):
            return TerminationClass(False, f"ground terms outside fixed family: {render_literal(lit)}")
        for t in lit.terms:
            if not _simple(t):
                return TerminationClass(False, f"ground terms outside fixed family: {t.text}")
    if spec.base is not BaseTheory.LRA:
        return TerminationClass(False, "base theory is not linear rational arithmetic")
    every = frozenset(n for n, f in spec.signature.functions.items() if f.role in (Role.PARAM, Role.EXT))
    kept = keep if keep is not None else spec.options.keep
    if kept is not None and not every <= kept:
        return TerminationClass(False, "kept symbols are not the full signature")
    return TerminationClass(True)


# ---------------------------------------------
# Outcomes
# ---------------------------------------------
class OutcomeKind(str, Enum):
    INVARIANT = "invariant"
    NO_UNIVERSAL_INVARIANT = "no-universal-invariant"
    DIVERGED = "diverged"
    BUDGET_EXHAUSTED = "budget-exhausted"
    UNKNOWN = "unknown"


@dataclass
class CandidateInvariant:
    clauses: ClauseSet
    iteration: int
    provenance: tuple[str, ...]

    def conjoin(self, gamma: ClauseSet, origin: str) -> "CandidateInvariant":
        return CandidateInvariant(
            self.clauses + gamma,
            self.iteration + 1,
            self.provenance + (origin,) * len(gamma.clauses),
        )


@dataclass
class LoopOutcome:
    kind: OutcomeKind
    iteration: int
    invariant: Optional[CandidateInvariant] = None
    countermodel: dict[str, Fraction] = field(default_factory=dict)
    reason: str = ""
    trace: list[IterationRecord] = field(default_factory=list)
    caveats: list[str] = field(default_factory=list)
    growth: Optional[GrowthRecord] = None
    termination: Optional[TerminationClass] = None


def certify(
    spec: ProblemSpec, client: SmtClient, strict: bool = True
) -> tuple[dict[str, bool], list[str]]:
    """Per update: guards exclusive and exhaustive.

    Non-exhaustive guards are a spec error when `strict`, a caveat otherwise.
    """
    exclusive: dict[str, bool] = {}
    caveats: list[str] = []
    for u in spec.updates:
        if len(u.cases) == 1 and not u.cases[0].guard:
            exclusive[u.function] = True
            continue
        report = validate_a3(u, spec, client)
        for o in report.obligations:
            if o.kind is ObligationKind.EXHAUSTIVENESS and o.status is ObligationStatus.FAIL:
                if not strict:
                    caveats.append(f"update {u.function}: case guards are not exhaustive")
                    continue
                raise SpecError(f"update '{u.function}': case guards are not exhaustive ({o.detail})", source=spec.source)
        exclusive[u.function] = report.exclusive_and_exhaustive
        if not exclusive[u.function]:
            caveats.append(f"update {u.function}: guards not certified exclusive, cases kept as implications")
    return exclusive, caveats


def locality_caveats(spec: ProblemSpec) -> list[str]:
    return [
        f"locality assumed for level {level.name}"
        for level in spec.levels
        if check_locality_class(level) is LocalityClass.UNVERIFIED
    ]


def _monitor_applies(ts: TransitionSystem) -> bool:
    cfg = ts.config
    return (
        cfg.constant_policy is ConstantPolicy.NONE
        and not cfg.eliminate_constants
        and all(ts.exclusive.get(u.function, False) for u in ts.spec.updates)
    )


def synthesize(spec: ProblemSpec, config: Optional[LoopConfig] = None, client: Optional[SmtClient] = None) -> LoopOutcome:
    config = config or config_for(spec)
    termination = classify_termination(spec, config.keep)
    start = CandidateInvariant(spec.property, 1, ("property",) * len(spec.property.clauses))
    if not spec.property.clauses:
        return LoopOutcome(OutcomeKind.INVARIANT, 1, start, termination=termination)
    if client is None:
        client = SmtClient()

    exclusive, caveats = certify(spec, client)
    ts = TransitionSystem(spec, config, exclusive)
    check_property_roles(spec, ts.signature.allowed_in_invariant())
    caveats = locality_caveats(spec) + caveats
    refined = config.mode is LoopMode.REFINED
    m = max((len(c.variables) for c in spec.property.clauses), default=0)
    flat_symbols = frozenset(n for n, f in ts.signature.functions.items() if f.arity > 0)

    inv = start
    pending = spec.property
    trace: list[IterationRecord] = []
    counts: list[int] = []
    shapes = ShapeTracker()

    def outcome(kind: OutcomeKind, n: int, **kw) -> LoopOutcome:
        growth = growth_record(counts, shapes) if kind in (OutcomeKind.DIVERGED, OutcomeKind.BUDGET_EXHAUSTED) else None
        log.info(f"[synth] {kind.value} at iteration {n}" + (f": {kw['reason']}" if kw.get("reason") else ""))
        return LoopOutcome(kind, n, trace=trace, caveats=caveats, growth=growth, termination=termination, **kw)

    for n in itertools.count(1):
        queries, seconds = client.stats.queries, client.stats.seconds
        fresh = inv.clauses if not refined or n == 1 else pending
        init = check_initiation(ts, fresh, client)
        if init.unknown:
            return outcome(OutcomeKind.UNKNOWN, n, invariant=inv, reason=init.unknown)
        if not init.holds:
            return outcome(OutcomeKind.NO_UNIVERSAL_INVARIANT, n, invariant=inv, countermodel=init.model or {})

        cons = check_consecution(ts, inv.clauses, fresh, client)
        if cons.unknown:
            return outcome(OutcomeKind.UNKNOWN, n, invariant=inv, reason=cons.unknown)
        record = IterationRecord(
            iteration=n,
            candidate=[render_clause(c) for c in inv.clauses],
            violations=[v.record() for v in cons.violations],
        )
        trace.append(record)
        log.info(f"[synth] iteration {n}: {len(cons.violations)} violating disjunct(s)")

        if cons.holds:
            final = verify_invariant(ts, inv.clauses, client)
            record.solver_queries = client.stats.queries - queries
            record.solver_seconds = client.stats.seconds - seconds
            if final.holds:
                return outcome(OutcomeKind.INVARIANT, n, invariant=inv)
            reason = final.unknown or "final re-check failed"
            return outcome(OutcomeKind.UNKNOWN, n, invariant=inv, reason=reason)
        if n >= config.max_iterations:
            return outcome(OutcomeKind.BUDGET_EXHAUSTED, n, invariant=inv, reason=f"no invariant within {n} iterations")

        st = strengthen(ts, inv.clauses, cons.violations, client)
        stats = clause_stats(st.gamma)
        record.gamma = [render_clause(c) for c in st.gamma.clauses]
        record.clause_count = stats.count
        record.max_clause_length = stats.max_length
        record.max_variables = stats.max_vars
        record.new_shapes = shapes.observe(st.gamma)
        record.verified = st.verified
        record.length = length_record(spec, counts[-1] if counts else 0, stats.count)
        counts.append(stats.count)
        if _monitor_applies(ts):
            record.monitor_alarms = monitor_alarms(st.gamma, m, flat_symbols)
            for alarm in record.monitor_alarms:
                log.warning(f"[synth] monitor: {alarm}")
        if config.apf_guard:
            verdict = apf_guard(st.gamma, [v.goal for v in cons.violations], ts.primed_heads)
            record.apf = str(verdict)
            record.apf_predicted = verdict.predicted
            if not verdict.in_fragment:
                return outcome(OutcomeKind.DIVERGED, n, invariant=inv, reason=f"left the array property fragment: {verdict.reason}")
        if config.fixpoint_check and entails(ts, inv.clauses, st.gamma, client):
            record.solver_queries = client.stats.queries - queries
            record.solver_seconds = client.stats.seconds - seconds
            return outcome(OutcomeKind.DIVERGED, n, invariant=inv, reason="no progress")
        record.solver_queries = client.stats.queries - queries
        record.solver_seconds = client.stats.seconds - seconds

        inv = inv.conjoin(st.gamma, f"gamma_{n}")
        pending = st.gamma
