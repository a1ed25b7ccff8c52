"""
smt_client.py

Ground satisfiability, entailment and equivalence over an external
SMT-LIB 2.6 solver (z3 by default) driven through a child process.

    client = SmtClient(SolverConfig(timeout_s=5))
    v = client.check_sat(GroundFormula(clauses))
    v.status            # Status.SAT / UNSAT / UNKNOWN / TIMEOUT / PROCESS_ERROR

Scripts are deterministic: the same formula always yields the same text.
Unknown and Timeout are verdicts, never exceptions; only a missing
executable raises SolverError.
"""

from __future__ import annotations

import re
import subprocess
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

from invsynth.config import QUOTIENT_PREFIX, SolverConfig
from invsynth.errors import SolverError
from invsynth.hierarchy import Level, Reduction, reduce_chain, unpurify_term
from invsynth.log import get_logger
from invsynth.logic_core import (
    PLUS,
    TIMES,
    App,
    BoolLit,
    Clause,
    ClauseSet,
    Cmp,
    Conj,
    DivLit,
    GroundFormula,
    Literal,
    Num,
    PredLit,
    Rel,
    Sort,
    Term,
    Var,
    clause_symbols,
    literal_symbols,
    make_clause,
)
from invsynth.transforms import skolemize_clause

log = get_logger(__name__)


class Status(str, Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"
    TIMEOUT = "timeout"
    PROCESS_ERROR = "process-error"


@dataclass
class SolverVerdict:
    status: Status
    model: Optional[dict[str, Fraction]] = None
    elapsed_s: float = 0.0
    query_bytes: int = 0
    detail: str = ""

    @property
    def is_sat(self) -> bool:
        return self.status is Status.SAT

    @property
    def is_unsat(self) -> bool:
        return self.status is Status.UNSAT

    @property
    def decided(self) -> bool:
        return self.status in (Status.SAT, Status.UNSAT)


class Equivalence(str, Enum):
    EQUIVALENT = "equivalent"
    INEQUIVALENT = "inequivalent"
    UNKNOWN = "unknown"


@dataclass
class EquivalenceResult:
    verdict: Equivalence
    witness: Optional[dict[str, Fraction]] = None
    direction: str = ""


@dataclass
class SolverStats:
    queries: int = 0
    sat: int = 0
    unsat: int = 0
    undecided: int = 0
    seconds: float = 0.0


# ---------------------------------------------
# SMT-LIB rendering
# ---------------------------------------------
_SIMPLE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_RESERVED = {
    "and", "or", "not", "true", "false", "ite", "let", "forall", "exists", "distinct",
    "div", "mod", "abs", "to_real", "to_int", "is_int", "assert", "par", "as", "_",
}


def smt_symbol(name: str) -> str:
    if _SIMPLE.match(name) and name not in _RESERVED:
        return name
    return "|" + name.replace("|", "") + "|"


def smt_sort(s: Sort) -> str:
    return "Int" if s.is_int else "Real"


def smt_num(value: Fraction, sort: Sort) -> str:
    mag = abs(value)
    if sort.is_int:
        body = str(mag.numerator)
    elif mag.denominator == 1:
        body = f"{mag.numerator}.0"
    else:
        body = f"(/ {mag.numerator}.0 {mag.denominator}.0)"
    return f"(- {body})" if value < 0 else body


class _Emitter:
    """Collects declarations while rendering one query."""

    def __init__(self, quantified: bool = False, taken: Iterable[str] = ()):
        self.constants: dict[str, Sort] = {}
        self.functions: dict[str, tuple[tuple[Sort, ...], Sort]] = {}
        self.predicates: dict[str, tuple[Sort, ...]] = {}
        self.quotients: list[str] = []
        self.taken = set(taken)
        self.quantified = quantified
        self.sorts: set[bool] = set()

    def term(self, t: Term) -> str:
        self.sorts.add(t.sort.is_int)
        if isinstance(t, Var):
            return smt_symbol(t.name)
        if isinstance(t, Num):
            return smt_num(t.value, t.sort)
        assert isinstance(t, App)
        if t.symbol == PLUS:
            return "(+ " + " ".join(self.term(a) for a in t.args) + ")"
        if t.symbol == TIMES:
            k, body = t.args
            return f"(* {smt_num(k.value, t.sort)} {self.term(body)})"  # type: ignore[attr-defined]
        if not t.args:
            self.constants[t.symbol] = t.sort
            return smt_symbol(t.symbol)
        self.functions[t.symbol] = (tuple(a.sort for a in t.args), t.sort)
        return f"({smt_symbol(t.symbol)} " + " ".join(self.term(a) for a in t.args) + ")"

    def _quotient(self) -> str:
        name = f"{QUOTIENT_PREFIX}_{len(self.quotients) + 1}"
        while name in self.taken:
            name += "_"
        self.taken.add(name)
        self.quotients.append(name)
        return name

    def literal(self, lit: Literal) -> str:
        if isinstance(lit, BoolLit):
            return "true" if lit.value else "false"
        if isinstance(lit, Cmp):
            op = {Rel.EQ: "=", Rel.LE: "<=", Rel.LT: "<"}[lit.rel]
            atom = f"({op} {self.term(lit.lhs)} {self.term(lit.rhs)})"
            return atom if lit.positive else f"(not {atom})"
        if isinstance(lit, PredLit):
            self.predicates[lit.name] = tuple(a.sort for a in lit.args)
            atom = f"({smt_symbol(lit.name)} " + " ".join(self.term(a) for a in lit.args) + ")"
            return atom if lit.positive else f"(not {atom})"
        assert isinstance(lit, DivLit)
        t = self.term(lit.term)
        k = lit.modulus
        if self.quantified:
            atom = f"(= (mod {t} {k}) 0)"
            return atom if lit.positive else f"(not {atom})"
        q = smt_symbol(self._quotient())
        if lit.positive:
            return f"(= {t} (* {k} {q}))"
        residues = " ".join(f"(= {t} (+ (* {k} {q}) {r}))" for r in range(1, k))
        return f"(or {residues})" if k > 2 else residues

    def clause(self, c: Clause) -> str:
        body = [self.literal(l) for l in c.literals]
        inner = "false" if not body else body[0] if len(body) == 1 else "(or " + " ".join(body) + ")"
        if not c.variables:
            return inner
        binders = " ".join(f"({smt_symbol(v.name)} {smt_sort(v.sort)})" for v in c.variables)
        return f"(forall ({binders}) {inner})"

    def conj(self, conj: Conj) -> str:
        parts = [self.literal(l) for l in conj]
        if not parts:
            return "true"
        return parts[0] if len(parts) == 1 else "(and " + " ".join(parts) + ")"

    def group(self, alts: Sequence[Conj]) -> str:
        parts = [self.conj(a) for a in alts]
        if not parts:
            return "false"
        return parts[0] if len(parts) == 1 else "(or " + " ".join(parts) + ")"

    def logic(self) -> str:
        has_int, has_real = True in self.sorts, False in self.sorts
        arith = "LIRA" if has_int and has_real else "LRA" if has_real else "LIA"
        uf = bool(self.functions or self.predicates)
        if arith == "LIRA":
            return "AUFLIRA" if self.quantified else "QF_AUFLIRA"
        if self.quantified:
            return "UF" + arith
        return ("QF_UF" if uf else "QF_") + arith

    def declarations(self) -> list[str]:
        out = [f"(declare-fun {smt_symbol(n)} () {smt_sort(s)})" for n, s in sorted(self.constants.items())]
        out += [f"(declare-fun {smt_symbol(q)} () Int)" for q in self.quotients]
        for n, (args, res) in sorted(self.functions.items()):
            out.append(f"(declare-fun {smt_symbol(n)} ({' '.join(smt_sort(a) for a in args)}) {smt_sort(res)})")
        for n, args in sorted(self.predicates.items()):
            out.append(f"(declare-fun {smt_symbol(n)} ({' '.join(smt_sort(a) for a in args)}) Bool)")
        return out


def render_script(
    formula: GroundFormula,
    produce_model: bool = False,
    quantified: bool = False,
    header: bool = True,
) -> str:
    taken = set().union(*(clause_symbols(c) for c in formula.clauses))
    taken.update(s for g in formula.groups for conj in g for lit in conj for s in literal_symbols(lit))
    em = _Emitter(quantified, taken)
    asserts = [f"(assert {em.clause(c)})" for c in formula.clauses]
    asserts += [f"(assert {em.group(g)})" for g in formula.groups]
    lines: list[str] = []
    if header:
        if produce_model:
            lines.append("(set-option :produce-models true)")
        lines.append(f"(set-logic {em.logic()})")
    lines += em.declarations()
    lines += asserts
    lines.append("(check-sat)")
    if produce_model:
        lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------
# Output parsing
# ---------------------------------------------
def _sexprs(text: str) -> list:
    tokens = re.findall(r"\(|\)|\|[^|]*\||\"[^\"]*\"|[^\s()]+", text)
    stack: list[list] = [[]]
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                continue
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    while len(stack) > 1:
        done = stack.pop()
        stack[-1].append(done)
    return stack[0]


def _value(expr) -> Optional[Fraction]:
    if isinstance(expr, str):
        try:
            return Fraction(expr)
        except ValueError:
            return None
    if not expr:
        return None
    head, *args = expr
    vals = [_value(a) for a in args]
    if any(v is None for v in vals):
        return None
    if head == "-" and len(vals) == 1:
        return -vals[0]
    if head == "-" and len(vals) == 2:
        return vals[0] - vals[1]
    if head == "/" and len(vals) == 2 and vals[1] != 0:
        return vals[0] / vals[1]
    if head == "+":
        return sum(vals, Fraction(0))
    if head == "to_real" and len(vals) == 1:
        return vals[0]
    return None


def parse_model(text: str) -> dict[str, Fraction]:
    """Values of 0-ary `define-fun`s in a get-model response."""
    model: dict[str, Fraction] = {}
    for form in _sexprs(text):
        items = form if isinstance(form, list) else []
        if items and items[0] == "model":
            items = items[1:]
        for entry in items:
            if not (isinstance(entry, list) and len(entry) == 5 and entry[0] == "define-fun"):
                continue
            _, name, params, _sort, body = entry
            if params:
                continue
            name = name.strip("|")
            if name.startswith(QUOTIENT_PREFIX):
                continue
            v = _value(body)
            if v is not None:
                model[name] = v
    return model


def parse_verdict(stdout: str, want_model: bool) -> tuple[Status, Optional[dict[str, Fraction]], str]:
    lines = [l.strip() for l in stdout.strip().splitlines() if l.strip()]
    if not lines:
        return Status.PROCESS_ERROR, None, "empty solver output"
    first = lines[0]
    if first.startswith("(error"):
        return Status.PROCESS_ERROR, None, stdout.strip()
    if first == "unsat":
        return Status.UNSAT, None, ""
    if first == "unknown":
        return Status.UNKNOWN, None, ""
    if first == "timeout":
        return Status.TIMEOUT, None, ""
    if first == "sat":
        model = parse_model("\n".join(lines[1:])) if want_model else None
        return Status.SAT, model, ""
    return Status.PROCESS_ERROR, None, stdout.strip()


# ---------------------------------------------
# Client
# ---------------------------------------------
def session_body(script: str) -> str:
    """A script without options and logic, fit to run after `(push 1)`."""
    kept = [l for l in script.splitlines() if not l.startswith(("(set-option", "(set-logic"))]
    return "\n".join(kept) + "\n"


def session_status(status: Status, elapsed_s: float, timeout_s: float) -> Status:
    """A session solver answers `unknown` when its timeout fires."""
    if status is Status.UNKNOWN and elapsed_s >= timeout_s:
        return Status.TIMEOUT
    return status


class _Session:
    """One long-lived solver process; each query runs between push and pop."""

    END = "invsynth-end"

    def __init__(self, argv: list[str]):
        try:
            self.proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True
            )
        except FileNotFoundError as e:
            raise SolverError(f"solver executable not found: {argv[0]}") from e
        assert self.proc.stdin is not None
        self.proc.stdin.write("(set-option :produce-models true)\n")

    def run(self, body: str, timeout_s: float) -> str:
        assert self.proc.stdin is not None and self.proc.stdout is not None
        ms = int(timeout_s * 1000)
        self.proc.stdin.write(f"(push 1)\n(set-option :timeout {ms})\n{body}(echo \"{self.END}\")\n(pop 1)\n")
        self.proc.stdin.flush()
        out: list[str] = []
        while True:
            line = self.proc.stdout.readline()
            if not line or line.strip().strip('"') == self.END:
                break
            out.append(line)
        return "".join(out)

    def close(self) -> None:
        if self.proc.poll() is None:
            try:
                self.proc.communicate("(exit)\n", timeout=2)
            except subprocess.TimeoutExpired:
                self.proc.kill()


class SmtClient:
    def __init__(self, config: Optional[SolverConfig] = None):
        self.config = config or SolverConfig()
        self.stats = SolverStats()
        self._session: Optional[_Session] = None
        self._emitted = 0
        if self.config.emit_dir is not None:
            Path(self.config.emit_dir).mkdir(parents=True, exist_ok=True)

    @property
    def argv(self) -> list[str]:
        return [self.config.executable, *self.config.extra_args]

    def close(self) -> None:
        if self._session is not None:
            self._session.close()
            self._session = None

    def __enter__(self) -> "SmtClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- raw execution -------------------------------------------------
    def run_script(self, script: str, want_model: bool = False, label: str = "query") -> SolverVerdict:
        start = time.perf_counter()
        if self.config.incremental:
            if self._session is None:
                self._session = _Session(self.argv)
            stdout = self._session.run(session_body(script), self.config.timeout_s)
            status, model, detail = parse_verdict(stdout, want_model)
            status = session_status(status, time.perf_counter() - start, self.config.timeout_s)
            if status is Status.TIMEOUT:
                detail = f"no answer within {self.config.timeout_s}s"
        else:
            try:
                proc = subprocess.run(
                    self.argv,
                    input=script,
                    capture_output=True,
                    text=True,
                    timeout=self.config.timeout_s,
                )
                status, model, detail = parse_verdict(proc.stdout, want_model)
                if status is Status.PROCESS_ERROR and proc.stderr:
                    detail = (detail + "\n" + proc.stderr).strip()
            except FileNotFoundError as e:
                raise SolverError(f"solver executable not found: {self.config.executable}") from e
            except subprocess.TimeoutExpired:
                status, model, detail = Status.TIMEOUT, None, f"no answer within {self.config.timeout_s}s"
        elapsed = time.perf_counter() - start
        verdict = SolverVerdict(status, model, elapsed, len(script.encode()), detail)
        self._record(verdict)
        self._emit(script, verdict, label)
        log.debug(f"[smt] {label}: {status.value} in {elapsed:.3f}s ({verdict.query_bytes} bytes)")
        if status is Status.PROCESS_ERROR:
            log.warning(f"[smt] {label}: solver error: {detail[:200]}")
        return verdict

    def _record(self, v: SolverVerdict) -> None:
        self.stats.queries += 1
        self.stats.seconds += v.elapsed_s
        if v.is_sat:
            self.stats.sat += 1
        elif v.is_unsat:
            self.stats.unsat += 1
        else:
            self.stats.undecided += 1

    def _emit(self, script: str, v: SolverVerdict, label: str) -> None:
        if self.config.emit_dir is None:
            return
        self._emitted += 1
        safe = re.sub(r"[^A-Za-z0-9_.-]+", "_", label)
        path = Path(self.config.emit_dir) / f"{self._emitted:04d}_{safe}.smt2"
        path.write_text(script + f"; verdict: {v.status.value}\n", encoding="utf-8")

    # -- queries -------------------------------------------------------
    def check_sat(self, formula: GroundFormula, label: str = "check-sat") -> SolverVerdict:
        want = self.config.produce_models
        return self.run_script(render_script(formula, produce_model=want), want, label)

    def check_sat_quantified(
        self, clauses: Sequence[Clause], groups: Sequence[tuple[Conj, ...]] = (), label: str = "quantified"
    ) -> SolverVerdict:
        formula = GroundFormula(tuple(clauses), tuple(groups))
        return self.run_script(render_script(formula, quantified=True), False, label)

    def check_reduced(self, red: Reduction, label: str = "reduced") -> SolverVerdict:
        """Solve a reduction and translate the model back through its definitions."""
        v = self.check_sat(red.formula(), label)
        if v.model:
            v.model = translate_model(v.model, red.defs)
        return v

    def check_entailment(
        self,
        levels: Sequence[Level],
        goal: ClauseSet,
        facts: Iterable[Clause] = (),
        label: str = "entailment",
    ) -> SolverVerdict:
        """levels + facts |= goal. Unsat means the entailment holds.

        Each goal clause is refuted separately through its Skolemized negation;
        the first Sat (with model) or undecided verdict is returned.
        """
        facts = list(facts)
        taken = _names(levels, goal, facts)
        worst = SolverVerdict(Status.UNSAT)
        for k, clause in enumerate(goal.clauses):
            g = skolemize_clause(clause, k, taken)
            goal_units = [make_clause([l]) for l in g.literals]
            red = reduce_chain(levels, facts + goal_units, taken=taken | {s.constant.symbol for s in g.skolems})
            v = self.check_reduced(red, f"{label}-{k}")
            if v.is_sat:
                return v
            if not v.decided:
                worst = v
        return worst

    def check_equivalence(
        self, phi: ClauseSet, psi: ClauseSet, levels: Sequence[Level] = (), label: str = "equivalence"
    ) -> EquivalenceResult:
        forward = self.check_entailment(list(levels) + [Level("lhs", phi)], psi, label=f"{label}-fwd")
        if forward.is_sat:
            return EquivalenceResult(Equivalence.INEQUIVALENT, forward.model, "lhs does not entail rhs")
        backward = self.check_entailment(list(levels) + [Level("rhs", psi)], phi, label=f"{label}-bwd")
        if backward.is_sat:
            return EquivalenceResult(Equivalence.INEQUIVALENT, backward.model, "rhs does not entail lhs")
        if forward.is_unsat and backward.is_unsat:
            return EquivalenceResult(Equivalence.EQUIVALENT)
        return EquivalenceResult(Equivalence.UNKNOWN)


def _names(levels: Sequence[Level], goal: ClauseSet, facts: Sequence[Clause]) -> frozenset[str]:
    names: set[str] = set(goal.symbols())
    for level in levels:
        names |= level.clauses.symbols()
        names |= level.heads()
    for c in facts:
        names |= clause_symbols(c)
    return frozenset(names)


def translate_model(model: dict[str, Fraction], defs: dict[App, App]) -> dict[str, Fraction]:
    """Rename definition constants to the extension terms they stand for."""
    by_name = {c.symbol: c for c in defs}
    out: dict[str, Fraction] = {}
    for name, value in model.items():
        c = by_name.get(name)
        out[unpurify_term(c, defs).text if c is not None else name] = value
    return dict(sorted(out.items()))
