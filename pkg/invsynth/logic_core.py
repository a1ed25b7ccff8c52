"""
logic_core.py

Many-sorted terms, literals and clauses.

Terms are hash-consed: building the same term twice returns the same object,
so equality is identity and hashing is O(1). Arithmetic is kept in a
canonical linear form at construction time (sums of coefficient * atom plus
a numeral), which makes syntactic comparison of instances meaningful.

All values are immutable.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Union

from invsynth.errors import SignatureError

PRIME = "'"
PLUS = "+"
TIMES = "*"
ARITH = frozenset({PLUS, TIMES})


# ---------------------------------------------
# Sorts and symbols
# ---------------------------------------------
class SortKind(str, Enum):
    INT = "int"
    REAL = "real"


@dataclass(frozen=True)
class Sort:
    name: str
    kind: SortKind

    @property
    def is_int(self) -> bool:
        return self.kind is SortKind.INT

    def __str__(self) -> str:
        return self.name


INT = Sort("int", SortKind.INT)
REAL = Sort("real", SortKind.REAL)


class Role(str, Enum):
    BASE = "base"
    PARAM = "param"
    EXT = "ext"
    PRIMED = "primed"


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    arg_sorts: tuple[Sort, ...]
    result: Sort
    role: Role

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)


@dataclass(frozen=True)
class PredicateSymbol:
    name: str
    arg_sorts: tuple[Sort, ...]


def primed(name: str) -> str:
    return name + PRIME


def unprimed(name: str) -> str:
    return name[:-1] if name.endswith(PRIME) else name


class Signature:
    """Sorts, function symbols (with roles) and predicates.

    Primed partners are created for every symbol in `updated` and carry the
    PRIMED role. `with_keep` reassigns the parameter/extension split.
    """

    def __init__(
        self,
        sorts: Mapping[str, Sort],
        functions: Mapping[str, FunctionSymbol],
        predicates: Mapping[str, PredicateSymbol] | None = None,
        updated: Iterable[str] = (),
    ):
        self.sorts = dict(sorts)
        self.predicates = dict(predicates or {})
        self.updated = frozenset(updated)
        funcs = {n: f for n, f in functions.items() if f.role is not Role.PRIMED}
        for name in sorted(self.updated):
            if name not in funcs:
                raise SignatureError(f"updated symbol '{name}' is not declared")
            f = funcs[name]
            funcs[primed(name)] = FunctionSymbol(primed(name), f.arg_sorts, f.result, Role.PRIMED)
        self.functions = funcs

    def function(self, name: str) -> FunctionSymbol:
        try:
            return self.functions[name]
        except KeyError:
            raise SignatureError(f"unknown function symbol '{name}'") from None

    def role(self, name: str) -> Role | None:
        f = self.functions.get(name)
        return f.role if f else None

    def symbols_with_role(self, role: Role) -> frozenset[str]:
        return frozenset(n for n, f in self.functions.items() if f.role is role)

    @property
    def parameters(self) -> frozenset[str]:
        return self.symbols_with_role(Role.PARAM)

    @property
    def base_constants(self) -> frozenset[str]:
        return self.symbols_with_role(Role.BASE)

    def prime_of(self, name: str) -> str:
        if name not in self.updated:
            raise SignatureError(f"symbol '{name}' has no primed partner")
        return primed(name)

    def with_keep(self, keep: Iterable[str]) -> "Signature":
        keep = frozenset(keep)
        for name in keep:
            role = self.role(name)
            if role is None:
                raise SignatureError(f"keep names unknown symbol '{name}'")
            if role is Role.PRIMED:
                raise SignatureError(f"keep names primed symbol '{name}'")
        funcs = {}
        for name, f in self.functions.items():
            if f.role in (Role.PARAM, Role.EXT):
                role = Role.PARAM if name in keep else Role.EXT
                f = FunctionSymbol(f.name, f.arg_sorts, f.result, role)
            funcs[name] = f
        return Signature(self.sorts, funcs, self.predicates, self.updated)

    def allowed_in_invariant(self) -> frozenset[str]:
        return self.parameters | self.base_constants

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Signature)
            and self.sorts == other.sorts
            and self.functions == other.functions
            and self.predicates == other.predicates
            and self.updated == other.updated
        )

    __hash__ = None  # type: ignore[assignment]


# ---------------------------------------------
# Hash-consed terms
# ---------------------------------------------
_TABLE: "weakref.WeakValueDictionary[tuple, Term]" = weakref.WeakValueDictionary()


class Term:
    __slots__ = ("sort", "_hash", "_text", "__weakref__")

    def __setattr__(self, name, value):
        raise AttributeError("terms are immutable")

    def __hash__(self) -> int:
        return self._hash

    def _init(self, key: tuple, sort: Sort) -> None:
        object.__setattr__(self, "sort", sort)
        object.__setattr__(self, "_hash", hash(key))
        object.__setattr__(self, "_text", None)
        _TABLE[key] = self

    @property
    def text(self) -> str:
        if self._text is None:
            object.__setattr__(self, "_text", render_term(self))
        return self._text

    def __repr__(self) -> str:
        return self.text

    def __lt__(self, other: "Term") -> bool:
        return self.text < other.text


class Var(Term):
    __slots__ = ("name",)

    def __new__(cls, name: str, sort: Sort):
        key = ("v", name, sort)
        found = _TABLE.get(key)
        if found is not None:
            return found
        self = object.__new__(cls)
        object.__setattr__(self, "name", name)
        self._init(key, sort)
        return self


class Num(Term):
    __slots__ = ("value",)

    def __new__(cls, value: Fraction | int, sort: Sort):
        value = Fraction(value)
        if sort.is_int and value.denominator != 1:
            raise ValueError(f"non-integral numeral {value} at sort {sort}")
        key = ("n", value, sort)
        found = _TABLE.get(key)
        if found is not None:
            return found
        self = object.__new__(cls)
        object.__setattr__(self, "value", value)
        self._init(key, sort)
        return self


class App(Term):
    __slots__ = ("symbol", "args")

    def __new__(cls, symbol: str, args: tuple[Term, ...], sort: Sort):
        args = tuple(args)
        key = ("a", symbol, args, sort)
        found = _TABLE.get(key)
        if found is not None:
            return found
        self = object.__new__(cls)
        object.__setattr__(self, "symbol", symbol)
        object.__setattr__(self, "args", args)
        self._init(key, sort)
        return self

    @property
    def is_constant(self) -> bool:
        return not self.args and self.symbol not in ARITH


def const(name: str, sort: Sort) -> App:
    return App(name, (), sort)


def num(value: Fraction | int, sort: Sort) -> Num:
    return Num(value, sort)


def is_arith(t: Term) -> bool:
    return isinstance(t, Num) or (isinstance(t, App) and t.symbol in ARITH)


# ---------------------------------------------
# Canonical linear arithmetic on terms
# ---------------------------------------------
def linear_parts(t: Term) -> tuple[dict[Term, Fraction], Fraction]:
    """Split a term into {atom: coefficient} and a numeral part."""
    if isinstance(t, Num):
        return {}, t.value
    if isinstance(t, App) and t.symbol == PLUS:
        coeffs: dict[Term, Fraction] = {}
        constant = Fraction(0)
        for arg in t.args:
            sub, c = linear_parts(arg)
            constant += c
            for atom, k in sub.items():
                coeffs[atom] = coeffs.get(atom, Fraction(0)) + k
        return {a: k for a, k in coeffs.items() if k != 0}, constant
    if isinstance(t, App) and t.symbol == TIMES:
        k, body = t.args
        sub, c = linear_parts(body)
        factor = k.value  # type: ignore[attr-defined]
        return {a: v * factor for a, v in sub.items() if v * factor != 0}, c * factor
    return {t: Fraction(1)}, Fraction(0)


def from_linear_parts(coeffs: Mapping[Term, Fraction], constant: Fraction, sort: Sort) -> Term:
    items = sorted(((a, k) for a, k in coeffs.items() if k != 0), key=lambda p: p[0].text)
    monomials: list[Term] = []
    for atom, k in items:
        monomials.append(atom if k == 1 else App(TIMES, (Num(k, sort), atom), sort))
    if not monomials:
        return Num(constant, sort)
    if constant != 0:
        monomials.append(Num(constant, sort))
    if len(monomials) == 1:
        return monomials[0]
    return App(PLUS, tuple(monomials), sort)


def plus(*terms: Term) -> Term:
    if not terms:
        raise ValueError("plus() needs at least one term")
    coeffs: dict[Term, Fraction] = {}
    constant = Fraction(0)
    for t in terms:
        sub, c = linear_parts(t)
        constant += c
        for atom, k in sub.items():
            coeffs[atom] = coeffs.get(atom, Fraction(0)) + k
    return from_linear_parts(coeffs, constant, terms[0].sort)


def scale(k: Fraction | int, t: Term) -> Term:
    k = Fraction(k)
    sub, c = linear_parts(t)
    return from_linear_parts({a: v * k for a, v in sub.items()}, c * k, t.sort)


def minus(a: Term, b: Term) -> Term:
    return plus(a, scale(-1, b))


# ---------------------------------------------
# Literals
# ---------------------------------------------
class Rel(str, Enum):
    EQ = "="
    LE = "<="
    LT = "<"


@dataclass(frozen=True, slots=True)
class Cmp:
    """lhs REL rhs; only equalities may be negative (disequalities)."""

    rel: Rel
    lhs: Term
    rhs: Term
    positive: bool = True

    def negate(self) -> "Cmp":
        if self.rel is Rel.EQ:
            return Cmp(Rel.EQ, self.lhs, self.rhs, not self.positive)
        if self.rel is Rel.LE:
            return Cmp(Rel.LT, self.rhs, self.lhs)
        return Cmp(Rel.LE, self.rhs, self.lhs)

    @property
    def terms(self) -> tuple[Term, ...]:
        return (self.lhs, self.rhs)

    def map(self, fn: Callable[[Term], Term]) -> "Cmp":
        return Cmp(self.rel, fn(self.lhs), fn(self.rhs), self.positive)


@dataclass(frozen=True, slots=True)
class PredLit:
    name: str
    args: tuple[Term, ...]
    positive: bool = True

    def negate(self) -> "PredLit":
        return PredLit(self.name, self.args, not self.positive)

    @property
    def terms(self) -> tuple[Term, ...]:
        return self.args

    def map(self, fn: Callable[[Term], Term]) -> "PredLit":
        return PredLit(self.name, tuple(fn(a) for a in self.args), self.positive)


@dataclass(frozen=True, slots=True)
class DivLit:
    """modulus | term, over the integers."""

    modulus: int
    term: Term
    positive: bool = True

    def negate(self) -> "DivLit":
        return DivLit(self.modulus, self.term, not self.positive)

    @property
    def terms(self) -> tuple[Term, ...]:
        return (self.term,)

    def map(self, fn: Callable[[Term], Term]) -> "DivLit":
        return DivLit(self.modulus, fn(self.term), self.positive)


@dataclass(frozen=True, slots=True)
class BoolLit:
    value: bool

    def negate(self) -> "BoolLit":
        return BoolLit(not self.value)

    @property
    def terms(self) -> tuple[Term, ...]:
        return ()

    def map(self, fn: Callable[[Term], Term]) -> "BoolLit":
        return self


Literal = Union[Cmp, PredLit, DivLit, BoolLit]
Conj = tuple[Literal, ...]
TRUE = BoolLit(True)
FALSE = BoolLit(False)


def le(a: Term, b: Term) -> Cmp:
    return Cmp(Rel.LE, a, b)


def lt(a: Term, b: Term) -> Cmp:
    return Cmp(Rel.LT, a, b)


def eq(a: Term, b: Term) -> Cmp:
    return Cmp(Rel.EQ, a, b)


def ne(a: Term, b: Term) -> Cmp:
    return Cmp(Rel.EQ, a, b, positive=False)


# ---------------------------------------------
# Clauses
# ---------------------------------------------
@dataclass(frozen=True)
class Clause:
    literals: tuple[Literal, ...]
    variables: tuple[Var, ...] = ()

    @property
    def is_ground(self) -> bool:
        return not self.variables

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.literals)

    def __len__(self) -> int:
        return len(self.literals)


def make_clause(literals: Iterable[Literal]) -> Clause:
    """Build a clause whose variable list is the sorted set of its free variables."""
    lits = tuple(dict.fromkeys(literals))
    found: dict[str, Var] = {}
    for lit in lits:
        for t in lit.terms:
            for v in free_vars(t):
                found[v.name] = v
    return Clause(lits, tuple(found[n] for n in sorted(found)))


@dataclass(frozen=True)
class ClauseSet:
    clauses: tuple[Clause, ...] = ()

    def __iter__(self) -> Iterator[Clause]:
        return iter(self.clauses)

    def __len__(self) -> int:
        return len(self.clauses)

    def __add__(self, other: "ClauseSet") -> "ClauseSet":
        return ClauseSet(tuple(dict.fromkeys(self.clauses + other.clauses)))

    @property
    def max_vars(self) -> int:
        return max((len(c.variables) for c in self.clauses), default=0)

    @property
    def ground(self) -> tuple[Clause, ...]:
        return tuple(c for c in self.clauses if c.is_ground)

    @property
    def quantified(self) -> tuple[Clause, ...]:
        return tuple(c for c in self.clauses if not c.is_ground)

    def symbols(self) -> frozenset[str]:
        return frozenset().union(*(clause_symbols(c) for c in self.clauses))


@dataclass(frozen=True)
class SkolemConst:
    constant: App
    clause_index: int
    variable: Var


@dataclass(frozen=True)
class GroundConj:
    literals: tuple[Literal, ...]
    skolems: tuple[SkolemConst, ...] = ()
    clause_index: int = 0

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.literals)


@dataclass(frozen=True)
class GroundFormula:
    """Ground CNF clauses plus guarded groups (each a disjunction of conjunctions)."""

    clauses: tuple[Clause, ...] = ()
    groups: tuple[tuple[Conj, ...], ...] = field(default_factory=tuple)

    def literals(self) -> Iterator[Literal]:
        for c in self.clauses:
            yield from c.literals
        for group in self.groups:
            for conj in group:
                yield from conj


@dataclass(frozen=True)
class GuardedCase:
    """One case of an update: guard -> effect, both conjunctions."""

    guard: Conj
    effect: Conj


# ---------------------------------------------
# Traversal
# ---------------------------------------------
def subterms(t: Term) -> Iterator[Term]:
    """Post-order traversal, shared subterms visited once."""
    seen: set[Term] = set()
    stack: list[tuple[Term, bool]] = [(t, False)]
    while stack:
        node, expanded = stack.pop()
        if node in seen:
            continue
        if expanded or not isinstance(node, App) or not node.args:
            seen.add(node)
            yield node
            continue
        stack.append((node, True))
        for arg in reversed(node.args):
            if arg not in seen:
                stack.append((arg, False))


def literal_subterms(lit: Literal) -> Iterator[Term]:
    for t in lit.terms:
        yield from subterms(t)


def free_vars(t: Term) -> frozenset[Var]:
    return frozenset(s for s in subterms(t) if isinstance(s, Var))


def literal_vars(lit: Literal) -> frozenset[Var]:
    return frozenset().union(*(free_vars(t) for t in lit.terms))


def is_ground_term(t: Term) -> bool:
    return not free_vars(t)


def term_symbols(t: Term) -> frozenset[str]:
    return frozenset(s.symbol for s in subterms(t) if isinstance(s, App) and s.symbol not in ARITH)


def literal_symbols(lit: Literal) -> frozenset[str]:
    return frozenset().union(*(term_symbols(t) for t in lit.terms))


def clause_symbols(c: Clause) -> frozenset[str]:
    return frozenset().union(*(literal_symbols(lit) for lit in c.literals))


def constants_of(lits: Iterable[Literal]) -> frozenset[App]:
    out: set[App] = set()
    for lit in lits:
        for s in literal_subterms(lit):
            if isinstance(s, App) and s.is_constant:
                out.add(s)
    return frozenset(out)


def applications(lits: Iterable[Literal], heads: frozenset[str] | None = None) -> list[App]:
    """Non-constant applications of non-arithmetic symbols, in first-seen order."""
    out: dict[App, None] = {}
    for lit in lits:
        for s in literal_subterms(lit):
            if isinstance(s, App) and s.args and s.symbol not in ARITH:
                if heads is None or s.symbol in heads:
                    out[s] = None
    return list(out)


def substitute(t: Term, mapping: Mapping[Term, Term], _memo: dict | None = None) -> Term:
    """Replace subterms by mapping (outermost match wins) and renormalize arithmetic."""
    memo = {} if _memo is None else _memo
    if t in mapping:
        return mapping[t]
    if t in memo:
        return memo[t]
    if not isinstance(t, App) or not t.args:
        return t
    args = tuple(substitute(a, mapping, memo) for a in t.args)
    if t.symbol == PLUS:
        out = plus(*args)
    elif t.symbol == TIMES:
        out = scale(args[0].value, args[1])  # type: ignore[attr-defined]
    elif args == t.args:
        out = t
    else:
        out = App(t.symbol, args, t.sort)
    memo[t] = out
    return out


def rename_symbols(t: Term, names: Mapping[str, str]) -> Term:
    if not isinstance(t, App):
        return t
    args = tuple(rename_symbols(a, names) for a in t.args)
    return App(names.get(t.symbol, t.symbol), args, t.sort)


def substitute_literal(lit: Literal, mapping: Mapping[Term, Term]) -> Literal:
    memo: dict = {}
    return lit.map(lambda t: substitute(t, mapping, memo))


def substitute_clause(c: Clause, mapping: Mapping[Term, Term]) -> Clause:
    memo: dict = {}
    return make_clause(lit.map(lambda t: substitute(t, mapping, memo)) for lit in c.literals)


# ---------------------------------------------
# Flatness and linearity
# ---------------------------------------------
def is_flat(c: Clause, symbols: frozenset[str]) -> bool:
    """Symbols in `symbols` are applied only to variables, constants or numerals."""
    for lit in c.literals:
        for s in literal_subterms(lit):
            if isinstance(s, App) and s.symbol in symbols and s.args:
                for a in s.args:
                    if not (isinstance(a, (Var, Num)) or (isinstance(a, App) and a.is_constant)):
                        return False
    return True


def is_linear(c: Clause, symbols: frozenset[str]) -> bool:
    occurrences: dict[Var, set[App]] = {}
    for lit in c.literals:
        for s in literal_subterms(lit):
            if isinstance(s, App) and s.symbol in symbols and s.args:
                vs = [a for a in s.args if isinstance(a, Var)]
                if len(vs) != len(set(vs)):
                    return False
                for v in vs:
                    occurrences.setdefault(v, set()).add(s)
    return all(len(apps) <= 1 for apps in occurrences.values())


# ---------------------------------------------
# Rendering (re-parseable .tcs syntax)
# ---------------------------------------------
def render_num(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _render_monomial(t: Term) -> tuple[Fraction, str]:
    if isinstance(t, App) and t.symbol == TIMES:
        k = t.args[0].value  # type: ignore[attr-defined]
        return k, t.args[1].text
    return Fraction(1), t.text


def render_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Num):
        return render_num(t.value)
    assert isinstance(t, App)
    if t.symbol == PLUS:
        parts: list[str] = []
        for i, arg in enumerate(t.args):
            if isinstance(arg, Num):
                k, body = arg.value, ""
            else:
                k, body = _render_monomial(arg)
            mag = abs(k)
            if body:
                piece = body if mag == 1 else f"{render_num(mag)}*{body}"
            else:
                piece = render_num(mag)
            if i == 0:
                parts.append(piece if k >= 0 else f"-{piece}")
            else:
                parts.append(f"+ {piece}" if k >= 0 else f"- {piece}")
        return " ".join(parts)
    if t.symbol == TIMES:
        k, body = _render_monomial(t)
        if k == -1:
            return f"-{body}"
        return f"{render_num(k)}*{body}"
    if not t.args:
        return t.symbol
    return f"{t.symbol}({', '.join(a.text for a in t.args)})"


def render_literal(lit: Literal) -> str:
    if isinstance(lit, BoolLit):
        return "true" if lit.value else "false"
    if isinstance(lit, Cmp):
        op = lit.rel.value if lit.positive else "!="
        return f"{lit.lhs.text} {op} {lit.rhs.text}"
    if isinstance(lit, PredLit):
        body = f"{lit.name}({', '.join(a.text for a in lit.args)})"
        return body if lit.positive else f"!{body}"
    body = f"divides({lit.modulus}, {lit.term.text})"
    return body if lit.positive else f"!{body}"


def render_clause(c: Clause) -> str:
    body = " | ".join(render_literal(lit) for lit in c.literals) if c.literals else "false"
    if not c.variables:
        return body
    binders = ", ".join(f"{v.name}:{v.sort.name}" for v in c.variables)
    return f"forall {binders} . {body}"


def render_conj(conj: Iterable[Literal]) -> str:
    parts = [render_literal(lit) for lit in conj]
    return " & ".join(parts) if parts else "true"
