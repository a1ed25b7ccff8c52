"""
specfile.py

Reader and pretty-printer for `.tcs` transition-system files (grammar in
docs/grammar.md).

    spec = load("corpus/parity_steps.tcs")
    text = render(spec)          # parse(render(spec)) == spec

Parsing is two-staged per statement: a small term AST is built first, then
elaborated against the signature so that numerals pick up the sort of the
expression they sit in.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Optional

from invsynth.config import QUOTIENT_PREFIX
from invsynth.errors import (
    LexError,
    ParseError,
    RoleConflictError,
    SortError,
    SpecError,
    UndeclaredSymbolError,
)
from invsynth.hierarchy import Closure
from invsynth.logic_core import (
    FALSE,
    INT,
    REAL,
    TRUE,
    App,
    Clause,
    ClauseSet,
    Cmp,
    Conj,
    DivLit,
    FunctionSymbol,
    GuardedCase,
    Literal,
    PredicateSymbol,
    PredLit,
    Rel,
    Role,
    Signature,
    Sort,
    SortKind,
    Term,
    Var,
    literal_subterms,
    make_clause,
    minus,
    num,
    plus,
    primed,
    render_clause,
    render_conj,
    render_literal,
    scale,
)

SUPPORTED_VERSIONS = {1}


class BaseTheory(str, Enum):
    LIA = "LIA"
    LRA = "LRA"
    LIRA = "LIA+LRA"


# ---------------------------------------------
# Spec data
# ---------------------------------------------
@dataclass(frozen=True)
class TheoryLevel:
    name: str
    clauses: ClauseSet
    closure: Closure = Closure.IDENTITY


@dataclass(frozen=True)
class UpdateSpec:
    function: str
    params: tuple[Var, ...]
    cases: tuple[GuardedCase, ...]

    @property
    def n_cases(self) -> int:
        return len(self.cases)


@dataclass(frozen=True)
class SpecOptions:
    keep: Optional[frozenset[str]] = None
    eliminate_constants: frozenset[str] = frozenset()
    max_iterations: Optional[int] = None
    mode: Optional[str] = None
    constant_policy: Optional[str] = None
    semantics: Optional[str] = None
    apf_guard: Optional[bool] = None
    congruence: Optional[str] = None


@dataclass(frozen=True)
class ProblemSpec:
    version: int
    base: BaseTheory
    signature: Signature
    levels: tuple[TheoryLevel, ...]
    init: ClauseSet
    guard: tuple[Literal, ...]
    updates: tuple[UpdateSpec, ...]
    property: ClauseSet
    options: SpecOptions
    elim_goal: Optional[ClauseSet] = None
    source: Optional[str] = field(default=None, compare=False)

    @property
    def updated(self) -> frozenset[str]:
        return frozenset(u.function for u in self.updates)

    def update_for(self, name: str) -> UpdateSpec:
        for u in self.updates:
            if u.function == name:
                return u
        raise KeyError(name)

    def resolved_signature(self, keep: Optional[frozenset[str]] = None) -> Signature:
        keep = keep if keep is not None else self.options.keep
        if keep is None:
            return self.signature
        return self.signature.with_keep(keep)


# ---------------------------------------------
# Lexer
# ---------------------------------------------
@dataclass(frozen=True)
class Token:
    kind: str  # ident | num | punct | eof
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>#[^\n]*)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*'?)"
    r"|(?P<num>\d+(?:\.\d+)?)"
    r"|(?P<punct>->|<=|>=|!=|[;,:.()\[\]<>=&|!+\-*/])"
)


def tokenize(text: str, source: Optional[str] = None) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise LexError(f"unexpected character {text[pos]!r}", line, col, source)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("ident", "num", "punct"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------
# Term AST
# ---------------------------------------------
@dataclass(frozen=True)
class _Num:
    value: Fraction
    tok: Token


@dataclass(frozen=True)
class _Id:
    name: str
    args: Optional[tuple]
    tok: Token


@dataclass(frozen=True)
class _Bin:
    op: str
    left: object
    right: object
    tok: Token


@dataclass(frozen=True)
class _Neg:
    arg: object
    tok: Token


_CMP_OPS = {"=", "!=", "<", "<=", ">", ">="}
_TERM_FOLLOW = _CMP_OPS | {"+", "-", "*", "/"}


class _Parser:
    def __init__(self, text: str, source: Optional[str]):
        self.source = source
        self.tokens = tokenize(text, source)
        self.pos = 0
        self.sorts: dict[str, Sort] = {"int": INT, "real": REAL}
        self.functions: dict[str, FunctionSymbol] = {}
        self.predicates: dict[str, PredicateSymbol] = {}
        self.updated = self._prescan_updates()
        self.sig: Optional[Signature] = None
        self.default_sort = INT

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def _error(self, cls, message: str, tok: Optional[Token] = None) -> SpecError:
        tok = tok or self.tok
        return cls(message, tok.line, tok.col, self.source)

    def next(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind in ("ident", "punct") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            shown = self.tok.text or "end of file"
            raise self._error(ParseError, f"expected '{text}', found '{shown}'")
        return self.next()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident":
            shown = self.tok.text or "end of file"
            raise self._error(ParseError, f"expected {what}, found '{shown}'")
        return self.next()

    def _prescan_updates(self) -> set[str]:
        out = set()
        for i, t in enumerate(self.tokens[:-1]):
            if t.kind == "ident" and t.text == "update" and self.tokens[i + 1].kind == "ident":
                out.add(self.tokens[i + 1].text)
        return out

    # -- top level -----------------------------------------------------
    def parse(self) -> ProblemSpec:
        self.expect("version")
        vtok = self.tok
        if vtok.kind != "num" or vtok.text not in {str(v) for v in SUPPORTED_VERSIONS}:
            raise self._error(ParseError, f"unsupported version '{vtok.text}'")
        version = int(self.next().text)
        self.expect(";")
        base = self._base()
        while self.at("sort"):
            self._sort_decl()

        levels: list[TheoryLevel] = []
        init = ClauseSet()
        guard: tuple[Literal, ...] = ()
        updates: list[UpdateSpec] = []
        prop = ClauseSet()
        options = SpecOptions()
        elim_goal = None
        seen: set[str] = set()

        if self.at("signature"):
            self._signature()
        self._finish_signature()

        while self.tok.kind != "eof":
            head = self.ident("block keyword")
            key = head.text
            if key in ("init", "guard", "property", "options", "elim"):
                if key in seen:
                    raise self._error(ParseError, f"duplicate '{key}' block", head)
                seen.add(key)
            if key == "theory":
                levels.append(self._level())
            elif key == "init":
                init = self._clause_block(allow_primes=False)
            elif key == "guard":
                guard = self._guard_block()
            elif key == "update":
                updates.append(self._update(head))
            elif key == "property":
                prop = self._clause_block(allow_primes=False)
            elif key == "options":
                options = self._options()
            elif key == "elim":
                elim_goal = self._elim_block()
            else:
                raise self._error(ParseError, f"unknown block '{key}'", head)

        missing = self.updated - {u.function for u in updates}
        if missing:
            raise self._error(ParseError, f"incomplete update block for {sorted(missing)}")
        return ProblemSpec(
            version=version,
            base=base,
            signature=self.sig,  # type: ignore[arg-type]
            levels=tuple(levels),
            init=init,
            guard=guard,
            updates=tuple(updates),
            property=prop,
            options=options,
            elim_goal=elim_goal,
            source=self.source,
        )

    def _base(self) -> BaseTheory:
        self.expect("base")
        first = self.ident("base theory").text
        name = first
        if self.accept("+"):
            name = f"{first}+{self.ident('base theory').text}"
        self.expect(";")
        try:
            base = BaseTheory(name)
        except ValueError:
            raise self._error(ParseError, f"unknown base theory '{name}'") from None
        self.default_sort = REAL if base is BaseTheory.LRA else INT
        return base

    def _sort_decl(self) -> None:
        self.expect("sort")
        name = self.ident("sort name")
        self.expect("=")
        kind = self.ident("int or real")
        if kind.text not in ("int", "real"):
            raise self._error(SortError, f"sort kind must be int or real, not '{kind.text}'", kind)
        if name.text in self.sorts:
            raise self._error(RoleConflictError, f"sort '{name.text}' declared twice", name)
        self.sorts[name.text] = Sort(name.text, SortKind(kind.text))
        self.expect(";")

    def _sort(self) -> Sort:
        t = self.ident("sort")
        if t.text not in self.sorts:
            raise self._error(UndeclaredSymbolError, f"unknown sort '{t.text}'", t)
        return self.sorts[t.text]

    def _signature(self) -> None:
        self.expect("signature")
        roles = {"const": Role.BASE, "param": Role.PARAM, "ext": Role.EXT}
        while not self.accept("end"):
            kw = self.ident("const, param, ext or pred")
            names = [self.ident("symbol name")]
            while self.accept(","):
                names.append(self.ident("symbol name"))
            self.expect(":")
            sorts = [self._sort()]
            while self.accept(","):
                sorts.append(self._sort())
            result = None
            if self.accept("->"):
                result = self._sort()
            self.expect(";")
            for n in names:
                if n.text.endswith("'"):
                    raise self._error(RoleConflictError, "primed symbols are implicit", n)
                if n.text in self.functions or n.text in self.predicates:
                    raise self._error(RoleConflictError, f"symbol '{n.text}' declared twice", n)
                if n.text.startswith(QUOTIENT_PREFIX):
                    raise self._error(RoleConflictError, f"prefix '{QUOTIENT_PREFIX}' is reserved", n)
                if kw.text == "pred":
                    if result is not None:
                        raise self._error(ParseError, "predicates have no result sort", n)
                    self.predicates[n.text] = PredicateSymbol(n.text, tuple(sorts))
                    continue
                if kw.text not in roles:
                    raise self._error(ParseError, f"unknown declaration '{kw.text}'", kw)
                if result is None:
                    if len(sorts) != 1:
                        raise self._error(ParseError, "constant declared with several sorts", n)
                    args, res = (), sorts[0]
                else:
                    args, res = tuple(sorts), result
                self.functions[n.text] = FunctionSymbol(n.text, args, res, roles[kw.text])

    def _finish_signature(self) -> None:
        for name in self.updated:
            f = self.functions.get(name)
            if f is None:
                tok = next(t for t in self.tokens if t.text == name)
                raise self._error(UndeclaredSymbolError, f"update of undeclared symbol '{name}'", tok)
            if f.role is not Role.EXT:
                tok = next(t for t in self.tokens if t.text == name)
                raise self._error(RoleConflictError, f"updated symbol '{name}' must be declared ext", tok)
        self.sig = Signature(self.sorts, self.functions, self.predicates, self.updated)

    # -- blocks --------------------------------------------------------
    def _level(self) -> TheoryLevel:
        self.expect("level")
        name = self.ident("level name").text
        self.expect("closure")
        kind = self.ident("identity or apf")
        try:
            closure = Closure(kind.text)
        except ValueError:
            raise self._error(ParseError, f"unknown closure '{kind.text}'", kind) from None
        return TheoryLevel(name, self._clause_block(allow_primes=False), closure)

    def _clause_block(self, allow_primes: bool) -> ClauseSet:
        clauses: list[Clause] = []
        while not self.accept("end"):
            clauses.extend(self._clause(allow_primes))
            self.expect(";")
        return ClauseSet(tuple(dict.fromkeys(clauses)))

    def _guard_block(self) -> tuple[Literal, ...]:
        lits: list[Literal] = []
        while not self.accept("end"):
            start = self.tok
            dnf = self._formula({}, allow_primes=False, guard=True)
            if len(dnf) != 1:
                raise self._error(ParseError, "guard must be a conjunction", start)
            lits.extend(l for l in dnf[0] if l != TRUE)
            self.expect(";")
        return tuple(dict.fromkeys(lits))

    def _elim_block(self) -> ClauseSet:
        clauses: list[Clause] = []
        while not self.accept("end"):
            self.expect("goal")
            clauses.extend(self._clause(allow_primes=True))
            self.expect(";")
        return ClauseSet(tuple(clauses))

    def _update(self, head: Token) -> UpdateSpec:
        name_tok = self.ident("updated symbol")
        f = self.sig.function(name_tok.text)  # type: ignore[union-attr]
        params: list[Var] = []
        if self.accept("("):
            while True:
                vtok = self.ident("variable")
                self.expect(":")
                params.append(Var(vtok.text, self._sort()))
                if not self.accept(","):
                    break
            self.expect(")")
        if tuple(p.sort for p in params) != f.arg_sorts:
            raise self._error(SortError, f"update header of '{f.name}' does not match its declaration", name_tok)
        scope = {p.name: p for p in params}
        target = App(primed(f.name), tuple(params), f.result)
        cases: list[GuardedCase] = []
        while not self.accept("end"):
            self.expect("case")
            gtok = self.tok
            gdnf = self._formula(scope, allow_primes=False, guard=True)
            if len(gdnf) != 1:
                raise self._error(ParseError, "case guard must be a conjunction", gtok)
            self.expect("->")
            etok = self.tok
            ednf = self._formula(scope, allow_primes=True)
            if len(ednf) != 1:
                raise self._error(ParseError, "case effect must be a conjunction", etok)
            self.expect(";")
            effect = tuple(l for l in ednf[0] if l != TRUE)
            self._check_effect(f, target, effect, etok)
            cases.append(GuardedCase(tuple(l for l in gdnf[0] if l != TRUE), effect))
        if not cases:
            raise self._error(ParseError, f"update of '{f.name}' has no cases", head)
        return UpdateSpec(f.name, tuple(params), tuple(cases))

    def _check_effect(self, f: FunctionSymbol, target: App, effect: Conj, tok: Token) -> None:
        mentions = False
        for lit in effect:
            for s in literal_subterms(lit):
                if isinstance(s, App) and s.symbol == primed(f.name):
                    if s is not target:
                        raise self._error(
                            ParseError, f"effect must apply {f.name}' to the update variables", tok
                        )
                    mentions = True
        if not mentions:
            raise self._error(ParseError, f"effect does not mention {target.text}", tok)

    def _options(self) -> SpecOptions:
        values: dict = {}
        while not self.accept("end"):
            key_tok = self.ident("option name")
            key = key_tok.text
            while self.accept("-"):
                key += "-" + self.ident("option name").text
            if key in ("keep", "eliminate-const"):
                names = [self.ident("symbol name")]
                while self.accept(","):
                    names.append(self.ident("symbol name"))
                for n in names:
                    if n.text not in self.functions:
                        raise self._error(UndeclaredSymbolError, f"unknown symbol '{n.text}'", n)
                field_name = "keep" if key == "keep" else "eliminate_constants"
                values[field_name] = frozenset(n.text for n in names)
            elif key == "max-iterations":
                t = self.next()
                if t.kind != "num" or "." in t.text or int(t.text) < 1:
                    raise self._error(ParseError, "max-iterations needs a positive integer", t)
                values["max_iterations"] = int(t.text)
            else:
                choices = {
                    "mode": ("mode", ("naive", "refined")),
                    "constant-policy": ("constant_policy", ("none", "unguarded")),
                    "semantics": ("semantics", ("simultaneous", "interleaved")),
                    "apf-guard": ("apf_guard", ("on", "off")),
                    "congruence": ("congruence", ("implied", "split")),
                }
                if key not in choices:
                    raise self._error(ParseError, f"unknown option '{key}'", key_tok)
                field_name, allowed = choices[key]
                v = self.ident(" or ".join(allowed))
                if v.text not in allowed:
                    raise self._error(ParseError, f"option {key} expects one of {', '.join(allowed)}", v)
                values[field_name] = (v.text == "on") if field_name == "apf_guard" else v.text
            self.expect(";")
        return SpecOptions(**values)

    # -- clauses and formulas -------------------------------------------
    def _clause(self, allow_primes: bool) -> list[Clause]:
        scope: dict[str, Var] = {}
        if self.accept("forall"):
            while True:
                vtok = self.ident("variable")
                self.expect(":")
                if vtok.text in self.functions:
                    raise self._error(RoleConflictError, f"variable '{vtok.text}' shadows a symbol", vtok)
                scope[vtok.text] = Var(vtok.text, self._sort())
                if not self.accept(","):
                    break
            self.expect(".")
        body = self._formula(scope, allow_primes)
        if self.accept("->"):
            conclusion = self._formula(scope, allow_primes)
            premise_cnf = [[l.negate() for l in conj] for conj in body]
            return _clauses_of(premise_cnf, _cnf_of_dnf(conclusion))
        return _clauses_of([], _cnf_of_dnf(body))

    def _formula(self, scope, allow_primes: bool, guard: bool = False) -> list[list[Literal]]:
        dnf = self._conj(scope, allow_primes, guard)
        while self.accept("|"):
            dnf.extend(self._conj(scope, allow_primes, guard))
        return dnf

    def _conj(self, scope, allow_primes: bool, guard: bool) -> list[list[Literal]]:
        dnf = self._factor(scope, allow_primes, guard)
        while self.accept("&"):
            right = self._factor(scope, allow_primes, guard)
            dnf = [left + more for left in dnf for more in right]
        return dnf

    def _factor(self, scope, allow_primes: bool, guard: bool) -> list[list[Literal]]:
        """A literal chain, or a parenthesized formula, possibly negated."""
        if self.at("!") and self.tokens[self.pos + 1].text == "(":
            mark = self.pos
            self.next()
            inner = self._group(scope, allow_primes, guard)
            if inner is not None:
                return _negate_dnf(inner)
            self.pos = mark
        inner = self._group(scope, allow_primes, guard)
        if inner is not None:
            return inner
        return [self._literal(scope, allow_primes, guard)]

    def _group(self, scope, allow_primes: bool, guard: bool) -> Optional[list[list[Literal]]]:
        """`( formula )` unless the parenthesis opens a term; the position is restored then."""
        if not self.at("("):
            return None
        mark = self.pos
        self.next()
        try:
            inner = self._formula(scope, allow_primes, guard)
            self.expect(")")
        except ParseError:
            self.pos = mark
            return None
        if self.tok.kind == "punct" and self.tok.text in _TERM_FOLLOW:
            self.pos = mark
            return None
        return inner

    def _literal(self, scope, allow_primes: bool, guard: bool) -> list[Literal]:
        start = self.tok
        if self.accept("!"):
            inner = self._literal(scope, allow_primes, guard)
            if len(inner) != 1:
                raise self._error(ParseError, "'!' applies to a single atom", start)
            return [inner[0].negate()]
        if self.accept("true"):
            return [TRUE]
        if self.accept("false"):
            return [FALSE]
        if self.accept("divides"):
            self.expect("(")
            k = self.next()
            if k.kind != "num" or "." in k.text or int(k.text) < 1:
                raise self._error(ParseError, "divides needs a positive integer modulus", k)
            self.expect(",")
            ast = self._term()
            self.expect(")")
            t = self._elab(ast, scope, INT, allow_primes, guard)
            if not t.sort.is_int:
                raise self._error(SortError, "divides needs an integer term", start)
            return [DivLit(int(k.text), t)]
        if self.tok.kind == "ident" and self.tok.text in self.predicates:
            ptok = self.next()
            p = self.predicates[ptok.text]
            self.expect("(")
            asts = [self._term()]
            while self.accept(","):
                asts.append(self._term())
            self.expect(")")
            if len(asts) != len(p.arg_sorts):
                raise self._error(SortError, f"predicate '{p.name}' expects {len(p.arg_sorts)} arguments", ptok)
            args = tuple(self._elab(a, scope, s, allow_primes, guard) for a, s in zip(asts, p.arg_sorts))
            return [PredLit(p.name, args)]

        terms = [self._term()]
        ops: list[Token] = []
        while self.tok.kind == "punct" and self.tok.text in _CMP_OPS:
            ops.append(self.next())
            terms.append(self._term())
        if not ops:
            raise self._error(ParseError, "expected a comparison", start)
        sort = None
        for ast in terms:
            sort = sort or self._infer(ast, scope)
        sort = sort or self.default_sort
        elab = [self._elab(a, scope, sort, allow_primes, guard) for a in terms]
        out: list[Literal] = []
        for op, lhs, rhs in zip(ops, elab, elab[1:]):
            out.append(_comparison(op.text, lhs, rhs))
        return out

    # -- terms ---------------------------------------------------------
    def _term(self):
        left = self._product()
        while self.tok.kind == "punct" and self.tok.text in ("+", "-"):
            op = self.next()
            left = _Bin(op.text, left, self._product(), op)
        return left

    def _product(self):
        left = self._unary()
        while self.tok.kind == "punct" and self.tok.text in ("*", "/"):
            op = self.next()
            left = _Bin(op.text, left, self._unary(), op)
        return left

    def _unary(self):
        if self.at("-"):
            tok = self.next()
            return _Neg(self._unary(), tok)
        return self._primary()

    def _primary(self):
        t = self.tok
        if t.kind == "num":
            self.next()
            return _Num(Fraction(t.text), t)
        if self.accept("("):
            inner = self._term()
            self.expect(")")
            return inner
        if t.kind == "ident":
            self.next()
            if self.accept("("):
                args = [self._term()]
                while self.accept(","):
                    args.append(self._term())
                self.expect(")")
                return _Id(t.text, tuple(args), t)
            if self.accept("["):
                idx = self._term()
                self.expect("]")
                return _Id(t.text, (idx,), t)
            return _Id(t.text, None, t)
        shown = t.text or "end of file"
        raise self._error(ParseError, f"expected a term, found '{shown}'")

    def _const_value(self, ast) -> Optional[Fraction]:
        if isinstance(ast, _Num):
            return ast.value
        if isinstance(ast, _Neg):
            v = self._const_value(ast.arg)
            return None if v is None else -v
        if isinstance(ast, _Bin):
            a, b = self._const_value(ast.left), self._const_value(ast.right)
            if a is None or b is None:
                return None
            if ast.op == "+":
                return a + b
            if ast.op == "-":
                return a - b
            if ast.op == "*":
                return a * b
            if b == 0:
                raise self._error(ParseError, "division by zero", ast.tok)
            return a / b
        return None

    def _infer(self, ast, scope) -> Optional[Sort]:
        if isinstance(ast, _Num):
            return None
        if isinstance(ast, _Neg):
            return self._infer(ast.arg, scope)
        if isinstance(ast, _Bin):
            return self._infer(ast.left, scope) or self._infer(ast.right, scope)
        name = ast.name
        if name in scope and ast.args is None:
            return scope[name].sort
        f = self.sig.functions.get(name)  # type: ignore[union-attr]
        return f.result if f else None

    def _elab(self, ast, scope, sort: Sort, allow_primes: bool, guard: bool) -> Term:
        if isinstance(ast, _Num):
            if sort.is_int and ast.value.denominator != 1:
                raise self._error(SortError, f"non-integral numeral at sort {sort}", ast.tok)
            return num(ast.value, sort)
        if isinstance(ast, _Neg):
            return scale(-1, self._elab(ast.arg, scope, sort, allow_primes, guard))
        if isinstance(ast, _Bin):
            if ast.op in ("+", "-"):
                left = self._elab(ast.left, scope, sort, allow_primes, guard)
                right = self._elab(ast.right, scope, sort, allow_primes, guard)
                return plus(left, right) if ast.op == "+" else minus(left, right)
            if ast.op == "*":
                k = self._const_value(ast.left)
                other = ast.right
                if k is None:
                    k, other = self._const_value(ast.right), ast.left
                if k is None:
                    raise self._error(ParseError, "nonlinear term", ast.tok)
                if sort.is_int and k.denominator != 1:
                    raise self._error(SortError, "non-integral coefficient at integer sort", ast.tok)
                return scale(k, self._elab(other, scope, sort, allow_primes, guard))
            k = self._const_value(ast.right)
            if k is None:
                raise self._error(ParseError, "division is only allowed by a numeral", ast.tok)
            if k == 0:
                raise self._error(ParseError, "division by zero", ast.tok)
            if sort.is_int:
                raise self._error(SortError, "division at integer sort", ast.tok)
            return scale(1 / k, self._elab(ast.left, scope, sort, allow_primes, guard))

        tok = ast.tok
        name = ast.name
        if name in scope and ast.args is None:
            v = scope[name]
            if v.sort != sort:
                raise self._error(SortError, f"'{name}' has sort {v.sort}, expected {sort}", tok)
            return v
        f = self.sig.functions.get(name)  # type: ignore[union-attr]
        if f is None:
            if name.endswith("'") and name[:-1] in self.functions:
                raise self._error(RoleConflictError, f"'{name[:-1]}' is not updated, so '{name}' does not exist", tok)
            raise self._error(UndeclaredSymbolError, f"undeclared symbol '{name}'", tok)
        if f.role is Role.PRIMED:
            if guard:
                raise self._error(RoleConflictError, "primed symbol in guard", tok)
            if not allow_primes:
                raise self._error(RoleConflictError, f"primed symbol '{name}' outside an update", tok)
        args = ast.args or ()
        if len(args) != f.arity:
            raise self._error(SortError, f"'{name}' expects {f.arity} arguments, got {len(args)}", tok)
        if f.result != sort:
            raise self._error(SortError, f"'{name}' has sort {f.result}, expected {sort}", tok)
        elab_args = tuple(
            self._elab(a, scope, s, allow_primes, guard) for a, s in zip(args, f.arg_sorts)
        )
        return App(name, elab_args, f.result)


def _negate_dnf(dnf: list[list[Literal]]) -> list[list[Literal]]:
    out: list[list[Literal]] = [[]]
    for conj in dnf:
        out = [d + [lit.negate()] for d in out for lit in conj]
    return out


def _comparison(op: str, lhs: Term, rhs: Term) -> Literal:
    if op == "=":
        return Cmp(Rel.EQ, lhs, rhs)
    if op == "!=":
        return Cmp(Rel.EQ, lhs, rhs, positive=False)
    if op == "<":
        return Cmp(Rel.LT, lhs, rhs)
    if op == "<=":
        return Cmp(Rel.LE, lhs, rhs)
    if op == ">":
        return Cmp(Rel.LT, rhs, lhs)
    return Cmp(Rel.LE, rhs, lhs)


def _cnf_of_dnf(dnf: list[list[Literal]]) -> list[list[Literal]]:
    return [list(choice) for choice in product(*dnf)]


def _clauses_of(left: list[list[Literal]], right: list[list[Literal]]) -> list[Clause]:
    """CNF(left) OR CNF(right) as clauses; an empty `left` means just `right`."""
    combos = [a + b for a in left for b in right] if left else right
    out: list[Clause] = []
    for lits in combos:
        if TRUE in lits:
            continue
        kept = [l for l in lits if l != FALSE]
        if any(l.negate() in kept for l in kept):
            continue
        out.append(make_clause(kept))
    return out


# ---------------------------------------------
# Public API
# ---------------------------------------------
def parse(text: str, source: Optional[str] = None) -> ProblemSpec:
    return _Parser(text, source).parse()


def load(path: str | Path) -> ProblemSpec:
    path = Path(path)
    return parse(path.read_text(encoding="utf-8"), source=str(path))


def parse_clause(text: str, spec: ProblemSpec, allow_primes: bool = False) -> list[Clause]:
    """Parse one clause against an existing spec's signature (used for expected formulae)."""
    p = _Parser(text, "<clause>")
    p.functions = dict(spec.signature.functions)
    p.predicates = dict(spec.signature.predicates)
    p.sorts = dict(spec.signature.sorts)
    p.sig = spec.signature
    p.default_sort = REAL if spec.base is BaseTheory.LRA else INT
    clauses = p._clause(allow_primes)
    p.accept(";")
    if p.tok.kind != "eof":
        raise p._error(ParseError, f"unexpected '{p.tok.text}' after clause")
    return clauses


def parse_clauses(texts: list[str], spec: ProblemSpec) -> ClauseSet:
    out: list[Clause] = []
    for t in texts:
        out.extend(parse_clause(t, spec))
    return ClauseSet(tuple(out))


# ---------------------------------------------
# Pretty-printer
# ---------------------------------------------
def _sort_list(sorts) -> str:
    return ", ".join(s.name for s in sorts)


def render(spec: ProblemSpec) -> str:
    sig = spec.signature
    lines = [f"version {spec.version};", f"base {spec.base.value};"]
    for name, s in sig.sorts.items():
        if name not in ("int", "real"):
            lines.append(f"sort {name} = {s.kind.value};")
    lines.append("signature")
    keyword = {Role.BASE: "const", Role.PARAM: "param", Role.EXT: "ext"}
    for f in sig.functions.values():
        if f.role is Role.PRIMED:
            continue
        if f.arg_sorts:
            lines.append(f"  {keyword[f.role]} {f.name} : {_sort_list(f.arg_sorts)} -> {f.result.name};")
        else:
            lines.append(f"  {keyword[f.role]} {f.name} : {f.result.name};")
    for p in sig.predicates.values():
        lines.append(f"  pred {p.name} : {_sort_list(p.arg_sorts)};")
    lines.append("end")
    for level in spec.levels:
        lines.append(f"theory level {level.name} closure {level.closure.value}")
        lines.extend(f"  {render_clause(c)};" for c in level.clauses)
        lines.append("end")
    if spec.init.clauses:
        lines.append("init")
        lines.extend(f"  {render_clause(c)};" for c in spec.init)
        lines.append("end")
    if spec.guard:
        lines.append("guard")
        lines.extend(f"  {render_literal(l)};" for l in spec.guard)
        lines.append("end")
    for u in spec.updates:
        header = u.function
        if u.params:
            header += "(" + ", ".join(f"{p.name}: {p.sort.name}" for p in u.params) + ")"
        lines.append(f"update {header}")
        for case in u.cases:
            lines.append(f"  case {render_conj(case.guard)} -> {render_conj(case.effect)};")
        lines.append("end")
    if spec.property.clauses:
        lines.append("property")
        lines.extend(f"  {render_clause(c)};" for c in spec.property)
        lines.append("end")
    opts = _render_options(spec.options)
    if opts:
        lines.append("options")
        lines.extend(f"  {o};" for o in opts)
        lines.append("end")
    if spec.elim_goal is not None:
        lines.append("elim")
        lines.extend(f"  goal {render_clause(c)};" for c in spec.elim_goal)
        lines.append("end")
    return "\n".join(lines) + "\n"


def _render_options(o: SpecOptions) -> list[str]:
    out = []
    if o.keep is not None:
        out.append("keep " + ", ".join(sorted(o.keep)))
    if o.eliminate_constants:
        out.append("eliminate-const " + ", ".join(sorted(o.eliminate_constants)))
    if o.max_iterations is not None:
        out.append(f"max-iterations {o.max_iterations}")
    if o.mode is not None:
        out.append(f"mode {o.mode}")
    if o.constant_policy is not None:
        out.append(f"constant-policy {o.constant_policy}")
    if o.semantics is not None:
        out.append(f"semantics {o.semantics}")
    if o.apf_guard is not None:
        out.append(f"apf-guard {'on' if o.apf_guard else 'off'}")
    if o.congruence is not None:
        out.append(f"congruence {o.congruence}")
    return out
