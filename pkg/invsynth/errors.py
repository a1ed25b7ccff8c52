"""
errors.py

Exception hierarchy for invsynth. Everything the package raises on purpose
derives from InvsynthError; cli.py maps the families to exit codes.

Solver outcomes (Unknown, Timeout) are values on SolverVerdict, not errors.
"""

from typing import Optional


class InvsynthError(Exception):
    """Root of every invsynth error."""


# ---------------------------------------------
# Spec file errors (exit 64)
# ---------------------------------------------
class SpecError(InvsynthError):
    kind = "spec error"

    def __init__(self, message: str, line: int = 0, col: int = 0, source: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.source = source

    def __str__(self) -> str:
        where = self.source or "<spec>"
        return f"{where}:{self.line}:{self.col}: {self.kind}: {self.message}"


class LexError(SpecError):
    kind = "lexical error"


class ParseError(SpecError):
    kind = "syntax error"


class SortError(SpecError):
    kind = "sort error"


class UndeclaredSymbolError(SpecError):
    kind = "undeclared symbol"


class RoleConflictError(SpecError):
    kind = "role conflict"


# ---------------------------------------------
# Logic errors
# ---------------------------------------------
class SignatureError(InvsynthError):
    """A symbol is missing from the signature or has no primed partner."""


class ContractViolation(InvsynthError):
    """An operation was called outside its precondition."""


class QEBlowupError(InvsynthError):
    def __init__(self, site: str, count: int, cap: int):
        super().__init__(f"{site}: {count} disjuncts exceed the cap of {cap}")
        self.site = site
        self.count = count
        self.cap = cap


class DivisibilityError(InvsynthError):
    def __init__(self, modulus: int, literal: str):
        super().__init__(
            f"divisibility modulus {modulus} in '{literal}' is too large for a residue split"
        )
        self.modulus = modulus
        self.literal = literal


class SolverError(InvsynthError):
    """The solver executable cannot be started at all."""
