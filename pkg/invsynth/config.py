"""
config.py

Environment overrides and the two validated configuration models.

Resolution order for every loop setting is: CLI flag, then the spec file's
`options` block, then the model default below.

Environment (.env is read once at import):
    INVSYNTH_SOLVER     solver executable (default: z3)
    INVSYNTH_TIMEOUT    per-query timeout in seconds (default: 10)
    INVSYNTH_LOG_LEVEL  logging level (default: INFO)
"""

import os
from enum import Enum
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

LOCAL_ROOT = Path(__file__).resolve().parents[1]
load_dotenv(LOCAL_ROOT / ".env")

DEFAULT_SOLVER = os.getenv("INVSYNTH_SOLVER", "z3")
DEFAULT_TIMEOUT = float(os.getenv("INVSYNTH_TIMEOUT", "10"))
LOG_LEVEL = os.getenv("INVSYNTH_LOG_LEVEL", "INFO").upper()

# ---------------------------------------------
# Caps
# ---------------------------------------------
DISJUNCT_CAP = 50_000
CLAUSE_CAP = 50_000
MAX_RESIDUE_MODULUS = 8

# names of solver-side divisibility quotients; reserved in problem files
QUOTIENT_PREFIX = "div_q"


# ---------------------------------------------
# Enumerations
# ---------------------------------------------
class LoopMode(str, Enum):
    NAIVE = "naive"
    REFINED = "refined"


class ElimMode(str, Enum):
    FULL = "full"
    SPLIT = "split"


class ConstantPolicy(str, Enum):
    NONE = "none"
    UNGUARDED = "unguarded"


class Semantics(str, Enum):
    SIMULTANEOUS = "simultaneous"
    INTERLEAVED = "interleaved"


class CongruenceExpansion(str, Enum):
    IMPLIED = "implied"
    SPLIT = "split"


# ------------------------ Pydantic Models -----------------------
class SolverConfig(BaseModel):
    executable: str = DEFAULT_SOLVER
    extra_args: list[str] = Field(default_factory=lambda: ["-in", "-smt2"])
    timeout_s: float = DEFAULT_TIMEOUT
    produce_models: bool = True
    incremental: bool = False
    emit_dir: Path | None = None

    @field_validator("timeout_s")
    @classmethod
    def _positive_timeout(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("timeout must be > 0")
        return value


class LoopConfig(BaseModel):
    max_iterations: int = Field(default=20, ge=1)
    mode: LoopMode = LoopMode.REFINED
    keep: frozenset[str] | None = None
    eliminate_constants: frozenset[str] = frozenset()
    constant_policy: ConstantPolicy = ConstantPolicy.UNGUARDED
    semantics: Semantics = Semantics.SIMULTANEOUS
    apf_guard: bool = False
    fixpoint_check: bool = True
    congruence_expansion: CongruenceExpansion = CongruenceExpansion.IMPLIED
    verify: bool = False

    def merged(self, **overrides) -> "LoopConfig":
        """Return a copy with every non-None override applied."""
        values = {k: v for k, v in overrides.items() if v is not None}
        return type(self).model_validate({**self.model_dump(), **values})
