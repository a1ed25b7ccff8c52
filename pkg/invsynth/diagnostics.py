"""
diagnostics.py

Observational monitors for the strengthening loop: clause statistics,
the flatness / variable-count monitor, term-shape families and the
clause-count growth fit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from invsynth.logic_core import App, ClauseSet, Term, Var, is_flat, literal_subterms, substitute
from invsynth.reports import GrowthRecord, LengthRecord
from invsynth.specfile import ProblemSpec


@dataclass(frozen=True)
class ClauseStats:
    count: int
    max_length: int
    max_vars: int


def clause_stats(gamma: ClauseSet) -> ClauseStats:
    clauses = gamma.clauses
    if not clauses:
        return ClauseStats(0, 0, 0)
    return ClauseStats(
        len(clauses),
        max(len(c.literals) for c in clauses),
        max(len(c.variables) for c in clauses),
    )


def monitor_alarms(gamma: ClauseSet, max_vars: int, symbols: frozenset[str]) -> list[str]:
    """Clauses that are not flat or carry more than `max_vars` variables."""
    alarms = []
    for i, c in enumerate(gamma.clauses):
        if not is_flat(c, symbols):
            alarms.append(f"clause {i} is not flat")
        if len(c.variables) > max_vars:
            alarms.append(f"clause {i} has {len(c.variables)} variables (bound {max_vars})")
    return alarms


# ---------------------------------------------
# Term shapes
# ---------------------------------------------
def term_shapes(gamma: ClauseSet) -> set[str]:
    """Non-variable subterms of every clause, variables renamed by position."""
    shapes: set[str] = set()
    for c in gamma.clauses:
        rename: dict[Term, Term] = {v: Var(f"_v{i}", v.sort) for i, v in enumerate(c.variables)}
        for lit in c.literals:
            for t in literal_subterms(lit):
                if isinstance(t, App) and t.args:
                    shapes.add(substitute(t, rename).text)
    return shapes


class ShapeTracker:
    def __init__(self) -> None:
        self.seen: set[str] = set()
        self.new_per_iteration: list[int] = []

    def observe(self, gamma: ClauseSet) -> int:
        shapes = term_shapes(gamma)
        new = shapes - self.seen
        self.seen |= shapes
        self.new_per_iteration.append(len(new))
        return len(new)

    def outside_family(self, window: int = 2) -> bool:
        """New shapes kept appearing in each of the last `window` iterations."""
        tail = self.new_per_iteration[-window:]
        return len(tail) == window and all(n > 0 for n in tail)


# ---------------------------------------------
# Growth
# ---------------------------------------------
def growth_rate(counts: Sequence[int]) -> Optional[float]:
    """Least-squares growth factor of clause counts per iteration (None below two points)."""
    points = [(i, c) for i, c in enumerate(counts) if c > 0]
    if len(points) < 2:
        return None
    x = np.array([p[0] for p in points], dtype=float)
    y = np.log(np.array([p[1] for p in points], dtype=float))
    slope, _ = np.polyfit(x, y, 1)
    return float(np.exp(slope))


def growth_record(counts: Sequence[int], shapes: ShapeTracker) -> GrowthRecord:
    return GrowthRecord(
        rate=growth_rate(counts),
        clause_counts=list(counts),
        new_shapes=list(shapes.new_per_iteration),
        outside_family=shapes.outside_family(),
    )


# ---------------------------------------------
# Length bound quantities
# ---------------------------------------------
def length_record(spec: ProblemSpec, previous: int = 0, current: int = 0) -> LengthRecord:
    updates = [u for u in spec.updates if u.params]
    max_cases = max((u.n_cases for u in updates), default=1)
    max_vars = max((len(c.variables) for c in spec.property.clauses), default=0)
    max_effect = max((len(case.effect) for u in spec.updates for case in u.cases), default=0)
    max_update_clause = max(
        (len(case.guard) + 1 for u in spec.updates for case in u.cases), default=0
    )
    n_updates = max(len(updates), 1)
    k1 = n_updates * max_cases**max_vars * max(max_vars, 1) ** 2
    ratio = current / previous if previous else None
    return LengthRecord(
        updates=len(spec.updates),
        max_cases=max_cases,
        max_vars=max_vars,
        max_effect=max_effect,
        max_update_clause=max_update_clause,
        k1=k1,
        observed_ratio=ratio,
    )
