"""Unate detection and elimination.

``y`` is positive unate in F iff ``F|y=0 ∧ ¬F|y=1`` is unsatisfiable (setting
y to 1 never hurts), negative unate symmetrically.  Both conjuncts share all
remaining variables.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .expr import FALSE, TRUE
from .formula import CnfFormula, QbfSpec, negate_cnf, substitute_const
from .sat import DEFAULT_CONFLICT_BUDGET, Status, solve_cnf

log = logging.getLogger(__name__)


@dataclass
class UnateReport:
    positive: list[int]
    negative: list[int]
    reduced_matrix: CnfFormula

    @property
    def unates(self) -> list[int]:
        return self.positive + self.negative


def _monotone_violation_unsat(f: CnfFormula, y: int, low: int, **solver_kw) -> bool:
    sink = substitute_const(f, y, low)
    r = negate_cnf(substitute_const(f, y, 1 - low), None, sink)
    out = solve_cnf(sink, [r], **solver_kw)
    # an inconclusive check counts as "not unate"
    return out.status is Status.UNSAT


def check_positive_unate(f: CnfFormula, y: int, **solver_kw) -> bool:
    return _monotone_violation_unsat(f, y, 0, **solver_kw)


def check_negative_unate(f: CnfFormula, y: int, **solver_kw) -> bool:
    return _monotone_violation_unsat(f, y, 1, **solver_kw)


def preprocess(spec: QbfSpec, conflict_budget: int | None = DEFAULT_CONFLICT_BUDGET,
               deadline: float | None = None) -> tuple[UnateReport, dict[int, int]]:
    """One sequential pass over ``spec.y_vars``; returns the report and constant Skolem functions.

    Each detected unate is substituted immediately, so later checks run on
    the reduced matrix.  The returned functions are arena handles ``TRUE`` /
    ``FALSE``.
    """
    kw = {"conflict_budget": conflict_budget, "deadline": deadline}
    f = spec.matrix
    pos: list[int] = []
    neg: list[int] = []
    psi: dict[int, int] = {}
    for y in spec.y_vars:
        if check_positive_unate(f, y, **kw):
            pos.append(y)
            psi[y] = TRUE
            f = substitute_const(f, y, 1)
            log.info("unate +y%d", y)
        elif check_negative_unate(f, y, **kw):
            neg.append(y)
            psi[y] = FALSE
            f = substitute_const(f, y, 0)
            log.info("unate -y%d", y)
    return UnateReport(pos, neg, f), psi
