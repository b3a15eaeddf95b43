"""Partial MaxSAT with unit-literal soft constraints.

Strategy: core-guided linear search for an upper bound, then a descending
cardinality check with a totalizer to certify the optimum, then a greedy
lexicographic pass so that among optimal models the softs earlier in the
preference order are satisfied.
"""

from __future__ import annotations

from dataclasses import dataclass

from .formula import CnfFormula
from .sat import DEFAULT_CONFLICT_BUDGET, Solver, Status


class HardUnsatError(RuntimeError):
    """The hard part of a MaxSAT query has no model."""


class MaxSatBudgetError(RuntimeError):
    pass


@dataclass
class MaxSatQuery:
    hard: CnfFormula
    soft: list[tuple[int, int]]  # (literal, tag)

    def __post_init__(self):
        tags = [t for _, t in self.soft]
        if len(set(tags)) != len(tags):
            raise ValueError("soft constraint tags must be distinct")

    def to_wdimacs(self) -> str:
        top = len(self.soft) + 1
        nvars = max([self.hard.num_vars, *(abs(l) for l, _ in self.soft)] or [0])
        lines = [f"p wcnf {nvars} {len(self.hard.clauses) + len(self.soft)} {top}"]
        for c in self.hard.clauses:
            lines.append(f"{top} " + " ".join(map(str, c)) + " 0")
        for lit, tag in self.soft:
            lines.append(f"c soft tag {tag}")
            lines.append(f"1 {lit} 0")
        return "\n".join(lines) + "\n"


@dataclass
class MaxSatResult:
    model: dict[int, int]
    falsified: list[int]

    @property
    def cost(self) -> int:
        return len(self.falsified)


def totalizer(s: Solver, inputs: list[int]) -> list[int]:
    """Unary counter outputs: ``out[j]`` is forced true when more than ``j`` inputs are true."""
    if not inputs:
        return []
    layer = [[x] for x in inputs]
    while len(layer) > 1:
        nxt = []
        for i in range(0, len(layer) - 1, 2):
            a, b = layer[i], layer[i + 1]
            r = [s.new_var() for _ in range(len(a) + len(b))]
            for i_, ai in enumerate(a):
                s.add_clause([-ai, r[i_]])
                for j_, bj in enumerate(b):
                    s.add_clause([-ai, -bj, r[i_ + j_ + 1]])
            for j_, bj in enumerate(b):
                s.add_clause([-bj, r[j_]])
            nxt.append(r)
        if len(layer) % 2:
            nxt.append(layer[-1])
        layer = nxt
    return layer[0]


def _check(out) -> None:
    if out.status is Status.UNKNOWN:
        raise MaxSatBudgetError("MaxSAT subquery exceeded its budget")


def linear_search_core(q: MaxSatQuery, reverse_ties: bool = False, seed: int = 0,
                       conflict_budget: int | None = DEFAULT_CONFLICT_BUDGET,
                       deadline: float | None = None) -> MaxSatResult:
    pref = list(range(len(q.soft)))
    if reverse_ties:
        pref.reverse()
    lits = [lit for lit, _ in q.soft]
    s = Solver(num_vars=q.hard.num_vars, seed=seed, conflict_budget=conflict_budget, deadline=deadline)
    s.add_formula(q.hard)
    for lit in lits:
        s.ensure_vars(abs(lit))
    out = s.solve()
    _check(out)
    if out.is_unsat:
        raise HardUnsatError("hard constraints are unsatisfiable")

    # upper bound: relax core softs, least preferred first
    active = list(pref)
    while True:
        out = s.solve([lits[i] for i in active])
        _check(out)
        if out.is_sat:
            model = out.model
            break
        core = set(out.core)
        in_core = [i for i in active if lits[i] in core]
        if not in_core:
            raise HardUnsatError("empty core while hard part is satisfiable")
        active.remove(in_core[-1])

    def violated(m):
        return sum(1 for lit in lits if (m[abs(lit)] == 1) != (lit > 0))

    ub = violated(model)
    counter = totalizer(s, [-lit for lit in lits])
    while ub > 0:
        out = s.solve([-counter[ub - 1]])
        _check(out)
        if not out.is_sat:
            break
        model = out.model
        ub = violated(model)

    fixed = [-counter[ub]] if ub < len(lits) else []
    for i in pref:
        out = s.solve(fixed + [lits[i]])
        _check(out)
        if out.is_sat:
            fixed.append(lits[i])
            model = out.model
        else:
            fixed.append(-lits[i])
    out = s.solve(fixed)
    _check(out)
    model = out.model
    falsified = [tag for lit, tag in q.soft if (model[abs(lit)] == 1) != (lit > 0)]
    return MaxSatResult(model=model, falsified=falsified)


def maxsat(q: MaxSatQuery, **kwargs) -> MaxSatResult:
    """Optimal model of ``q``; ``falsified`` lists violated tags in soft order."""
    return linear_search_core(q, **kwargs)
