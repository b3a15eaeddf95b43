"""Verification and counterexample-guided repair of candidate Skolem functions.

A candidate vector Psi is correct iff the error formula

    F(X, Y) ∧ ¬F(X, Y') ∧ (Y' <-> Psi)

is unsatisfiable.  A model of it (a counterexample) names an input X where a
witness Y exists but the candidates produce a failing Y'.  Repair first asks
a partial MaxSAT query which outputs must change, then, for each such y_k,
checks whether y_k can keep its candidate value given X and the outputs
after y_k in the dependency order.  If not, the failed assumptions explain
why, and their conjunction is used to flip psi_k on a whole cube of inputs.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable

from .expr import FALSE, TRUE, ExprArena
from .formula import CnfFormula, negate_cnf, substitute_const
from .maxsat import HardUnsatError, MaxSatQuery, maxsat
from .sat import DEFAULT_CONFLICT_BUDGET, Solver, Status

log = logging.getLogger(__name__)

DEFAULT_SELF_SUB_THRESHOLD = 10


class SynthesisError(RuntimeError):
    pass


class BudgetExceeded(SynthesisError):
    pass


class InvariantViolation(SynthesisError):
    pass


@dataclass
class Counterexample:
    x: dict[int, int]
    y: dict[int, int]
    yp: dict[int, int]  # candidate outputs, keyed by the unprimed variable

    def as_assignment(self, prime_map: dict[int, int]) -> dict[int, int]:
        a = dict(self.x)
        a.update(self.y)
        a.update({prime_map[y]: v for y, v in self.yp.items()})
        return a


@dataclass
class ErrorFormulaBundle:
    cnf: CnfFormula
    prime_map: dict[int, int]


@dataclass
class VerifyResult:
    status: Status
    counterexample: Counterexample | None = None

    @property
    def valid(self) -> bool:
        return self.status is Status.UNSAT


def build_error_formula(matrix: CnfFormula, x_vars: Iterable[int], y_vars: Iterable[int],
                        psi: dict[int, int], arena: ExprArena,
                        primed_refs: bool = True) -> ErrorFormulaBundle:
    """CNF of ``F(X,Y) ∧ ¬F(X,Y') ∧ (Y' <-> Psi)``.

    With ``primed_refs`` the output references inside each psi_i are read
    from Y', so the constraint is ``y'_i <-> psi_i(X, Y')``.
    """
    y_vars = list(y_vars)
    cnf = matrix.copy()
    cnf.num_vars = max([cnf.num_vars, *x_vars, *y_vars])
    prime_map = {y: cnf.new_var() for y in y_vars}
    r = negate_cnf(matrix, prime_map, cnf)
    cnf.add_clause([r])
    cache: dict = {}
    var_map = prime_map if primed_refs else None
    for y in y_vars:
        lit = arena.tseitin(psi[y], cnf, var_map, cache)
        yp = prime_map[y]
        cnf.add_clause([-yp, lit])
        cnf.add_clause([yp, -lit])
    return ErrorFormulaBundle(cnf, prime_map)


def verify(matrix: CnfFormula, x_vars, y_vars, psi: dict[int, int], arena: ExprArena,
           primed_refs: bool = True, **solver_kw) -> VerifyResult:
    x_vars, y_vars = sorted(x_vars), list(y_vars)
    bundle = build_error_formula(matrix, x_vars, y_vars, psi, arena, primed_refs)
    s = Solver(num_vars=bundle.cnf.num_vars, **solver_kw)
    s.add_formula(bundle.cnf)
    out = s.solve()
    if not out.is_sat:
        return VerifyResult(out.status)
    m = out.model
    cex = Counterexample(
        x={x: m[x] for x in x_vars},
        y={y: m[y] for y in y_vars},
        yp={y: m[bundle.prime_map[y]] for y in y_vars},
    )
    return VerifyResult(Status.SAT, cex)


def fault_localize(matrix: CnfFormula, y_vars, cex: Counterexample, frozen: Iterable[int] = (),
                   reverse_ties: bool = False, **solver_kw) -> list[int]:
    """Outputs whose candidate value must change at ``cex.x`` (a minimum set).

    Hard part: ``F ∧ (X <-> cex.x)``; one soft unit ``y <-> cex.yp[y]`` per
    output, in ``y_vars`` order.  Outputs in ``frozen`` are first tried as
    hard constraints.
    """
    y_vars = list(y_vars)
    frozen = [y for y in y_vars if y in set(frozen)]

    def query(hardened):
        hard = matrix.copy()
        for x, v in cex.x.items():
            hard.add_clause([x if v else -x])
        for y in hardened:
            hard.add_clause([y if cex.yp[y] else -y])
        soft = [(y if cex.yp[y] else -y, y) for y in y_vars if y not in hardened]
        return maxsat(MaxSatQuery(hard, soft), reverse_ties=reverse_ties, **solver_kw)

    if frozen:
        try:
            return query(frozen).falsified
        except HardUnsatError:
            pass
    return query([]).falsified


def naive_localize(y_vars, cex: Counterexample) -> list[int]:
    return [y for y in y_vars if cex.y[y] != cex.yp[y]]


def build_gk(matrix: CnfFormula, cex: Counterexample, y_k: int, order: list[int],
             frozen_values: dict[int, int]) -> tuple[CnfFormula, list[int]]:
    """``G_k`` as the matrix plus unit assumptions.

    Assumptions, in order: ``y_k <-> cex.yp[y_k]``, ``X <-> cex.x``, and
    ``Ŷ <-> frozen_values`` for the outputs after ``y_k`` in ``order``.
    """
    idx = order.index(y_k)
    assumptions = [y_k if cex.yp[y_k] else -y_k]
    assumptions += [x if v else -x for x, v in sorted(cex.x.items())]
    assumptions += [y if frozen_values[y] else -y for y in order[idx + 1:]]
    return matrix, assumptions


def synthesize_repair(core: Iterable[int], y_k: int, psi_k: int, target_is_one: bool,
                      arena: ExprArena, x_fallback: Iterable[int] = ()) -> int:
    """Flip ``psi_k`` on the cube of failed assumptions (``y_k``'s own literal excluded).

    ``target_is_one`` is the candidate value that was refuted
    (``cex.yp[y_k] == 1``): then ``psi_k ∧ ¬β``, otherwise ``psi_k ∨ β``.
    """
    lits = [l for l in core if abs(l) != y_k]
    if not lits:
        lits = list(x_fallback)
    beta = arena.conj(arena.lit(l) for l in lits)
    if target_is_one:
        return arena.and_(psi_k, arena.neg(beta))
    return arena.or_(psi_k, beta)


def check_substitute(count: int, single_node: bool, threshold: int | None) -> bool:
    return threshold is not None and count > threshold and single_node


def self_substitute(matrix: CnfFormula, y_k: int, order: list[int], arena: ExprArena) -> int:
    """``F|_{y_k=1}`` as a function of X and the outputs after ``y_k``.

    Outputs before ``y_k`` in ``order`` may depend on ``y_k``, so they are
    existentially quantified out (by cofactor expansion): ``y_k`` is set to 1
    exactly when some completion of them satisfies F with ``y_k = 1``.
    """
    cof = substitute_const(matrix, y_k, 1)
    e = arena.from_clauses(cof.clauses)
    before = order[: order.index(y_k)]
    e = arena.exists(e, before)
    if e == FALSE:
        log.info("self-substitution of y%d is constant false", y_k)
    return e


def substitute_all(psi: dict[int, int], order: list[int], arena: ExprArena,
                   x_vars: Iterable[int]) -> dict[int, int]:
    """Resolve output references so every function is over X only.

    Walks ``order`` from the back; each psi_j only references outputs after
    it, which are already resolved.
    """
    out = dict(psi)
    resolved: dict[int, int] = {}
    for y in reversed(order):
        out[y] = arena.substitute_many(out[y], resolved)
        resolved[y] = out[y]
    allowed = set(x_vars)
    for y, e in out.items():
        stray = arena.support(e) - allowed
        if stray:
            raise InvariantViolation(f"psi for y{y} still references {sorted(stray)}")
    return out


@dataclass
class RefineState:
    refine_count: dict[int, int]
    single_node: dict[int, bool]
    threshold: int | None = DEFAULT_SELF_SUB_THRESHOLD
    frozen: list[int] = field(default_factory=list)
    repair_points: set = field(default_factory=set)
    repetitions: int = 0
    stalled_calls: int = 0
    calls: int = 0


class Refiner:
    """Verify/repair loop state for one synthesis run over a working problem.

    ``matrix`` is the (unate-reduced) matrix; ``y_vars`` the outputs still to
    synthesize.  ``freeze`` selects where the outputs after ``y_k`` are frozen
    in ``G_k``: ``"primed"`` reads the candidate outputs Y' of the
    counterexample, ``"sigma"`` its witness Y.
    """

    def __init__(self, matrix: CnfFormula, x_vars, y_vars, arena: ExprArena, state: RefineState,
                 freeze: str = "primed", localization: str = "maxsat", reverse_ties: bool = False,
                 primed_refs: bool = True, conflict_budget: int | None = DEFAULT_CONFLICT_BUDGET,
                 deadline: float | None = None, diag=None):
        if freeze not in ("primed", "sigma"):
            raise ValueError(f"unknown freeze mode {freeze!r}")
        if localization not in ("maxsat", "naive"):
            raise ValueError(f"unknown localization {localization!r}")
        self.matrix = matrix
        self.x_vars = sorted(x_vars)
        self.y_vars = list(y_vars)
        self.arena = arena
        self.state = state
        self.freeze = freeze
        self.localization = localization
        self.reverse_ties = reverse_ties
        self.primed_refs = primed_refs
        self.solver_kw = {"conflict_budget": conflict_budget, "deadline": deadline}
        self.diag = diag
        self.gk_solver = Solver(num_vars=max([matrix.num_vars, *self.x_vars, *self.y_vars]), **self.solver_kw)
        self.gk_solver.add_formula(matrix)

    def verify(self, psi: dict[int, int]) -> VerifyResult:
        res = verify(self.matrix, self.x_vars, self.y_vars, psi, self.arena, self.primed_refs,
                     **self.solver_kw)
        if res.status is Status.UNKNOWN:
            raise BudgetExceeded("verification query exceeded its budget")
        return res

    def localize(self, cex: Counterexample) -> list[int]:
        if self.localization == "naive":
            return naive_localize(self.y_vars, cex)
        try:
            return fault_localize(self.matrix, self.y_vars, cex, self.state.frozen,
                                  self.reverse_ties, **self.solver_kw)
        except HardUnsatError as exc:
            raise InvariantViolation("counterexample input has no witness") from exc

    def refine(self, psi: dict[int, int], cex: Counterexample, order: list[int]) -> dict[int, int]:
        """One repair round for counterexample ``cex``; updates ``psi`` in place."""
        st = self.state
        st.calls += 1
        ind = self.localize(cex)
        sigma_y = dict(cex.y)
        kinds: dict[int, str] = {}
        changed = False
        i = 0
        while i < len(ind):
            y_k = ind[i]
            i += 1
            if y_k in st.frozen:
                continue
            st.refine_count[y_k] = st.refine_count.get(y_k, 0) + 1
            if check_substitute(st.refine_count[y_k], st.single_node.get(y_k, False), st.threshold):
                psi[y_k] = self_substitute(self.matrix, y_k, order, self.arena)
                st.frozen.append(y_k)
                kinds[y_k] = "self-sub"
                changed = True
                continue
            frozen_vals = cex.yp if self.freeze == "primed" else sigma_y
            _, assumptions = build_gk(self.matrix, cex, y_k, order, frozen_vals)
            out = self.gk_solver.solve(assumptions)
            if out.status is Status.UNKNOWN:
                raise BudgetExceeded("repair query exceeded its budget")
            pos = order.index(y_k)
            if out.is_unsat:
                target_one = cex.yp[y_k] == 1
                x_cube = [x if v else -x for x, v in sorted(cex.x.items())]
                psi[y_k] = synthesize_repair(out.core, y_k, psi[y_k], target_one, self.arena, x_cube)
                point = dict(cex.x)
                point.update({y: frozen_vals[y] for y in order[pos + 1:]})
                self._check_point(y_k, psi[y_k], point, 0 if target_one else 1)
                key = (y_k, tuple(sorted(point.items())))
                if key in st.repair_points:
                    st.repetitions += 1
                st.repair_points.add(key)
                kinds[y_k] = "unsat-core"
                changed = True
            else:
                rho = out.model
                for y_t in order[: pos + 1]:
                    if rho[y_t] != cex.yp[y_t] and y_t not in ind:
                        ind.append(y_t)
                sigma_y[y_k] = cex.yp[y_k]
                kinds.setdefault(y_k, "sat-propagate")
        if not changed:
            st.stalled_calls += 1
        if self.diag is not None:
            self.diag.write(json.dumps({"iteration": st.calls, "ind": ind,
                                        "repairs": {f"y{y}": k for y, k in kinds.items()}}) + "\n")
        return psi

    def _check_point(self, y_k: int, e: int, point: dict[int, int], want: int) -> None:
        support = self.arena.support(e)
        if support <= point.keys() and self.arena.evaluate(e, point) != want:
            raise InvariantViolation(f"repair of y{y_k} did not flip its output")
