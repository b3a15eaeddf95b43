"""A small CDCL SAT solver with assumptions and failed-assumption cores.

Two watched literals, first-UIP learning, VSIDS-style activities, Luby
restarts.  ``sample_model`` reuses the same search with randomised variable
order and per-variable polarity probabilities to draw biased models.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import os
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .formula import CnfFormula, normalize_clause

DEFAULT_CONFLICT_BUDGET = 10**7
RESTART_BASE = 100
DUMP_ENV = "SKOLEMSYNTH_DUMP_DIR"
_dump_counter = itertools.count()


class Status(enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    UNKNOWN = "UNKNOWN"


@dataclass
class SatOutcome:
    status: Status
    model: dict[int, int] | None = None
    core: list[int] | None = None

    @property
    def is_sat(self) -> bool:
        return self.status is Status.SAT

    @property
    def is_unsat(self) -> bool:
        return self.status is Status.UNSAT


class UnsatError(RuntimeError):
    pass


class ModelCapExceeded(RuntimeError):
    def __init__(self, models: list[dict[int, int]], cap: int):
        super().__init__(f"more than {cap} models")
        self.models = models
        self.cap = cap


def luby(i: int) -> int:
    """The i-th element (0-based) of the Luby sequence 1 1 2 1 1 2 4 ..."""
    size, seq = 1, 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i = i % size
    return 1 << seq


class Solver:
    def __init__(self, clauses: Iterable[Iterable[int]] = (), num_vars: int = 0, seed: int = 0,
                 conflict_budget: int | None = DEFAULT_CONFLICT_BUDGET,
                 deadline: float | None = None):
        self.nvars = 0
        self._cap = 0
        self.val: list[int] = [0]
        self.watches: list[list[list[int]]] = [[]]
        self.level: list[int] = [0]
        self.reason: list[list[int] | None] = [None]
        self.activity: list[float] = [0.0]
        self.phase: list[int] = [0]
        self.seen: list[int] = [0]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.clauses: list[list[int]] = []
        self.learnts: list[list[int]] = []
        self.ok = True
        self.var_inc = 1.0
        self.heap: list[tuple[float, int]] = []
        self.rng = random.Random(seed)
        self.conflict_budget = conflict_budget
        self.deadline = deadline
        self.stats = {"solves": 0, "conflicts": 0, "decisions": 0, "propagations": 0}
        self._order: list[int] | None = None
        self._order_pos = 0
        self._bias: Mapping[int, float] | None = None
        self.ensure_vars(num_vars)
        for c in clauses:
            self.add_clause(c)

    # --- variable storage ----------------------------------------------

    def ensure_vars(self, n: int) -> None:
        if n <= self.nvars:
            return
        if n > self._cap:
            new_cap = max(n, 2 * self._cap, 16)
            grow = new_cap - self._cap
            old = self._cap
            self.val = self.val[: old + 1] + [0] * (2 * grow) + self.val[old + 1:]
            self.watches = self.watches[: old + 1] + [[] for _ in range(2 * grow)] + self.watches[old + 1:]
            self._cap = new_cap
        for v in range(self.nvars + 1, n + 1):
            self.level.append(0)
            self.reason.append(None)
            self.activity.append(0.0)
            self.phase.append(0)
            self.seen.append(0)
            heapq.heappush(self.heap, (0.0, v))
        self.nvars = n

    def new_var(self) -> int:
        self.ensure_vars(self.nvars + 1)
        return self.nvars

    # --- clause database -----------------------------------------------

    def add_clause(self, lits: Iterable[int]) -> bool:
        clause = normalize_clause(lits)
        if clause is None:
            return self.ok
        if not self.ok:
            return False
        if self.trail_lim:
            self._cancel_until(0)
        if clause:
            self.ensure_vars(max(abs(l) for l in clause))
        val = self.val
        kept = []
        for lit in clause:
            if val[lit] == 1:
                return True
            if val[lit] == 0:
                kept.append(lit)
        if not kept:
            self.ok = False
            return False
        if len(kept) == 1:
            self._assign(kept[0], None)
            if self._propagate() is not None:
                self.ok = False
            return self.ok
        self.watches[kept[0]].append(kept)
        self.watches[kept[1]].append(kept)
        self.clauses.append(kept)
        return True

    def add_formula(self, f: CnfFormula) -> bool:
        self.ensure_vars(f.num_vars)
        for c in f.clauses:
            self.add_clause(c)
        return self.ok

    # --- core search ----------------------------------------------------

    def _assign(self, lit: int, reason: list[int] | None) -> None:
        self.val[lit] = 1
        self.val[-lit] = -1
        v = lit if lit > 0 else -lit
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _propagate(self) -> list[int] | None:
        val = self.val
        watches = self.watches
        trail = self.trail
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            fl = -p
            ws = watches[fl]
            kept: list[list[int]] = []
            watches[fl] = kept
            i, n = 0, len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == fl:
                    c[0] = c[1]
                    c[1] = fl
                first = c[0]
                if val[first] == 1:
                    kept.append(c)
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if val[lk] != -1:
                        c[1] = lk
                        c[k] = fl
                        watches[lk].append(c)
                        break
                else:
                    kept.append(c)
                    if val[first] == -1:
                        kept.extend(ws[i:])
                        self.qhead = len(trail)
                        return c
                    self._assign(first, c)
                    self.stats["propagations"] += 1
        return None

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        val, reason, phase, act, heap = self.val, self.reason, self.phase, self.activity, self.heap
        biased = self._bias is not None
        for lit in self.trail[start:]:
            v = lit if lit > 0 else -lit
            val[lit] = 0
            val[-lit] = 0
            reason[v] = None
            if not biased:
                phase[v] = 1 if lit > 0 else 0
            heapq.heappush(heap, (-act[v], v))
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)
        self._order_pos = 0
        if len(heap) > 4 * self.nvars + 64:
            self.heap = [(-act[v], v) for v in range(1, self.nvars + 1) if val[v] == 0]
            heapq.heapify(self.heap)

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            self.activity = [a * 1e-100 for a in self.activity]
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(1, self.nvars + 1) if self.val[u] == 0]
            heapq.heapify(self.heap)
        elif self.val[v] == 0:
            heapq.heappush(self.heap, (-self.activity[v], v))

    def _analyze(self, confl: list[int]) -> tuple[list[int], int]:
        seen, level, reason, trail = self.seen, self.level, self.reason, self.trail
        dl = len(self.trail_lim)
        learnt = [0]
        pathc = 0
        p = 0
        idx = len(trail) - 1
        lits = confl
        while True:
            for q in lits:
                v = q if q > 0 else -q
                if not seen[v] and level[v] > 0:
                    seen[v] = 1
                    self._bump(v)
                    if level[v] >= dl:
                        pathc += 1
                    else:
                        learnt.append(q)
            while not seen[abs(trail[idx])]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            pv = abs(p)
            seen[pv] = 0
            pathc -= 1
            if pathc == 0:
                break
            lits = reason[pv][1:]
        learnt[0] = -p
        for q in learnt[1:]:
            seen[abs(q)] = 0
        if len(learnt) == 1:
            return learnt, 0
        best = 1
        for i in range(2, len(learnt)):
            if level[abs(learnt[i])] > level[abs(learnt[best])]:
                best = i
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[abs(learnt[1])]

    def _analyze_final(self, a: int) -> list[int]:
        """Assumptions responsible for ``a`` being false (``a`` included)."""
        core = [a]
        va = abs(a)
        if self.level[va] == 0:
            return core
        seen, reason, level = self.seen, self.reason, self.level
        seen[va] = 1
        for i in range(len(self.trail) - 1, self.trail_lim[0] - 1, -1):
            x = self.trail[i]
            v = abs(x)
            if not seen[v]:
                continue
            r = reason[v]
            if r is None:
                if level[v] > 0:
                    core.append(x)
            else:
                for q in r[1:]:
                    if level[abs(q)] > 0:
                        seen[abs(q)] = 1
            seen[v] = 0
        return core

    def _pick_branch(self) -> int:
        val = self.val
        if self._bias is not None:
            order = self._order
            while self._order_pos < len(order):
                v = order[self._order_pos]
                if val[v] == 0:
                    p = self._bias.get(v, 0.5)
                    return v if self.rng.random() < p else -v
                self._order_pos += 1
            return 0
        heap = self.heap
        while heap:
            _, v = heapq.heappop(heap)
            if val[v] == 0:
                return v if self.phase[v] else -v
        for v in range(1, self.nvars + 1):
            if val[v] == 0:
                return v if self.phase[v] else -v
        return 0

    def _search(self, assumptions: list[int]) -> SatOutcome:
        self.stats["solves"] += 1
        if not self.ok:
            return SatOutcome(Status.UNSAT, core=[])
        self._cancel_until(0)
        if self._propagate() is not None:
            self.ok = False
            return SatOutcome(Status.UNSAT, core=[])
        for a in assumptions:
            self.ensure_vars(abs(a))
        conflicts = 0
        restarts = 0
        restart_limit = luby(0) * RESTART_BASE
        since_restart = 0
        val = self.val
        while True:
            confl = self._propagate()
            if confl is not None:
                conflicts += 1
                since_restart += 1
                self.stats["conflicts"] += 1
                if not self.trail_lim:
                    self.ok = False
                    return SatOutcome(Status.UNSAT, core=[])
                learnt, bt = self._analyze(confl)
                self._cancel_until(bt)
                if len(learnt) == 1:
                    self._assign(learnt[0], None)
                else:
                    self.watches[learnt[0]].append(learnt)
                    self.watches[learnt[1]].append(learnt)
                    self.learnts.append(learnt)
                    self._assign(learnt[0], learnt)
                self.var_inc /= 0.95
                if self.conflict_budget is not None and conflicts >= self.conflict_budget:
                    self._cancel_until(0)
                    return SatOutcome(Status.UNKNOWN)
                if self.deadline is not None and conflicts % 64 == 0 and time.monotonic() > self.deadline:
                    self._cancel_until(0)
                    return SatOutcome(Status.UNKNOWN)
                if since_restart >= restart_limit:
                    restarts += 1
                    since_restart = 0
                    restart_limit = luby(restarts) * RESTART_BASE
                    self._cancel_until(0)
                continue
            dl = len(self.trail_lim)
            if dl < len(assumptions):
                a = assumptions[dl]
                if val[a] == 1:
                    self.trail_lim.append(len(self.trail))
                    continue
                if val[a] == -1:
                    core = self._analyze_final(a)
                    self._cancel_until(0)
                    return SatOutcome(Status.UNSAT, core=core)
                self.trail_lim.append(len(self.trail))
                self._assign(a, None)
                continue
            lit = self._pick_branch()
            if lit == 0:
                model = {v: 1 if val[v] == 1 else 0 for v in range(1, self.nvars + 1)}
                self._cancel_until(0)
                return SatOutcome(Status.SAT, model=model)
            self.stats["decisions"] += 1
            self.trail_lim.append(len(self.trail))
            self._assign(lit, None)

    # --- public API -----------------------------------------------------

    def solve(self, assumptions: Iterable[int] = ()) -> SatOutcome:
        """Decide the clause database under ``assumptions``.

        UNSAT outcomes carry ``core``: a subset of the assumptions that is
        already inconsistent with the clauses.  A conflict-budget or
        deadline overrun yields ``Status.UNKNOWN``.
        """
        assumptions = [int(a) for a in assumptions]
        self._maybe_dump(assumptions)
        if self.deadline is not None and time.monotonic() > self.deadline:
            return SatOutcome(Status.UNKNOWN)
        return self._search(assumptions)

    def sample_model(self, bias: Mapping[int, float] | None = None,
                     assumptions: Iterable[int] = ()) -> dict[int, int]:
        """Draw one model, deciding variable ``v`` true with probability ``bias[v]``.

        Variables are decided in a fresh random order on every call; missing
        entries in ``bias`` default to 0.5.
        """
        order = list(range(1, self.nvars + 1))
        self.rng.shuffle(order)
        self._order = order
        self._order_pos = 0
        self._bias = bias or {}
        try:
            out = self._search([int(a) for a in assumptions])
        finally:
            self._bias = None
            self._order = None
        if out.status is Status.UNSAT:
            raise UnsatError("cannot sample from an unsatisfiable formula")
        if out.status is Status.UNKNOWN:
            raise RuntimeError("sampling query exceeded its budget")
        return out.model

    def to_dimacs(self, assumptions: Iterable[int] = ()) -> str:
        f = CnfFormula(num_vars=self.nvars)
        f.clauses = [tuple(c) for c in self.clauses]
        units = [t for t in self.trail[: self.trail_lim[0] if self.trail_lim else len(self.trail)]]
        return f.to_dimacs(extra_units=[*units, *assumptions])

    def _maybe_dump(self, assumptions: list[int]) -> None:
        target = os.environ.get(DUMP_ENV)
        if not target:
            return
        path = Path(target)
        path.mkdir(parents=True, exist_ok=True)
        (path / f"query_{os.getpid()}_{next(_dump_counter):06d}.cnf").write_text(self.to_dimacs(assumptions))


def solve_cnf(f: CnfFormula, assumptions: Iterable[int] = (), **kwargs) -> SatOutcome:
    s = Solver(num_vars=f.num_vars, **kwargs)
    s.add_formula(f)
    return s.solve(assumptions)


def enumerate_models(f: CnfFormula, cap: int = 50_000, over: Iterable[int] | None = None,
                     **kwargs) -> list[dict[int, int]]:
    """All models of ``f`` projected to ``over`` (default: variables 1..num_vars).

    Uses blocking clauses.  Raises :class:`ModelCapExceeded` when more than
    ``cap`` exist.
    """
    proj = sorted(over) if over is not None else list(range(1, f.num_vars + 1))
    s = Solver(num_vars=f.num_vars, **kwargs)
    s.add_formula(f)
    models: list[dict[int, int]] = []
    while True:
        out = s.solve()
        if out.status is Status.UNKNOWN:
            raise RuntimeError("model enumeration exceeded its budget")
        if out.is_unsat:
            return models
        m = {v: out.model.get(v, 0) for v in proj}
        if len(models) == cap:
            raise ModelCapExceeded(models, cap)
        models.append(m)
        if not proj:
            return models
        s.add_clause([-v if m[v] else v for v in proj])
