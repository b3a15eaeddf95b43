"""End-to-end synthesis, standalone certification, and benchmark sweeps."""

from __future__ import annotations

import csv
import hashlib
import logging
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import TextIO

from .expr import FALSE, ExprArena, format_skolem
from .formula import QbfSpec, parse_qdimacs
from .learner import Hyperparams, add_dependencies, candidate_skf, find_order
from .preprocess import preprocess
from .refiner import (DEFAULT_SELF_SUB_THRESHOLD, BudgetExceeded, Counterexample, RefineState,
                      Refiner, SynthesisError, substitute_all, verify)
from .sampler import default_sample_count, get_samples
from .sat import DEFAULT_CONFLICT_BUDGET, Status, solve_cnf

log = logging.getLogger(__name__)

SOLVED = ("solved-preprocess", "solved-learn", "solved-refine")
STATUSES = SOLVED + ("failed", "timeout")
TIMING_COLUMNS = ("t_preprocess", "t_sampling", "t_learning", "t_refinement", "t_total", "cumulative_time")


@dataclass
class RunConfig:
    samples: int | None = None  # None: size tier by number of outputs
    min_impurity_decrease: float = 0.005
    probe_n: int = 500
    self_sub_threshold: int | None = DEFAULT_SELF_SUB_THRESHOLD  # None disables
    seed: int = 0
    iteration_cap: int = 5000
    timeout: float | None = None
    nj_mode: str = "sigma2"
    sampling: str = "auto"
    freeze: str = "primed"
    localization: str = "maxsat"
    conflict_budget: int | None = DEFAULT_CONFLICT_BUDGET

    def __post_init__(self):
        if self.samples is not None and self.samples < 0:
            raise ValueError("samples must be >= 0")
        if self.probe_n <= 0:
            raise ValueError("probe_n must be positive")
        if self.iteration_cap <= 0:
            raise ValueError("iteration_cap must be positive")
        if self.self_sub_threshold is not None and self.self_sub_threshold < 0:
            raise ValueError("self_sub_threshold must be >= 0")
        if self.timeout is not None and self.timeout <= 0:
            raise ValueError("timeout must be positive")
        Hyperparams(self.min_impurity_decrease)


@dataclass
class RunRecord:
    instance: str
    num_x: int
    num_y: int
    status: str = "failed"
    t_preprocess: float = 0.0
    t_sampling: float = 0.0
    t_learning: float = 0.0
    t_refinement: float = 0.0
    t_total: float = 0.0
    num_samples: int = 0
    num_unates: int = 0
    refine_iterations: int = 0
    refine_counts: dict[int, int] = field(default_factory=dict)
    self_substituted: list[int] = field(default_factory=list)
    repeated_repairs: int = 0
    stalled_rounds: int = 0
    message: str = ""

    @property
    def solved(self) -> bool:
        return self.status in SOLVED

    def csv_row(self) -> dict[str, str]:
        row = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "refine_counts":
                v = ";".join(f"y{k}:{c}" for k, c in sorted(v.items()))
            elif f.name == "self_substituted":
                v = ";".join(f"y{k}" for k in v)
            elif isinstance(v, float):
                v = f"{v:.6f}"
            row[f.name] = str(v)
        return row


@dataclass
class SynthesisResult:
    psi: dict[int, int]  # over X only when solved
    arena: ExprArena
    record: RunRecord
    order: list[int] = field(default_factory=list)

    def skolem_text(self) -> str:
        return format_skolem(self.arena, self.psi)


class _Clock:
    def __init__(self, timeout: float | None):
        self.start = time.perf_counter()
        self.deadline = None if timeout is None else time.monotonic() + timeout

    def expired(self) -> bool:
        return self.deadline is not None and time.monotonic() > self.deadline

    def elapsed(self) -> float:
        return time.perf_counter() - self.start


class _Timeout(Exception):
    pass


def synthesize(spec: QbfSpec, cfg: RunConfig | None = None, name: str = "",
               diag: TextIO | None = None, arena: ExprArena | None = None,
               initial_psi: dict[int, int] | None = None) -> SynthesisResult:
    """Synthesize Skolem functions for every output of ``spec``.

    ``initial_psi`` overrides learned candidates for the given outputs
    (useful to force a particular starting point).  Every solved status is
    backed by a fresh validity check of the final X-only functions against
    the original matrix.
    """
    cfg = cfg or RunConfig()
    arena = arena or ExprArena()
    clock = _Clock(cfg.timeout)
    rec = RunRecord(name, len(spec.x_vars), len(spec.y_vars))
    kw = {"conflict_budget": cfg.conflict_budget, "deadline": clock.deadline}
    psi: dict[int, int] = {}
    order: list[int] = []

    def checkpoint():
        if clock.expired():
            raise _Timeout

    phase_start = time.perf_counter()
    try:
        if _satisfiable(spec, **kw):
            report, psi = preprocess(spec, **kw)
            rec.num_unates = len(report.unates)
        else:
            # every function is vacuously correct; constants keep the output simple
            psi = {y: FALSE for y in spec.y_vars}
            rec.message = "unsatisfiable matrix"
        rec.t_preprocess = time.perf_counter() - phase_start
        checkpoint()
        work_y = [y for y in spec.y_vars if y not in psi]
        status = "solved-preprocess"
        if work_y:
            work = QbfSpec(report.reduced_matrix, spec.x_vars, tuple(work_y))

            phase_start = time.perf_counter()
            n = cfg.samples if cfg.samples is not None else default_sample_count(len(spec.y_vars))
            samples = get_samples(work, n, cfg.probe_n, cfg.seed, cfg.sampling, cfg.nj_mode)
            rec.num_samples = len(samples)
            rec.t_sampling = time.perf_counter() - phase_start
            checkpoint()

            phase_start = time.perf_counter()
            h = Hyperparams(cfg.min_impurity_decrease)
            deps: dict[int, set[int]] = {}
            single_node: dict[int, bool] = {}
            x_sorted = spec.sorted_x
            for y in sorted(work_y):
                if initial_psi and y in initial_psi:
                    psi[y] = initial_psi[y]
                    add_dependencies(deps, y, arena.support(psi[y]) & set(work_y))
                    single_node[y] = False
                    continue
                psi[y], tree = candidate_skf(samples, x_sorted, work_y, y, deps, arena, h)
                single_node[y] = tree.node_count() == 1
            order = find_order(deps, work_y)
            rec.t_learning = time.perf_counter() - phase_start
            checkpoint()

            phase_start = time.perf_counter()
            state = RefineState({}, single_node, cfg.self_sub_threshold)
            refiner = Refiner(report.reduced_matrix, spec.x_vars, work_y, arena, state,
                              freeze=cfg.freeze, localization=cfg.localization, diag=diag, **kw)
            status = "solved-learn"
            while True:
                checkpoint()
                res = refiner.verify(psi)
                if res.valid:
                    break
                if rec.refine_iterations >= cfg.iteration_cap:
                    status = "failed"
                    rec.message = "iteration cap reached"
                    break
                refiner.refine(psi, res.counterexample, order)
                rec.refine_iterations += 1
                status = "solved-refine"
            rec.refine_counts = dict(sorted(state.refine_count.items()))
            rec.self_substituted = list(state.frozen)
            rec.repeated_repairs = state.repetitions
            rec.stalled_rounds = state.stalled_calls
            rec.t_refinement = time.perf_counter() - phase_start
            if status == "failed":
                return _finish(rec, clock, psi, arena, order)
            psi.update(substitute_all({y: psi[y] for y in work_y}, order, arena, spec.x_vars))
        psi = {y: psi[y] for y in spec.y_vars}

        final = verify(spec.matrix, spec.x_vars, spec.y_vars, psi, arena, **kw)
        if final.status is Status.UNKNOWN:
            raise BudgetExceeded("final verification exceeded its budget")
        if not final.valid:
            rec.message = "final verification failed"
            status = "failed"
        rec.status = status
    except _Timeout:
        rec.status = "timeout"
    except (BudgetExceeded, SynthesisError, RuntimeError) as exc:
        rec.status = "timeout" if clock.expired() else "failed"
        rec.message = str(exc)
    return _finish(rec, clock, psi, arena, order)


def _satisfiable(spec: QbfSpec, **kw) -> bool:
    out = solve_cnf(spec.matrix, **kw)
    if out.status is Status.UNKNOWN:
        raise BudgetExceeded("satisfiability check exceeded its budget")
    return out.is_sat


def _finish(rec: RunRecord, clock: _Clock, psi, arena, order) -> SynthesisResult:
    rec.t_total = clock.elapsed()
    return SynthesisResult(psi, arena, rec, order)


@dataclass
class VerifyReport:
    valid: bool
    counterexample: Counterexample | None = None


def prepare_skolem(spec: QbfSpec, psi: dict[int, int], arena: ExprArena) -> dict[int, int]:
    """Check a parsed Skolem vector against ``spec`` and resolve output references.

    Raises ``ValueError`` on a variable-set mismatch or cyclic references.
    """
    ys = set(spec.y_vars)
    if set(psi) != ys:
        missing, extra = sorted(ys - set(psi)), sorted(set(psi) - ys)
        raise ValueError(f"function set does not match outputs (missing {missing}, extra {extra})")
    allowed = ys | spec.x_vars
    reads = {}
    for y, e in psi.items():
        sup = arena.support(e)
        if not sup <= allowed:
            raise ValueError(f"function for y{y} uses unknown variables {sorted(sup - allowed)}")
        reads[y] = sup & ys
    try:
        order = find_order(reads, list(spec.y_vars))
    except RuntimeError as exc:
        raise ValueError("functions reference each other cyclically") from exc
    return substitute_all(psi, order, arena, spec.x_vars)


def verify_cmd(spec: QbfSpec, psi: dict[int, int], arena: ExprArena,
               conflict_budget: int | None = DEFAULT_CONFLICT_BUDGET) -> VerifyReport:
    psi_x = prepare_skolem(spec, psi, arena)
    res = verify(spec.matrix, spec.x_vars, spec.y_vars, psi_x, arena, conflict_budget=conflict_budget)
    if res.status is Status.UNKNOWN:
        raise BudgetExceeded("verification exceeded its budget")
    return VerifyReport(res.valid, res.counterexample)


def derive_seed(master: int, name: str) -> int:
    digest = hashlib.sha256(f"{master}:{name}".encode()).digest()
    return int.from_bytes(digest[:4], "little")


def _run_one(path: str, cfg: RunConfig) -> RunRecord:
    name = Path(path).name
    try:
        spec = parse_qdimacs(Path(path).read_bytes())
    except (OSError, ValueError) as exc:
        return RunRecord(name, 0, 0, status="failed", message=f"parse: {exc}")
    c = RunConfig(**{**asdict(cfg), "seed": derive_seed(cfg.seed, name)})
    try:
        return synthesize(spec, c, name=name).record
    except Exception as exc:  # a sweep never aborts on one instance
        log.exception("instance %s crashed", name)
        return RunRecord(name, len(spec.x_vars), len(spec.y_vars), status="failed", message=repr(exc))


def csv_columns() -> list[str]:
    return [f.name for f in fields(RunRecord)] + ["cumulative_time"]


def bench(directory: str | Path, cfg: RunConfig | None = None, csv_path: str | Path | None = None,
          jobs: int = 1) -> list[RunRecord]:
    """Run ``synthesize`` on every ``*.qdimacs`` in ``directory`` (sorted by name).

    Writes the CSV and a ``<stem>_summary.csv`` with solve counts per status.
    """
    cfg = cfg or RunConfig()
    paths = sorted(str(p) for p in Path(directory).glob("*.qdimacs"))
    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            records = list(ex.map(_run_one, paths, [cfg] * len(paths)))
    else:
        records = [_run_one(p, cfg) for p in paths]
    if csv_path is not None:
        write_csv(records, csv_path)
        write_summary(records, Path(csv_path).with_name(Path(csv_path).stem + "_summary.csv"))
    return records


def write_csv(records: list[RunRecord], path: str | Path) -> None:
    cum = 0.0
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=csv_columns())
        w.writeheader()
        for r in records:
            cum += r.t_total
            w.writerow({**r.csv_row(), "cumulative_time": f"{cum:.6f}"})


def summarize(records: list[RunRecord]) -> dict[str, int]:
    counts = Counter(r.status for r in records)
    out = {s: counts.get(s, 0) for s in STATUSES}
    out["solved"] = sum(out[s] for s in SOLVED)
    out["total"] = len(records)
    return out


def write_summary(records: list[RunRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["status", "count"])
        for k, v in summarize(records).items():
            w.writerow([k, v])
