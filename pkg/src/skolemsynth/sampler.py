"""Training data for the learner: weighted sampling of models of F(X, Y).

Two probes at output bias 0.9 and 0.1 decide, per output variable, whether
its frequency is insensitive to the bias; such outputs are sampled at their
observed frequency, all others at 0.9.

Two sampling paths exist.  ``exact`` enumerates all models (truth table) and
samples them with probability proportional to their literal-weight product.
``cdcl`` runs the SAT solver with biased decision polarity; it is cheap and
only directionally faithful.  ``auto`` picks ``exact`` when the model set is
small enough.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .formula import CnfFormula, QbfSpec, models_table
from .sat import Solver, Status

log = logging.getLogger(__name__)

PROBE_HIGH = 0.9
PROBE_LOW = 0.1
BAND = (0.35, 0.65)
DEFAULT_Q = 0.9
EXACT_MAX_VARS = 20
EXACT_MAX_MODELS = 50_000


@dataclass
class BiasProfile:
    q: dict[int, float]
    universal_bias: float = 0.5
    m: dict[int, float] = field(default_factory=dict)
    n: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for p in [self.universal_bias, *self.q.values()]:
            if not 0.0 < p < 1.0:
                raise ValueError(f"bias {p} outside (0, 1)")

    def weights(self, spec: QbfSpec) -> dict[int, float]:
        w = {x: self.universal_bias for x in spec.x_vars}
        for y in spec.y_vars:
            w[y] = self.q.get(y, 0.5)
        return w


def _rows_satisfy(matrix: CnfFormula, columns: list[int], rows: np.ndarray) -> np.ndarray:
    col = {v: i for i, v in enumerate(columns)}
    ok = np.ones(len(rows), dtype=bool)
    for c in matrix.clauses:
        if not c:
            return np.zeros(len(rows), dtype=bool)
        sat = np.zeros(len(rows), dtype=bool)
        for lit in c:
            column = rows[:, col[abs(lit)]]
            sat |= (column == 1) if lit > 0 else (column == 0)
        ok &= sat
    return ok


class SampleSet:
    """Row-major 0/1 sample matrix over ``columns`` (X sorted, then Y in order)."""

    def __init__(self, spec: QbfSpec, rows: np.ndarray | None = None,
                 meta: dict | None = None, check: bool = True):
        self.columns = columns_for(spec)
        self.rows = np.zeros((0, len(self.columns)), dtype=np.uint8) if rows is None \
            else np.ascontiguousarray(rows, dtype=np.uint8)
        if self.rows.shape[1] != len(self.columns):
            raise ValueError("row width does not match columns")
        if check and len(self.rows) and not _rows_satisfy(spec.matrix, self.columns, self.rows).all():
            raise ValueError("sample rows must be models of the matrix")
        self.meta = meta or {}
        self._index = {v: i for i, v in enumerate(self.columns)}

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, v: int) -> np.ndarray:
        return self.rows[:, self._index[v]]

    def project(self, variables: list[int]) -> np.ndarray:
        return self.rows[:, [self._index[v] for v in variables]]

    def frequency(self, v: int) -> float:
        return float(self.column(v).mean()) if len(self.rows) else 0.0

    def to_csv(self, path: str | Path, y_vars=()) -> None:
        ys = set(y_vars)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"y{v}" if v in ys else f"x{v}" for v in self.columns])
            w.writerows(self.rows.tolist())


def columns_for(spec: QbfSpec) -> list[int]:
    return spec.sorted_x + list(spec.y_vars)


class ExactSampler:
    """Sample models with probability proportional to their weight."""

    def __init__(self, spec: QbfSpec, table: np.ndarray):
        self.spec = spec
        self.table = table
        self.columns = columns_for(spec)

    @classmethod
    def build(cls, spec: QbfSpec, max_vars: int = EXACT_MAX_VARS,
              max_models: int = EXACT_MAX_MODELS) -> ExactSampler | None:
        cols = columns_for(spec)
        if len(cols) > max_vars:
            return None
        table = models_table(spec.matrix, cols)
        if len(table) > max_models:
            return None
        return cls(spec, table)

    def probabilities(self, weights: dict[int, float]) -> np.ndarray:
        p = np.array([weights.get(v, 0.5) for v in self.columns])
        logw = np.where(self.table == 1, np.log(p), np.log1p(-p)).sum(axis=1)
        w = np.exp(logw - logw.max())
        return w / w.sum()

    def sample(self, weights: dict[int, float], n: int, rng: np.random.Generator) -> np.ndarray:
        if n == 0:
            return np.zeros((0, len(self.columns)), dtype=np.uint8)
        idx = rng.choice(len(self.table), size=n, p=self.probabilities(weights))
        return self.table[idx]


class CdclSampler:
    def __init__(self, spec: QbfSpec, seed: int):
        self.spec = spec
        self.columns = columns_for(spec)
        self.solver = Solver(num_vars=spec.max_var, seed=seed)
        self.solver.add_formula(spec.matrix)

    def sample(self, weights: dict[int, float], n: int, rng=None) -> np.ndarray:
        rows = np.zeros((n, len(self.columns)), dtype=np.uint8)
        for i in range(n):
            m = self.solver.sample_model(weights)
            rows[i] = [m[v] for v in self.columns]
        return rows


def _is_sat(spec: QbfSpec) -> bool:
    s = Solver(num_vars=spec.max_var)
    s.add_formula(spec.matrix)
    res = s.solve()
    if res.status is Status.UNKNOWN:
        raise RuntimeError("satisfiability check exceeded its budget")
    return res.is_sat


def make_sampler(spec: QbfSpec, method: str = "auto", seed: int = 0):
    if method not in ("auto", "exact", "cdcl"):
        raise ValueError(f"unknown sampling method {method!r}")
    if method in ("auto", "exact"):
        s = ExactSampler.build(spec) if method == "auto" else \
            ExactSampler.build(spec, max_vars=64, max_models=1 << 62)
        if s is not None:
            return s
        if method == "exact":
            raise ValueError("exact sampling needs a small model set")
    return CdclSampler(spec, seed)


def _seeds(seed: int, k: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(k)]


def probe(spec: QbfSpec, n_probe: int = 500, seed: int = 0, method: str = "auto",
          sampler=None) -> tuple[SampleSet, SampleSet]:
    """Two probe sample sets at output bias 0.9 and 0.1 (inputs at 0.5)."""
    if not _is_sat(spec):
        log.warning("specification matrix is unsatisfiable; probes are empty")
        return SampleSet(spec), SampleSet(spec)
    s1, s2 = _seeds(seed, 2)
    smp = sampler or make_sampler(spec, method, s1)
    out = []
    for q, s in ((PROBE_HIGH, s1), (PROBE_LOW, s2)):
        w = BiasProfile({y: q for y in spec.y_vars}).weights(spec)
        rows = smp.sample(w, n_probe, np.random.default_rng(s))
        out.append(SampleSet(spec, rows, check=False))
    return out[0], out[1]


def adapt_bias(sigma1: SampleSet, sigma2: SampleSet, y_vars, nj_mode: str = "sigma2") -> BiasProfile:
    """Per-output bias ``q_j``: ``m_j`` when both probe statistics are in band, else 0.9.

    ``m_j`` is the frequency of ``y_j = 1`` under the 0.9 probe.  With
    ``nj_mode="sigma2"`` ``n_j`` is the frequency of ``y_j = 1`` under the
    0.1 probe; ``"sigma1"`` uses the frequency of ``y_j = 0`` under the 0.9
    probe instead.
    """
    if nj_mode not in ("sigma2", "sigma1"):
        raise ValueError(f"unknown nj_mode {nj_mode!r}")
    if not len(sigma1) or not len(sigma2):
        raise ValueError("probe sample sets must be nonempty")
    lo, hi = BAND
    q, m, n = {}, {}, {}
    for y in y_vars:
        m[y] = sigma1.frequency(y)
        n[y] = sigma2.frequency(y) if nj_mode == "sigma2" else 1.0 - sigma1.frequency(y)
        q[y] = m[y] if (lo < m[y] < hi and lo < n[y] < hi) else DEFAULT_Q
    return BiasProfile(q, m=m, n=n)


def draw(spec: QbfSpec, profile: BiasProfile, n: int, seed: int = 0, method: str = "auto",
         sampler=None, dedup_threshold: float = 0.9) -> SampleSet:
    """``n`` models drawn under ``profile``.

    Rows are deduplicated only when more than ``dedup_threshold`` of them
    are repeats.
    """
    meta = {"m": dict(profile.m), "n": dict(profile.n), "q": dict(profile.q)}
    if n == 0:
        return SampleSet(spec, meta=meta)
    if not _is_sat(spec):
        raise ValueError("cannot draw samples from an unsatisfiable specification")
    s0, s1 = _seeds(seed, 2)
    smp = sampler or make_sampler(spec, method, s0)
    rows = smp.sample(profile.weights(spec), n, np.random.default_rng(s1))
    uniq, first = np.unique(rows, axis=0, return_index=True)
    if 1.0 - len(uniq) / len(rows) > dedup_threshold:
        rows = rows[np.sort(first)]
        meta["deduplicated"] = True
    return SampleSet(spec, rows, meta=meta)


def default_sample_count(num_y: int) -> int:
    if num_y < 1200:
        return 10000
    if num_y <= 4000:
        return 5000
    return 1000


def get_samples(spec: QbfSpec, n: int | None = None, n_probe: int = 500, seed: int = 0,
                method: str = "auto", nj_mode: str = "sigma2",
                dedup_threshold: float = 0.9) -> SampleSet:
    if n is None:
        n = default_sample_count(len(spec.y_vars))
    if not _is_sat(spec):
        log.warning("specification matrix is unsatisfiable; no samples drawn")
        return SampleSet(spec)
    s_probe, s_draw, s_smp = _seeds(seed, 3)
    smp = make_sampler(spec, method, s_smp)
    sigma1, sigma2 = probe(spec, n_probe, s_probe, sampler=smp)
    profile = adapt_bias(sigma1, sigma2, spec.y_vars, nj_mode)
    return draw(spec, profile, n, s_draw, sampler=smp, dedup_threshold=dedup_threshold)
