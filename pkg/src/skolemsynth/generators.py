"""Random instance generators with known ground truth.

Planted instances fix a random function ``y = g(x)`` per output and only
keep constraints satisfied by every planted point, so each instance is
realizable by construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .formula import CnfFormula, QbfSpec


@dataclass
class PlantedFunction:
    support: tuple[int, ...]
    table: tuple[int, ...]  # indexed by support bits, first support variable most significant

    def __call__(self, assignment) -> int:
        idx = 0
        for v in self.support:
            idx = (idx << 1) | assignment[v]
        return self.table[idx]


@dataclass
class PlantedInstance:
    spec: QbfSpec
    planted: dict[int, PlantedFunction]
    defined: list[int]


def random_cnf(rng: np.random.Generator, num_vars: int, num_clauses: int,
               width: tuple[int, int] = (1, 3)) -> CnfFormula:
    f = CnfFormula(num_vars=num_vars)
    for _ in range(num_clauses):
        k = int(rng.integers(width[0], width[1] + 1))
        k = min(k, num_vars)
        vs = rng.choice(np.arange(1, num_vars + 1), size=k, replace=False)
        f.add_clause(int(v) if rng.random() < 0.5 else -int(v) for v in vs)
    return f


def _defining_clauses(y: int, g: PlantedFunction) -> list[tuple[int, ...]]:
    out = []
    for idx, bits in enumerate(itertools.product((0, 1), repeat=len(g.support))):
        guard = tuple(-v if b else v for v, b in zip(g.support, bits))
        out.append(guard + ((y if g.table[idx] else -y),))
    return out


def planted_instance(rng: np.random.Generator, num_x: int, num_y: int,
                     support: tuple[int, int] = (1, 3), defined_fraction: float = 0.5,
                     noise_clauses: int | None = None, width: tuple[int, int] = (2, 4),
                     max_tries: int = 2000) -> PlantedInstance:
    """Random realizable 2-QBF: universals ``1..num_x``, outputs after them."""
    if num_x < 1 or num_y < 1:
        raise ValueError("need at least one input and one output")
    xs = list(range(1, num_x + 1))
    ys = list(range(num_x + 1, num_x + num_y + 1))
    planted = {}
    for y in ys:
        k = int(rng.integers(support[0], min(support[1], num_x) + 1))
        sup = tuple(sorted(int(v) for v in rng.choice(xs, size=k, replace=False)))
        planted[y] = PlantedFunction(sup, tuple(int(b) for b in rng.integers(0, 2, size=1 << k)))

    points = np.array(list(itertools.product((0, 1), repeat=num_x)), dtype=np.uint8)
    cols = {v: points[:, i] for i, v in enumerate(xs)}
    for y in ys:
        g = planted[y]
        idx = np.zeros(len(points), dtype=np.int64)
        for v in g.support:
            idx = (idx << 1) | cols[v]
        cols[y] = np.asarray(g.table, dtype=np.uint8)[idx]

    f = CnfFormula(num_vars=num_x + num_y)
    defined = [y for y in ys if rng.random() < defined_fraction]
    for y in defined:
        for c in _defining_clauses(y, planted[y]):
            f.add_clause(c)

    target = noise_clauses if noise_clauses is not None else 2 * (num_x + num_y)
    all_vars = xs + ys
    kept = tries = 0
    while kept < target and tries < max_tries:
        tries += 1
        k = int(rng.integers(width[0], min(width[1], len(all_vars)) + 1))
        vs = [int(v) for v in rng.choice(all_vars, size=k, replace=False)]
        if not any(v in planted for v in vs):
            continue  # a pure-input clause would make some inputs unrealizable
        lits = [v if rng.random() < 0.5 else -v for v in vs]
        sat = np.zeros(len(points), dtype=bool)
        for lit in lits:
            sat |= cols[abs(lit)] == (1 if lit > 0 else 0)
        if sat.all():
            f.add_clause(lits)
            kept += 1
    return PlantedInstance(QbfSpec(f, frozenset(xs), tuple(ys)), planted, defined)


def parity_instance(num_x: int) -> QbfSpec:
    """``y <-> x_1 xor ... xor x_n`` as its full truth-table CNF (2^n clauses)."""
    y = num_x + 1
    g = PlantedFunction(tuple(range(1, num_x + 1)),
                        tuple(bin(i).count("1") & 1 for i in range(1 << num_x)))
    f = CnfFormula(num_vars=y)
    for c in _defining_clauses(y, g):
        f.add_clause(c)
    return QbfSpec(f, frozenset(range(1, num_x + 1)), (y,))


def suite(seed: int, count: int, max_total: int = 14) -> list[PlantedInstance]:
    """``count`` planted instances with ``num_x + num_y <= max_total``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        num_x = int(rng.integers(2, 9))
        num_y = int(rng.integers(1, max(2, min(7, max_total - num_x + 1))))
        out.append(planted_instance(rng, num_x, num_y))
    return out
