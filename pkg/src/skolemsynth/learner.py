"""Candidate Skolem functions from decision trees, and the dependency order.

Trees are grown greedily (ID3 over binary features) with Gini impurity.  A
node becomes a leaf when it is pure, when no splitting feature is left, or
when the best impurity decrease falls below ``min_impurity_decrease``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .expr import FALSE, TRUE, ExprArena
from .sampler import SampleSet


@dataclass
class Hyperparams:
    min_impurity_decrease: float = 0.005
    max_depth: int | None = None

    def __post_init__(self):
        if self.min_impurity_decrease < 0:
            raise ValueError("min_impurity_decrease must be >= 0")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")


@dataclass
class TreeNode:
    label: int | None = None
    feature: int | None = None
    low: TreeNode | None = None
    high: TreeNode | None = None
    samples: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass
class DecisionTree:
    root: TreeNode
    features: list[int] = field(default_factory=list)

    def node_count(self) -> int:
        stack, count = [self.root], 0
        while stack:
            n = stack.pop()
            count += 1
            if not n.is_leaf:
                stack.extend((n.low, n.high))
        return count

    def classify(self, row) -> int:
        n = self.root
        while not n.is_leaf:
            n = n.high if row[n.feature] else n.low
        return n.label

    def leaves(self):
        """Yield ``(path, label)`` with ``path`` a list of ``(feature, value)``."""
        stack = [(self.root, [])]
        while stack:
            n, path = stack.pop()
            if n.is_leaf:
                yield path, n.label
                continue
            stack.append((n.high, path + [(n.feature, 1)]))
            stack.append((n.low, path + [(n.feature, 0)]))

    def to_dot(self, name=lambda v: f"v{v}") -> str:
        lines = ["digraph tree {"]
        ids: dict[int, int] = {}
        stack = [self.root]
        while stack:
            n = stack.pop()
            i = ids.setdefault(id(n), len(ids))
            if n.is_leaf:
                lines.append(f'  n{i} [shape=box,label="{n.label} ({n.samples})"];')
                continue
            lines.append(f'  n{i} [label="{name(n.feature)}"];')
            for child, v in ((n.low, 0), (n.high, 1)):
                j = ids.setdefault(id(child), len(ids))
                lines.append(f'  n{i} -> n{j} [label="{v}"];')
                stack.append(child)
        lines.append("}")
        return "\n".join(lines) + "\n"


def gini(labels: np.ndarray) -> float:
    n = len(labels)
    if n == 0:
        return 0.0
    p1 = float(np.count_nonzero(labels)) / n
    return 1.0 - p1 * p1 - (1.0 - p1) ** 2


def impurity_decrease(parent: np.ndarray, children: list[np.ndarray]) -> float:
    n = len(parent)
    return gini(parent) - sum(len(c) / n * gini(c) for c in children)


def _majority(labels: np.ndarray) -> int:
    ones = int(np.count_nonzero(labels))
    return 1 if 2 * ones >= len(labels) else 0


def _best_split(X: np.ndarray, y: np.ndarray, candidates: list[int]) -> tuple[int, float] | None:
    n = len(y)
    sub = X[:, candidates].astype(np.int64)
    y64 = y.astype(np.int64)
    hi = sub.sum(axis=0)
    lo = n - hi
    hi_pos = (sub * y64[:, None]).sum(axis=0)
    lo_pos = int(y64.sum()) - hi_pos
    valid = (hi > 0) & (lo > 0)
    if not valid.any():
        return None

    def side_gini(pos, cnt):
        c = np.maximum(cnt, 1)
        p = pos / c
        return 1.0 - p * p - (1.0 - p) ** 2

    p = y64.sum() / n
    parent = 1.0 - p * p - (1.0 - p) ** 2
    dec = parent - (hi / n) * side_gini(hi_pos, hi) - (lo / n) * side_gini(lo_pos, lo)
    dec = np.where(valid, dec, -np.inf)
    # candidates are sorted by variable index; argmax keeps the first maximum
    best = int(np.argmax(np.round(dec, 12)))
    return best, float(dec[best])


def build_tree(features: np.ndarray, feature_vars: list[int], labels: np.ndarray,
               h: Hyperparams | None = None) -> DecisionTree:
    """Grow a tree on 0/1 ``features`` (rows x len(feature_vars)) predicting ``labels``."""
    h = h or Hyperparams()
    labels = np.asarray(labels, dtype=np.uint8)
    if len(labels) == 0:
        return DecisionTree(TreeNode(label=1), list(feature_vars))
    order = sorted(range(len(feature_vars)), key=lambda i: feature_vars[i])
    X = np.asarray(features, dtype=np.uint8)[:, order]
    fvars = [feature_vars[i] for i in order]

    def grow(rows: np.ndarray, avail: list[int], depth: int) -> TreeNode:
        y = labels[rows]
        node = TreeNode(label=_majority(y), samples=len(rows))
        ones = int(np.count_nonzero(y))
        if ones == 0 or ones == len(y) or not avail:
            return node
        if h.max_depth is not None and depth >= h.max_depth:
            return node
        split = _best_split(X[rows], y, avail)
        if split is None:
            return node
        k, dec = split
        if dec < h.min_impurity_decrease:
            return node
        col = avail[k]
        mask = X[rows, col] == 1
        rest = avail[:k] + avail[k + 1:]
        node.feature = fvars[col]
        node.label = None
        node.low = grow(rows[~mask], rest, depth + 1)
        node.high = grow(rows[mask], rest, depth + 1)
        return node

    root = grow(np.arange(len(labels)), list(range(len(fvars))), 0)
    return DecisionTree(root, fvars)


def extract_function(t: DecisionTree, arena: ExprArena) -> int:
    """Disjunction over root-to-leaf paths ending in label 1."""
    terms = []
    for path, label in t.leaves():
        if label == 1:
            terms.append(arena.conj(arena.var(f) if v else arena.neg(arena.var(f)) for f, v in path))
    return arena.disj(terms) if terms else FALSE


def featset_for(y_j: int, x_vars, y_vars, deps: dict[int, set[int]]) -> list[int]:
    feats = list(x_vars)
    feats += [y_k for y_k in y_vars if y_k != y_j and y_j not in deps.get(y_k, ())]
    return sorted(feats)


def add_dependencies(deps: dict[int, set[int]], y_j: int, used: set[int]) -> None:
    """Record that ``y_j`` depends on ``used``, keeping ``deps`` transitively closed."""
    d_j = deps.setdefault(y_j, set())
    for y_k in used:
        d_j.add(y_k)
        d_j |= deps.get(y_k, set())
    for y_m, d_m in deps.items():
        if y_j in d_m:
            d_m |= d_j
    if y_j in d_j:
        raise RuntimeError(f"dependency cycle through y{y_j}")


def candidate_skf(samples: SampleSet, x_vars, y_vars, y_j: int, deps: dict[int, set[int]],
                  arena: ExprArena, h: Hyperparams | None = None) -> tuple[int, DecisionTree]:
    """Learn ``psi_j`` from ``samples``; updates ``deps`` in place."""
    feats = featset_for(y_j, x_vars, y_vars, deps)
    if len(samples) == 0:
        tree = DecisionTree(TreeNode(label=1), feats)
        deps.setdefault(y_j, set())
        return TRUE, tree
    tree = build_tree(samples.project(feats), feats, samples.column(y_j), h)
    psi = extract_function(tree, arena)
    used = arena.support(psi) & set(y_vars)
    add_dependencies(deps, y_j, used)
    return psi, tree


def find_order(deps: dict[int, set[int]], y_vars) -> list[int]:
    """Linear extension in which every ``y_j`` precedes all members of ``deps[y_j]``.

    Ties go to the smaller variable index.
    """
    ys = list(y_vars)
    indeg = {y: 0 for y in ys}
    for y in ys:
        for k in deps.get(y, ()):
            if k not in indeg:
                raise ValueError(f"dependency on unknown variable {k}")
            indeg[k] += 1
    ready = [y for y in ys if indeg[y] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        y = heapq.heappop(ready)
        order.append(y)
        for k in deps.get(y, ()):
            indeg[k] -= 1
            if indeg[k] == 0:
                heapq.heappush(ready, k)
    if len(order) != len(ys):
        raise RuntimeError("dependency graph has a cycle")
    return order
