import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import negative_unate, positive_unate
from skolemsynth.expr import FALSE, TRUE
from skolemsynth.formula import CnfFormula, QbfSpec, substitute_const
from skolemsynth.generators import random_cnf
from skolemsynth.preprocess import check_negative_unate, check_positive_unate, preprocess


def test_example_positive_unate(example1):
    report, psi = preprocess(example1)
    assert report.positive == [5] and report.negative == []
    assert psi == {5: TRUE}
    assert all(5 not in map(abs, c) for c in report.reduced_matrix.clauses)


def test_both_unate_variable_counts_as_positive():
    spec = QbfSpec(CnfFormula([[1, 2]]), frozenset({1, 2}), (3,))
    report, psi = preprocess(spec)
    assert report.positive == [3] and psi[3] == TRUE


def test_negative_unate():
    spec = QbfSpec(CnfFormula([[1, -3]]), frozenset({1}), (3,))
    report, psi = preprocess(spec)
    assert report.negative == [3] and psi[3] == FALSE


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_sequential_pass_matches_truth_table(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 11))
    f = random_cnf(rng, n, int(rng.integers(1, 3 * n)), width=(1, 3))
    n_x = int(rng.integers(1, n))
    spec = QbfSpec(f, frozenset(range(1, n_x + 1)), tuple(range(n_x + 1, n + 1)))
    report, _ = preprocess(spec)
    g, pos, neg = f, [], []
    variables = list(range(1, n + 1))
    for y in spec.y_vars:
        if positive_unate(g, y, variables):
            pos.append(y)
            g = substitute_const(g, y, 1)
        elif negative_unate(g, y, variables):
            neg.append(y)
            g = substitute_const(g, y, 0)
    assert report.positive == pos and report.negative == neg


def test_single_checks():
    f = CnfFormula([[1, 3], [-1, 2, -3]])
    assert check_positive_unate(f, 3) == positive_unate(f, 3, [1, 2, 3])
    assert check_negative_unate(f, 3) == negative_unate(f, 3, [1, 2, 3])
