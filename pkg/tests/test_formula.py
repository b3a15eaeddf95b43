import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import assignments, holds
from skolemsynth.formula import (ClauseCountError, CnfFormula, EmptyExistentialError, HeaderError,
                                 LiteralRangeError, MissingTerminatorError, PrefixError, QbfSpec,
                                 UnboundVariableError, eval_cnf, models_table, negate_cnf,
                                 normalize_clause, parse_qdimacs, substitute_const, write_qdimacs)

clause_st = st.lists(st.integers(1, 5).flatmap(lambda v: st.sampled_from([v, -v])), min_size=1, max_size=4)
cnf_st = st.lists(clause_st, max_size=8).map(lambda cs: CnfFormula(cs, num_vars=5))


def test_normalize_clause_dedups_and_detects_tautology():
    assert normalize_clause([1, 2, 1]) == (1, 2)
    assert normalize_clause([1, -1, 3]) is None
    f = CnfFormula([[1, -1], [2]])
    assert f.clauses == [(2,)]


def test_parse_example(example1):
    assert example1.x_vars == {1, 2}
    assert example1.y_vars == (3, 4, 5)
    assert len(example1.matrix) == 8


def test_free_variables_become_universal():
    spec = parse_qdimacs("p cnf 3 1\ne 3 0\n1 2 3 0\n")
    assert spec.x_vars == {1, 2}


def test_clause_may_span_lines():
    spec = parse_qdimacs("p cnf 2 1\na 1 0\ne 2 0\n1\n2 0\n")
    assert spec.matrix.clauses == [(1, 2)]


@pytest.mark.parametrize("text,err", [
    ("a 1 0\n", HeaderError),
    ("", HeaderError),
    ("p cnf 2 1\np cnf 2 1\n", HeaderError),
    ("p cnf 2 1\na 1\ne 2 0\n1 2 0\n", MissingTerminatorError),
    ("p cnf 2 1\na 1 0\ne 2 0\n1 2\n", MissingTerminatorError),
    ("p cnf 2 1\na 1 0\ne 3 0\n1 2 0\n", LiteralRangeError),
    ("p cnf 2 1\na 1 0\ne 2 0\n1 5 0\n", LiteralRangeError),
    ("p cnf 2 2\na 1 0\ne 2 0\n1 2 0\n", ClauseCountError),
    ("p cnf 2 1\na 1 2 0\n1 2 0\n", EmptyExistentialError),
    ("p cnf 3 1\na 1 0\ne 2 0\na 3 0\n1 2 0\n", PrefixError),
    ("p cnf 2 1\na 1 0\ne 1 0\n1 2 0\n", PrefixError),
    ("p cnf 2 1\na 1 0\n1 2 0\ne 2 0\n", PrefixError),
])
def test_parse_errors(text, err):
    with pytest.raises(err):
        parse_qdimacs(text)


def test_parse_error_carries_line():
    with pytest.raises(LiteralRangeError) as ei:
        parse_qdimacs("p cnf 2 1\na 1 0\ne 2 0\n1 7 0\n")
    assert ei.value.line == 4


def test_write_roundtrip(example1):
    again = parse_qdimacs(write_qdimacs(example1))
    assert again == example1


def test_qbfspec_invariants():
    with pytest.raises(ValueError):
        QbfSpec(CnfFormula([[1, 2]]), frozenset({1}), ())
    with pytest.raises(ValueError):
        QbfSpec(CnfFormula([[1, 2]]), frozenset({1, 2}), (2,))
    with pytest.raises(ValueError):
        QbfSpec(CnfFormula([[1, 3]]), frozenset({1}), (2,))


def test_eval_unbound_raises():
    with pytest.raises(UnboundVariableError):
        eval_cnf(CnfFormula([[1, 2]]), {1: 0})


@given(cnf_st)
def test_eval_matches_direct_check(f):
    for a in assignments(range(1, 6)):
        assert eval_cnf(f, a) == holds(f.clauses, a)


@given(cnf_st, st.integers(1, 5), st.integers(0, 1))
def test_substitute_const_is_cofactor(f, v, b):
    g = substitute_const(f, v, b)
    others = [u for u in range(1, 6) if u != v]
    for a in assignments(others):
        assert holds(g.clauses, a) == holds(f.clauses, {**a, v: b})


@settings(max_examples=60)
@given(cnf_st)
def test_negate_cnf_is_negation(f):
    sink = CnfFormula(num_vars=5)
    r = negate_cnf(f, None, sink)
    sink.add_clause([r])
    aux = list(range(6, sink.num_vars + 1))
    for a in assignments(range(1, 6)):
        extendable = any(holds(sink.clauses, {**a, **b}) for b in assignments(aux))
        assert extendable == (not holds(f.clauses, a))


def test_negate_cnf_renames():
    f = CnfFormula([[1, 2]])
    sink = CnfFormula(num_vars=4)
    negate_cnf(f, {2: 4}, sink)
    assert 2 not in sink.variables()
    assert 4 in sink.variables()


@given(cnf_st)
def test_models_table_matches_enumeration(f):
    vs = [3, 1, 2, 4, 5]
    table = models_table(f, vs)
    expected = [[a[v] for v in vs] for a in assignments(vs) if holds(f.clauses, a)]
    assert table.tolist() == expected
