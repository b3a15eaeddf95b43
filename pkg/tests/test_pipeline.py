import csv

import numpy as np
import pytest

from oracles import assignments, skolem_valid
from skolemsynth.expr import FALSE, TRUE, ExprArena
from skolemsynth.formula import CnfFormula, QbfSpec, parse_qdimacs
from skolemsynth.generators import suite
from skolemsynth.pipeline import (TIMING_COLUMNS, RunConfig, bench, csv_columns, derive_seed,
                                  prepare_skolem, summarize, synthesize, verify_cmd)


def test_example_end_to_end(example1):
    res = synthesize(example1)
    rec = res.record
    assert rec.solved and rec.num_unates == 1
    a = res.arena
    for env in assignments([1, 2]):
        assert a.evaluate(res.psi[3], env) == (env[1] | env[2])
        assert a.evaluate(res.psi[4], env) == env[1]
    assert res.psi[5] == TRUE
    assert list(res.psi) == [3, 4, 5]


def test_forced_candidate_repaired_in_one_round(example1):
    a = ExprArena()
    res = synthesize(example1, arena=a, initial_psi={3: a.var(1)})
    assert res.record.status == "solved-refine"
    assert res.record.refine_iterations == 1
    assert res.psi[3] == a.or_(a.var(1), a.var(2))


def test_all_unate_skips_sampling(fixtures_dir):
    spec = parse_qdimacs((fixtures_dir / "all_unate.qdimacs").read_text())
    rec = synthesize(spec).record
    assert rec.status == "solved-preprocess" and rec.num_samples == 0


def test_unsat_matrix_is_vacuously_solved():
    spec = QbfSpec(CnfFormula([[3], [-3, 1], [-3, -1]]), frozenset({1}), (3,))
    res = synthesize(spec)
    assert res.record.solved


def test_iteration_cap_reports_failure():
    spec = parse_qdimacs(open("tests/fixtures/parity8.qdimacs").read())
    rec = synthesize(spec, RunConfig(iteration_cap=3, self_sub_threshold=None)).record
    assert rec.status == "failed" and "cap" in rec.message


def test_timeout_status():
    spec = parse_qdimacs(open("tests/fixtures/parity8.qdimacs").read())
    rec = synthesize(spec, RunConfig(timeout=0.05, self_sub_threshold=None)).record
    assert rec.status == "timeout"


def test_config_validation():
    for bad in ({"samples": -1}, {"probe_n": 0}, {"iteration_cap": 0}, {"timeout": 0},
                {"min_impurity_decrease": -1}, {"self_sub_threshold": -1}):
        with pytest.raises(ValueError):
            RunConfig(**bad)


def test_phase_times_bounded(example1):
    rec = synthesize(example1).record
    assert rec.t_preprocess + rec.t_sampling + rec.t_learning + rec.t_refinement <= rec.t_total


@pytest.mark.parametrize("inst", suite(7, 25), ids=lambda i: f"x{len(i.spec.x_vars)}y{len(i.spec.y_vars)}")
def test_suite_solutions_are_valid(inst):
    res = synthesize(inst.spec)
    assert res.record.solved
    a = res.arena
    assert skolem_valid(inst.spec, lambda ax: {y: a.evaluate(res.psi[y], ax) for y in inst.spec.y_vars})


def test_verify_cmd(example1):
    a = ExprArena()
    good = {3: a.or_(a.var(1), a.var(2)), 4: a.var(1), 5: TRUE}
    assert verify_cmd(example1, good, a).valid
    bad = {3: a.var(1), 4: a.var(1), 5: TRUE}
    rep = verify_cmd(example1, bad, a)
    assert not rep.valid and rep.counterexample.x == {1: 0, 2: 1}


def test_verify_cmd_accepts_acyclic_output_references(example1):
    a = ExprArena()
    psi = {3: a.or_(a.var(1), a.var(2)), 4: a.and_(a.var(1), a.var(3)), 5: TRUE}
    assert verify_cmd(example1, psi, a).valid


def test_verify_cmd_rejects_mismatch_and_cycles(example1):
    a = ExprArena()
    with pytest.raises(ValueError):
        verify_cmd(example1, {3: TRUE, 4: TRUE}, a)
    with pytest.raises(ValueError):
        verify_cmd(example1, {3: TRUE, 4: TRUE, 5: TRUE, 6: TRUE}, a)
    with pytest.raises(ValueError):
        verify_cmd(example1, {3: a.var(4), 4: a.var(3), 5: TRUE}, a)
    with pytest.raises(ValueError):
        verify_cmd(example1, {3: a.var(9), 4: TRUE, 5: TRUE}, a)


def test_verify_cmd_unsat_spec_vacuous():
    spec = QbfSpec(CnfFormula([[3], [-3]]), frozenset({1}), (3,))
    assert verify_cmd(spec, {3: FALSE}, ExprArena()).valid


def test_bench_empty_dir(tmp_path):
    out = tmp_path / "r.csv"
    assert bench(tmp_path, csv_path=out) == []
    assert out.read_text().strip() == ",".join(csv_columns())
    summary = (tmp_path / "r_summary.csv").read_text().splitlines()
    assert summary[0] == "status,count"


def _strip_timing(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return [{k: v for k, v in r.items() if k not in TIMING_COLUMNS} for r in rows]


def test_bench_fixture_dir(tmp_path, fixtures_dir):
    out = tmp_path / "a.csv"
    records = bench(fixtures_dir / "bench", csv_path=out)
    assert len(records) == 10 and summarize(records)["solved"] == 10
    with open(out) as fh:
        cum = [float(r["cumulative_time"]) for r in csv.DictReader(fh)]
    assert len(cum) == 10 and cum == sorted(cum)
    out2 = tmp_path / "b.csv"
    bench(fixtures_dir / "bench", csv_path=out2, jobs=2)
    assert _strip_timing(out) == _strip_timing(out2)


def test_bench_records_parse_failures(tmp_path):
    (tmp_path / "bad.qdimacs").write_text("garbage\n")
    (rec,) = bench(tmp_path)
    assert rec.status == "failed" and rec.message.startswith("parse")


def test_derive_seed_stable():
    assert derive_seed(0, "a") == derive_seed(0, "a")
    assert derive_seed(0, "a") != derive_seed(1, "a")


def test_unsat_matrix_yields_constant_zero():
    spec = QbfSpec(CnfFormula([[3], [-3, 1], [-3, -1]]), frozenset({1}), (3,))
    res = synthesize(spec)
    assert res.record.status == "solved-preprocess" and res.psi == {3: FALSE}
    assert res.record.message == "unsatisfiable matrix"


@pytest.mark.parametrize("samples", [None, 5])
def test_every_refine_round_changes_a_function(samples):
    runs = [synthesize(inst.spec, RunConfig(seed=i, samples=samples)).record for i, inst in enumerate(suite(11, 40))]
    assert all(r.solved for r in runs)
    assert sum(r.stalled_rounds for r in runs) == 0
    assert sum(r.repeated_repairs for r in runs) == 0
