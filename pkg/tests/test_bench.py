import math

import pytest

from relens.bench import (
    BenchConfig,
    bench_generate,
    delta_apply_delta,
    delta_size_summary,
    format_tsv,
    run_delta_apply,
    run_delta_calc,
    run_delta_size,
    run_lens_scenario,
    BenchRow,
)
from relens.fdeps import fd_satisfies


def test_generate_sizes_and_determinism():
    a, b = bench_generate(1000, seed=3), bench_generate(1000, seed=3)
    assert len(a.relation("t1")) == 1000
    assert len(a.relation("t2")) == 100
    assert a.relation("t1") == b.relation("t1")
    assert a.relation("t1") != bench_generate(1000, seed=4).relation("t1")
    assert fd_satisfies(a.relation("t1"), a.type("t1").fds)


def test_config_validation():
    with pytest.raises(ValueError):
        BenchConfig("nope")
    with pytest.raises(ValueError):
        BenchConfig("select", trials=2)
    with pytest.raises(ValueError):
        BenchConfig("select", n=5)


@pytest.mark.parametrize("name", ["select", "project", "join"])
def test_lens_scenarios_run(name):
    row = run_lens_scenario(name, 1000, trials=1)
    assert row.m > 0
    assert row.naive_total > 0 and row.incr_total > 0


def test_join_query_count():
    assert run_lens_scenario("join", 1000, trials=1).query_count == 5


def test_delta_size_rows_grow():
    rows = run_delta_size(2000, trials=1, step=50)
    ms = [r.m for r in rows]
    assert ms == sorted(ms) and len(set(ms)) == len(ms)
    assert "spearman" in delta_size_summary(rows)


def test_delta_calc_and_apply():
    assert run_delta_calc(1000, trials=1).m > 0
    row = run_delta_apply(1000, 40, trials=1)
    assert row.m == 60  # 10 inserts, 10 deletes and 20 updates as delete plus insert
    assert row.query_count == 40  # one statement per logical change


def test_delta_apply_delta_shape():
    t1 = bench_generate(1000).relation("t1")
    d = delta_apply_delta(t1, 100)
    assert len(d.plus) == 75 and len(d.minus) == 75


def test_format_tsv():
    text = format_tsv([BenchRow("x", 1, 2, 1.0, math.nan, 0.5, 0.25, 3)])
    assert text.splitlines()[1] == "x\t1\t2\t1.000\tnan\t0.500\t0.250\t3"
