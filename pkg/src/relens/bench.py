"""Microbenchmarks comparing naive put with incremental put.

Two synthetic tables are used throughout: ``t1(A, B, C)`` with ``A -> B C``
and ``t2(B, D)`` with ``B -> D``.  Each lens scenario fetches the view,
changes it, computes the view delta (untimed) and then times

* naive: fetch the full source, run ``put`` and diff against the old source;
* incremental: ``lens_delta_put`` against the store.

Both paths must agree before any timing is reported.
"""
from __future__ import annotations

import gc
import math
import random
import statistics
import time
from contextlib import contextmanager
from dataclasses import dataclass, fields

from scipy.stats import spearmanr

from .access import materialize, recording
from .backend import TableStore, sql_dml, sql_dml_naive
from .delta import Delta, delta_apply, rel_diff
from .fdeps import FunDep, FunDepSet
from .lenses import (
    Base,
    DropL,
    JoinDL,
    RelationType,
    SelectL,
    apply_source_delta,
    check_view_delta,
    diff_source,
    lens_build,
    lens_delta_put,
)
from .relalg import TRUE, AttrEqConst, Relation
from .sqlexec import SqlDatabase

SCENARIOS = ("select", "project", "join", "delta-size", "delta-calc", "delta-apply")

T1 = RelationType(("A", "B", "C"), TRUE, FunDepSet([FunDep("A", ["B", "C"])]), ("A",), ("int", "int", "int"))
T2 = RelationType(("B", "D"), TRUE, FunDepSet([FunDep("B", "D")]), ("B",), ("int", "int"))


@dataclass
class BenchConfig:
    scenario: str
    n: int = 10000
    m: int = 100
    trials: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; pick one of {', '.join(SCENARIOS)}")
        if self.n < 10:
            raise ValueError("n must be at least 10")
        if self.trials < 1 or self.trials % 2 == 0:
            raise ValueError("trials must be a positive odd number")


@dataclass
class BenchRow:
    scenario: str
    n: int
    m: int
    naive_total: float
    naive_query: float
    incr_total: float
    incr_query: float
    query_count: int


def bench_generate(n: int, seed: int = 0) -> TableStore:
    """``t1`` with ``n`` rows and ``t2`` with ``n // 10`` rows, reproducible from ``seed``."""
    rng = random.Random(seed)
    k = max(1, n // 10)
    t1 = Relation._make(("A", "B", "C"), frozenset((a, rng.randrange(k), rng.randrange(100)) for a in range(n)))
    t2 = Relation._make(("B", "D"), frozenset((b, rng.randrange(k)) for b in range(k)))
    store = TableStore()
    store.create("t1", T1, t1, check=False)
    store.create("t2", T2, t2, check=False)
    return store


def scenario_lens(name: str):
    cat = {"t1": T1, "t2": T2}
    if name in ("select", "delta-size"):
        return lens_build(SelectL(AttrEqConst("C", 3), JoinDL(Base("t1"), Base("t2"))), cat)
    if name == "project":
        return lens_build(DropL("C", ("A",), 1, Base("t1")), cat)
    if name in ("join", "delta-calc"):
        return lens_build(JoinDL(Base("t1"), Base("t2")), cat)
    raise ValueError(name)


def _modify(view: Relation, cond, col: str, value) -> Relation:
    """Set ``col`` to ``value`` in every row satisfying ``cond``."""
    pos = view.position(col)
    cpos = {a: view.position(a) for a in view.attrs}
    rows = set()
    for row in view.rows:
        if cond({a: row[i] for a, i in cpos.items()}):
            row = row[:pos] + (value,) + row[pos + 1:]
        rows.add(row)
    return Relation._make(view.attrs, frozenset(rows))


def view_update(name: str, view: Relation, bound: int = 0) -> Relation:
    if name == "select":
        return _modify(view, lambda r: 0 <= r["B"] <= 100, "D", 5)
    if name == "delta-size":
        return _modify(view, lambda r: 0 < r["B"] < bound, "D", 5)
    if name == "project":
        return _modify(view, lambda r: 60 < r["A"] < 80, "B", 5)
    if name == "join":
        return _modify(view, lambda r: 40 <= r["B"] <= 50, "C", 5)
    if name == "delta-calc":
        return _modify(view, lambda r: 0 < r["D"] < 10, "B", 5)
    raise ValueError(name)


def _warm(store: TableStore) -> None:
    store.warm("t1", ("A",), ("B",), ("A", "B", "C"))
    store.warm("t2", ("B",), ("B", "D"))


@contextmanager
def _quiet_gc():
    """Collect first and keep the collector out of the timed region."""
    gc.collect()
    was = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was:
            gc.enable()


def _naive(lens, store, new_view):
    with _quiet_gc(), recording() as rec:
        start = time.perf_counter()
        s = materialize(store.source(lens.source))
        ds = diff_source(lens.put(s, new_view), s)
        total = time.perf_counter() - start
    return ds, total, rec.elapsed, rec.query_count


def _incremental(lens, store, dv):
    src = store.source(lens.source)
    with _quiet_gc(), recording() as rec:
        start = time.perf_counter()
        ds = lens_delta_put(lens, src, dv, check=False)
        total = time.perf_counter() - start
    return ds, total, rec.elapsed, rec.query_count


def _median(xs):
    return statistics.median(xs)


def measure_put(lens, store: TableStore, dv: Delta, trials: int, check: bool = True):
    """Median timings for naive and incremental put of the view delta ``dv``.

    Returns ``(naive_total, naive_query, incr_total, incr_query, query_count)``
    in milliseconds; raises if the two paths disagree.
    """
    src = store.source(lens.source)
    if check:
        check_view_delta(lens.view, lens.view_access(src), dv)
    s = materialize(src)
    new_view = delta_apply(lens.get(s), dv)
    naive, incr = [], []
    for _ in range(trials):
        ds_n, t, q, _ = _naive(lens, store, new_view)
        naive.append((t, q))
        ds_i, t, q, count = _incremental(lens, store, dv)
        incr.append((t, q))
        if ds_n != ds_i:
            raise AssertionError("naive and incremental put disagree")
    return (
        1000 * _median(t for t, _ in naive),
        1000 * _median(q for _, q in naive),
        1000 * _median(t for t, _ in incr),
        1000 * _median(q for _, q in incr),
        count,
    )


def run_lens_scenario(name: str, n: int, seed: int = 0, trials: int = 5) -> BenchRow:
    store = bench_generate(n, seed)
    _warm(store)
    lens = scenario_lens(name)
    view = lens.get(store.value(lens.source))
    dv = rel_diff(view_update(name, view), view)
    return BenchRow(name, n, len(dv), *measure_put(lens, store, dv, trials))


def run_delta_size(n: int = 20000, seed: int = 0, trials: int = 3, step: int = 100, limit: int | None = None):
    """Sweep ``b'`` in steps of ``step``; each row modifies ``0 < B < b'`` in the select view."""
    store = bench_generate(n, seed)
    _warm(store)
    lens = scenario_lens("delta-size")
    view = lens.get(store.value(lens.source))
    top = limit if limit is not None else max(1, n // 10) + step
    rows, last = [], -1
    for bound in range(step, top + 1, step):
        dv = rel_diff(view_update("delta-size", view, bound), view)
        if len(dv) == last or not dv:
            continue
        last = len(dv)
        rows.append(BenchRow("delta-size", n, len(dv), *measure_put(lens, store, dv, trials)))
    return rows


def delta_size_summary(rows) -> dict:
    """Crossover delta size and the rank correlation of incremental time with delta size."""
    ms = [r.m for r in rows]
    incr = [r.incr_total for r in rows]
    rho = float(spearmanr(ms, incr).correlation) if len(rows) > 2 else math.nan
    cross = next((r.m for r in rows if r.naive_total < r.incr_total), None)
    return {"crossover": cross, "spearman": rho}


def run_delta_calc(n: int, seed: int = 0, trials: int = 5) -> BenchRow:
    """Time fetching the join view and diffing it against a modified copy."""
    store = bench_generate(n, seed)
    lens = scenario_lens("delta-calc")
    totals, queries = [], []
    for _ in range(trials):
        with recording() as rec:
            start = time.perf_counter()
            view = lens.view_access(store.source(lens.source)).fetch(TRUE)
            dv = rel_diff(view_update("delta-calc", view), view)
            totals.append(time.perf_counter() - start)
        queries.append(rec.elapsed)
    return BenchRow("delta-calc", n, len(dv), math.nan, math.nan,
                    1000 * _median(totals), 1000 * _median(queries), rec.query_count)


def delta_apply_delta(t1: Relation, m: int, seed: int = 0) -> Delta:
    """``m/4`` inserts, ``m/4`` deletes and ``m/2`` key-preserving updates on ``t1``."""
    rng = random.Random(seed + 1)
    rows = sorted(t1.rows)
    q = max(1, m // 4)
    picked = rng.sample(rows, min(len(rows), 3 * q))
    deletes = picked[:q]
    updates = picked[q:3 * q]
    top = max(r[0] for r in rows) + 1 if rows else 0
    k = max(1, len(rows) // 10)
    plus = [(top + i, rng.randrange(k), rng.randrange(100)) for i in range(q)]
    minus = list(deletes)
    for a, b, c in updates:
        minus.append((a, b, c))
        plus.append((a, b, (c + 1 + rng.randrange(99)) % 100))
    return Delta(Relation._make(t1.attrs, frozenset(plus)), Relation._make(t1.attrs, frozenset(minus)))


def run_delta_apply(n: int, m: int, seed: int = 0, trials: int = 5) -> BenchRow:
    """Generate and execute key-paired DML versus delete-all/insert-all DML."""
    store = bench_generate(n, seed)
    t1 = store.relation("t1")
    d = delta_apply_delta(t1, m, seed)
    new = delta_apply(t1, d)
    results = {}
    for mode in ("naive", "incr"):
        totals, queries = [], []
        for _ in range(trials):
            db = SqlDatabase.from_store(store)
            start = time.perf_counter()
            stmts = sql_dml_naive("t1", T1, new) if mode == "naive" else sql_dml("t1", T1, d)
            mid = time.perf_counter()
            db.run(stmts)
            end = time.perf_counter()
            totals.append(end - start)
            queries.append(end - mid)
            if sorted(db.rows("t1")) != new.sorted_rows(T1.columns):
                raise AssertionError(f"{mode} DML does not reproduce the updated table")
        results[mode] = (1000 * _median(totals), 1000 * _median(queries), len(stmts))
    return BenchRow("delta-apply", n, len(d), results["naive"][0], results["naive"][1],
                    results["incr"][0], results["incr"][1], results["incr"][2])


def bench_run(config: BenchConfig) -> list[BenchRow]:
    c = config
    if c.scenario in ("select", "project", "join"):
        return [run_lens_scenario(c.scenario, c.n, c.seed, c.trials)]
    if c.scenario == "delta-size":
        return run_delta_size(c.n, c.seed, c.trials)
    if c.scenario == "delta-calc":
        return [run_delta_calc(c.n, c.seed, c.trials)]
    return [run_delta_apply(c.n, c.m, c.seed, c.trials)]


def format_tsv(rows) -> str:
    names = [f.name for f in fields(BenchRow)]
    lines = ["\t".join(names)]
    for r in rows:
        cells = []
        for name in names:
            v = getattr(r, name)
            cells.append(f"{v:.3f}" if isinstance(v, float) else str(v))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"
