"""``relens`` command line driver.

Exit codes: 0 success, 1 other errors, 2 parse errors, 3 lens type errors,
4 schema or constraint violations.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import bench
from .backend import load_delta, load_store, read_csv_text, save_store, sql_script, write_csv_text
from .delta import Delta, delta_apply, rel_diff
from .dsl import parse_program
from .errors import (
    FDViolation,
    KeyCollision,
    LensTypeError,
    NotMinimal,
    ParseError,
    PreconditionViolated,
    RelensError,
    SchemaViolation,
)
from .lenses import (
    Tensor,
    apply_source_delta,
    check_value,
    diff_source,
    lens_delta_get,
    lens_delta_put,
    lens_put_naive,
    strip,
)

EXIT_PARSE, EXIT_TYPE, EXIT_SCHEMA = 2, 3, 4


def _load(args):
    prog = parse_program(Path(args.lens).read_text())
    lens = prog.build()
    store = load_store(args.db, prog.tables)
    return prog, lens, store


def _view_csv(lens, rel) -> str:
    vt = strip(lens.view)
    return write_csv_text(rel, vt.columns, vt.kinds or None)


def _single_view(lens):
    if isinstance(lens.view, Tensor):
        raise LensTypeError("cli", "the target lens must have a single relation as its view")
    return strip(lens.view)


def cmd_get(args) -> int:
    _, lens, store = _load(args)
    vt = _single_view(lens)
    s = store.value(lens.source)
    check_value(lens.source, s, "source")
    if args.delta:
        ds = _source_delta_files(lens.source, Path(args.delta), s)
        dv = lens_delta_get(lens, s, ds, strict=args.strict_incremental)
        sys.stdout.write(write_csv_text(dv, vt.columns, vt.kinds or None))
    else:
        sys.stdout.write(_view_csv(lens, lens.get(s)))
    return 0


def _source_delta_files(schema, ddir: Path, s):
    """Per-table source deltas read from ``<table>.delta.csv``; missing files mean no change."""
    if isinstance(schema, Tensor):
        return (_source_delta_files(schema.left, ddir, s[0]), _source_delta_files(schema.right, ddir, s[1]))
    p = ddir / f"{schema.name}.delta.csv"
    if p.exists():
        return load_delta(p, schema.type)
    return Delta.empty(s.attrs)


def _view_delta(args, lens, store):
    vt = _single_view(lens)
    if bool(args.delta) == bool(args.view):
        raise SystemExit("give exactly one of --delta or --view")
    if args.delta:
        return load_delta(args.delta, vt)
    new = read_csv_text(Path(args.view).read_text(), vt)
    old = lens.view_access(store.source(lens.source)).fetch()
    return rel_diff(new, old)


def _propagate(args, lens, store):
    """Source delta for the requested view change, plus naive-DML table values if asked."""
    dv = _view_delta(args, lens, store)
    if args.naive:
        s = store.value(lens.source)
        v = lens.get(s)
        new_s = lens_put_naive(lens, s, delta_apply(v, dv))
        ds = diff_source(new_s, s)
    else:
        ds = lens_delta_put(lens, store.source(lens.source), dv)
    return ds


def _new_values(lens, store, ds):
    return apply_source_delta(store.value(lens.source), ds)


def _sql(args, lens, store, ds):
    values = _new_values(lens, store, ds) if args.naive_dml else None
    return sql_script(lens.source, ds, values)


def cmd_dput(args) -> int:
    _, lens, store = _load(args)
    ds = _propagate(args, lens, store)
    stmts = _sql(args, lens, store, ds) if args.emit_sql else None
    store.apply_source_delta(lens.source, ds)
    save_store(args.db, store)
    if stmts is not None:
        Path(args.emit_sql).write_text("".join(s + "\n" for s in stmts))
    return 0


def cmd_put(args) -> int:
    if not args.view:
        raise SystemExit("put needs --view")
    args.naive = True
    args.delta = None
    return cmd_dput(args)


def cmd_sql(args) -> int:
    _, lens, store = _load(args)
    ds = _propagate(args, lens, store)
    stmts = _sql(args, lens, store, ds)
    text = "".join(s + "\n" for s in stmts)
    if args.emit_sql:
        Path(args.emit_sql).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_check(args) -> int:
    prog, lens, store = _load(args)
    check_value(lens.source, store.value(lens.source), "source")
    print(f"lens {prog.target}: {lens!r}")
    print(f"view columns: {', '.join(_single_view(lens).columns)}")
    for name in store.names():
        print(f"table {name}: {len(store.relation(name))} rows ok")
    return 0


def cmd_bench(args) -> int:
    scenarios = args.scenario or ["select", "project", "join"]
    rows = []
    for sc in scenarios:
        n = args.n
        if n is None:
            n = 200000 if args.large else (20000 if sc == "delta-size" else 10000)
        cfg = bench.BenchConfig(sc, n=n, m=args.m, trials=args.trials, seed=args.seed)
        rows += bench.bench_run(cfg)
    sys.stdout.write(bench.format_tsv(rows))
    if "delta-size" in scenarios:
        summary = bench.delta_size_summary([r for r in rows if r.scenario == "delta-size"])
        print(f"# delta-size crossover={summary['crossover']} spearman={summary['spearman']:.3f}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relens", description="Relational lenses with incremental put.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, delta=True):
        sp.add_argument("--lens", required=True, help="lens program file")
        sp.add_argument("--db", required=True, help="directory of <table>.csv files")
        if delta:
            sp.add_argument("--delta", help="view delta CSV (leading +/- column)")
            sp.add_argument("--view", help="updated view CSV, diffed against the current view")
            sp.add_argument("--emit-sql", help="write the DML statements to this file")
            sp.add_argument("--naive", action="store_true", help="use state-based put instead of incremental put")
            sp.add_argument("--naive-dml", action="store_true", help="emit delete-all/insert-all DML")

    g = sub.add_parser("get", help="print the view")
    g.add_argument("--lens", required=True)
    g.add_argument("--db", required=True)
    g.add_argument("--delta", help="directory of <table>.delta.csv source deltas; prints the view delta")
    g.add_argument("--strict-incremental", action="store_true",
                   help="fail instead of recomputing when a query is not incrementalisable")
    g.set_defaults(func=cmd_get)
    for name, func, text in (("put", cmd_put, "state-based put of an updated view"),
                             ("dput", cmd_dput, "propagate a view change and apply it"),
                             ("sql", cmd_sql, "print the DML for a view change without applying it")):
        sp = sub.add_parser(name, help=text)
        common(sp)
        sp.set_defaults(func=func)
    c = sub.add_parser("check", help="type check the lens and validate the tables")
    common(c, delta=False)
    c.set_defaults(func=cmd_check)
    b = sub.add_parser("bench", help="run benchmark scenarios, TSV on stdout")
    b.add_argument("scenario", nargs="*", metavar="SCENARIO",
                   help=f"any of {', '.join(bench.SCENARIOS)} (default: select project join)")
    b.add_argument("--n", type=int, default=None)
    b.add_argument("--m", type=int, default=100)
    b.add_argument("--trials", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--large", action="store_true", help="n = 200000")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="relens: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except LensTypeError as e:
        print(f"type error: {e}", file=sys.stderr)
        return EXIT_TYPE
    except (SchemaViolation, FDViolation, NotMinimal, KeyCollision, PreconditionViolated) as e:
        print(f"schema violation: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except (RelensError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
