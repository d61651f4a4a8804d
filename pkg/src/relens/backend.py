"""In-memory table store, CSV persistence and SQL rendering.

The store answers ``sigma_P`` fetches.  Predicates built from ``TupleIn`` and
attribute/constant equalities are served from hash indexes that are built on
first use and maintained when deltas are applied; anything else is a scan.
"""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from pathlib import Path

from .access import Access, _recorder
from .delta import Delta, check_minimal, delta_apply
from .errors import (
    FDViolation,
    KeyCollision,
    ParseError,
    SchemaViolation,
    UnknownTable,
    Unrenderable,
)
from .fdeps import affected, check_satisfies
from .lenses import RelationType, Table, Tensor, check_relation
from .relalg import (
    FALSE,
    TRUE,
    And,
    AttrCmp,
    AttrEqAttr,
    AttrEqConst,
    JoinPred,
    Not,
    Or,
    Predicate,
    Relation,
    TruePred,
    TupleIn,
    _getter,
    compile_pred,
    conjuncts,
    disjuncts,
    dnf_terms,
    push_renames,
    value_kind,
)


# ---------------------------------------------------------------------------
# Store


@dataclass
class _Stored:
    type: RelationType
    rel: Relation
    indexes: dict = field(default_factory=dict)

    def index(self, attrs: tuple) -> dict:
        idx = self.indexes.get(attrs)
        if idx is None:
            key = _getter(self.rel.positions(attrs))
            idx = {}
            for row in self.rel.rows:
                idx.setdefault(key(row), set()).add(row)
            self.indexes[attrs] = idx
        return idx

    def patch(self, remove, add) -> None:
        for attrs, idx in self.indexes.items():
            key = _getter(self.rel.positions(attrs))
            for row in remove:
                k = key(row)
                bucket = idx[k]
                bucket.discard(row)
                if not bucket:
                    del idx[k]
            for row in add:
                idx.setdefault(key(row), set()).add(row)


def _lookup(stored: _Stored, p: Predicate):
    """Rows for an index-friendly predicate, or None when ``p`` needs a scan."""
    if isinstance(p, TupleIn):
        idx = stored.index(p.attrs)
        out = set()
        for k in p.rel.rows:
            hit = idx.get(k)
            if hit:
                out |= hit
        return out
    if isinstance(p, AttrEqConst):
        idx = stored.index((p.attr,))
        return set(idx.get((p.value,), ()))
    if p == FALSE:
        return set()
    return None


def _indexed_select(stored: _Stored, pred: Predicate) -> Relation:
    rel = stored.rel
    if pred == TRUE:
        return rel
    pred = push_renames(pred)
    terms = dnf_terms(pred)
    rows = set()
    for cs in terms or ():
        hit, rest = None, []
        for c in cs:
            if hit is None:
                hit = _lookup(stored, c)
                if hit is not None:
                    continue
            rest.append(c)
        if hit is None:
            terms = None
            break
        if rest:
            hit = filter(compile_pred(_conj(rest), rel.attrs), hit)
        rows.update(hit)
    if terms is None:
        return Relation._make(rel.attrs, frozenset(filter(compile_pred(pred, rel.attrs), rel.rows)))
    return Relation._make(rel.attrs, frozenset(rows))


def _conj(ps):
    out = TRUE
    for p in reversed(ps):
        out = p if out == TRUE else And(p, out)
    return out


class TableStore:
    """Named base tables with their relation types."""

    def __init__(self):
        self._tables: dict[str, _Stored] = {}

    def create(self, name: str, rtype: RelationType, rel: Relation | None = None, check: bool = True) -> None:
        if rel is None:
            rel = Relation.empty(rtype.columns)
        if check:
            check_relation(rel, rtype, name)
        self._tables[name] = _Stored(rtype, rel)

    def names(self) -> list:
        return sorted(self._tables)

    def _get(self, name) -> _Stored:
        try:
            return self._tables[name]
        except KeyError:
            raise UnknownTable(f"no table named {name!r}") from None

    def type(self, name: str) -> RelationType:
        return self._get(name).type

    def relation(self, name: str) -> Relation:
        return self._get(name).rel

    def catalog(self) -> dict:
        return {n: s.type for n, s in self._tables.items()}

    def fetch(self, name: str, pred: Predicate = TRUE) -> Relation:
        """``sigma_P`` of a stored table; logged when a recorder is active."""
        stored = self._get(name)
        rec = _recorder.get()
        if rec is not None:
            rec.base.append((name, pred, len(stored.rel)))
        return _indexed_select(stored, pred)

    def warm(self, name: str, *attr_sets) -> None:
        """Build indexes ahead of time."""
        stored = self._get(name)
        for attrs in attr_sets:
            stored.index(tuple(sorted(attrs)))

    def access(self, name: str) -> "TableAccess":
        self._get(name)
        return TableAccess(self, name)

    def source(self, schema):
        """Accesses laid out like a lens source schema."""
        if isinstance(schema, Tensor):
            return (self.source(schema.left), self.source(schema.right))
        if isinstance(schema, Table):
            return self.access(schema.name)
        raise UnknownTable("source schema leaf has no table name")

    def value(self, schema):
        if isinstance(schema, Tensor):
            return (self.value(schema.left), self.value(schema.right))
        return self.relation(schema.name)

    def apply_delta(self, name: str, d: Delta) -> None:
        """Replace table ``name`` by ``M (+) d``; rolled back if the result breaks the table type."""
        stored = self._get(name)
        old = stored.rel
        check_minimal(d, old, f"delta for {name}")
        if not d:
            return
        stored.rel = delta_apply(old, d, check=False)
        stored.patch(d.minus.rows, d.plus.rows)
        try:
            self._check_after(name, stored, d)
        except SchemaViolation:
            stored.patch(d.plus.rows, d.minus.rows)
            stored.rel = old
            raise

    def _check_after(self, name, stored, d):
        rt = stored.type
        plus = d.plus
        if not plus:
            return
        check_relation(plus, RelationType(rt.columns, rt.pred, (), (), rt.kinds), name)
        near = _indexed_select(stored, affected(rt.fds, plus))
        try:
            check_satisfies(near, rt.fds)
        except FDViolation as e:
            raise SchemaViolation("fds", f"{name}: {e}", witness=e.witness) from None

    def apply_source_delta(self, schema, ds) -> None:
        """Apply a delta per table of ``schema``; all or nothing."""
        pairs = list(_pair_leaves(schema, ds))
        done = []
        try:
            for name, d in pairs:
                self.apply_delta(name, d)
                done.append((name, d))
        except Exception:
            for name, d in reversed(done):
                self.apply_delta(name, Delta._make(d.minus, d.plus))
            raise


def _pair_leaves(schema, ds):
    if isinstance(schema, Tensor):
        yield from _pair_leaves(schema.left, ds[0])
        yield from _pair_leaves(schema.right, ds[1])
    else:
        yield schema.name, ds


class TableAccess(Access):
    def __init__(self, store: TableStore, name: str):
        self.store = store
        self.name = name
        self.attrs = store.relation(name).attrs

    def _fetch(self, pred):
        return self.store.fetch(self.name, pred)

    def describe(self):
        return self.name


# ---------------------------------------------------------------------------
# CSV

def _parse_value(text: str, kind: str, line: int, col: int):
    if kind == "str":
        return text
    if kind == "int":
        try:
            return int(text)
        except ValueError:
            raise ParseError(f"expected an integer, got {text!r}", line, col) from None
    if kind == "bool":
        low = text.strip().lower()
        if low in ("true", "false"):
            return low == "true"
        raise ParseError(f"expected true or false, got {text!r}", line, col)
    raise ParseError(f"unknown column type {kind!r}", line, col)


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _parse_header(cells, line=1):
    cols, kinds = [], []
    for i, cell in enumerate(cells, 1):
        name, sep, kind = cell.strip().partition(":")
        if not sep or not name or kind not in ("int", "str", "bool"):
            raise ParseError(f"header cell {cell!r} must look like name:int, name:str or name:bool", line, i)
        cols.append(name)
        kinds.append(kind)
    if len(set(cols)) != len(cols):
        raise ParseError("duplicate column in header", line, 1)
    return cols, kinds


def read_csv_text(text: str, rtype: RelationType | None = None, signed: bool = False):
    """Parse CSV text into a relation, or into a delta when ``signed``."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("missing header", 1, 1) from None
    if signed:
        if not header or header[0].strip() != "":
            raise ParseError("delta files start with an unnamed sign column", 1, 1)
        header = header[1:]
    cols, kinds = _parse_header(header)
    if rtype is not None:
        want = dict(zip(rtype.columns, rtype.kinds)) if rtype.kinds else None
        if set(cols) != set(rtype.columns) or (want and any(want[c] != k for c, k in zip(cols, kinds))):
            raise ParseError(f"header {header} does not match declared columns {list(rtype.columns)}", 1, 1)
    plus, minus = [], []
    for lineno, cells in enumerate(reader, 2):
        if not cells or all(not c.strip() for c in cells):
            continue
        sign = None
        if signed:
            sign, cells = cells[0].strip(), cells[1:]
            if sign not in ("+", "-"):
                raise ParseError(f"sign must be + or -, got {sign!r}", lineno, 1)
        if len(cells) != len(cols):
            raise ParseError(f"expected {len(cols)} fields, got {len(cells)}", lineno, len(cells) + 1)
        off = 2 if signed else 1
        row = tuple(_parse_value(c, k, lineno, i + off) for i, (c, k) in enumerate(zip(cells, kinds)))
        (minus if sign == "-" else plus).append(row)
    if not signed:
        return Relation(cols, plus)
    return Delta(Relation(cols, plus), Relation(cols, minus))


def write_csv_text(value, columns=None, kinds=None) -> str:
    """Canonical CSV for a relation or (signed) delta: declared column order, sorted rows."""
    signed = isinstance(value, Delta)
    rel = value.plus if signed else value
    columns = list(columns or rel.attrs)
    if kinds is None:
        guessed = rel.kinds() if rel.rows else {}
        if signed and not guessed and value.minus.rows:
            guessed = value.minus.kinds()
        kinds = [guessed.get(c, "str") for c in columns]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(([""] if signed else []) + [f"{c}:{k}" for c, k in zip(columns, kinds)])
    parts = [("-", value.minus), ("+", value.plus)] if signed else [(None, rel)]
    for sign, r in parts:
        for row in r.sorted_rows(columns):
            w.writerow(([sign] if signed else []) + [_format_value(v) for v in row])
    return buf.getvalue()


def load_csv(path, rtype: RelationType | None = None) -> Relation:
    return read_csv_text(Path(path).read_text(), rtype)


def save_csv(path, rel: Relation, rtype: RelationType | None = None) -> None:
    Path(path).write_text(write_csv_text(rel, rtype.columns if rtype else None, rtype.kinds if rtype and rtype.kinds else None))


def load_delta(path, rtype: RelationType | None = None) -> Delta:
    return read_csv_text(Path(path).read_text(), rtype, signed=True)


def save_delta(path, d: Delta, rtype: RelationType | None = None) -> None:
    Path(path).write_text(write_csv_text(d, rtype.columns if rtype else None, rtype.kinds if rtype and rtype.kinds else None))


def load_store(dbdir, catalog: dict) -> TableStore:
    """Load ``<table>.csv`` for every declared table; a missing file is an empty table."""
    store = TableStore()
    for name, rtype in catalog.items():
        p = Path(dbdir) / f"{name}.csv"
        rel = load_csv(p, rtype) if p.exists() else Relation.empty(rtype.columns)
        store.create(name, rtype, rel)
    return store


def save_store(dbdir, store: TableStore) -> None:
    Path(dbdir).mkdir(parents=True, exist_ok=True)
    for name in store.names():
        save_csv(Path(dbdir) / f"{name}.csv", store.relation(name), store.type(name))


# ---------------------------------------------------------------------------
# SQL

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def sql_ident(name: str) -> str:
    if not _IDENT.match(name):
        raise Unrenderable(f"identifier {name!r} cannot be rendered")
    return name


def sql_literal(v) -> str:
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return "'" + v.replace("'", "''") + "'"
    raise Unrenderable(f"value {v!r} cannot be rendered")


_SQL_OPS = {"<": "<", "<=": "<=", ">": ">", ">=": ">=", "!=": "<>"}


def sql_where(p: Predicate) -> str:
    """Render a predicate as a SQL boolean expression."""
    return _where(push_renames(p))


def _where(p: Predicate) -> str:
    if isinstance(p, TruePred):
        return "TRUE"
    if isinstance(p, Not):
        if isinstance(p.p, TruePred):
            return "FALSE"
        return f"NOT ({_where(p.p)})"
    if isinstance(p, (And, JoinPred)):
        return " AND ".join(f"({_where(c)})" for c in conjuncts(And(p.p, p.q)))
    if isinstance(p, Or):
        return " OR ".join(f"({_where(c)})" for c in disjuncts(p))
    if isinstance(p, AttrEqConst):
        return f"{sql_ident(p.attr)} = {sql_literal(p.value)}"
    if isinstance(p, AttrEqAttr):
        return f"{sql_ident(p.left)} = {sql_ident(p.right)}"
    if isinstance(p, AttrCmp):
        return f"{sql_ident(p.attr)} {_SQL_OPS[p.op]} {sql_literal(p.value)}"
    if isinstance(p, TupleIn):
        rows = p.rel.sorted_rows()
        if not rows:
            return "FALSE"
        if len(p.attrs) == 1:
            return f"{sql_ident(p.attrs[0])} IN ({', '.join(sql_literal(r[0]) for r in rows)})"
        return " OR ".join(
            "(" + " AND ".join(f"{sql_ident(a)} = {sql_literal(v)}" for a, v in zip(p.attrs, r)) + ")"
            for r in rows
        )
    raise Unrenderable(f"{type(p).__name__} has no SQL rendering")


def _key_where(cols, row) -> str:
    return " AND ".join(f"{sql_ident(c)} = {sql_literal(v)}" for c, v in zip(cols, row))


def _sort_key(row):
    return tuple((value_kind(v), v) for v in row)


def sql_dml(table: str, rtype: RelationType, d: Delta) -> list[str]:
    """Key-paired DML for applying ``d`` to ``table``.

    A deleted and an inserted row with the same key become one UPDATE of the
    non-key columns; the remaining rows become DELETEs and INSERTs.
    """
    columns = list(rtype.columns)
    keys = list(rtype.keys) or columns
    nonkey = [c for c in columns if c not in keys]
    kpos = d.plus.positions(keys)
    cpos = d.plus.positions(columns)
    npos = d.plus.positions(nonkey)
    key = _getter(kpos)
    plus, minus = {}, {}
    for rows, side in ((d.plus.rows, plus), (d.minus.rows, minus)):
        for row in rows:
            k = key(row)
            if k in side:
                raise KeyCollision(f"{table}: two rows with key {dict(zip(keys, k))} on the same side of the delta")
            side[k] = row
    t = sql_ident(table)
    deletes, updates, inserts = [], [], []
    for k in sorted(minus, key=_sort_key):
        if k in plus and nonkey:
            new = plus[k]
            sets = ", ".join(f"{sql_ident(c)} = {sql_literal(new[p])}" for c, p in zip(nonkey, npos))
            updates.append(f"UPDATE {t} SET {sets} WHERE {_key_where(keys, k)};")
        else:
            deletes.append(f"DELETE FROM {t} WHERE {_key_where(keys, k)};")
    for k in sorted(plus, key=_sort_key):
        if k in minus and nonkey:
            continue
        row = plus[k]
        inserts.append(
            f"INSERT INTO {t} ({', '.join(map(sql_ident, columns))}) "
            f"VALUES ({', '.join(sql_literal(row[p]) for p in cpos)});"
        )
    return deletes + updates + inserts


def sql_dml_naive(table: str, rtype: RelationType, new: Relation) -> list[str]:
    """Replace the whole table: one DELETE of everything, then one INSERT per row."""
    columns = list(rtype.columns)
    t = sql_ident(table)
    out = [f"DELETE FROM {t};"]
    cols = ", ".join(map(sql_ident, columns))
    for row in new.sorted_rows(columns):
        out.append(f"INSERT INTO {t} ({cols}) VALUES ({', '.join(map(sql_literal, row))});")
    return out


def sql_script(schema, ds, naive_values=None) -> list[str]:
    """DML for a source delta over ``schema``, tables in name order."""
    per = {}
    vals = dict(_pair_leaves(schema, naive_values)) if naive_values is not None else None
    for leaf, d in zip(_leaf_tables(schema), _flat(ds)):
        if vals is not None:
            per[leaf.name] = sql_dml_naive(leaf.name, leaf.type, vals[leaf.name])
        else:
            per[leaf.name] = sql_dml(leaf.name, leaf.type, d)
    return [s for name in sorted(per) for s in per[name]]


def _leaf_tables(schema):
    if isinstance(schema, Tensor):
        return _leaf_tables(schema.left) + _leaf_tables(schema.right)
    return [schema]


def _flat(x):
    if isinstance(x, tuple):
        return [y for v in x for y in _flat(v)]
    return [x]
