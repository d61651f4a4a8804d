"""A small reference interpreter for the SQL dialect emitted by :mod:`relens.backend`.

It parses and evaluates statements on its own, without going through the
predicate machinery of :mod:`relens.relalg`, so it can serve as an
independent check of the emitted DML.  Tables keep a primary key index;
statements whose WHERE clause is exactly a key equality use it.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ParseError, UnknownTable

_TOKEN = re.compile(
    r"\s*(?:(?P<num>-?\d+)|(?P<str>'(?:[^']|'')*')|(?P<op><>|<=|>=|[=<>(),;*])|(?P<word>[A-Za-z_][A-Za-z0-9_]*))"
)
_KEYWORDS = {"SELECT", "FROM", "WHERE", "DELETE", "UPDATE", "SET", "INSERT", "INTO", "VALUES",
             "AND", "OR", "NOT", "IN", "TRUE", "FALSE"}


def tokenize(text: str) -> list:
    toks, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", 1, pos + 1)
        pos = m.end()
        if m.group("num") is not None:
            toks.append(("lit", int(m.group("num"))))
        elif m.group("str") is not None:
            toks.append(("lit", m.group("str")[1:-1].replace("''", "'")))
        elif m.group("op") is not None:
            toks.append(("op", m.group("op")))
        else:
            w = m.group("word")
            if w.upper() in ("TRUE", "FALSE"):
                toks.append(("lit", w.upper() == "TRUE"))
            elif w.upper() in _KEYWORDS:
                toks.append(("kw", w.upper()))
            else:
                toks.append(("id", w))
    return toks


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else ("eof", None)

    def take(self, kind=None, value=None):
        t = self.peek()
        if (kind and t[0] != kind) or (value is not None and t[1] != value):
            raise ParseError(f"expected {value or kind}, found {t[1]!r}", 1, self.i + 1)
        self.i += 1
        return t[1]

    def accept(self, kind, value):
        if self.peek() == (kind, value):
            self.i += 1
            return True
        return False

    def literal_list(self):
        self.take("op", "(")
        vals = [self.take("lit")]
        while self.accept("op", ","):
            vals.append(self.take("lit"))
        self.take("op", ")")
        return vals

    # expressions are tuples: ("or", a, b) ("and", a, b) ("not", a) ("cmp", op, l, r) ("in", col, vals) ("lit", v)
    def expr(self):
        e = self.conj()
        while self.accept("kw", "OR"):
            e = ("or", e, self.conj())
        return e

    def conj(self):
        e = self.neg()
        while self.accept("kw", "AND"):
            e = ("and", e, self.neg())
        return e

    def neg(self):
        if self.accept("kw", "NOT"):
            return ("not", self.neg())
        return self.atom()

    def operand(self):
        kind, v = self.peek()
        if kind == "id":
            self.i += 1
            return ("col", v)
        return ("lit", self.take("lit"))

    def atom(self):
        if self.accept("op", "("):
            e = self.expr()
            self.take("op", ")")
            return e
        left = self.operand()
        kind, v = self.peek()
        if kind == "op" and v in ("=", "<>", "<", "<=", ">", ">="):
            self.i += 1
            return ("cmp", v, left, self.operand())
        if (kind, v) == ("kw", "IN") and left[0] == "col":
            self.i += 1
            return ("in", left[1], self.literal_list())
        if left[0] == "lit" and isinstance(left[1], bool):
            return left
        raise ParseError(f"incomplete condition near {v!r}", 1, self.i + 1)

    def statement(self):
        kw = self.take("kw")
        if kw == "SELECT":
            self.take("op", "*")
            self.take("kw", "FROM")
            stmt = ("select", self.take("id"), self.where())
        elif kw == "DELETE":
            self.take("kw", "FROM")
            stmt = ("delete", self.take("id"), self.where())
        elif kw == "UPDATE":
            table = self.take("id")
            self.take("kw", "SET")
            sets = []
            while True:
                col = self.take("id")
                self.take("op", "=")
                sets.append((col, self.take("lit")))
                if not self.accept("op", ","):
                    break
            stmt = ("update", table, sets, self.where())
        elif kw == "INSERT":
            self.take("kw", "INTO")
            table = self.take("id")
            self.take("op", "(")
            cols = [self.take("id")]
            while self.accept("op", ","):
                cols.append(self.take("id"))
            self.take("op", ")")
            self.take("kw", "VALUES")
            stmt = ("insert", table, cols, self.literal_list())
        else:
            raise ParseError(f"unsupported statement {kw}", 1, 1)
        self.accept("op", ";")
        if self.peek()[0] != "eof":
            raise ParseError(f"trailing input {self.peek()[1]!r}", 1, self.i + 1)
        return stmt

    def where(self):
        if self.accept("kw", "WHERE"):
            return self.expr()
        return ("lit", True)


def parse_statement(text: str):
    return _Parser(tokenize(text)).statement()


def _value(operand, row):
    if operand[0] == "col":
        try:
            return row[operand[1]]
        except KeyError:
            raise UnknownTable(f"no column {operand[1]!r}") from None
    return operand[1]


def _compare(op, a, b):
    if type(a) is not type(b):
        raise TypeError(f"cannot compare {a!r} with {b!r}")
    if op == "=":
        return a == b
    if op == "<>":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def evaluate(expr, row: dict) -> bool:
    tag = expr[0]
    if tag == "lit":
        return bool(expr[1])
    if tag == "or":
        return evaluate(expr[1], row) or evaluate(expr[2], row)
    if tag == "and":
        return evaluate(expr[1], row) and evaluate(expr[2], row)
    if tag == "not":
        return not evaluate(expr[1], row)
    if tag == "in":
        v = row[expr[1]]
        return any(type(v) is type(x) and v == x for x in expr[2])
    return _compare(expr[1], _value(expr[2], row), _value(expr[3], row))


def _key_lookup(expr, keys):
    """The key tuple when ``expr`` is exactly ``k1 = c1 AND ... AND kn = cn``."""
    found = {}
    stack = [expr]
    while stack:
        e = stack.pop()
        if e[0] == "and":
            stack += [e[1], e[2]]
        elif e[0] == "cmp" and e[1] == "=" and e[2][0] == "col" and e[3][0] == "lit":
            found[e[2][1]] = e[3][1]
        else:
            return None
    if set(found) != set(keys):
        return None
    return tuple(found[k] for k in keys)


@dataclass
class SqlTable:
    columns: list
    keys: list
    rows: dict = field(default_factory=dict)  # key tuple -> row dict

    def key_of(self, row: dict) -> tuple:
        return tuple(row[k] for k in self.keys)


class SqlDatabase:
    """Tables of dict rows with a unique primary key."""

    def __init__(self):
        self.tables: dict[str, SqlTable] = {}

    @classmethod
    def from_store(cls, store) -> "SqlDatabase":
        db = cls()
        for name in store.names():
            t = store.type(name)
            rel = store.relation(name)
            db.create(name, list(t.columns), list(t.keys) or list(t.columns), (dict(r) for r in rel))
        return db

    def create(self, name, columns, keys, rows=()):
        t = SqlTable(list(columns), list(keys))
        for r in rows:
            self._insert(t, dict(r) if isinstance(r, dict) else dict(zip(t.columns, r)))
        self.tables[name] = t

    def _table(self, name) -> SqlTable:
        try:
            return self.tables[name]
        except KeyError:
            raise UnknownTable(f"no table named {name!r}") from None

    def _insert(self, t: SqlTable, row: dict):
        k = t.key_of(row)
        if k in t.rows:
            raise ValueError(f"duplicate key {k}")
        t.rows[k] = row

    def _matching(self, t: SqlTable, where):
        k = _key_lookup(where, t.keys)
        if k is not None:
            return [k] if k in t.rows else []
        return [k for k, row in t.rows.items() if evaluate(where, row)]

    def execute(self, text: str):
        stmt = parse_statement(text)
        t = self._table(stmt[1])
        if stmt[0] == "select":
            return [dict(t.rows[k]) for k in self._matching(t, stmt[2])]
        if stmt[0] == "delete":
            for k in self._matching(t, stmt[2]):
                del t.rows[k]
        elif stmt[0] == "update":
            for k in self._matching(t, stmt[3]):
                row = dict(t.rows.pop(k))
                for col, v in stmt[2]:
                    if col not in row:
                        raise UnknownTable(f"no column {col!r}")
                    row[col] = v
                self._insert(t, row)
        else:
            cols, vals = stmt[2], stmt[3]
            if sorted(cols) != sorted(t.columns) or len(vals) != len(cols):
                raise ValueError("INSERT must give every column exactly once")
            self._insert(t, dict(zip(cols, vals)))
        return None

    def run(self, statements):
        for s in statements:
            self.execute(s)

    def rows(self, name) -> list:
        t = self._table(name)
        return [tuple(r[c] for c in t.columns) for r in t.rows.values()]
