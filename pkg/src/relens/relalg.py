"""Records, relations, predicates and a small relational query language.

A relation is stored as a sorted tuple of attribute names plus a frozenset of
value tuples aligned with that order.  Records handed to and from users are
plain dicts; the tuple form is what the operators work on.
"""
from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Sequence
from typing import Union as _TUnion

from .errors import (
    BadRename,
    DomainMismatch,
    MissingAttribute,
    RelensError,
    TypeMismatch,
    UnboundVariable,
    Unevaluable,
)

Value = _TUnion[int, str, bool]
Record = Mapping[str, Value]

_KINDS = {bool: "bool", int: "int", str: "str"}


def value_kind(v) -> str:
    try:
        return _KINDS[type(v)]
    except KeyError:
        raise TypeMismatch(f"unsupported value {v!r} of type {type(v).__name__}") from None


def _same_kind(x, y) -> None:
    if type(x) is not type(y):
        raise TypeMismatch(f"cannot compare {x!r} ({value_kind(x)}) with {y!r} ({value_kind(y)})")


def _getter(positions: Sequence[int]) -> Callable[[tuple], tuple]:
    if not positions:
        return lambda row: ()
    if len(positions) == 1:
        p = positions[0]
        return lambda row: (row[p],)
    return operator.itemgetter(*positions)


class Relation:
    """A finite set of records sharing the attribute set ``attrs``.

    ``Relation(attrs, rows)`` takes rows as tuples in the order of ``attrs``
    as given; internally the attributes are kept sorted.
    """

    __slots__ = ("attrs", "rows", "_pos")

    def __init__(self, attrs: Iterable[str], rows: Iterable[Sequence[Value]] = ()):
        given = tuple(attrs)
        if len(set(given)) != len(given):
            raise DomainMismatch(f"duplicate attribute in {given}")
        for a in given:
            if not isinstance(a, str) or not a:
                raise DomainMismatch(f"attribute names must be non-empty strings, got {a!r}")
        order = sorted(range(len(given)), key=given.__getitem__)
        perm = _getter(order)
        kinds: list = [None] * len(given)
        out = set()
        for row in rows:
            row = tuple(row)
            if len(row) != len(given):
                raise DomainMismatch(f"row {row} does not match attributes {given}")
            for i, v in enumerate(row):
                k = type(v)
                if k not in _KINDS:
                    raise TypeMismatch(f"unsupported value {v!r} for attribute {given[i]}")
                if kinds[i] is None:
                    kinds[i] = k
                elif kinds[i] is not k:
                    raise TypeMismatch(f"attribute {given[i]} mixes {_KINDS[kinds[i]]} and {_KINDS[k]}")
            out.add(perm(row))
        self.attrs = tuple(sorted(given))
        self.rows = frozenset(out)
        self._pos = None

    @classmethod
    def _make(cls, attrs: tuple, rows: frozenset) -> "Relation":
        # trusted constructor: attrs sorted, rows aligned and deduplicated
        r = object.__new__(cls)
        r.attrs = attrs
        r.rows = rows
        r._pos = None
        return r

    @classmethod
    def empty(cls, attrs: Iterable[str]) -> "Relation":
        return cls._make(tuple(sorted(attrs)), frozenset())

    @classmethod
    def from_records(cls, records: Iterable[Record], attrs: Iterable[str] | None = None) -> "Relation":
        records = list(records)
        if attrs is None:
            if not records:
                raise DomainMismatch("cannot infer the domain of an empty relation")
            attrs = sorted(records[0])
        attrs = tuple(attrs)
        rows = []
        for rec in records:
            if set(rec) != set(attrs):
                raise DomainMismatch(f"record {dict(rec)} does not have domain {sorted(attrs)}")
            rows.append(tuple(rec[a] for a in attrs))
        return cls(attrs, rows)

    @property
    def domain(self) -> frozenset:
        return frozenset(self.attrs)

    def position(self, attr: str) -> int:
        if self._pos is None:
            self._pos = {a: i for i, a in enumerate(self.attrs)}
        try:
            return self._pos[attr]
        except KeyError:
            raise MissingAttribute(f"attribute {attr!r} not in {self.attrs}") from None

    def positions(self, attrs: Iterable[str]) -> list[int]:
        return [self.position(a) for a in attrs]

    def records(self) -> list[dict]:
        return [dict(zip(self.attrs, row)) for row in self.sorted_rows()]

    def sorted_rows(self, columns: Sequence[str] | None = None) -> list[tuple]:
        if columns is None:
            return sorted(self.rows)
        get = _getter(self.positions(columns))
        return sorted(get(r) for r in self.rows)

    def kinds(self) -> dict:
        """Kind of each attribute, ``None`` where the relation is empty."""
        if not self.rows:
            return {a: None for a in self.attrs}
        row = next(iter(self.rows))
        return {a: value_kind(v) for a, v in zip(self.attrs, row)}

    def __iter__(self) -> Iterator[dict]:
        return iter(self.records())

    def __len__(self) -> int:
        return len(self.rows)

    def __bool__(self) -> bool:
        return bool(self.rows)

    def __contains__(self, record) -> bool:
        if isinstance(record, tuple):
            return record in self.rows
        return tuple(record[a] for a in self.attrs) in self.rows

    def __eq__(self, other) -> bool:
        if not isinstance(other, Relation):
            return NotImplemented
        return self.attrs == other.attrs and self.rows == other.rows

    def __hash__(self) -> int:
        return hash((self.attrs, self.rows))

    def __le__(self, other: "Relation") -> bool:
        _same_domain(self, other)
        return self.rows <= other.rows

    def __repr__(self) -> str:
        body = ", ".join(
            "(" + ", ".join(f"{a}={v!r}" for a, v in zip(self.attrs, row)) + ")"
            for row in self.sorted_rows()[:8]
        )
        more = "" if len(self) <= 8 else f", ... {len(self) - 8} more"
        return f"Relation[{', '.join(self.attrs)}]{{{body}{more}}}"


def _same_domain(m: Relation, n: Relation) -> None:
    if m.attrs != n.attrs:
        raise DomainMismatch(f"domains differ: {m.attrs} vs {n.attrs}")


def singleton(record: Record) -> Relation:
    """The one-row relation ``{record}``."""
    return Relation.from_records([record], attrs=sorted(record))


# ---------------------------------------------------------------------------
# Predicates


class Predicate:
    __slots__ = ()

    def __and__(self, other: "Predicate") -> "Predicate":
        return And(self, other)

    def __or__(self, other: "Predicate") -> "Predicate":
        return Or(self, other)

    def __invert__(self) -> "Predicate":
        return Not(self)


@dataclass(frozen=True)
class TruePred(Predicate):
    pass


@dataclass(frozen=True)
class Not(Predicate):
    p: Predicate


@dataclass(frozen=True)
class And(Predicate):
    p: Predicate
    q: Predicate


@dataclass(frozen=True)
class Or(Predicate):
    p: Predicate
    q: Predicate


@dataclass(frozen=True)
class AttrEqConst(Predicate):
    attr: str
    value: Value


@dataclass(frozen=True)
class AttrEqAttr(Predicate):
    left: str
    right: str


CMP_OPS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "!=": operator.ne,
}


@dataclass(frozen=True)
class AttrCmp(Predicate):
    attr: str
    op: str
    value: Value

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class TupleIn(Predicate):
    """``X in M``: the record restricted to ``attrs`` is a row of ``rel``."""

    attrs: tuple
    rel: Relation

    def __post_init__(self):
        attrs = tuple(sorted(self.attrs))
        if attrs != self.rel.attrs:
            raise DomainMismatch(f"TupleIn attributes {attrs} differ from relation domain {self.rel.attrs}")
        object.__setattr__(self, "attrs", attrs)


@dataclass(frozen=True)
class RenamedPred(Predicate):
    """``rho_{old/new}(p)``: holds on m iff ``p`` holds on m with ``new`` renamed back to ``old``."""

    old: str
    new: str
    p: Predicate


@dataclass(frozen=True)
class JoinPred(Predicate):
    p: Predicate
    q: Predicate


@dataclass(frozen=True)
class ProjPred(Predicate):
    """Existential projection of ``p`` onto ``attrs``; symbolic only."""

    p: Predicate
    attrs: frozenset


TRUE = TruePred()
FALSE = Not(TRUE)


def conj(*preds: Predicate) -> Predicate:
    parts = [p for p in preds if p != TRUE]
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(*preds: Predicate) -> Predicate:
    parts = [p for p in preds if p != FALSE]
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def conjuncts(p: Predicate) -> list[Predicate]:
    if isinstance(p, (And, JoinPred)):
        return conjuncts(p.p) + conjuncts(p.q)
    if p == TRUE:
        return []
    return [p]


def disjuncts(p: Predicate) -> list[Predicate]:
    if isinstance(p, Or):
        return disjuncts(p.p) + disjuncts(p.q)
    if p == FALSE:
        return []
    return [p]


def dnf_terms(p: Predicate, limit: int = 64) -> list[list[Predicate]] | None:
    """``p`` as a disjunction of conjunctions, distributing ``and`` over ``or``.

    Negations are left alone.  Returns None when the expansion would exceed
    ``limit`` terms.
    """
    terms: list[list[Predicate]] = [[]]
    for c in conjuncts(p):
        alts = disjuncts(c)
        if len(alts) > 1:
            sub = [dnf_terms(a, limit) for a in alts]
            if any(t is None for t in sub):
                return None
            alts_terms = [t for ts in sub for t in ts]
        else:
            alts_terms = [[c]] if alts else []
        if len(terms) * len(alts_terms) > limit:
            return None
        terms = [t + a for t in terms for a in alts_terms]
    return terms


def _lookup(m: Record, attr: str):
    try:
        return m[attr]
    except KeyError:
        raise MissingAttribute(f"record has no attribute {attr!r}") from None


def pred_eval(p: Predicate, m: Record) -> bool:
    """Evaluate ``p`` on the record ``m`` (a mapping from names to values)."""
    if isinstance(p, TruePred):
        return True
    if isinstance(p, Not):
        return not pred_eval(p.p, m)
    if isinstance(p, (And, JoinPred)):
        return pred_eval(p.p, m) and pred_eval(p.q, m)
    if isinstance(p, Or):
        return pred_eval(p.p, m) or pred_eval(p.q, m)
    if isinstance(p, AttrEqConst):
        v = _lookup(m, p.attr)
        _same_kind(v, p.value)
        return v == p.value
    if isinstance(p, AttrEqAttr):
        v, w = _lookup(m, p.left), _lookup(m, p.right)
        _same_kind(v, w)
        return v == w
    if isinstance(p, AttrCmp):
        v = _lookup(m, p.attr)
        _same_kind(v, p.value)
        return CMP_OPS[p.op](v, p.value)
    if isinstance(p, TupleIn):
        return tuple(_lookup(m, a) for a in p.attrs) in p.rel.rows
    if isinstance(p, RenamedPred):
        v = _lookup(m, p.new)
        inner = {k: x for k, x in m.items() if k != p.new}
        inner[p.old] = v
        return pred_eval(p.p, inner)
    if isinstance(p, ProjPred):
        raise Unevaluable("projected predicates cannot be evaluated directly")
    raise TypeError(f"not a predicate: {p!r}")


def compile_pred(p: Predicate, attrs: Sequence[str]) -> Callable[[tuple], bool]:
    """Compile ``p`` into a function over row tuples laid out as ``attrs``."""
    pos = {a: i for i, a in enumerate(attrs)}

    def at(a):
        try:
            return pos[a]
        except KeyError:
            raise MissingAttribute(f"attribute {a!r} not in {tuple(attrs)}") from None

    return _compile(push_renames(p), at)


def _compile(p: Predicate, at) -> Callable[[tuple], bool]:
    if isinstance(p, TruePred):
        return lambda r: True
    if isinstance(p, Not):
        f = _compile(p.p, at)
        return lambda r: not f(r)
    if isinstance(p, (And, JoinPred)):
        f, g = _compile(p.p, at), _compile(p.q, at)
        return lambda r: f(r) and g(r)
    if isinstance(p, Or):
        f, g = _compile(p.p, at), _compile(p.q, at)
        return lambda r: f(r) or g(r)
    if isinstance(p, AttrEqConst):
        i, v, k = at(p.attr), p.value, type(p.value)

        def eq_const(r):
            x = r[i]
            if type(x) is not k:
                _same_kind(x, v)
            return x == v

        return eq_const
    if isinstance(p, AttrEqAttr):
        i, j = at(p.left), at(p.right)

        def eq_attr(r):
            x, y = r[i], r[j]
            if type(x) is not type(y):
                _same_kind(x, y)
            return x == y

        return eq_attr
    if isinstance(p, AttrCmp):
        i, v, k, op = at(p.attr), p.value, type(p.value), CMP_OPS[p.op]

        def cmp(r):
            x = r[i]
            if type(x) is not k:
                _same_kind(x, v)
            return op(x, v)

        return cmp
    if isinstance(p, TupleIn):
        get, rows = _getter([at(a) for a in p.attrs]), p.rel.rows
        return lambda r: get(r) in rows
    if isinstance(p, ProjPred):
        raise Unevaluable("projected predicates cannot be evaluated directly")
    raise TypeError(f"not a predicate: {p!r}")


def pred_attrs(p: Predicate) -> frozenset:
    """Attributes whose values ``p`` may inspect."""
    if isinstance(p, TruePred):
        return frozenset()
    if isinstance(p, Not):
        return pred_attrs(p.p)
    if isinstance(p, (And, Or, JoinPred)):
        return pred_attrs(p.p) | pred_attrs(p.q)
    if isinstance(p, (AttrEqConst, AttrCmp)):
        return frozenset([p.attr])
    if isinstance(p, AttrEqAttr):
        return frozenset([p.left, p.right])
    if isinstance(p, TupleIn):
        return frozenset(p.attrs)
    if isinstance(p, RenamedPred):
        inner = pred_attrs(p.p)
        if p.old in inner:
            inner = (inner - {p.old}) | {p.new}
        return inner
    if isinstance(p, ProjPred):
        return pred_attrs(p.p) & p.attrs
    raise TypeError(f"not a predicate: {p!r}")


def pred_ignores(p: Predicate, attrs: Iterable[str]) -> bool:
    """Syntactic check that ``p`` never looks at any attribute in ``attrs``."""
    return not (pred_attrs(p) & frozenset(attrs))


def pred_rename(p: Predicate, old: str, new: str) -> Predicate:
    """Rename attribute ``old`` to ``new`` throughout ``p`` (structurally)."""

    def r(a):
        return new if a == old else a

    if isinstance(p, TruePred):
        return p
    if isinstance(p, Not):
        return Not(pred_rename(p.p, old, new))
    if isinstance(p, (And, Or, JoinPred)):
        return type(p)(pred_rename(p.p, old, new), pred_rename(p.q, old, new))
    if isinstance(p, AttrEqConst):
        return AttrEqConst(r(p.attr), p.value)
    if isinstance(p, AttrCmp):
        return AttrCmp(r(p.attr), p.op, p.value)
    if isinstance(p, AttrEqAttr):
        return AttrEqAttr(r(p.left), r(p.right))
    if isinstance(p, TupleIn):
        if old not in p.attrs:
            return p
        return TupleIn(tuple(r(a) for a in p.attrs), rename(p.rel, old, new))
    if isinstance(p, RenamedPred):
        return pred_rename(pred_rename(p.p, p.old, p.new), old, new)
    if isinstance(p, ProjPred):
        return ProjPred(pred_rename(p.p, old, new), frozenset(r(a) for a in p.attrs))
    raise TypeError(f"not a predicate: {p!r}")


def push_renames(p: Predicate) -> Predicate:
    """Eliminate ``RenamedPred`` nodes by renaming their bodies."""
    if isinstance(p, RenamedPred):
        return pred_rename(push_renames(p.p), p.old, p.new)
    if isinstance(p, Not):
        return Not(push_renames(p.p))
    if isinstance(p, (And, Or, JoinPred)):
        return type(p)(push_renames(p.p), push_renames(p.q))
    if isinstance(p, ProjPred):
        return ProjPred(push_renames(p.p), p.attrs)
    return p


# ---------------------------------------------------------------------------
# Relational algebra


def select(p: Predicate, m: Relation) -> Relation:
    if p == TRUE:
        return m
    if p == FALSE:
        return Relation._make(m.attrs, frozenset())
    f = compile_pred(p, m.attrs)
    return Relation._make(m.attrs, frozenset(filter(f, m.rows)))


def project(m: Relation, attrs: Iterable[str]) -> Relation:
    out = tuple(sorted(set(attrs)))
    if out == m.attrs:
        return m
    get = _getter(m.positions(out))
    return Relation._make(out, frozenset(map(get, m.rows)))


def join(m: Relation, n: Relation) -> Relation:
    """Natural join; disjoint domains give the cartesian product."""
    shared = [a for a in m.attrs if a in set(n.attrs)]
    extra = [a for a in n.attrs if a not in set(m.attrs)]
    out = tuple(sorted(m.attrs + tuple(extra)))
    combined = m.attrs + tuple(extra)
    perm = [combined.index(a) for a in out]
    reorder = None if perm == list(range(len(out))) else _getter(perm)
    if not m.rows or not n.rows:
        return Relation._make(out, frozenset())
    mkey = _getter(m.positions(shared))
    nkey = _getter(n.positions(shared))
    nextra = _getter(n.positions(extra))
    index: dict = {}
    for row in n.rows:
        index.setdefault(nkey(row), []).append(nextra(row))
    rows = set()
    add = rows.add
    for row in m.rows:
        matches = index.get(mkey(row))
        if matches:
            for tail in matches:
                t = row + tail
                add(reorder(t) if reorder else t)
    return Relation._make(out, frozenset(rows))


def rename(m: Relation, old: str, new: str) -> Relation:
    if old not in m.attrs:
        raise BadRename(f"cannot rename {old!r}: not in {m.attrs}")
    if new in m.attrs:
        raise BadRename(f"cannot rename {old!r} to {new!r}: {new!r} already present")
    renamed = tuple(new if a == old else a for a in m.attrs)
    out = tuple(sorted(renamed))
    perm = [renamed.index(a) for a in out]
    if perm == list(range(len(out))):
        return Relation._make(out, m.rows)
    get = _getter(perm)
    return Relation._make(out, frozenset(map(get, m.rows)))


def union(m: Relation, n: Relation) -> Relation:
    _same_domain(m, n)
    return Relation._make(m.attrs, m.rows | n.rows)


def difference(m: Relation, n: Relation) -> Relation:
    _same_domain(m, n)
    return Relation._make(m.attrs, m.rows - n.rows)


def intersection(m: Relation, n: Relation) -> Relation:
    _same_domain(m, n)
    return Relation._make(m.attrs, m.rows & n.rows)


def extend(m: Relation, record: Record) -> Relation:
    """``M join {record}`` for a record over attributes disjoint from ``M``."""
    return join(m, singleton(record))


# ---------------------------------------------------------------------------
# Query expressions


class Query:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Query):
    rel: Relation


@dataclass(frozen=True)
class Var(Query):
    name: str


@dataclass(frozen=True)
class Select(Query):
    pred: Predicate
    q: Query


@dataclass(frozen=True)
class Project(Query):
    q: Query
    attrs: frozenset

    def __post_init__(self):
        object.__setattr__(self, "attrs", frozenset(self.attrs))


@dataclass(frozen=True)
class Join(Query):
    left: Query
    right: Query


@dataclass(frozen=True)
class Rename(Query):
    q: Query
    old: str
    new: str


@dataclass(frozen=True)
class Union(Query):
    left: Query
    right: Query


@dataclass(frozen=True)
class Difference(Query):
    left: Query
    right: Query


@dataclass(frozen=True)
class Let(Query):
    name: str
    bound: Query
    body: Query


def query_eval(q: Query, env: Mapping[str, Relation]) -> Relation:
    if isinstance(q, Const):
        return q.rel
    if isinstance(q, Var):
        try:
            return env[q.name]
        except KeyError:
            raise UnboundVariable(q.name) from None
    if isinstance(q, Select):
        return select(q.pred, query_eval(q.q, env))
    if isinstance(q, Project):
        return project(query_eval(q.q, env), q.attrs)
    if isinstance(q, Join):
        return join(query_eval(q.left, env), query_eval(q.right, env))
    if isinstance(q, Rename):
        return rename(query_eval(q.q, env), q.old, q.new)
    if isinstance(q, Union):
        return union(query_eval(q.left, env), query_eval(q.right, env))
    if isinstance(q, Difference):
        return difference(query_eval(q.left, env), query_eval(q.right, env))
    if isinstance(q, Let):
        inner = dict(env)
        inner[q.name] = query_eval(q.bound, env)
        return query_eval(q.body, inner)
    raise RelensError(f"not a query: {q!r}")
