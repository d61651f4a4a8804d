"""Relational lenses: typing, state-based get/put and incremental put.

Lens expressions (:class:`LensExpr` subclasses) are turned into typed
:class:`Lens` objects by :func:`lens_build`.  A typed lens maps a source
schema (a tensor tree of relation types) to a view schema.  Source and view
values are relations for relation types and pairs for tensor types.

Incremental put works against *accesses* (see :mod:`relens.access`): the
source is never materialised, each primitive asks only for the rows its
optimised delta rule needs.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

from .access import Access, materialize, wrap
from .delta import Delta, check_minimal, delta_apply, delta_difference, query_deval, rel_diff
from .errors import DomainMismatch, FDViolation, LensTypeError, SchemaViolation, UnsupportedVariant
from .fdeps import (
    FunDep,
    FunDepSet,
    affected,
    check_satisfies,
    closure,
    outputs,
    rel_merge,
    rel_revise,
    split_fds,
)
from .relalg import (
    FALSE,
    TRUE,
    JoinPred,
    Not,
    Predicate,
    ProjPred,
    Query,
    Relation,
    TupleIn,
    Var,
    compile_pred,
    conj,
    conjuncts,
    difference,
    disj,
    disjuncts,
    extend,
    join,
    pred_attrs,
    pred_eval,
    pred_ignores,
    pred_rename,
    project,
    push_renames,
    dnf_terms,
    AttrEqConst,
    rename,
    select,
    union,
    value_kind,
)
from . import relalg


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class RelationType:
    """``[U | P | F]`` plus column order, column kinds and table keys."""

    columns: tuple
    pred: Predicate = TRUE
    fds: FunDepSet = field(default_factory=FunDepSet)
    keys: tuple = ()
    kinds: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "keys", tuple(self.keys))
        object.__setattr__(self, "kinds", tuple(self.kinds))
        if not isinstance(self.fds, FunDepSet):
            object.__setattr__(self, "fds", FunDepSet(self.fds))
        if len(set(self.columns)) != len(self.columns):
            raise LensTypeError("type", f"duplicate column in {self.columns}")
        if self.kinds and len(self.kinds) != len(self.columns):
            raise LensTypeError("type", "kinds must align with columns")
        u = self.attrs
        if not self.fds.attrs <= u:
            raise LensTypeError("type", f"dependencies {self.fds!r} mention attributes outside {sorted(u)}")
        if not pred_attrs(self.pred) <= u:
            raise LensTypeError("type", f"predicate mentions attributes outside {sorted(u)}")
        if not set(self.keys) <= u:
            raise LensTypeError("type", f"keys {self.keys} not among columns")

    @property
    def attrs(self) -> frozenset:
        return frozenset(self.columns)

    def kind_of(self, col: str):
        if not self.kinds:
            return None
        return dict(zip(self.columns, self.kinds))[col]

    def shape(self) -> tuple:
        """The parts that matter for type equality."""
        return (frozenset(self.columns), self.pred, self.fds)


@dataclass(frozen=True)
class Table:
    """A named base table in a source schema."""

    name: str
    type: RelationType


@dataclass(frozen=True)
class Tensor:
    left: object
    right: object


Schema = object  # RelationType | Table | Tensor


def strip(schema):
    if isinstance(schema, Table):
        return schema.type
    if isinstance(schema, Tensor):
        return Tensor(strip(schema.left), strip(schema.right))
    return schema


def same_type(a, b) -> bool:
    a, b = strip(a), strip(b)
    if isinstance(a, Tensor) and isinstance(b, Tensor):
        return same_type(a.left, b.left) and same_type(a.right, b.right)
    if isinstance(a, RelationType) and isinstance(b, RelationType):
        return a.shape() == b.shape()
    return False


def table_names(schema) -> list:
    if isinstance(schema, Table):
        return [schema.name]
    if isinstance(schema, Tensor):
        return table_names(schema.left) + table_names(schema.right)
    return []


def leaves(schema) -> list:
    if isinstance(schema, Tensor):
        return leaves(schema.left) + leaves(schema.right)
    return [schema]


def check_relation(rel: Relation, rtype: RelationType, where: str = "relation") -> None:
    """Raise :class:`SchemaViolation` unless ``rel`` is a value of ``rtype``."""
    if rel.attrs != tuple(sorted(rtype.columns)):
        raise SchemaViolation("domain", f"{where} has attributes {rel.attrs}, expected {tuple(sorted(rtype.columns))}")
    if rtype.kinds and rel.rows:
        for col, kind in rel.kinds().items():
            want = rtype.kind_of(col)
            if kind != want:
                raise SchemaViolation("kind", f"{where}: column {col} holds {kind} values, declared {want}")
    if rtype.pred != TRUE and rel.rows:
        f = _row_pred(rtype.pred, rel.attrs)
        for row in rel.rows:
            if not f(row):
                raise SchemaViolation("predicate", f"{where}: row {dict(zip(rel.attrs, row))} violates {rtype.pred!r}",
                                      witness=row)
    try:
        check_satisfies(rel, rtype.fds)
    except FDViolation as e:
        raise SchemaViolation("fds", f"{where}: {e}", witness=e.witness) from None


def _row_pred(pred: Predicate, attrs):
    return compile_pred(pred, attrs)


def check_value(schema, value, where: str = "value") -> None:
    if isinstance(schema, Tensor):
        if not (isinstance(value, tuple) and len(value) == 2):
            raise SchemaViolation("shape", f"{where} must be a pair for a tensor schema")
        check_value(schema.left, value[0], where + ".0")
        check_value(schema.right, value[1], where + ".1")
        return
    if not isinstance(value, Relation):
        raise SchemaViolation("shape", f"{where} must be a relation")
    name = schema.name if isinstance(schema, Table) else where
    check_relation(value, strip(schema), name)


# ---------------------------------------------------------------------------
# Lens expressions


class LensExpr:
    __slots__ = ()


@dataclass(frozen=True)
class Base(LensExpr):
    table: str


@dataclass(frozen=True)
class SelectL(LensExpr):
    pred: Predicate
    inner: LensExpr


@dataclass(frozen=True)
class DropL(LensExpr):
    attr: str
    determined_by: tuple
    default: object
    inner: LensExpr


@dataclass(frozen=True)
class JoinDL(LensExpr):
    left: LensExpr
    right: LensExpr
    variant: str = "dl"


@dataclass(frozen=True)
class RenameL(LensExpr):
    old: str
    new: str
    inner: LensExpr


@dataclass(frozen=True)
class Id(LensExpr):
    pass


@dataclass(frozen=True)
class Compose(LensExpr):
    first: LensExpr
    second: LensExpr


@dataclass(frozen=True)
class Sym(LensExpr):
    pass


@dataclass(frozen=True)
class Assoc(LensExpr):
    pass


@dataclass(frozen=True)
class TensorL(LensExpr):
    left: LensExpr
    right: LensExpr


# ---------------------------------------------------------------------------
# Typed lenses


class Lens:
    source: object
    view: object

    def get(self, s):
        raise NotImplementedError

    def put(self, s, v):
        raise NotImplementedError

    def dput(self, src, dv):
        """Source delta for the minimal view delta ``dv``; ``src`` is an access structure."""
        raise NotImplementedError

    def view_access(self, src):
        raise NotImplementedError

    def query(self, srcq):
        """The get direction as a query over ``srcq`` (nested like the source)."""
        raise NotImplementedError


class Primitive(Lens):
    """A lens whose view is a single relation type."""

    def view_access(self, src):
        return ViewAccess(self, src)

    def fetch_view(self, src, pred: Predicate) -> Relation:
        raise NotImplementedError


class ViewAccess(Access):
    """The view of a primitive lens over some source, answering fetches by pushdown."""

    def __init__(self, lens: Primitive, src):
        self.lens = lens
        self.src = src
        self.attrs = tuple(sorted(strip(lens.view).columns))

    def _fetch(self, pred):
        return self.lens.fetch_view(self.src, pred)

    def describe(self):
        return f"view of {type(self.lens).__name__}"


class IdLens(Lens):
    def __init__(self, schema):
        self.source = self.view = schema

    def get(self, s):
        return s

    def put(self, s, v):
        return v

    def dput(self, src, dv):
        return dv

    def view_access(self, src):
        return src

    def query(self, srcq):
        return srcq

    def __repr__(self):
        src = self.source
        return f"Id({src.name})" if isinstance(src, Table) else "id"


class ComposeLens(Lens):
    def __init__(self, first: Lens, second: Lens):
        if not same_type(first.view, second.source):
            raise LensTypeError("compose", f"view of {first!r} does not match source of {second!r}")
        self.first, self.second = first, second
        self.source, self.view = first.source, second.view

    def get(self, s):
        return self.second.get(self.first.get(s))

    def put(self, s, v):
        return self.first.put(s, self.second.put(self.first.get(s), v))

    def dput(self, src, dv):
        return self.first.dput(src, self.second.dput(self.first.view_access(src), dv))

    def view_access(self, src):
        return self.second.view_access(self.first.view_access(src))

    def query(self, srcq):
        return self.second.query(self.first.query(srcq))

    def __repr__(self):
        return f"({self.first!r} ; {self.second!r})"


class TensorLens(Lens):
    def __init__(self, left: Lens, right: Lens):
        self.left, self.right = left, right
        self.source = Tensor(left.source, right.source)
        self.view = Tensor(left.view, right.view)

    def get(self, s):
        return (self.left.get(s[0]), self.right.get(s[1]))

    def put(self, s, v):
        return (self.left.put(s[0], v[0]), self.right.put(s[1], v[1]))

    def dput(self, src, dv):
        return (self.left.dput(src[0], dv[0]), self.right.dput(src[1], dv[1]))

    def view_access(self, src):
        return (self.left.view_access(src[0]), self.right.view_access(src[1]))

    def query(self, srcq):
        return (self.left.query(srcq[0]), self.right.query(srcq[1]))

    def __repr__(self):
        return f"({self.left!r} * {self.right!r})"


class SymLens(Lens):
    def __init__(self, schema):
        if not isinstance(schema, Tensor):
            raise LensTypeError("sym", "sym needs a tensor source")
        self.source = schema
        self.view = Tensor(schema.right, schema.left)

    def get(self, s):
        return (s[1], s[0])

    def put(self, s, v):
        return (v[1], v[0])

    def dput(self, src, dv):
        return (dv[1], dv[0])

    def view_access(self, src):
        return (src[1], src[0])

    def query(self, srcq):
        return (srcq[1], srcq[0])

    def __repr__(self):
        return "sym"


class AssocLens(Lens):
    def __init__(self, schema):
        if not (isinstance(schema, Tensor) and isinstance(schema.right, Tensor)):
            raise LensTypeError("assoc", "assoc needs a source of shape X * (Y * Z)")
        self.source = schema
        self.view = Tensor(Tensor(schema.left, schema.right.left), schema.right.right)

    @staticmethod
    def _fwd(x):
        a, (b, c) = x
        return ((a, b), c)

    @staticmethod
    def _bwd(x):
        (a, b), c = x
        return (a, (b, c))

    def get(self, s):
        return self._fwd(s)

    def put(self, s, v):
        return self._bwd(v)

    def dput(self, src, dv):
        return self._bwd(dv)

    def view_access(self, src):
        return self._fwd(src)

    def query(self, srcq):
        return self._fwd(srcq)

    def __repr__(self):
        return "assoc"


class SelectLens(Primitive):
    """``select P``: ``[U | Q | F] <-> [U | P and Q | F]``."""

    def __init__(self, pred: Predicate, source):
        rt = strip(source)
        if not isinstance(rt, RelationType):
            raise LensTypeError("select", "select needs a relation source")
        if not pred_attrs(pred) <= rt.attrs:
            raise LensTypeError("select", f"predicate mentions {sorted(pred_attrs(pred) - rt.attrs)} outside the source")
        if not pred_ignores(rt.pred, outputs(rt.fds)):
            raise LensTypeError("select", "source predicate must ignore outputs(F)",
                                witness=sorted(pred_attrs(rt.pred) & outputs(rt.fds)))
        self.pred = pred
        self.fds = rt.fds
        self.source = source
        self.view = replace(rt, pred=conj(rt.pred, pred))
        self._neg = Not(pred)

    def get(self, m):
        return select(self.pred, m)

    def put(self, m, n):
        m0 = rel_merge(select(self._neg, m), self.fds, n)
        n_hash = difference(select(self.pred, m0), n)
        return difference(m0, n_hash)

    def fetch_view(self, src, pred):
        return src.fetch(conj(pred, self.pred))

    def dput(self, src, dn):
        q = affected(self.fds, dn.plus)
        r = src.fetch(conj(q, self._neg))
        dm0 = delta_difference(rel_diff(rel_merge(r, self.fds, dn.plus), r), dn.minus)
        dn_hash = delta_difference(Delta._make(select(self.pred, dm0.plus), select(self.pred, dm0.minus)), dn)
        return delta_difference(dm0, dn_hash)

    def query(self, srcq):
        return relalg.Select(self.pred, srcq)

    def __repr__(self):
        return f"select({self.pred!r})"


class DropLens(Primitive):
    """``drop A determined by (X, a)``: ``[U | P | F' + {X -> A}] <-> [U - A | P' | F']``."""

    def __init__(self, attr: str, determined_by: Sequence[str], default, source):
        rt = strip(source)
        if not isinstance(rt, RelationType):
            raise LensTypeError("drop", "drop needs a relation source")
        x = frozenset(determined_by)
        if attr not in rt.attrs:
            raise LensTypeError("drop", f"{attr!r} is not a source attribute")
        if not x or not x <= rt.attrs - {attr}:
            raise LensTypeError("drop", f"determining attributes {sorted(x)} must be a non-empty subset of U - {attr}")
        if rt.kinds and value_kind(default) != rt.kind_of(attr):
            raise LensTypeError("drop", f"default {default!r} does not match the kind of {attr}")
        fd = FunDep(x, [attr])
        split = set(split_fds(rt.fds))
        if fd not in split:
            raise LensTypeError("drop", f"F cannot be written as F' + {{{fd!r}}}", witness=rt.fds)
        rest = split - {fd}
        if any(attr in d.attrs for d in rest):
            raise LensTypeError("drop", f"{attr!r} still occurs in the remaining dependencies", witness=attr)
        keep, own = [], []
        for c in conjuncts(rt.pred):
            if pred_ignores(c, [attr]):
                keep.append(c)
            elif pred_attrs(c) == {attr}:
                own.append(c)
            else:
                raise LensTypeError("drop", f"predicate conjunct {c!r} relates {attr!r} to other attributes")
        if own and not pred_eval(conj(*own), {attr: default}):
            raise LensTypeError("drop", f"default {default!r} violates the source predicate on {attr!r}")
        self.attr, self.x, self.default = attr, x, default
        self.fd = fd
        self.source = source
        cols = tuple(c for c in rt.columns if c != attr)
        kinds = tuple(k for c, k in zip(rt.columns, rt.kinds) if c != attr) if rt.kinds else ()
        self.view = RelationType(cols, conj(*keep), FunDepSet(rest), tuple(k for k in rt.keys if k != attr), kinds)
        self._vattrs = frozenset(cols)
        self._default_row = {attr: default}

    def get(self, m):
        return project(m, self._vattrs)

    def put(self, m, n):
        return rel_revise(extend(n, self._default_row), [self.fd], m)

    def put_bohannon(self, m, n):
        n_new = difference(n, project(m, self._vattrs))
        m0 = union(join(m, n), extend(n_new, self._default_row))
        return rel_revise(m0, [self.fd], m)

    def fetch_view(self, src, pred):
        return project(src.fetch(pred), self._vattrs)

    def dput(self, src, dn):
        plus = extend(dn.plus, self._default_row)
        minus = extend(dn.minus, self._default_row)
        xs = tuple(sorted(self.x))
        keys = union(project(dn.plus, xs), project(dn.minus, xs))
        m = src.fetch(TupleIn(xs, keys))
        return Delta._make(rel_revise(plus, [self.fd], m), rel_revise(minus, [self.fd], m))

    def query(self, srcq):
        return relalg.Project(srcq, self._vattrs)

    def __repr__(self):
        return f"drop({self.attr} by {sorted(self.x)} default {self.default!r})"


class _JoinAccess(Access):
    """``M join N`` over two accesses, one logical query per fetch."""

    def __init__(self, left: Access, right: Access):
        self.left, self.right = left, right
        self.u, self.v = frozenset(left.attrs), frozenset(right.attrs)
        self.shared = tuple(sorted(self.u & self.v))
        self.attrs = tuple(sorted(self.u | self.v))

    def describe(self):
        return "join view"

    def _fetch(self, pred):
        terms = dnf_terms(push_renames(pred))
        if terms is None:
            terms = [[pred]]
        out = set()
        for cs in terms:
            if any(isinstance(c, TupleIn) and not c.rel.rows for c in cs):
                continue
            on_u = [c for c in cs if pred_attrs(c) <= self.u]
            on_v = [c for c in cs if pred_attrs(c) <= self.v and c not in on_u]
            for c in cs:
                # a tuple set spanning both sides restricts each side to its projection
                if isinstance(c, TupleIn) and c not in on_u and c not in on_v:
                    for side, attrs in ((on_u, self.u), (on_v, self.v)):
                        xs = tuple(a for a in c.attrs if a in attrs)
                        if xs:
                            side.append(TupleIn(tuple(sorted(xs)), project(c.rel, xs)))
            if _selectivity(on_u) >= _selectivity(on_v) and on_u:
                m = self.left.fetch(conj(*on_u))
                n = self.right.fetch(conj(TupleIn(self.shared, project(m, self.shared)), *on_v))
            elif on_v:
                n = self.right.fetch(conj(*on_v))
                m = self.left.fetch(conj(TupleIn(self.shared, project(n, self.shared)), *on_u))
            else:
                m, n = self.left.fetch(TRUE), self.right.fetch(TRUE)
            out |= select(conj(*cs), join(m, n)).rows
        return Relation._make(self.attrs, frozenset(out))


def _selectivity(cs) -> int:
    """Rough preference: an index-friendly conjunct beats any other restriction."""
    if any(isinstance(c, (TupleIn, AttrEqConst)) for c in cs):
        return 2
    return 1 if cs else 0


def _merge_scope(fds, n: Relation) -> Predicate:
    """Rows of M that ``merge(M, fds, n)`` can touch, including rows equal to some row of ``n``.

    With dependencies every such row is already covered by the affected
    predicate; without any, that predicate is empty and the rows of ``n``
    already present in M have to be fetched explicitly to keep the delta minimal.
    """
    if len(fds):
        return affected(fds, n)
    return TupleIn(n.attrs, n)


class JoinDLLens(Primitive):
    """``join_dl``: ``[U | P | F] * [V | Q | G] <-> [U + V | P join Q | F + G]``; deletions go left."""

    def __init__(self, source):
        if not isinstance(source, Tensor):
            raise LensTypeError("join", "join needs a pair of relations as source")
        lt, rt = strip(source.left), strip(source.right)
        if not (isinstance(lt, RelationType) and isinstance(rt, RelationType)):
            raise LensTypeError("join", "join needs a pair of relations as source")
        shared = lt.attrs & rt.attrs
        for a in sorted(shared):
            if lt.kinds and rt.kinds and lt.kind_of(a) != rt.kind_of(a):
                raise LensTypeError("join", f"join attribute {a!r} has kinds {lt.kind_of(a)} and {rt.kind_of(a)}")
        deps = split_fds(lt.fds) + split_fds(rt.fds)
        try:
            fds = FunDepSet(deps)
        except Exception as e:
            raise LensTypeError("join", f"F + G is not in tree form: {e}") from None
        if not pred_ignores(lt.pred, outputs(lt.fds)):
            raise LensTypeError("join", "left predicate must ignore outputs(F)")
        if not pred_ignores(rt.pred, outputs(rt.fds)):
            raise LensTypeError("join", "right predicate must ignore outputs(G)")
        if not rt.attrs <= closure(shared, rt.fds.deps):
            raise LensTypeError("join", f"G must determine the right table from the join attributes {sorted(shared)}",
                                witness=sorted(rt.attrs - closure(shared, rt.fds.deps)))
        self.source = source
        self.lfds, self.rfds = lt.fds, rt.fds
        self.u, self.v = lt.attrs, rt.attrs
        self.shared = tuple(sorted(shared))
        cols = lt.columns + tuple(c for c in rt.columns if c not in lt.attrs)
        kinds = ()
        if lt.kinds and rt.kinds:
            kinds = lt.kinds + tuple(k for c, k in zip(rt.columns, rt.kinds) if c not in lt.attrs)
        if lt.pred == TRUE or rt.pred == TRUE:
            pred = conj(lt.pred, rt.pred)
        else:
            pred = JoinPred(lt.pred, rt.pred)
        self.view = RelationType(cols, pred, fds, lt.keys, kinds)

    def get(self, s):
        return join(s[0], s[1])

    def put(self, s, o):
        m, n = s
        m0 = rel_merge(m, self.lfds, project(o, self.u))
        n1 = rel_merge(n, self.rfds, project(o, self.v))
        lost = difference(join(m0, n1), o)
        return (difference(m0, project(lost, self.u)), n1)

    def fetch_view(self, src, pred):
        return _JoinAccess(src[0], src[1])._fetch(pred)

    def dput(self, src, do):
        msrc, nsrc = src
        pu, pv = project(do.plus, self.u), project(do.plus, self.v)
        rm = msrc.fetch(_merge_scope(self.lfds, pu))
        dm0 = rel_diff(rel_merge(rm, self.lfds, pu), rm)
        rn = nsrc.fetch(_merge_scope(self.rfds, pv))
        dn1 = rel_diff(rel_merge(rn, self.rfds, pv), rn)
        j = self.shared
        # (M (+) dM0) join dN'+
        mk = msrc.fetch(TupleIn(j, project(dn1.plus, j)))
        plus_l = join(union(difference(mk, dm0.minus), dm0.plus), dn1.plus)
        # dM0+ join (N (+) dN')
        nk = nsrc.fetch(TupleIn(j, project(dm0.plus, j)))
        plus_r = join(dm0.plus, union(difference(nk, dn1.minus), dn1.plus))
        # (dM0- join N) + (M join dN'-) as one query over the joined tables
        minus = _JoinAccess(msrc, nsrc).fetch(disj(
            TupleIn(tuple(sorted(self.u)), dm0.minus),
            TupleIn(tuple(sorted(self.v)), dn1.minus),
        ))
        dl = delta_difference(Delta._make(union(plus_l, plus_r), minus), do)
        return (delta_difference(dm0, dl.project(self.u)), dn1)

    def query(self, srcq):
        return relalg.Join(srcq[0], srcq[1])

    def __repr__(self):
        return "join_dl"


class RenameLens(Primitive):
    """``rename A to B``."""

    def __init__(self, old: str, new: str, source):
        rt = strip(source)
        if not isinstance(rt, RelationType):
            raise LensTypeError("rename", "rename needs a relation source")
        if old not in rt.attrs:
            raise LensTypeError("rename", f"{old!r} is not a source attribute")
        if new in rt.attrs:
            raise LensTypeError("rename", f"{new!r} already names a source attribute")
        self.old, self.new = old, new
        self.source = source
        r = lambda a: new if a == old else a  # noqa: E731
        self.view = RelationType(tuple(map(r, rt.columns)), pred_rename(rt.pred, old, new),
                                 rt.fds.renamed(old, new), tuple(map(r, rt.keys)), rt.kinds)

    def get(self, m):
        return rename(m, self.old, self.new)

    def put(self, m, n):
        return rename(n, self.new, self.old)

    def fetch_view(self, src, pred):
        return rename(src.fetch(pred_rename(pred, self.new, self.old)), self.old, self.new)

    def dput(self, src, dn):
        return Delta._make(rename(dn.plus, self.new, self.old), rename(dn.minus, self.new, self.old))

    def query(self, srcq):
        return relalg.Rename(srcq, self.old, self.new)

    def __repr__(self):
        return f"rename({self.old} -> {self.new})"


# ---------------------------------------------------------------------------
# Building


def lens_build(expr: LensExpr, catalog: dict | None = None, source=None) -> Lens:
    """Type check ``expr`` and return the typed lens.

    ``catalog`` maps table names to relation types for :class:`Base` leaves;
    ``source`` is the incoming schema for expressions starting with a
    generic combinator.
    """
    lens = _build(expr, catalog or {}, source)
    names = table_names(lens.source)
    dup = sorted({n for n in names if names.count(n) > 1})
    if dup:
        raise LensTypeError("linearity", f"table(s) {dup} used more than once", witness=dup)
    return lens


def _split(source, what):
    if source is None:
        return None, None
    if not isinstance(source, Tensor):
        raise LensTypeError(what, "expected a tensor source")
    return source.left, source.right


def _build(expr, catalog, source):
    if isinstance(expr, Base):
        if source is not None:
            raise LensTypeError("base", f"table {expr.table!r} used where a lens input is expected")
        if expr.table not in catalog:
            raise LensTypeError("base", f"unknown table {expr.table!r}")
        return IdLens(Table(expr.table, catalog[expr.table]))
    if isinstance(expr, SelectL):
        inner = _build(expr.inner, catalog, source)
        return ComposeLens(inner, SelectLens(expr.pred, inner.view))
    if isinstance(expr, DropL):
        inner = _build(expr.inner, catalog, source)
        return ComposeLens(inner, DropLens(expr.attr, expr.determined_by, expr.default, inner.view))
    if isinstance(expr, RenameL):
        inner = _build(expr.inner, catalog, source)
        return ComposeLens(inner, RenameLens(expr.old, expr.new, inner.view))
    if isinstance(expr, JoinDL):
        if expr.variant != "dl":
            raise UnsupportedVariant(f"join_{expr.variant} is not supported; only join_dl")
        ls, rs = _split(source, "join")
        pair = TensorLens(_build(expr.left, catalog, ls), _build(expr.right, catalog, rs))
        return ComposeLens(pair, JoinDLLens(pair.view))
    if isinstance(expr, TensorL):
        ls, rs = _split(source, "tensor")
        return TensorLens(_build(expr.left, catalog, ls), _build(expr.right, catalog, rs))
    if isinstance(expr, Compose):
        first = _build(expr.first, catalog, source)
        return ComposeLens(first, _build(expr.second, catalog, first.view))
    if source is None:
        raise LensTypeError(type(expr).__name__.lower(), "generic combinator needs an input schema")
    if isinstance(expr, Id):
        return IdLens(source)
    if isinstance(expr, Sym):
        return SymLens(source)
    if isinstance(expr, Assoc):
        return AssocLens(source)
    raise LensTypeError("syntax", f"not a lens expression: {expr!r}")


# ---------------------------------------------------------------------------
# Operations


def lens_get(lens: Lens, s, check: bool = True):
    if check:
        check_value(lens.source, s, "source")
    return lens.get(s)


def lens_put_naive(lens: Lens, s, v, check: bool = True):
    if check:
        check_value(lens.source, s, "source")
        check_value(lens.view, v, "view")
    return lens.put(s, v)


def _find_drop(lens):
    if isinstance(lens, DropLens):
        return lens
    if isinstance(lens, ComposeLens) and isinstance(lens.second, DropLens):
        return lens
    raise TypeError("expected a drop lens")


def lens_put_drop_bohannon(lens: Lens, s, v, check: bool = True):
    """State-based put of a drop lens using the original three-step definition."""
    found = _find_drop(lens)
    if check:
        check_value(lens.source, s, "source")
        check_value(lens.view, v, "view")
    if isinstance(found, DropLens):
        return found.put_bohannon(s, v)
    inner = found.first
    return inner.put(s, found.second.put_bohannon(inner.get(s), v))


def check_view_delta(schema, access, dv, where: str = "view") -> None:
    """Check that ``dv`` is minimal for the view and that the updated view is well typed.

    Only the rows the delta can interact with are fetched.
    """
    if isinstance(schema, Tensor):
        check_view_delta(schema.left, access[0], dv[0], where + ".0")
        check_view_delta(schema.right, access[1], dv[1], where + ".1")
        return
    rt = strip(schema)
    if not isinstance(dv, Delta):
        raise SchemaViolation("shape", f"{where}: expected a delta")
    if dv.attrs != tuple(sorted(rt.columns)):
        raise SchemaViolation("domain", f"{where}: delta has attributes {dv.attrs}, expected {tuple(sorted(rt.columns))}")
    if not dv:
        return
    if rt.kinds and dv.plus.rows:
        for col, kind in dv.plus.kinds().items():
            if kind != rt.kind_of(col):
                raise SchemaViolation("kind", f"{where}: column {col} holds {kind} values, declared {rt.kind_of(col)}")
    if rt.pred != TRUE:
        f = _row_pred(rt.pred, dv.attrs)
        for row in dv.plus.rows:
            if not f(row):
                raise SchemaViolation("predicate", f"{where}: inserted row {dict(zip(dv.attrs, row))} violates {rt.pred!r}",
                                      witness=row)
    touched = union(dv.plus, dv.minus)
    near = access.fetch(disj(TupleIn(dv.attrs, touched), affected(rt.fds, dv.plus)))
    check_minimal(dv, near, f"{where} delta")
    try:
        check_satisfies(delta_apply(near, dv, check=False), rt.fds)
    except FDViolation as e:
        raise SchemaViolation("fds", f"{where}: updated view breaks {e}", witness=e.witness) from None


def lens_delta_put(lens: Lens, source, dv, check: bool = True):
    """Incremental put.  ``source`` is a (nested) relation value or access structure."""
    src = wrap(source)
    if check:
        check_view_delta(lens.view, lens.view_access(src), dv)
    return lens.dput(src, dv)


def _source_queries(schema, counter):
    if isinstance(schema, Tensor):
        return (_source_queries(schema.left, counter), _source_queries(schema.right, counter))
    if isinstance(schema, Table):
        return Var(schema.name)
    counter.append(None)
    return Var(f"_{len(counter) - 1}")


def get_query(lens: Lens):
    """The get direction as a (nested tuple of) query over the source leaf names."""
    return lens.query(_source_queries(lens.source, []))


def _flatten(structure):
    if isinstance(structure, tuple):
        return [x for s in structure for x in _flatten(s)]
    return [structure]


def lens_delta_get(lens: Lens, s, ds, strict: bool = False):
    """Incremental view maintenance for the get direction."""
    srcq = _source_queries(lens.source, [])
    env = {}
    for var, rel, d in zip(_flatten(srcq), _flatten(s), _flatten(ds)):
        check_minimal(d, rel, f"delta for {var.name}")
        env[var.name] = (rel, d)
    qs = lens.query(srcq)

    def run(q):
        if isinstance(q, tuple):
            return tuple(run(x) for x in q)
        return query_deval(q, env, strict)[1]

    return run(qs)


def apply_source_delta(s, ds):
    """``s (+) ds`` for nested source values."""
    if isinstance(s, tuple):
        return tuple(apply_source_delta(a, b) for a, b in zip(s, ds))
    return delta_apply(s, ds)


def diff_source(new, old):
    if isinstance(new, tuple):
        return tuple(diff_source(a, b) for a, b in zip(new, old))
    return rel_diff(new, old)


def dput_derived(lens: Lens, s, dv):
    """Reference incremental put: ``put(s, get(s) (+) dv) (-) s``."""
    v = lens.get(s)
    return diff_source(lens.put(s, apply_source_delta(v, dv)), s)


def source_value(lens: Lens, access):
    """Materialise the full source behind an access structure (naive path)."""
    return materialize(access)


__all__ = [
    "RelationType", "Table", "Tensor", "Base", "SelectL", "DropL", "JoinDL", "RenameL", "Id", "Compose",
    "Sym", "Assoc", "TensorL", "Lens", "lens_build", "lens_get", "lens_put_naive", "lens_put_drop_bohannon",
    "lens_delta_put", "lens_delta_get", "check_view_delta", "check_value", "check_relation", "dput_derived",
    "apply_source_delta", "diff_source", "get_query", "FALSE", "ProjPred", "DomainMismatch",
]
