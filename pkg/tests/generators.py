"""Random relations, deltas, predicates and typed lens pipelines for tests."""
from __future__ import annotations

import random

from relens.delta import Delta, rel_diff
from relens.errors import LensTypeError
from relens.fdeps import FunDep, FunDepSet, root_order, split_fds
from relens.lenses import (
    Base,
    DropL,
    JoinDL,
    RelationType,
    RenameL,
    SelectL,
    Table,
    Tensor,
    lens_build,
    strip,
)
from relens.relalg import (
    TRUE,
    AttrCmp,
    AttrEqConst,
    Not,
    Relation,
    conj,
    disj,
    pred_eval,
)

VALUES = range(4)


def random_rows(rng: random.Random, attrs, count: int, values=VALUES) -> set:
    return {tuple(rng.choice(values) for _ in attrs) for _ in range(count)}


def random_relation(rng, attrs, max_rows=8, values=VALUES) -> Relation:
    attrs = tuple(attrs)
    return Relation(attrs, random_rows(rng, attrs, rng.randint(0, max_rows), values))


def random_delta(rng, m: Relation, max_rows=6, values=VALUES) -> Delta:
    """A minimal delta for ``m``."""
    gone = {r for r in m.rows if rng.random() < 0.3}
    new = random_rows(rng, m.attrs, rng.randint(0, max_rows), values) - m.rows
    return Delta(Relation(m.attrs, new), Relation(m.attrs, gone))


def repair(records, attrs, fds, pred=TRUE) -> Relation:
    """Force ``records`` to satisfy ``fds`` (first value wins, in sorted order), then filter by ``pred``."""
    rows = [dict(r) for r in sorted(records, key=lambda r: tuple(r[a] for a in sorted(attrs)))]
    for dep in root_order(split_fds(fds)):
        xs, ys = sorted(dep.lhs), sorted(dep.rhs)
        seen = {}
        for r in rows:
            y = seen.setdefault(tuple(r[x] for x in xs), tuple(r[y] for y in ys))
            r.update(zip(ys, y))
    return Relation.from_records([r for r in rows if pred_eval(pred, r)], attrs=sorted(attrs))


def random_forest(rng, attrs) -> FunDepSet:
    """A random tree-form set of single-attribute dependencies over ``attrs``."""
    order = list(attrs)
    rng.shuffle(order)
    deps = []
    for i in range(1, len(order)):
        if rng.random() < 0.7:
            deps.append(FunDep(order[rng.randrange(i)], order[i]))
    return FunDepSet(deps)


def random_atom(rng, attrs):
    a = rng.choice(sorted(attrs))
    v = rng.choice(VALUES)
    if rng.random() < 0.4:
        return AttrEqConst(a, v)
    return AttrCmp(a, rng.choice(["<", "<=", ">", ">=", "!="]), v)


def random_pred(rng, attrs, size=2):
    if not attrs:
        return TRUE
    p = random_atom(rng, attrs)
    for _ in range(rng.randint(0, size - 1)):
        q = random_atom(rng, attrs)
        r = rng.random()
        p = conj(p, q) if r < 0.5 else disj(p, q) if r < 0.8 else conj(p, Not(q))
    return p


class Namer:
    def __init__(self):
        self.attrs = 0
        self.tables = 0

    def attr(self):
        self.attrs += 1
        return f"a{self.attrs}"

    def table(self):
        self.tables += 1
        return f"t{self.tables}"


def random_table_type(rng, attrs, pred_prob=0.3) -> RelationType:
    fds = random_forest(rng, attrs)
    outs = frozenset().union(*(d.rhs for d in fds.deps))
    free = [a for a in attrs if a not in outs]
    pred = random_pred(rng, free, 1) if free and rng.random() < pred_prob else TRUE
    return RelationType(tuple(attrs), pred, fds, (), ("int",) * len(attrs))


def random_table_value(rng, rtype: RelationType, max_rows=12) -> Relation:
    cols = rtype.columns
    recs = [dict(zip(cols, r)) for r in random_rows(rng, cols, rng.randint(0, max_rows))]
    return repair(recs, cols, rtype.fds, rtype.pred)


class Case:
    """A typed lens with a catalog and a concrete source value."""

    def __init__(self, lens, catalog, tables):
        self.lens = lens
        self.catalog = catalog
        self.tables = tables

    @property
    def source(self):
        return value_for(self.lens.source, self.tables)


def value_for(schema, tables):
    if isinstance(schema, Tensor):
        return (value_for(schema.left, tables), value_for(schema.right, tables))
    return tables[schema.name]


def _right_table(rng, namer, shared):
    """A table keyed by ``shared`` so that a join with it types."""
    extra = [namer.attr() for _ in range(rng.randint(1, 2))]
    attrs = list(shared) + extra
    deps = [FunDep(shared, [e]) for e in extra]
    # sometimes chain a second level
    if len(extra) == 2 and rng.random() < 0.3:
        deps = [FunDep(shared, [extra[0]]), FunDep(extra[0], [extra[1]])]
    return RelationType(tuple(attrs), TRUE, FunDepSet(deps), tuple(shared), ("int",) * len(attrs))


def random_expr(rng, namer, catalog, depth, kinds=("select", "drop", "rename", "join")):
    """A lens expression with ``depth`` primitives; returns ``(expr, view_type)``."""
    if depth == 0:
        name = namer.table()
        attrs = [namer.attr() for _ in range(rng.randint(2, 4))]
        catalog[name] = random_table_type(rng, attrs)
        return Base(name), catalog[name]
    for _ in range(30):
        inner_depth = rng.randint(0, depth - 1)
        snapshot = dict(catalog)
        inner, vt = random_expr(rng, namer, catalog, inner_depth, kinds)
        kind = rng.choice(kinds)
        try:
            expr = _wrap(rng, namer, catalog, kind, inner, vt, depth - 1 - inner_depth, kinds)
            if expr is None:
                raise LensTypeError("gen", "no candidate")
            lens = lens_build(expr, catalog)
            if len(strip(lens.view).columns) > 5:
                raise LensTypeError("gen", "too wide")
            return expr, strip(lens.view)
        except LensTypeError:
            catalog.clear()
            catalog.update(snapshot)
    name = namer.table()
    attrs = [namer.attr() for _ in range(rng.randint(2, 4))]
    catalog[name] = random_table_type(rng, attrs)
    return Base(name), catalog[name]


def _wrap(rng, namer, catalog, kind, inner, vt, budget, kinds):
    if kind == "select":
        return SelectL(random_pred(rng, vt.columns), inner)
    if kind == "rename":
        return RenameL(rng.choice(vt.columns), namer.attr(), inner)
    if kind == "drop":
        cands = []
        deps = split_fds(vt.fds)
        for d in deps:
            (a,) = d.rhs
            if all(a not in e.attrs for e in deps if e != d):
                cands.append(d)
        if not cands:
            return None
        d = rng.choice(cands)
        (a,) = d.rhs
        return DropL(a, tuple(sorted(d.lhs)), rng.choice(VALUES), inner)
    shared = [rng.choice(vt.columns)]
    name = namer.table()
    catalog[name] = _right_table(rng, namer, shared)
    right = Base(name)
    if budget > 0 and rng.random() < 0.5:
        right = SelectL(random_pred(rng, [c for c in catalog[name].columns if c not in shared] or shared), right)
    return JoinDL(inner, right)


def random_case(rng, max_depth=3, kinds=("select", "drop", "rename", "join"), max_rows=12) -> Case:
    namer = Namer()
    catalog = {}
    expr, _ = random_expr(rng, namer, catalog, rng.randint(0, max_depth), kinds)
    lens = lens_build(expr, catalog)
    tables = {}
    for leaf in _leaves(lens.source):
        tables[leaf.name] = random_table_value(rng, leaf.type, max_rows)
    return Case(lens, catalog, tables)


def _leaves(schema):
    if isinstance(schema, Tensor):
        return _leaves(schema.left) + _leaves(schema.right)
    return [schema]


def random_view(rng, rtype: RelationType, old: Relation, max_new=6) -> Relation:
    """A view value of ``rtype`` made by perturbing ``old``."""
    cols = rtype.columns
    recs = []
    for row in old:
        r = rng.random()
        if r < 0.2:
            continue
        if r < 0.45:
            row = dict(row)
            row[rng.choice(cols)] = rng.choice(VALUES)
        recs.append(row)
    recs += [dict(zip(cols, t)) for t in random_rows(rng, cols, rng.randint(0, max_new))]
    return repair(recs, cols, rtype.fds, rtype.pred)


def random_view_delta(rng, rtype, old) -> Delta:
    return rel_diff(random_view(rng, rtype, old), old)


def tables_of(schema):
    return [leaf.name for leaf in _leaves(schema) if isinstance(leaf, Table)]


def primitive_case(rng, kind: str, max_rows=12) -> Case:
    """A single ``kind`` primitive applied directly to base tables."""
    while True:
        namer = Namer()
        catalog = {}
        expr, _ = random_expr(rng, namer, catalog, 1, (kind,))
        if not isinstance(expr, Base):
            break
    lens = lens_build(expr, catalog)
    tables = {leaf.name: random_table_value(rng, leaf.type, max_rows) for leaf in _leaves(lens.source)}
    return Case(lens, catalog, tables)


def count_primitives(expr) -> int:
    if isinstance(expr, Base):
        return 0
    if isinstance(expr, JoinDL):
        return 1 + count_primitives(expr.left) + count_primitives(expr.right)
    return 1 + count_primitives(expr.inner)


def composite_case(rng, max_rows=12) -> Case:
    """A pipeline of at least two primitives."""
    while True:
        namer = Namer()
        catalog = {}
        expr, _ = random_expr(rng, namer, catalog, rng.choice([2, 3]))
        if count_primitives(expr) >= 2:
            break
    lens = lens_build(expr, catalog)
    tables = {leaf.name: random_table_value(rng, leaf.type, max_rows) for leaf in _leaves(lens.source)}
    return Case(lens, catalog, tables)


def random_query(rng, depth: int):
    """A query over ``R(A, B)``, ``S(A, B)`` and ``T(B, C)`` with result domain ``{A, B}``."""
    from relens.relalg import Difference, Join, Let, Project, Rename, Select, Union, Var

    if depth == 0:
        return Var(rng.choice(["R", "S"]))
    inner = random_query(rng, depth - 1)
    r = rng.randrange(7)
    if r == 0:
        return Select(random_pred(rng, ["A", "B"]), inner)
    if r == 1:
        return Union(inner, random_query(rng, rng.randrange(depth)))
    if r == 2:
        # containment holds before and after, so this stays incremental
        return Difference(inner, Select(random_pred(rng, ["A", "B"]), inner))
    if r == 3:
        return Difference(inner, random_query(rng, rng.randrange(depth)))
    if r == 4:
        return Project(Join(inner, Var("T")), ["A", "B"])
    if r == 5:
        return Rename(Rename(inner, "A", "Z"), "Z", "A")
    return Let("X", inner, Union(Var("X"), Select(random_pred(rng, ["A", "B"]), Var("X"))))
