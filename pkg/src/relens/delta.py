"""Delta relations and delta-correct incremental relational operators.

A delta ``(plus, minus)`` describes rows to insert and rows to delete.  The
incremental operators take the old inputs together with minimal deltas and
return the minimal delta of the output.  :func:`oracle_delta` is the
brute-force reference: recompute and diff.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .errors import DomainMismatch, NotMinimal, Overlap, PreconditionViolated, UnboundVariable
from .fdeps import FunDep, FunDepSet, affected, check_satisfies, rel_merge, rel_revise
from .relalg import (
    Const,
    Difference,
    Join,
    Let,
    Predicate,
    Project,
    Query,
    Relation,
    Rename,
    Select,
    Union,
    Var,
    _same_domain,
    difference,
    join,
    project,
    query_eval,
    rename,
    select,
    union,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Delta:
    plus: Relation
    minus: Relation

    def __post_init__(self):
        if self.plus.attrs != self.minus.attrs:
            raise DomainMismatch(f"delta components differ: {self.plus.attrs} vs {self.minus.attrs}")
        both = self.plus.rows & self.minus.rows
        if both:
            row = min(both)
            raise Overlap(f"row {dict(zip(self.plus.attrs, row))} is both inserted and deleted", witness=row)

    @classmethod
    def _make(cls, plus: Relation, minus: Relation) -> "Delta":
        d = object.__new__(cls)
        object.__setattr__(d, "plus", plus)
        object.__setattr__(d, "minus", minus)
        return d

    @classmethod
    def empty(cls, attrs: Iterable[str]) -> "Delta":
        e = Relation.empty(attrs)
        return cls._make(e, e)

    @classmethod
    def insert(cls, rel: Relation) -> "Delta":
        """The coercion ``M -> (M, {})``."""
        return cls._make(rel, Relation.empty(rel.attrs))

    @property
    def attrs(self) -> tuple:
        return self.plus.attrs

    def __bool__(self) -> bool:
        return bool(self.plus.rows or self.minus.rows)

    def __len__(self) -> int:
        return len(self.plus) + len(self.minus)

    def __add__(self, other: "Delta") -> "Delta":
        return delta_merge(self, other)

    def __neg__(self) -> "Delta":
        return delta_negate(self)

    def __sub__(self, other: "Delta") -> "Delta":
        return delta_difference(self, other)

    def project(self, attrs: Iterable[str]) -> "Delta":
        """Componentwise projection; the components may overlap, so the result is not validated."""
        return Delta._make(project(self.plus, attrs), project(self.minus, attrs))

    def __repr__(self) -> str:
        return f"Delta(+{self.plus!r}, -{self.minus!r})"


def _as_delta(x) -> Delta:
    return x if isinstance(x, Delta) else Delta.insert(x)


def delta_new(plus: Relation, minus: Relation) -> Delta:
    return Delta(plus, minus)


def delta_minimal(d: Delta, m: Relation) -> bool:
    _same_domain(d.plus, m)
    return not (d.plus.rows & m.rows) and d.minus.rows <= m.rows


def check_minimal(d: Delta, m: Relation, what: str = "delta") -> None:
    if not delta_minimal(d, m):
        extra = sorted(d.plus.rows & m.rows)[:1] or sorted(d.minus.rows - m.rows)[:1]
        raise NotMinimal(f"{what} is not minimal for its relation (witness {extra[0] if extra else None})")


def delta_merge(dm, dn) -> Delta:
    """``dm (+) dn``; plain relations are coerced to insertion deltas."""
    dm, dn = _as_delta(dm), _as_delta(dn)
    _same_domain(dm.plus, dn.plus)
    pm, mm, pn, mn = dm.plus.rows, dm.minus.rows, dn.plus.rows, dn.minus.rows
    a = dm.attrs
    return Delta._make(
        Relation._make(a, (pm - mn) | (pn - mm)),
        Relation._make(a, (mm - pn) | (mn - pm)),
    )


def delta_negate(d) -> Delta:
    d = _as_delta(d)
    return Delta._make(d.minus, d.plus)


def delta_difference(dm, dn) -> Delta:
    return delta_merge(dm, delta_negate(dn))


def delta_apply(m: Relation, d: Delta, check: bool = True) -> Relation:
    """``M (+) dM`` for a minimal delta."""
    if check:
        check_minimal(d, m)
    else:
        _same_domain(d.plus, m)
    if not d:
        return m
    return Relation._make(m.attrs, (m.rows - d.minus.rows) | d.plus.rows)


def rel_diff(new: Relation, old: Relation) -> Delta:
    """The minimal delta taking ``old`` to ``new``."""
    _same_domain(new, old)
    return Delta._make(Relation._make(new.attrs, new.rows - old.rows),
                       Relation._make(new.attrs, old.rows - new.rows))


def normalize(d: Delta, m: Relation) -> Delta:
    """The minimal delta with the same effect as ``d`` on ``m``."""
    _same_domain(d.plus, m)
    return Delta._make(Relation._make(m.attrs, d.plus.rows - m.rows),
                       Relation._make(m.attrs, d.minus.rows & m.rows))


# ---------------------------------------------------------------------------
# Incremental operators


def dselect(p: Predicate, m: Relation, dm: Delta, check: bool = True) -> Delta:
    if check:
        check_minimal(dm, m)
    return Delta._make(select(p, dm.plus), select(p, dm.minus))


def dproject(m: Relation, dm: Delta, attrs: Iterable[str], check: bool = True) -> Delta:
    if check:
        check_minimal(dm, m)
    attrs = frozenset(attrs)
    old = project(m, attrs)
    new = project(delta_apply(m, dm, check=False), attrs)
    return Delta._make(difference(project(dm.plus, attrs), old),
                       difference(project(dm.minus, attrs), new))


def djoin(m: Relation, dm: Delta, n: Relation, dn: Delta, check: bool = True) -> Delta:
    if check:
        check_minimal(dm, m, "left delta")
        check_minimal(dn, n, "right delta")
    m2 = delta_apply(m, dm, check=False)
    n2 = delta_apply(n, dn, check=False)
    plus = union(join(m2, dn.plus), join(dm.plus, n2))
    minus = union(join(dm.minus, n), join(m, dn.minus))
    return Delta._make(plus, minus)


def drename(m: Relation, dm: Delta, old: str, new: str, check: bool = True) -> Delta:
    if check:
        check_minimal(dm, m)
    return Delta._make(rename(dm.plus, old, new), rename(dm.minus, old, new))


def ddifference(m: Relation, dm: Delta, n: Relation, dn: Delta, check: bool = True) -> Delta:
    if check:
        check_minimal(dm, m, "left delta")
        check_minimal(dn, n, "right delta")
    if not _difference_applicable(m, dm, n, dn):
        raise PreconditionViolated("incremental difference needs N <= M and N (+) dN <= M (+) dM")
    return delta_difference(dm, dn)


def _difference_applicable(m, dm, n, dn) -> bool:
    return n.rows <= m.rows and delta_apply(n, dn, False).rows <= delta_apply(m, dm, False).rows


def dunion(m: Relation, dm: Delta, n: Relation, dn: Delta) -> Delta:
    m2 = delta_apply(m, dm, check=False)
    n2 = delta_apply(n, dn, check=False)
    a = m.attrs
    return Delta._make(
        Relation._make(a, (dm.plus.rows | dn.plus.rows) - (m.rows | n.rows)),
        Relation._make(a, (dm.minus.rows | dn.minus.rows) - (m2.rows | n2.rows)),
    )


def drevise(m: Relation, dm: Delta, fd: FunDep, n: Relation, check: bool = True) -> Delta:
    """Incremental revision by a single dependency ``X -> A`` when only ``M`` changes."""
    if check:
        check_minimal(dm, m)
        check_satisfies(m, [fd])
        check_satisfies(delta_apply(m, dm, check=False), [fd])
    # Revision is a row map f; f(dM+) and f(dM-) alone can collide when a
    # deleted and an inserted row differ only in the revised attribute.
    new = delta_apply(m, dm, check=False)
    plus = difference(rel_revise(dm.plus, [fd], n), rel_revise(m, [fd], n))
    minus = difference(rel_revise(dm.minus, [fd], n), rel_revise(new, [fd], n))
    return Delta._make(plus, minus)


def dmerge(m: Relation, fds: FunDepSet, n: Relation, dn: Delta, use_affected: bool = False,
           check: bool = True) -> Delta:
    """Incremental merge when only the merged-in relation changes and ``merge(M, F, N) = M``."""
    if check:
        check_minimal(dn, n)
        if rel_merge(m, fds, n) != m:
            raise PreconditionViolated("incremental merge needs merge(M, F, N) = M")
        check_satisfies(delta_apply(n, dn, check=False), fds)
    deps = fds.deps if isinstance(fds, FunDepSet) else list(fds)
    if use_affected and deps:
        # every row of dN+ already in M has its X values in dN+, so it is selected
        m = select(affected(fds, dn.plus), m)
    return rel_diff(rel_merge(m, fds, dn.plus), m)


def oracle_delta(op: Callable, x, dx) -> Delta:
    """``op(x (+) dx) (-) op(x)``; ``x`` and ``dx`` may be tuples for n-ary operators."""
    if isinstance(x, tuple):
        old = op(*x)
        new = op(*(delta_apply(a, d) for a, d in zip(x, dx)))
    else:
        old = op(x)
        new = op(delta_apply(x, dx))
    return rel_diff(new, old)


# ---------------------------------------------------------------------------
# Compositional incrementalisation of queries


def query_deval(q: Query, env: Mapping[str, tuple], strict: bool = False) -> tuple:
    """Evaluate ``q`` to ``(result, delta)`` given ``env[name] = (relation, delta)``.

    Difference nodes outside the containment conditions fall back to
    recomputation with a warning, or raise when ``strict`` is set.
    """
    for name, (rel, d) in env.items():
        check_minimal(d, rel, f"delta for {name!r}")
    return _deval(q, dict(env), strict)


def _deval(q: Query, env: dict, strict: bool) -> tuple:
    if isinstance(q, Const):
        return q.rel, Delta.empty(q.rel.attrs)
    if isinstance(q, Var):
        try:
            return env[q.name]
        except KeyError:
            raise UnboundVariable(q.name) from None
    if isinstance(q, Select):
        m, dm = _deval(q.q, env, strict)
        return select(q.pred, m), dselect(q.pred, m, dm, check=False)
    if isinstance(q, Project):
        m, dm = _deval(q.q, env, strict)
        return project(m, q.attrs), dproject(m, dm, q.attrs, check=False)
    if isinstance(q, Rename):
        m, dm = _deval(q.q, env, strict)
        return rename(m, q.old, q.new), drename(m, dm, q.old, q.new, check=False)
    if isinstance(q, Let):
        inner = dict(env)
        inner[q.name] = _deval(q.bound, env, strict)
        return _deval(q.body, inner, strict)
    if isinstance(q, (Join, Union, Difference)):
        m, dm = _deval(q.left, env, strict)
        n, dn = _deval(q.right, env, strict)
        if isinstance(q, Join):
            return join(m, n), djoin(m, dm, n, dn, check=False)
        if isinstance(q, Union):
            return union(m, n), dunion(m, dm, n, dn)
        if _difference_applicable(m, dm, n, dn):
            return difference(m, n), delta_difference(dm, dn)
        if strict:
            raise PreconditionViolated(f"difference node {q!r} is not incrementalisable")
        log.warning("difference outside containment conditions; recomputing")
        return difference(m, n), oracle_delta(difference, (m, n), (dm, dn))
    raise TypeError(f"not a query: {q!r}")


def query_derive(q: Query, env: Mapping[str, tuple], strict: bool = False) -> Delta:
    return query_deval(q, env, strict)[1]


def query_oracle(q: Query, env: Mapping[str, tuple]) -> Delta:
    """Reference derivative of a whole query by recomputation."""
    base = {k: r for k, (r, _) in env.items()}
    new = {k: delta_apply(r, d) for k, (r, d) in env.items()}
    return rel_diff(query_eval(q, new), query_eval(q, base))
