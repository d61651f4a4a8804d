"""Functional dependencies in tree form, relational revision and merge."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Iterable, Iterator, Sequence

from .errors import DomainMismatch, FDViolation, NotTreeForm
from .relalg import FALSE, Predicate, Record, Relation, TupleIn, _getter, disj, project, union


@dataclass(frozen=True)
class FunDep:
    lhs: frozenset
    rhs: frozenset

    def __init__(self, lhs: Iterable[str], rhs: Iterable[str]):
        if isinstance(lhs, str):
            lhs = [lhs]
        if isinstance(rhs, str):
            rhs = [rhs]
        object.__setattr__(self, "lhs", frozenset(lhs))
        object.__setattr__(self, "rhs", frozenset(rhs))
        if not self.lhs or not self.rhs:
            raise ValueError("functional dependencies need non-empty sides")

    @property
    def attrs(self) -> frozenset:
        return self.lhs | self.rhs

    def sort_key(self) -> tuple:
        return (sorted(self.lhs), sorted(self.rhs))

    def renamed(self, old: str, new: str) -> "FunDep":
        r = lambda s: frozenset(new if a == old else a for a in s)  # noqa: E731
        return FunDep(r(self.lhs), r(self.rhs))

    def __repr__(self) -> str:
        return f"{' '.join(sorted(self.lhs))} -> {' '.join(sorted(self.rhs))}"


class FunDepSet:
    """A set of functional dependencies validated to be in tree form."""

    __slots__ = ("deps",)

    def __init__(self, deps: Iterable[FunDep] = ()):
        self.deps = frozenset(deps)
        _check_tree_form(self.deps)

    def __iter__(self) -> Iterator[FunDep]:
        return iter(sorted(self.deps, key=FunDep.sort_key))

    def __len__(self) -> int:
        return len(self.deps)

    def __eq__(self, other) -> bool:
        return isinstance(other, FunDepSet) and self.deps == other.deps

    def __hash__(self) -> int:
        return hash(self.deps)

    def __repr__(self) -> str:
        return "{" + "; ".join(map(repr, self)) + "}"

    @property
    def attrs(self) -> frozenset:
        return frozenset().union(*(d.attrs for d in self.deps))

    def renamed(self, old: str, new: str) -> "FunDepSet":
        return FunDepSet(d.renamed(old, new) for d in self.deps)


def fd_tree_form(deps: Iterable[FunDep]) -> FunDepSet:
    """Validate ``deps`` as a tree-form set, raising :class:`NotTreeForm`."""
    return FunDepSet(deps)


def _check_tree_form(deps: frozenset) -> None:
    nodes = {d.lhs for d in deps} | {d.rhs for d in deps}
    owner: dict = {}
    for node in sorted(nodes, key=sorted):
        for a in node:
            if a in owner and owner[a] != node:
                raise NotTreeForm(
                    f"attribute {a!r} occurs in overlapping nodes {sorted(owner[a])} and {sorted(node)}",
                    witness=a,
                )
            owner[a] = node
    parent: dict = {}
    for d in deps:
        if d.rhs in parent and parent[d.rhs] != d.lhs:
            raise NotTreeForm(f"node {sorted(d.rhs)} has more than one parent", witness=d.rhs)
        parent[d.rhs] = d.lhs
    for start in parent:
        seen = {start}
        node = start
        while node in parent:
            node = parent[node]
            if node in seen:
                raise NotTreeForm(f"cycle through node {sorted(node)}", witness=node)
            seen.add(node)


def split_fds(deps: Iterable[FunDep]) -> list[FunDep]:
    """Rewrite ``X -> Y Z`` as ``X -> Y``, ``X -> Z``; an equivalent set."""
    return [FunDep(d.lhs, [a]) for d in deps for a in sorted(d.rhs)]


def left(fds: FunDepSet) -> frozenset:
    return frozenset().union(*(d.lhs for d in fds.deps))


def right(fds: FunDepSet) -> frozenset:
    return frozenset().union(*(d.rhs for d in fds.deps))


def outputs(fds: FunDepSet) -> frozenset:
    # in tree form every non-trivially determined attribute is on some right side
    return right(fds)


def roots(fds: FunDepSet) -> set:
    rhs = right(fds)
    return {d.lhs for d in fds.deps if not (d.lhs & rhs)}


def fd_parts(fds: FunDepSet) -> dict:
    return {"left": left(fds), "right": right(fds), "outputs": outputs(fds), "roots": roots(fds)}


def closure(attrs: Iterable[str], fds: Iterable[FunDep]) -> frozenset:
    """Attribute closure of ``attrs`` under ``fds``."""
    out = set(attrs)
    deps = list(fds)
    changed = True
    while changed:
        changed = False
        for d in deps:
            if d.lhs <= out and not d.rhs <= out:
                out |= d.rhs
                changed = True
    return frozenset(out)


def entails(fds: Iterable[FunDep], dep: FunDep) -> bool:
    return dep.rhs <= closure(dep.lhs, fds)


def _check_satisfies(m: Relation, dep: FunDep) -> dict:
    """Map X-values to Y-values for ``dep`` over ``m``; raise on violation."""
    xs = sorted(dep.lhs)
    ys = sorted(dep.rhs)
    kx = _getter(m.positions(xs))
    ky = _getter(m.positions(ys))
    seen: dict = {}
    for row in m.rows:
        x, y = kx(row), ky(row)
        prev = seen.setdefault(x, y)
        if prev != y:
            raise FDViolation(
                f"{dep!r} violated: {dict(zip(xs, x))} maps to both {dict(zip(ys, prev))} and {dict(zip(ys, y))}",
                witness=(x, prev, y),
            )
    return seen


def fd_satisfies(m: Relation, fds: FunDepSet | Iterable[FunDep]) -> bool:
    deps = fds.deps if isinstance(fds, FunDepSet) else fds
    try:
        for d in deps:
            _check_satisfies(m, d)
    except FDViolation:
        return False
    return True


def check_satisfies(m: Relation, fds: FunDepSet | Iterable[FunDep]) -> None:
    deps = fds.deps if isinstance(fds, FunDepSet) else fds
    for d in sorted(deps, key=FunDep.sort_key):
        _check_satisfies(m, d)


def root_order(fds: FunDepSet | Iterable[FunDep]) -> list[FunDep]:
    """Canonical processing order: repeatedly take the smallest dependency whose lhs is a root."""
    remaining = set(fds.deps if isinstance(fds, FunDepSet) else fds)
    order = []
    while remaining:
        rhs = frozenset().union(*(d.rhs for d in remaining))
        ready = [d for d in remaining if not (d.lhs & rhs)]
        if not ready:
            raise NotTreeForm("no root among remaining dependencies", witness=frozenset(remaining))
        d = min(ready, key=FunDep.sort_key)
        order.append(d)
        remaining.remove(d)
    return order


def revision_orders(fds: FunDepSet) -> Iterator[list[FunDep]]:
    """Every processing order allowed by the root-first recursion (small sets only)."""
    for perm in permutations(fds.deps):
        done: set = set()
        ok = True
        for d in perm:
            rest = fds.deps - done
            if d.lhs & frozenset().union(*(e.rhs for e in rest)):
                ok = False
                break
            done.add(d)
        if ok:
            yield list(perm)


class _Reviser:
    """Row-level revision of tuples laid out as ``attrs`` against ``n``."""

    def __init__(self, attrs: Sequence[str], deps: Sequence[FunDep], n: Relation):
        if tuple(attrs) != n.attrs:
            raise DomainMismatch(f"revision needs equal domains: {tuple(attrs)} vs {n.attrs}")
        pos = {a: i for i, a in enumerate(attrs)}
        self.steps = []
        for d in deps:
            xs, ys = sorted(d.lhs), sorted(d.rhs)
            table = _check_satisfies(n, d)
            self.steps.append((_getter([pos[a] for a in xs]), [pos[a] for a in ys], table))

    def __call__(self, row: tuple) -> tuple:
        for kx, ypos, table in self.steps:
            y = table.get(kx(row))
            if y is not None:
                lst = list(row)
                for p, v in zip(ypos, y):
                    lst[p] = v
                row = tuple(lst)
        return row


def record_revise(m: Record, fds: FunDepSet | Iterable[FunDep], n: Relation,
                  order: Sequence[FunDep] | None = None) -> dict:
    deps = root_order(fds) if order is None else list(order)
    row = tuple(m[a] for a in n.attrs)
    return dict(zip(n.attrs, _Reviser(n.attrs, deps, n)(row)))


def rel_revise(m: Relation, fds: FunDepSet | Iterable[FunDep], n: Relation) -> Relation:
    deps = root_order(fds)
    if m.attrs != n.attrs:
        raise DomainMismatch(f"revision needs equal domains: {m.attrs} vs {n.attrs}")
    if not deps or not m.rows:
        for d in deps:
            _check_satisfies(n, d)
        return m
    rev = _Reviser(m.attrs, deps, n)
    return Relation._make(m.attrs, frozenset(map(rev, m.rows)))


def rel_merge(m: Relation, fds: FunDepSet | Iterable[FunDep], n: Relation) -> Relation:
    return union(rel_revise(m, fds, n), n)


def affected(fds: FunDepSet | Iterable[FunDep], n: Relation) -> Predicate:
    """Predicate covering every row a merge with ``n`` under ``fds`` may change."""
    deps = sorted(fds.deps if isinstance(fds, FunDepSet) else fds, key=FunDep.sort_key)
    parts = []
    seen = set()
    for d in deps:
        if d.lhs in seen:
            continue
        seen.add(d.lhs)
        parts.append(TupleIn(tuple(sorted(d.lhs)), project(n, d.lhs)))
    return disj(*parts) if parts else FALSE


def parse_fds(text: str) -> list[FunDep]:
    """Parse ``A -> B C; B -> D``."""
    deps = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "->" not in chunk:
            raise ValueError(f"expected 'X -> Y' in {chunk!r}")
        lhs, rhs = chunk.split("->", 1)
        deps.append(FunDep(lhs.replace(",", " ").split(), rhs.replace(",", " ").split()))
    return deps
