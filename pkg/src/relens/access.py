"""Lazy relation sources answering selection requests, with query recording.

Incremental put never needs whole tables, only the rows matching some
predicate.  An :class:`Access` stands for a relation that can be asked for
``sigma_P`` of itself.  While a :class:`Recorder` is active every top-level
fetch is logged as one query; fetches issued while answering another fetch
(pushdown through a view) are part of that query and only show up in
``Recorder.base`` when they reach a stored table.
"""
from __future__ import annotations

import contextvars
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

from .relalg import TRUE, Predicate, Relation, select

_recorder: contextvars.ContextVar = contextvars.ContextVar("relens_recorder", default=None)


@dataclass
class Recorder:
    queries: list = field(default_factory=list)
    base: list = field(default_factory=list)
    depth: int = 0
    elapsed: float = 0.0

    @property
    def query_count(self) -> int:
        return len(self.queries)


@contextmanager
def recording():
    rec = Recorder()
    token = _recorder.set(rec)
    try:
        yield rec
    finally:
        _recorder.reset(token)


def current_recorder():
    return _recorder.get()


class Access:
    attrs: tuple

    def fetch(self, pred: Predicate = TRUE) -> Relation:
        rec = _recorder.get()
        if rec is None:
            return self._fetch(pred)
        top = rec.depth == 0
        if top:
            rec.queries.append((self.describe(), pred))
            start = time.perf_counter()
        rec.depth += 1
        try:
            return self._fetch(pred)
        finally:
            rec.depth -= 1
            if top:
                rec.elapsed += time.perf_counter() - start

    def all(self) -> Relation:
        return self.fetch(TRUE)

    def _fetch(self, pred: Predicate) -> Relation:
        raise NotImplementedError

    def describe(self) -> str:
        return type(self).__name__


class MemoryAccess(Access):
    """An in-memory relation."""

    def __init__(self, rel: Relation, name: str | None = None):
        self.rel = rel
        self.attrs = rel.attrs
        self.name = name

    def _fetch(self, pred):
        rec = _recorder.get()
        if rec is not None:
            rec.base.append((self.name or "<memory>", pred, len(self.rel)))
        return select(pred, self.rel)

    def describe(self):
        return self.name or "<memory>"


def wrap(value):
    """Turn a (nested tuple of) relations into matching accesses."""
    if isinstance(value, Access):
        return value
    if isinstance(value, Relation):
        return MemoryAccess(value)
    if isinstance(value, tuple):
        return tuple(wrap(v) for v in value)
    raise TypeError(f"cannot build an access from {type(value).__name__}")


def materialize(access):
    """Fetch everything behind a (nested tuple of) accesses."""
    if isinstance(access, Access):
        return access.all()
    return tuple(materialize(a) for a in access)
