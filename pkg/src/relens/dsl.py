"""Parser for the textual lens language.

One declaration per line::

    table albums (album:str, quantity:int) keys [album] fds [album -> quantity]
    lens J = join tracks with albums
    lens D = drop date determined by (track) default 2018 from J
    lens L = select from D where quantity > 2
    lens R = rename rating to stars in L

Table declarations may end with ``where <predicate>``.  Several
dependencies are separated by ``;`` or ``,``.  ``#`` starts a comment.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ParseError
from .fdeps import FunDep, FunDepSet
from .lenses import Base, DropL, JoinDL, LensExpr, RelationType, RenameL, SelectL, lens_build
from .relalg import TRUE, AttrCmp, AttrEqAttr, AttrEqConst, Not, Predicate, conj, disj

_TOKEN = re.compile(
    r"""(?P<ws>\s+)|(?P<comment>\#.*)|(?P<num>-?\d+)|(?P<str>'(?:[^'\\]|\\.|'')*'|"(?:[^"\\]|\\.)*")"""
    r"""|(?P<op>->|<=|>=|!=|<>|[=<>()\[\],:;])|(?P<word>[A-Za-z_][A-Za-z0-9_]*)"""
)


@dataclass
class Program:
    tables: dict = field(default_factory=dict)   # name -> RelationType
    lenses: dict = field(default_factory=dict)   # name -> LensExpr
    order: list = field(default_factory=list)    # lens names in declaration order

    @property
    def target(self) -> str:
        if not self.order:
            raise ParseError("no lens declared", 1, 1)
        return self.order[-1]

    def expr(self, name: str | None = None) -> LensExpr:
        return self.lenses[name or self.target]

    def build(self, name: str | None = None):
        return lens_build(self.expr(name), self.tables)


def _tokens(line: str, lineno: int) -> list:
    out, pos = [], 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if not m:
            raise ParseError(f"unexpected character {line[pos]!r}", lineno, pos + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            text = m.group(kind)
            if kind == "num":
                val = int(text)
            elif kind == "str":
                q = text[0]
                val = text[1:-1].replace(q * 2, q).replace("\\" + q, q).replace("\\\\", "\\")
            else:
                val = text
            out.append((kind, val, pos + 1))
        pos = m.end()
    return out


class _Line:
    def __init__(self, toks, lineno, length):
        self.toks = toks
        self.i = 0
        self.lineno = lineno
        self.end = length + 1

    def error(self, msg):
        col = self.toks[self.i][2] if self.i < len(self.toks) else self.end
        return ParseError(msg, self.lineno, col)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("eof", None, self.end)

    def at(self, value) -> bool:
        k, v, _ = self.peek()
        return k in ("op", "word") and v == value

    def accept(self, value) -> bool:
        if self.at(value):
            self.i += 1
            return True
        return False

    def expect(self, value):
        if not self.accept(value):
            raise self.error(f"expected {value!r}, found {self.peek()[1]!r}")

    def name(self) -> str:
        k, v, _ = self.peek()
        if k != "word":
            raise self.error(f"expected a name, found {v!r}")
        self.i += 1
        return v

    def literal(self):
        k, v, _ = self.peek()
        if k in ("num", "str"):
            self.i += 1
            return v
        if k == "word" and v in ("true", "false"):
            self.i += 1
            return v == "true"
        raise self.error(f"expected a literal, found {v!r}")

    def done(self):
        if self.i < len(self.toks):
            raise self.error(f"unexpected {self.peek()[1]!r}")

    # predicates
    def pred(self) -> Predicate:
        parts = [self.conj()]
        while self.accept("or"):
            parts.append(self.conj())
        return disj(*parts)

    def conj(self) -> Predicate:
        parts = [self.neg()]
        while self.accept("and"):
            parts.append(self.neg())
        return conj(*parts)

    def neg(self) -> Predicate:
        if self.accept("not"):
            return Not(self.neg())
        return self.atom()

    _FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}

    def atom(self) -> Predicate:
        if self.accept("("):
            p = self.pred()
            self.expect(")")
            return p
        k, v, _ = self.peek()
        if k == "word" and v in ("true", "false"):
            nxt = self.toks[self.i + 1] if self.i + 1 < len(self.toks) else None
            if nxt is None or nxt[1] not in self._FLIP:
                self.i += 1
                return TRUE if v == "true" else Not(TRUE)
        left_attr = None
        if k == "word" and v not in ("true", "false"):
            left_attr = self.name()
        else:
            left_val = self.literal()
        k, op, _ = self.peek()
        if op == "<>":
            op = "!="
        if k != "op" or op not in self._FLIP:
            raise self.error(f"expected a comparison, found {op!r}")
        self.i += 1
        rk, rv, _ = self.peek()
        if rk == "word" and rv not in ("true", "false"):
            right_attr = self.name()
            if left_attr is None:
                left_attr, left_val, op = right_attr, left_val, self._FLIP[op]
                return _cmp(left_attr, op, left_val)
            if op != "=":
                raise self.error("only '=' may compare two attributes")
            return AttrEqAttr(left_attr, right_attr)
        right_val = self.literal()
        if left_attr is None:
            raise self.error("a comparison needs at least one attribute")
        return _cmp(left_attr, op, right_val)


def _cmp(attr, op, value) -> Predicate:
    if op == "=":
        return AttrEqConst(attr, value)
    return AttrCmp(attr, op, value)


def parse_predicate(text: str) -> Predicate:
    ln = _Line(_tokens(text, 1), 1, len(text))
    p = ln.pred()
    ln.done()
    return p


def _table(ln: _Line, prog: Program):
    name = ln.name()
    if name in prog.tables or name in prog.lenses:
        raise ln.error(f"{name!r} is already declared")
    ln.expect("(")
    cols, kinds = [], []
    while True:
        cols.append(ln.name())
        ln.expect(":")
        pos = ln.i
        kind = ln.name()
        if kind not in ("int", "str", "bool"):
            ln.i = pos
            raise ln.error(f"unknown column type {kind!r}")
        kinds.append(kind)
        if not ln.accept(","):
            break
    ln.expect(")")
    keys, deps, pred = (), [], TRUE
    if ln.accept("keys"):
        ln.expect("[")
        ks = []
        while not ln.at("]"):
            ks.append(ln.name())
            ln.accept(",")
        ln.expect("]")
        keys = tuple(ks)
    if ln.accept("fds"):
        ln.expect("[")
        while not ln.at("]"):
            lhs = []
            while not ln.at("->"):
                lhs.append(ln.name())
            ln.expect("->")
            rhs = []
            while ln.peek()[0] == "word":
                rhs.append(ln.name())
            if not lhs or not rhs:
                raise ln.error("dependencies need attributes on both sides")
            deps.append(FunDep(lhs, rhs))
            if not (ln.accept(";") or ln.accept(",")):
                break
        ln.expect("]")
    if ln.accept("where"):
        pred = ln.pred()
    ln.done()
    try:
        prog.tables[name] = RelationType(tuple(cols), pred, FunDepSet(deps), keys, tuple(kinds))
    except Exception as e:
        raise ParseError(f"bad table {name!r}: {e}", ln.lineno, 1) from None


def _source(ln: _Line, prog: Program) -> LensExpr:
    name = ln.name()
    if name in prog.lenses:
        return prog.lenses[name]
    if name in prog.tables:
        return Base(name)
    ln.i -= 1
    raise ln.error(f"unknown table or lens {name!r}")


def _lens(ln: _Line, prog: Program):
    name = ln.name()
    if name in prog.tables or name in prog.lenses:
        raise ln.error(f"{name!r} is already declared")
    ln.expect("=")
    kw = ln.name()
    if kw == "join":
        left = _source(ln, prog)
        ln.expect("with")
        right = _source(ln, prog)
        expr = JoinDL(left, right)
    elif kw == "select":
        ln.expect("from")
        inner = _source(ln, prog)
        ln.expect("where")
        expr = SelectL(ln.pred(), inner)
    elif kw == "drop":
        attr = ln.name()
        ln.expect("determined")
        ln.expect("by")
        ln.expect("(")
        xs = [ln.name()]
        while ln.accept(","):
            xs.append(ln.name())
        ln.expect(")")
        ln.expect("default")
        default = ln.literal()
        ln.expect("from")
        expr = DropL(attr, tuple(xs), default, _source(ln, prog))
    elif kw == "rename":
        old = ln.name()
        ln.expect("to")
        new = ln.name()
        ln.expect("in")
        expr = RenameL(old, new, _source(ln, prog))
    else:
        ln.i -= 1
        raise ln.error(f"unknown lens form {kw!r}")
    ln.done()
    prog.lenses[name] = expr
    prog.order.append(name)


def parse_program(text: str) -> Program:
    prog = Program()
    for lineno, line in enumerate(text.splitlines(), 1):
        toks = _tokens(line, lineno)
        if not toks:
            continue
        ln = _Line(toks, lineno, len(line))
        kw = ln.name()
        if kw == "table":
            _table(ln, prog)
        elif kw == "lens":
            _lens(ln, prog)
        else:
            ln.i = 0
            raise ln.error(f"expected 'table' or 'lens', found {kw!r}")
    return prog
