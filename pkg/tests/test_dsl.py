import pytest

from relens.dsl import parse_predicate, parse_program
from relens.errors import LensTypeError, ParseError
from relens.lenses import DropL, JoinDL, RenameL, SelectL
from relens.relalg import TRUE, And, AttrCmp, AttrEqAttr, AttrEqConst, Not, Or

import music

PROGRAM = """\
# tracks and albums
table tracks (track:str, date:int, rating:int, album:str) keys [track, album] fds [track -> date rating]
table albums (album:str, quantity:int) keys [album] fds [album -> quantity]
lens J = join tracks with albums
lens D = drop date determined by (track) default 2018 from J
lens L = select from D where quantity > 2
"""


class TestPredicates:
    def test_comparison(self):
        assert parse_predicate("quantity > 2") == AttrCmp("quantity", ">", 2)

    def test_flipped(self):
        assert parse_predicate("2 < quantity") == AttrCmp("quantity", ">", 2)

    def test_precedence(self):
        p = parse_predicate("A = 1 or B = 'x' and not C <> true")
        assert p == Or(AttrEqConst("A", 1), And(AttrEqConst("B", "x"), Not(AttrCmp("C", "!=", True))))

    def test_attr_eq_attr(self):
        assert parse_predicate("A = B") == AttrEqAttr("A", "B")

    def test_literals(self):
        assert parse_predicate("true") == TRUE
        assert parse_predicate("A = -3") == AttrEqConst("A", -3)

    def test_error_position(self):
        with pytest.raises(ParseError) as e:
            parse_predicate("A = = 1")
        assert e.value.line == 1
        assert e.value.column is not None


class TestPrograms:
    def test_running_example(self):
        prog = parse_program(PROGRAM)
        assert prog.tables == music.CATALOG
        assert prog.target == "L"
        assert prog.expr() == music.FULL_EXPR
        assert prog.build().get((music.TRACKS, music.ALBUMS)) == music.full_lens().get((music.TRACKS, music.ALBUMS))

    def test_rename(self):
        prog = parse_program(PROGRAM + "lens R = rename rating to stars in L\n")
        assert isinstance(prog.expr(), RenameL)

    def test_table_where(self):
        prog = parse_program("table t (A:int, B:int) where A > 0\n")
        assert prog.tables["t"].pred == AttrCmp("A", ">", 0)

    def test_unknown_source(self):
        with pytest.raises(ParseError) as e:
            parse_program("lens X = select from nope where A = 1\n")
        assert e.value.line == 1

    def test_duplicate(self):
        with pytest.raises(ParseError):
            parse_program("table t (A:int)\ntable t (A:int)\n")

    def test_bad_kind(self):
        with pytest.raises(ParseError):
            parse_program("table t (A:float)\n")

    def test_bad_line_number(self):
        with pytest.raises(ParseError) as e:
            parse_program(PROGRAM + "lens Z = frobnicate L\n")
        assert e.value.line == 7

    def test_type_error_is_not_parse_error(self):
        prog = parse_program(PROGRAM.replace("determined by (track)", "determined by (album)"))
        with pytest.raises(LensTypeError):
            prog.build()
