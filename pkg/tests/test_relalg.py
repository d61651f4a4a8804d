import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relens.errors import BadRename, DomainMismatch, MissingAttribute, TypeMismatch, Unevaluable, UnboundVariable
from relens.relalg import (
    FALSE,
    TRUE,
    And,
    AttrCmp,
    AttrEqAttr,
    AttrEqConst,
    Const,
    Difference,
    Join,
    JoinPred,
    Let,
    Not,
    Or,
    ProjPred,
    Relation,
    RenamedPred,
    Select,
    TupleIn,
    Union,
    Var,
    compile_pred,
    difference,
    dnf_terms,
    join,
    pred_eval,
    pred_ignores,
    pred_rename,
    project,
    query_eval,
    rename,
    select,
    union,
)


def rel_a(*vals):
    return Relation(["A"], [(v,) for v in vals])


TRACKS = Relation(
    ["track", "date", "rating", "album"],
    [
        ("Lullaby", 1989, 3, "Galore"),
        ("Lullaby", 1989, 3, "Show"),
        ("Lovesong", 1989, 5, "Galore"),
        ("Lovesong", 1989, 5, "Paris"),
        ("Trust", 1992, 4, "Wish"),
    ],
)
ALBUMS = Relation(["album", "quantity"], [("Disintegration", 6), ("Show", 3), ("Galore", 1), ("Paris", 4), ("Wish", 5)])


class TestRelation:
    def test_attrs_sorted_and_rows_reordered(self):
        r = Relation(["b", "a"], [(1, 2)])
        assert r.attrs == ("a", "b")
        assert list(r) == [{"a": 2, "b": 1}]

    def test_set_semantics(self):
        assert len(Relation(["A"], [(1,), (1,)])) == 1

    def test_row_width_checked(self):
        with pytest.raises(Exception):
            Relation(["A", "B"], [(1,)])

    def test_sorted_rows_respects_column_order(self):
        assert TRACKS.sorted_rows(["track", "album"])[0] == ("Lovesong", "Galore")

    def test_equality_ignores_construction_order(self):
        assert Relation(["A", "B"], [(1, 2)]) == Relation(["B", "A"], [(2, 1)])

    def test_mixed_kinds_in_column_rejected(self):
        with pytest.raises(TypeMismatch):
            Relation(["A"], [(1,), ("x",)])


class TestPredicates:
    def test_eq_const(self):
        assert pred_eval(AttrEqConst("A", 3), {"A": 3})

    def test_tuple_in(self):
        assert pred_eval(TupleIn(["A"], rel_a(1, 2)), {"A": 2, "B": 9})

    def test_quantity_example(self):
        # the running example's selection, conjoined with true
        assert not pred_eval(And(AttrCmp("quantity", ">", 2), TRUE), {"quantity": 1, "album": "Galore"})

    def test_missing_attribute(self):
        with pytest.raises(MissingAttribute):
            pred_eval(AttrEqConst("Z", 1), {"A": 1})

    def test_cross_kind(self):
        with pytest.raises(TypeMismatch):
            pred_eval(AttrCmp("A", "<", "x"), {"A": 1})

    def test_bool_order(self):
        assert pred_eval(AttrCmp("A", "<", True), {"A": False})

    def test_proj_pred_unevaluable(self):
        with pytest.raises(Unevaluable):
            pred_eval(ProjPred(TRUE, frozenset()), {})

    def test_renamed_pred(self):
        p = RenamedPred("A", "B", AttrEqConst("A", 1))
        assert pred_eval(p, {"B": 1})
        assert not pred_eval(p, {"B": 2})

    def test_join_pred(self):
        p = JoinPred(AttrEqConst("A", 1), AttrEqConst("B", 2))
        assert pred_eval(p, {"A": 1, "B": 2})
        assert not pred_eval(p, {"A": 1, "B": 3})

    def test_tuple_in_domain_checked(self):
        with pytest.raises(DomainMismatch):
            TupleIn(["B"], rel_a(1))

    def test_ignores(self):
        assert pred_ignores(AttrEqConst("A", 1), {"B"})
        assert not pred_ignores(AttrEqConst("A", 1), {"A"})
        assert not pred_ignores(Or(AttrEqConst("A", 1), AttrEqConst("B", 2)), {"B"})

    def test_ignores_after_rename(self):
        p = RenamedPred("A", "B", AttrEqConst("A", 1))
        assert not pred_ignores(p, {"B"})
        assert pred_ignores(p, {"A"})

    def test_pred_rename_structural(self):
        assert pred_rename(AttrEqConst("A", 1), "A", "B") == AttrEqConst("B", 1)

    def test_dnf_distributes(self):
        p = And(Or(AttrEqConst("A", 1), AttrEqConst("B", 2)), Not(AttrEqConst("C", 3)))
        terms = dnf_terms(p)
        assert len(terms) == 2
        assert all(Not(AttrEqConst("C", 3)) in t for t in terms)

    def test_dnf_limit(self):
        p = TRUE
        for i in range(8):
            p = And(p, Or(AttrEqConst("A", i), AttrEqConst("B", i)))
        assert dnf_terms(p, limit=16) is None


class TestAlgebra:
    def test_select_c3(self):
        t1 = Relation(["A", "B", "C"], [(0, 1, 3), (1, 1, 4), (2, 0, 3)])
        assert select(AttrEqConst("C", 3), t1) == Relation(["A", "B", "C"], [(0, 1, 3), (2, 0, 3)])

    def test_select_true_false(self):
        assert select(TRUE, TRACKS) == TRACKS
        assert len(select(FALSE, TRACKS)) == 0

    def test_select_cmp(self):
        assert select(AttrCmp("A", ">", 2), rel_a(1, 3)) == rel_a(3)

    def test_project(self):
        m = Relation(["A", "B"], [(1, 1), (1, 2)])
        assert project(m, ["A"]) == rel_a(1)
        assert project(m, ["A", "B"]) == m
        assert project(Relation.empty(["A", "B"]), ["A"]) == Relation.empty(["A"])

    def test_project_missing(self):
        with pytest.raises(MissingAttribute):
            project(rel_a(1), ["B"])

    def test_join(self):
        out = join(Relation(["A", "B"], [(1, 1)]), Relation(["B", "C"], [(1, 2)]))
        assert out == Relation(["A", "B", "C"], [(1, 1, 2)])
        assert len(join(TRACKS, Relation.empty(["album", "quantity"]))) == 0

    def test_join_cartesian(self):
        assert len(join(rel_a(1, 2), Relation(["B"], [(1,), (2,), (3,)]))) == 6

    def test_join_tracks_albums(self):
        j = join(TRACKS, ALBUMS)
        assert j.attrs == ("album", "date", "quantity", "rating", "track")
        assert len(j) == 5

    def test_rename(self):
        assert rename(rel_a(1), "A", "B") == Relation(["B"], [(1,)])
        assert rename(rename(TRACKS, "date", "year"), "year", "date") == TRACKS
        with pytest.raises(BadRename):
            rename(Relation(["A", "B"], [(1, 2)]), "A", "B")

    def test_union_difference(self):
        assert union(rel_a(1, 2), rel_a(2, 3)) == rel_a(1, 2, 3)
        assert difference(rel_a(1, 2), rel_a(2, 3)) == rel_a(1)
        assert difference(TRACKS, TRACKS) == Relation.empty(TRACKS.attrs)
        with pytest.raises(DomainMismatch):
            union(rel_a(1), Relation(["B"], [(1,)]))


class TestQueries:
    def test_let(self):
        q = Let("R", Const(rel_a(1)), Union(Var("R"), Const(rel_a(2))))
        assert query_eval(q, {}) == rel_a(1, 2)

    def test_select(self):
        assert query_eval(Select(AttrCmp("A", ">", 2), Var("R")), {"R": rel_a(1, 3)}) == rel_a(3)

    def test_join_matches_lens_view(self):
        q = Join(Var("tracks"), Var("albums"))
        assert query_eval(q, {"tracks": TRACKS, "albums": ALBUMS}) == join(TRACKS, ALBUMS)

    def test_unbound(self):
        with pytest.raises(UnboundVariable):
            query_eval(Difference(Var("R"), Var("S")), {"R": rel_a(1)})


values = st.integers(0, 3)
rows2 = st.sets(st.tuples(values, values), max_size=12)


@st.composite
def preds(draw, attrs=("A", "B")):
    leaf = st.one_of(
        st.builds(AttrEqConst, st.sampled_from(attrs), values),
        st.builds(AttrCmp, st.sampled_from(attrs), st.sampled_from(["<", "<=", ">", ">=", "!="]), values),
        st.builds(AttrEqAttr, st.sampled_from(attrs), st.sampled_from(attrs)),
        st.just(TRUE),
    )
    return draw(st.recursive(leaf, lambda c: st.one_of(st.builds(And, c, c), st.builds(Or, c, c), st.builds(Not, c)),
                             max_leaves=6))


@settings(max_examples=200, deadline=None)
@given(rows2, preds())
def test_select_idempotent_and_compiled_agrees(rows, p):
    m = Relation(["A", "B"], rows)
    assert select(p, select(p, m)) == select(p, m)
    f = compile_pred(p, m.attrs)
    for r in m.rows:
        assert f(r) == pred_eval(p, dict(zip(m.attrs, r)))


@settings(max_examples=200, deadline=None)
@given(rows2, rows2, rows2)
def test_join_monotone_and_projection_laws(r1, r2, r3):
    m = Relation(["A", "B"], r1)
    m2 = Relation(["A", "B"], r1 | r3)
    n = Relation(["B", "C"], r2)
    assert join(m, n).rows <= join(m2, n).rows
    assert project(m, ["A"]).rows <= project(m2, ["A"]).rows
    assert project(join(m, n), ["A", "B"]).rows <= m.rows
    assert m.rows <= join(project(m, ["A"]), project(m, ["B"])).rows
    assert project(project(m2, ["A"]), ["A"]) == project(m2, ["A"])


@settings(max_examples=200, deadline=None)
@given(preds(("A", "B", "C")), st.tuples(values, values, values), values)
def test_ignores_is_sound(p, row, new_c):
    if pred_ignores(p, {"C"}):
        a, b, c = row
        assert pred_eval(p, {"A": a, "B": b, "C": c}) == pred_eval(p, {"A": a, "B": b, "C": new_c})
