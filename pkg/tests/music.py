"""The tracks/albums running example used by several test modules."""
from relens.fdeps import FunDep, FunDepSet
from relens.lenses import Base, DropL, JoinDL, RelationType, SelectL, lens_build
from relens.relalg import TRUE, AttrCmp, Relation

TRACKS_T = RelationType(("track", "date", "rating", "album"), TRUE, FunDepSet([FunDep("track", ["date", "rating"])]),
                        ("track", "album"), ("str", "int", "int", "str"))
ALBUMS_T = RelationType(("album", "quantity"), TRUE, FunDepSet([FunDep("album", "quantity")]), ("album",),
                        ("str", "int"))
CATALOG = {"tracks": TRACKS_T, "albums": ALBUMS_T}

TRACKS = Relation(TRACKS_T.columns, [
    ("Lullaby", 1989, 3, "Galore"),
    ("Lullaby", 1989, 3, "Show"),
    ("Lovesong", 1989, 5, "Galore"),
    ("Lovesong", 1989, 5, "Paris"),
    ("Trust", 1992, 4, "Wish"),
])
ALBUMS = Relation(ALBUMS_T.columns, [("Disintegration", 6), ("Show", 3), ("Galore", 1), ("Paris", 4), ("Wish", 5)])

VIEW_COLS = ("track", "rating", "album", "quantity")

JOIN_EXPR = JoinDL(Base("tracks"), Base("albums"))
FULL_EXPR = SelectL(AttrCmp("quantity", ">", 2), DropL("date", ("track",), 2018, JOIN_EXPR))


def full_lens():
    return lens_build(FULL_EXPR, CATALOG)


def view(*rows):
    return Relation(VIEW_COLS, rows)


# the updated view from the running example
UPDATED_VIEW = view(("Lullaby", 4, "Show", 3), ("Lovesong", 5, "Disintegration", 7))

EXPECTED_SQL = [
    "UPDATE albums SET quantity = 7 WHERE album = 'Disintegration';",
    "DELETE FROM tracks WHERE track = 'Lovesong' AND album = 'Paris';",
    "DELETE FROM tracks WHERE track = 'Trust' AND album = 'Wish';",
    "UPDATE tracks SET date = 1989, rating = 4 WHERE track = 'Lullaby' AND album = 'Galore';",
    "UPDATE tracks SET date = 1989, rating = 4 WHERE track = 'Lullaby' AND album = 'Show';",
    "INSERT INTO tracks (track, date, rating, album) VALUES ('Lovesong', 1989, 5, 'Disintegration');",
]
