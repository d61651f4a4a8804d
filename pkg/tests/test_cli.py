import shutil
from pathlib import Path

import pytest

from relens.cli import main

import music

DEMO = Path(__file__).resolve().parent.parent / "demos" / "music"


@pytest.fixture
def db(tmp_path):
    for name in ("tracks.csv", "albums.csv", "music.lens", "view_update.csv"):
        shutil.copy(DEMO / name, tmp_path / name)
    return tmp_path


def run(db, *args):
    return main([args[0], "--lens", str(db / "music.lens"), "--db", str(db), *args[1:]])


def test_get(db, capsys):
    assert run(db, "get") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "track:str,rating:int,album:str,quantity:int"
    assert out[1:] == ["Lovesong,5,Paris,4", "Lullaby,3,Show,3", "Trust,4,Wish,5"]


def test_sql_running_example(db, capsys):
    assert run(db, "sql", "--view", str(db / "view_update.csv")) == 0
    assert capsys.readouterr().out.splitlines() == music.EXPECTED_SQL


def test_sql_naive_dml(db, capsys):
    assert run(db, "sql", "--view", str(db / "view_update.csv"), "--naive-dml") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "DELETE FROM albums;"
    assert "DELETE FROM tracks;" in out


def test_dput_applies_and_emits(db, capsys):
    sql = db / "out.sql"
    assert run(db, "dput", "--view", str(db / "view_update.csv"), "--emit-sql", str(sql)) == 0
    assert sql.read_text().splitlines() == music.EXPECTED_SQL
    assert "Disintegration,7" in (db / "albums.csv").read_text()
    capsys.readouterr()
    assert run(db, "get") == 0
    assert capsys.readouterr().out.splitlines()[1:] == ["Lovesong,5,Disintegration,7", "Lullaby,4,Show,3"]


def test_put_matches_dput(db, tmp_path_factory):
    other = tmp_path_factory.mktemp("other")
    for f in db.iterdir():
        shutil.copy(f, other / f.name)
    assert run(db, "put", "--view", str(db / "view_update.csv")) == 0
    assert run(other, "dput", "--view", str(other / "view_update.csv")) == 0
    for name in ("tracks.csv", "albums.csv"):
        assert (db / name).read_text() == (other / name).read_text()


def test_dput_with_delta_file(db):
    (db / "d.csv").write_text(",track:str,rating:int,album:str,quantity:int\n-,Trust,4,Wish,5\n")
    assert run(db, "dput", "--delta", str(db / "d.csv")) == 0
    assert "Trust" not in (db / "tracks.csv").read_text()


def test_get_delta_dir(db, capsys):
    ddir = db / "deltas"
    ddir.mkdir()
    (ddir / "albums.delta.csv").write_text(",album:str,quantity:int\n-,Galore,1\n+,Galore,9\n")
    assert run(db, "get", "--delta", str(ddir)) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == [",track:str,rating:int,album:str,quantity:int", "+,Lovesong,5,Galore,9", "+,Lullaby,3,Galore,9"]


def test_check(db, capsys):
    assert run(db, "check") == 0
    assert "table tracks: 5 rows ok" in capsys.readouterr().out


def test_exit_parse_error(db):
    (db / "music.lens").write_text("lens L = select from\n")
    assert run(db, "get") == 2


def test_exit_type_error(db):
    text = (db / "music.lens").read_text().replace("determined by (track)", "determined by (album)")
    (db / "music.lens").write_text(text)
    assert run(db, "get") == 3


def test_exit_schema_violation(db):
    # quantity 1 fails the view predicate quantity > 2
    (db / "bad.csv").write_text("track:str,rating:int,album:str,quantity:int\nLullaby,3,Show,1\n")
    assert run(db, "dput", "--view", str(db / "bad.csv")) == 4
    assert "Show,3" in (db / "albums.csv").read_text()


def test_exit_bad_table_data(db):
    (db / "albums.csv").write_text("album:str,quantity:int\nShow,3\nShow,4\n")
    assert run(db, "check") == 4


def test_bench_small(capsys):
    assert main(["bench", "select", "--n", "1000", "--trials", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split("\t")[0] == "scenario"
    assert lines[1].startswith("select\t1000\t")
