"""Walk through the tracks/albums example end to end.

Run with ``python3 demos/walkthrough.py``.  Nothing on disk is modified.
"""
from pathlib import Path

from relens import lens_delta_put, parse_program, rel_diff
from relens.access import recording
from relens.backend import load_store, read_csv_text, sql_script, write_csv_text
from relens.lenses import dput_derived, strip

HERE = Path(__file__).resolve().parent / "music"


def show(title, text):
    print(f"== {title}")
    print(text.rstrip())
    print()


def main():
    prog = parse_program((HERE / "music.lens").read_text())
    lens = prog.build()
    store = load_store(HERE, prog.tables)
    vt = strip(lens.view)
    show("lens", repr(lens))

    view = lens.get(store.value(lens.source))
    show("current view", write_csv_text(view, vt.columns, vt.kinds))

    new_view = read_csv_text((HERE / "view_update.csv").read_text(), vt)
    dv = rel_diff(new_view, view)
    show("view delta", write_csv_text(dv, vt.columns, vt.kinds))

    with recording() as rec:
        ds = lens_delta_put(lens, store.source(lens.source), dv, check=False)
    for leaf, d in zip(("tracks", "albums"), ds):
        t = prog.tables[leaf]
        show(f"source delta for {leaf}", write_csv_text(d, t.columns, t.kinds))
    show("queries issued by incremental put", "\n".join(f"{who}: {pred!r}" for who, pred in rec.queries))

    same = ds == dput_derived(lens, store.value(lens.source), dv)
    show("agrees with put-then-diff", str(same))
    show("SQL", "\n".join(sql_script(lens.source, ds)))


if __name__ == "__main__":
    main()
