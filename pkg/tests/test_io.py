import numpy as np
from hypothesis import given, strategies as st

from rbffr.io import csv_text, format_float, read_csv, reemit, write_csv


def test_shortest_round_trip_floats():
    assert format_float(0.1) == "0.1"
    assert format_float(1e-300) == "1e-300"
    assert format_float(np.float64(2.5)) == "2.5"
    assert format_float(3) == "3"


def test_csv_text_layout():
    text = csv_text(("a", "b", "c"), [(1, 0.25, "x"), (2, np.float64(1e-20), True)])
    assert text == "a,b,c\n1,0.25,x\n2,1e-20,1\n"


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_reemit_is_identity(values):
    text = csv_text(("i", "v"), enumerate(values))
    assert reemit(text) == text
    _, rows = read_csv(text)
    assert [float(r[1]) for r in rows] == values


def test_write_and_read(tmp_path):
    p = write_csv(tmp_path / "sub" / "t.csv", ("x",), [(1.5,)])
    header, rows = read_csv(p)
    assert header == ["x"] and rows == [["1.5"]]
