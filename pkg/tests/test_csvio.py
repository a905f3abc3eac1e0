"""CSV output: lossless float text, RFC-4180 framing."""

import csv
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tbdyn.csvio import format_value, write_table, write_tables
from tbdyn.scenarios import Table


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_text_round_trips(x):
    assert float(format_value(x)) == x


def test_format_value_other_types():
    assert format_value(3) == "3"
    assert format_value("LP") == "LP"
    assert format_value(True) == "True"
    assert format_value(0.1) == "0.10000000000000001"


def test_write_table_layout(tmp_path):
    table = Table("demo-out", ("t", "tag", "B"),
                  [(0.0, "a", 1.0 / 3.0), (1.5, "b, with comma", 2e-308),
                   (2.0, 'quote "q"', -0.0)])
    path = write_table(table, tmp_path / "nested" / "dir")
    assert path == tmp_path / "nested" / "dir" / "demo-out.csv"
    raw = path.read_bytes()
    assert raw.count(b"\r\n") == 4                    # header + 3 rows
    assert b'"b, with comma"' in raw                  # RFC-4180 quoting
    assert b'"quote ""q"""' in raw
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "tag", "B"]
    assert float(rows[1][2]) == 1.0 / 3.0
    assert float(rows[2][2]) == 2e-308
    assert math.copysign(1.0, float(rows[3][2])) == -1.0


def test_write_tables_returns_paths_in_order(tmp_path):
    tables = [Table("one", ("x",), [(1.0,)]), Table("two", ("x",), [(2.0,)])]
    paths = write_tables(tables, tmp_path)
    assert [p.name for p in paths] == ["one.csv", "two.csv"]
    for p in paths:
        assert p.exists()
