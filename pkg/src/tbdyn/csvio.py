"""RFC-4180 CSV output for scenario tables.

Floats are written with 17 significant digits so every double-precision
value round-trips exactly through the text form.
"""

from __future__ import annotations

import csv
import os
from pathlib import Path

from .scenarios import Table

__all__ = ["format_value", "write_table", "write_tables"]


def format_value(value) -> str:
    """Lossless text form: %.17g for floats, str() otherwise."""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_table(table: Table, out_dir: str | os.PathLike) -> Path:
    """Write one table as ``<out_dir>/<table.name>.csv`` and return the path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{table.name}.csv"
    # newline="" so the csv module fully controls line endings (CRLF per RFC 4180)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, dialect="excel")
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([format_value(v) for v in row])
    return path


def write_tables(tables: list[Table], out_dir: str | os.PathLike) -> list[Path]:
    return [write_table(t, out_dir) for t in tables]
