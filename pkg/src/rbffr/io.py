"""CSV helpers shared by every output writer."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence


def format_float(x) -> str:
    # repr of a Python float is the shortest string that round-trips
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return repr(float(x))


def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format_float(v)
    if hasattr(v, "dtype"):
        return _cell(v.item())
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(header, rows), encoding="utf-8")
    return path


def read_csv(path_or_text: str | Path) -> tuple[list[str], list[list[str]]]:
    """Parse CSV text (or a file) into header and string rows."""
    text = path_or_text
    if isinstance(path_or_text, Path) or "\n" not in str(path_or_text):
        text = Path(path_or_text).read_text(encoding="utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


def reemit(text: str) -> str:
    """Parse and re-serialise CSV text; numeric cells go through float round-trip."""
    header, rows = read_csv(text)
    out = []
    for row in rows:
        cells = []
        for cell in row:
            try:
                int(cell)
                cells.append(cell)
                continue
            except ValueError:
                pass
            try:
                cells.append(format_float(float(cell)))
            except ValueError:
                cells.append(cell)
        out.append(cells)
    return csv_text(header, out)
