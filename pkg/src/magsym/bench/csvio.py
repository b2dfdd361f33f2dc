"""CSV emission and parsing for benchmark results."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

__all__ = ["HEADER", "ResultRow", "data_section", "format_real", "read_csv", "write_csv"]

HEADER = ("method", "h", "steps", "cost_C", "cost_V", "error_L1", "defect", "wall_ms")


def format_real(x) -> str:
    """Scientific notation with 17 significant digits; ``nan``/``inf`` spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.16e}"


@dataclass(frozen=True)
class ResultRow:
    """One (method, step size) cell.

    ``cost_C`` and ``cost_V`` are the ledger counts for the whole run;
    ``error_L1`` and ``defect`` are ``nan`` when not applicable or when the
    stepper failed, in which case ``failure`` holds the reason.
    """

    method: str
    h: float
    steps: int
    cost_C: int
    cost_V: int
    error_L1: float
    defect: float
    wall_ms: float = 0.0
    failure: str | None = None

    def cells(self) -> list[str]:
        return [
            self.method,
            format_real(self.h),
            str(int(self.steps)),
            str(int(self.cost_C)),
            str(int(self.cost_V)),
            format_real(self.error_L1),
            format_real(self.defect),
            format_real(self.wall_ms),
        ]


def _cell(v) -> str:
    if isinstance(v, float):
        return format_real(v)
    return str(v)


def write_csv(dest, rows, comments=(), prefix_names=(), prefixes=None) -> str:
    """Write ``rows`` with optional extra leading columns and ``#`` comment lines.

    ``prefixes`` holds one tuple of leading values per row. Failed cells are
    listed as trailing comments. ``dest`` is a path, a text stream or
    ``None``; the CSV text is returned in every case.
    """
    buf = io.StringIO()
    for line in comments:
        buf.write(line if line.startswith("#") else f"# {line}")
        buf.write("\n")
    buf.write(",".join(tuple(prefix_names) + HEADER) + "\n")
    prefixes = prefixes if prefixes is not None else [()] * len(rows)
    for pre, row in zip(prefixes, rows):
        buf.write(",".join([_cell(v) for v in pre] + row.cells()) + "\n")
    for pre, row in zip(prefixes, rows):
        if row.failure:
            where = " ".join(f"{n}={_cell(v)}" for n, v in zip(prefix_names, pre))
            buf.write(f"# failure: {where + ' ' if where else ''}method={row.method} steps={row.steps}: {row.failure}\n")
    text = buf.getvalue()
    if dest is None:
        return text
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)
    return text


def data_section(text: str) -> str:
    """The non-comment lines of a CSV document."""
    return "".join(line + "\n" for line in text.splitlines() if line and not line.startswith("#"))


def read_csv(source) -> tuple[list[str], list[dict]]:
    """Parse a CSV produced by :func:`write_csv` into ``(comments, records)``."""
    text = Path(source).read_text() if not hasattr(source, "read") else source.read()
    comments = [line for line in text.splitlines() if line.startswith("#")]
    lines = data_section(text).splitlines()
    if not lines:
        return comments, []
    names = lines[0].split(",")
    records = []
    for line in lines[1:]:
        values = line.split(",")
        if len(values) != len(names):
            raise ValueError(f"malformed row {line!r}")
        rec = {}
        for n, v in zip(names, values):
            try:
                rec[n] = int(v) if n in ("steps", "cost_C", "cost_V") else float(v)
            except ValueError:
                rec[n] = v
        records.append(rec)
    return comments, records
