"""Tabular reports: aligned text for people, versioned JSON for programs."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from qedcc.errors import ModelFormatError

SCHEMA_VERSION = 1
SIGNIFICANT_DIGITS = 12

# CODATA 2018 conversion factors.
HARTREE_TO_MHZ = 6.579683920502e9
HARTREE_TO_CM = 219474.6313632

FORMATS = ("table", "json")


@dataclass
class Table:
    title: str
    columns: list
    rows: list = field(default_factory=list)

    def add(self, *cells):
        if len(cells) != len(self.columns):
            raise ValueError(f"row of {len(cells)} cells for {len(self.columns)} columns")
        self.rows.append(list(cells))


@dataclass
class Report:
    command: str
    tables: list = field(default_factory=list)
    failures: int = field(default=0, compare=False)

    def table(self, title, columns) -> Table:
        t = Table(title, list(columns))
        self.tables.append(t)
        return t


def energy_columns(units) -> list:
    """Extra conversion columns requested on the command line."""
    out = []
    for u in units:
        if u == "mhz":
            out.append(("MHz", HARTREE_TO_MHZ))
        elif u == "cm-1":
            out.append(("cm^-1", HARTREE_TO_CM))
        else:
            raise ValueError(f"unknown unit {u!r}")
    return out


def _fmt(cell) -> str:
    if cell is None:
        return "-"
    if isinstance(cell, bool):
        return "yes" if cell else "no"
    if isinstance(cell, int):
        return str(cell)
    if isinstance(cell, float):
        return f"{cell:.{SIGNIFICANT_DIGITS}g}"
    if isinstance(cell, complex):
        return f"{cell.real:.{SIGNIFICANT_DIGITS}g}{cell.imag:+.{SIGNIFICANT_DIGITS}g}j"
    return str(cell)


def _numeric(cell) -> bool:
    return isinstance(cell, (int, float, complex)) and not isinstance(cell, bool)


def _text_table(t: Table) -> list:
    cells = [[_fmt(c) for c in row] for row in t.rows]
    widths = [len(c) for c in t.columns]
    for row in cells:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]
    lines = [f"# {t.title}"]
    lines.append("  ".join(c.ljust(w) for c, w in zip(t.columns, widths)).rstrip())
    lines.append("  ".join("-" * w for w in widths))
    for raw, row in zip(t.rows, cells):
        parts = [c.rjust(w) if _numeric(r) else c.ljust(w) for r, c, w in zip(raw, row, widths)]
        lines.append("  ".join(parts).rstrip())
    return lines


def _encode(cell):
    if isinstance(cell, complex):
        return {"re": cell.real, "im": cell.imag}
    return cell


def _decode(cell):
    if isinstance(cell, dict) and set(cell) == {"re", "im"}:
        return complex(cell["re"], cell["im"])
    return cell


def report_to_dict(report: Report) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": report.command,
        "tables": [
            {"title": t.title, "columns": list(t.columns),
             "rows": [[_encode(c) for c in row] for row in t.rows]}
            for t in report.tables
        ],
    }


def report_emit(report: Report, fmt: str = "table") -> str:
    """Serialise ``report`` as an aligned text table or as JSON."""
    if fmt == "json":
        return json.dumps(report_to_dict(report), indent=2) + "\n"
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")
    lines = []
    for t in report.tables:
        if lines:
            lines.append("")
        lines.extend(_text_table(t))
    return "\n".join(lines) + "\n"


def report_load(text: str) -> Report:
    """Inverse of ``report_emit(..., "json")``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid report JSON: {exc.msg}") from None
    if not isinstance(data, dict) or data.get("schema_version") != SCHEMA_VERSION:
        raise ModelFormatError("report JSON lacks schema_version 1")
    tables = [
        Table(t["title"], list(t["columns"]), [[_decode(c) for c in row] for row in t["rows"]])
        for t in data.get("tables", [])
    ]
    return Report(data["command"], tables)


def finite(x) -> bool:
    if isinstance(x, complex):
        return math.isfinite(x.real) and math.isfinite(x.imag)
    return not isinstance(x, float) or math.isfinite(x)
