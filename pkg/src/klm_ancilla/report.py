"""Render tables as aligned text, CSV or JSON.

CSV and JSON print floats with 17 significant digits, which round-trips
every double exactly. Text tables use 8 significant digits. Output is
deterministic: the same table always renders to the same bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

FORMATS = ("text", "csv", "json")


@dataclass
class Table:
    command: str
    columns: list[str]
    rows: list[dict[str, Any]]
    summary: dict[str, Any] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)


def _num(value: Any, digits: int) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, f".{digits}g")
    return str(value)


def render_text(table: Table) -> str:
    def cell(v):
        return "-" if v is None else _num(v, 8)

    body = [[cell(row.get(c)) for c in table.columns] for row in table.rows]
    widths = [max([len(c)] + [len(r[i]) for r in body]) for i, c in enumerate(table.columns)]
    lines = []
    for key, value in table.summary.items():
        lines.append(f"# {key}: {cell(value)}")
    lines.append("  ".join(c.rjust(w) for c, w in zip(table.columns, widths)))
    lines.append("  ".join("-" * w for w in widths))
    for r in body:
        lines.append("  ".join(v.rjust(w) for v, w in zip(r, widths)))
    lines.extend(table.notes)
    return "\n".join(lines) + "\n"


def render_csv(table: Table) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow(["" if row.get(c) is None else _num(row.get(c), 17) for c in table.columns])
    return buf.getvalue()


def _json_value(value: Any, indent: int) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if value is None:
        return "null"
    if isinstance(value, float) and not math.isfinite(value):
        return "null"
    if isinstance(value, (bool, int, float)):
        return _num(value, 17)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(v, indent + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [pad + _json_value(v, indent + 1) for v in value]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dump_json(obj: Any) -> str:
    """Serialize ``obj`` to JSON with 17-significant-digit floats."""
    return _json_value(obj, 0) + "\n"


def render_json(table: Table) -> str:
    doc = {
        "command": table.command,
        "summary": table.summary,
        "columns": table.columns,
        "rows": [{c: row.get(c) for c in table.columns} for row in table.rows],
    }
    return dump_json(doc)


def render(table: Table, fmt: str) -> str:
    if fmt == "text":
        return render_text(table)
    if fmt == "csv":
        return render_csv(table)
    if fmt == "json":
        return render_json(table)
    raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
