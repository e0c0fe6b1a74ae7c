"""Tabular output shared by the command line tools.

CSV: a header row, then one row per record; floats carry 17 significant
digits so every value round-trips exactly.  JSON: ``{"columns": {name:
[values...]}, "meta": {...}}`` with the same column order.
"""
from __future__ import annotations

import csv
import io
import json
import math

__all__ = ["format_value", "table_to_csv", "table_to_json", "write_text"]


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.17g}" if math.isfinite(value) else repr(value)
    return str(value)


def table_to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(row[c]) for c in columns])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if hasattr(v, "item"):
        return v.item()
    return v


def table_to_json(columns, rows, meta: dict | None = None, **extra) -> str:
    rows = list(rows)
    doc = {"columns": {c: [_json_value(r[c]) for r in rows] for c in columns}}
    doc.update(extra)
    if meta is not None:
        doc["meta"] = meta
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def write_text(path, text: str, stdout) -> None:
    if path in (None, "-"):
        stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
