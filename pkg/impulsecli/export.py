"""
Tabular output for Impulse.

Curves go out as CSV (comma separated, header row, LF line endings) and
reports as indented JSON. Column names carry their unit as a suffix.
"""

import csv
from dataclasses import dataclass, field
import io
import json
import math
from typing import Any, Dict, List, Sequence

FORMATS = ("csv", "json")


@dataclass
class Table:
    """Rows with a fixed column layout plus free-form metadata for JSON output."""

    columns: List[str]
    rows: List[List[Any]] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for row in self.rows:
            self._check(row)

    def _check(self, row: Sequence[Any]) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} values for {len(self.columns)} columns")

    def append(self, row: Sequence[Any]) -> None:
        self._check(row)
        self.rows.append(list(row))

    def records(self) -> List[Dict[str, Any]]:
        return [dict(zip(self.columns, row)) for row in self.rows]


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    if hasattr(value, "item") and callable(value.item):
        return _json_safe(value.item())
    return value


def _csv_cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, (list, tuple, set, frozenset)):
        return ";".join(str(item) for item in value)
    if hasattr(value, "item") and callable(value.item):
        return value.item()
    return value


def table_to_csv(table: Table) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_csv_cell(value) for value in row])
    return buffer.getvalue()


def table_to_dict(table: Table) -> Dict[str, Any]:
    payload = dict(table.meta)
    payload["columns"] = list(table.columns)
    payload["rows"] = table.records()
    return payload


def to_json(payload: Dict[str, Any]) -> str:
    """Indented JSON; non-finite floats become null."""
    return json.dumps(_json_safe(payload), indent=2, ensure_ascii=False) + "\n"


def render(table: Table, fmt: str) -> str:
    """Render ``table`` as CSV or JSON text."""
    if fmt == "csv":
        return table_to_csv(table)
    if fmt == "json":
        return to_json(table_to_dict(table))
    raise ValueError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")


def write_text(text: str, file_path: str) -> None:
    with open(file_path, "w", newline="", encoding="utf-8") as f:
        f.write(text)
