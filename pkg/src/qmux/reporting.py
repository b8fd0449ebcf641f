"""Delimited and JSON output with stable layouts.

Column order is fixed by first appearance across the row dicts, so a given
study always serialises identically; JSON payloads carry a schema version.
Floats are written with repr-shortest formatting, which round-trips.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

SCHEMA_VERSION = 1


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def stable_columns(rows: list[dict]) -> list[str]:
    columns: list[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    return columns


def write_csv(rows: list[dict], path, columns: list[str] | None = None) -> Path:
    path = Path(path)
    if columns is None:
        columns = stable_columns(rows)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(col)) for col in columns])
    return path


def write_json(payload, path, kind: str = "results") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"schema_version": SCHEMA_VERSION, "kind": kind, "data": payload}
    with open(path, "w") as handle:
        json.dump(document, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def read_json(path) -> dict:
    with open(path) as handle:
        document = json.load(handle)
    if document.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {document.get('schema_version')}")
    return document["data"]
