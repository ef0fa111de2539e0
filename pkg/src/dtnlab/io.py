"""CSV tables with JSON schema sidecars."""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    if hasattr(x, "item"):
        return _fmt(x.item())
    return str(x)


def write_csv(path, columns, rows, descriptions=None):
    """Write ``rows`` under a header and a ``<name>.schema.json`` sidecar next to it.

    Floats are written with ``repr`` so identical inputs give byte-identical files.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [list(r) for r in rows]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([_fmt(v) for v in r])
    descriptions = descriptions or {}
    schema = {
        "file": path.name,
        "format": "csv",
        "header": True,
        "columns": [
            {"name": c, "type": _column_type(rows, i), "description": descriptions.get(c, "")}
            for i, c in enumerate(columns)
        ],
        "rows": len(rows),
    }
    write_json(path.with_suffix(".schema.json"), schema)
    return path


def _column_type(rows, i):
    types = {type(r[i].item() if hasattr(r[i], "item") else r[i]).__name__ for r in rows}
    if types <= {"int"}:
        return "integer"
    if types <= {"int", "float"}:
        return "number"
    if types <= {"bool"}:
        return "boolean"
    return "string"


def write_json(path, obj, *, atomic=False):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if not atomic:
        path.write_text(text)
        return path
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
    return path


def _json_default(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]
