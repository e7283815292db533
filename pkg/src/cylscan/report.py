"""Report serialization: schema-stable JSON and append-only CSV rows.

Infinite floats serialize as the string "inf" so identical-image PSNR
round-trips unambiguously through JSON.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path

import numpy as np


def to_jsonable(value):
    """Recursively convert dataclasses/arrays/floats to JSON-safe values."""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {
            f.name: to_jsonable(getattr(value, f.name))
            for f in dataclasses.fields(value)
        }
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        value = float(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    return value


def dump_json(payload, path=None) -> str:
    """Serialize to stable-keyed JSON; write to `path` when given."""
    text = json.dumps(to_jsonable(payload), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def append_csv_row(columns: list[tuple[str, object]], path) -> None:
    """Append one row; the header is written only when the file is new/empty."""
    path = Path(path)
    need_header = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if need_header:
            writer.writerow([name for name, _ in columns])
        row = []
        for _, value in columns:
            jsonable = to_jsonable(value)
            row.append(jsonable if not isinstance(jsonable, (list, dict)) else json.dumps(jsonable))
        writer.writerow(row)
