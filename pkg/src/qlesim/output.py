"""Table emission (CSV/JSON) and the run manifest."""

import csv
import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .errors import DomainError


def _native(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_native(v) for v in value]
    return value


def format_value(value) -> str:
    value = _native(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _check_table(table):
    columns = {name: list(values) for name, values in table.items()}
    lengths = {len(values) for values in columns.values()}
    if len(lengths) > 1:
        raise DomainError("table columns must all have the same length")
    return columns


def emit_csv(table: dict, path) -> Path:
    """Write named columns as UTF-8 CSV: one header row, '.'-decimal floats at
    17 significant digits, LF line endings."""
    columns = _check_table(table)
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns.keys())
        for row in zip(*columns.values()):
            writer.writerow([format_value(v) for v in row])
    return path


def emit_json_table(table: dict, path) -> Path:
    """Write named columns as a JSON document with a rows list."""
    columns = _check_table(table)
    names = list(columns)
    rows = [dict(zip(names, (_native(v) for v in row)))
            for row in zip(*columns.values())]
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        json.dump({"columns": names, "rows": rows}, handle, indent=2)
        handle.write("\n")
    return path


def write_json(payload, path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        json.dump(_jsonable(payload), handle, indent=2)
        handle.write("\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {key: _jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(value) for value in obj]
    return _native(obj)


def write_json_atomic(payload, path) -> Path:
    """Write JSON through a temp file and rename, so the file appears whole."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    write_json(payload, tmp)
    os.replace(tmp, path)
    return path


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
