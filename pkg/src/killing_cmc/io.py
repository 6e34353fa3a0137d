"""CSV tables and JSON reports with 17-significant-digit floats."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

SCHEMA = "killing-cmc/1"


def fmt(x) -> str:
    """Round-trip text for a real number; non-finite values as ``inf``, ``-inf``, ``nan``."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating, int, np.integer))
                        and not isinstance(v, bool) else v for v in row])
    return path


def _dump(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return json.dumps(fmt(x))
        text = fmt(x)
        # keep floats typed as floats for JSON readers
        return text if any(c in text for c in ".e") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_dump(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _dump(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if hasattr(obj, "to_dict"):
        return _dump(obj.to_dict(), indent, level)
    return json.dumps(str(obj))


def dumps(obj, indent: int = 2) -> str:
    """JSON text; floats carry 17 significant digits, non-finite floats become strings."""
    return _dump(obj, indent, 0) + "\n"


def write_json(path, kind: str, payload: dict) -> Path:
    """Write ``payload`` under a header with the schema tag and record kind."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps({"schema": SCHEMA, "kind": kind, **payload}))
    return path


def field_rows(field):
    """Rows ``(r, theta, u)`` of a scalar field, radius-major."""
    for theta, r, u in field.rows():
        yield (r, theta, u)
