"""Deterministic JSON/CSV serialization of reports."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np


def clean(obj):
    """Convert numpy scalars/arrays and dataclass-like objects into plain JSON values.

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
    """
    if hasattr(obj, "to_dict"):
        return clean(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def dumps(obj) -> str:
    return json.dumps(clean(obj), sort_keys=True, indent=1) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return v


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(header, rows))
    return path


def bound_csv(reports) -> str:
    from .bounds import BoundReport

    return csv_text(BoundReport.CSV_FIELDS, [r.csv_row() for r in reports])


def write_dat(path, header, rows) -> Path:
    """Whitespace-separated columns with a ``#`` header line (gnuplot-readable)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# " + " ".join(str(h) for h in header)]
    lines += [" ".join(f"{float(v):.10g}" for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path
