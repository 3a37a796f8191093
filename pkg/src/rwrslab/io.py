"""Serialization of traces and reports, and content digests for manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

CSV_SCHEMAS = {
    "walk": ("step", "position"),
    "scenery": ("site", "value"),
    "rwrs": ("step", "z"),
    "local_time": ("cell_index", "value"),
}


def write_csv(path, schema: str, index, values, integer_values: bool = False) -> Path:
    """Two-column CSV with a header; floats carry 17 significant digits."""
    path = Path(path)
    cols = CSV_SCHEMAS[schema]
    index = np.asarray(index, dtype=np.int64)
    values = np.asarray(values)
    if index.shape != values.shape or index.ndim != 1:
        raise ValueError("index and values must be 1-d arrays of equal length")
    vfmt = "%d" if integer_values else "%.17g"
    lines = [",".join(cols)]
    lines.extend(f"{i},{vfmt % v}" for i, v in zip(index.tolist(), values.tolist()))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_csv(path) -> tuple[tuple[str, str], np.ndarray, np.ndarray]:
    """Inverse of :func:`write_csv`; integer-looking value columns come back as int64."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = tuple(rows[0]), rows[1:]
    index = np.array([int(r[0]) for r in body], dtype=np.int64)
    raw = [r[1] for r in body]
    if raw and all(s.lstrip("-").isdigit() for s in raw):
        return header, index, np.array([int(s) for s in raw], dtype=np.int64)
    return header, index, np.array([float(s) for s in raw], dtype=float)


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, non-finite floats to ``None``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(obj) -> str:
    # json writes floats with repr, which round-trips exactly
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def inventory(paths) -> list[dict]:
    """Name, size and SHA-256 of each file, sorted by name."""
    out = []
    for p in sorted(Path(x) for x in paths):
        out.append({"name": p.name, "bytes": p.stat().st_size, "sha256": sha256_file(p)})
    return out
