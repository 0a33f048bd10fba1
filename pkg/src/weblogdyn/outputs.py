"""CSV and JSON writers with an embedded metadata header.

Every file starts with the tool version and the full run configuration so
that any artifact can be traced back to the command that produced it.
Floats are written with ``repr`` so values round-trip exactly.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

__version__ = "0.1.0"


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def fmt(v) -> str:
    """One CSV cell; floats keep full precision."""
    v = _plain(v)
    if v is None:
        return "nan"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def meta(config: dict) -> dict:
    return {"tool": "weblogdyn", "version": __version__, "config": _plain(config)}


def atomic_write_text(path, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows, config: dict) -> str:
    lines = ["# " + json.dumps(meta(config), sort_keys=True), ",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def json_text(payload: dict, config: dict) -> str:
    doc = {"meta": meta(config), **_plain(payload)}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_csv(path, header, rows, config: dict) -> None:
    atomic_write_text(path, csv_text(header, rows, config))


def write_json(path, payload: dict, config: dict) -> None:
    atomic_write_text(path, json_text(payload, config))


def read_csv(path):
    """Parse a file written by :func:`write_csv` into (meta, header, rows)."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        m = json.loads(first[2:]) if first.startswith("# ") else None
        header = (fh.readline() if m is not None else first).rstrip("\n").split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    return m, header, rows
