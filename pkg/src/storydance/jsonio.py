"""Canonical JSON serialization for byte-stable artifacts.

Floats are written with 9 significant digits, which keeps golden files and
content hashes stable across runs while staying well inside every tolerance
used by the pipeline.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any


def format_number(x: float) -> str:
    if isinstance(x, bool):  # bool is an int subclass; keep JSON literals
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite number not representable in JSON: {x!r}")
    if x == 0.0:
        return "0"
    return f"{x:.9g}"


def _write(obj: Any, out: list) -> None:
    if obj is None or isinstance(obj, (bool, int, float)):
        out.append("null" if obj is None else format_number(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _write(item, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            if not isinstance(k, str):
                raise TypeError(f"JSON object keys must be strings, got {type(k)}")
            out.append(json.dumps(k, ensure_ascii=False))
            out.append(":")
            _write(v, out)
        out.append("}")
    else:
        raise TypeError(f"not JSON-serializable: {type(obj)}")


def dumps_canonical(obj: Any, indent: bool = False) -> str:
    """Serialize with insertion-ordered keys and 9-significant-digit floats."""
    if indent:
        # Indented form reuses the same number formatting via a float subclass
        # hook: round-trip through the compact form.
        return json.dumps(json.loads(dumps_canonical(obj)), indent=2, ensure_ascii=False)
    out: list = []
    _write(obj, out)
    return "".join(out)


def dumps_canonical_bytes(obj: Any) -> bytes:
    return dumps_canonical(obj).encode("utf-8")


def content_hash(obj: Any) -> str:
    """Stable sha256 hex digest of the canonical serialization."""
    return hashlib.sha256(dumps_canonical_bytes(obj)).hexdigest()


def write_atomic(path: Path | str, data: bytes) -> None:
    """Write via a temp file and rename, so readers never see partial files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path: Path | str) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
