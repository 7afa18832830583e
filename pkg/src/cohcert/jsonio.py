"""Deterministic JSON output: 17-significant-digit floats, string-encoded
non-finite values, and atomic file replacement."""

from __future__ import annotations

import json
import math
import os
import re
import tempfile

import numpy as np

_MARK = "\x00num:"
_MARK_RE = re.compile('"' + re.escape(_MARK) + r'([^"\x00]*)\x00"')


def _prepare(obj):
    if isinstance(obj, dict):
        return {str(k): _prepare(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_prepare(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _prepare(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        text = format(x, ".17g")
        if not any(c in text for c in ".e"):
            text += ".0"
        return _MARK + text + "\x00"
    if isinstance(obj, complex):
        return {"re": _prepare(obj.real), "im": _prepare(obj.imag)}
    return obj


def dumps(obj, indent: int | None = 2) -> str:
    text = json.dumps(_prepare(obj), indent=indent, sort_keys=True, ensure_ascii=True)
    text = text.replace("\\u0000", "\x00")
    return _MARK_RE.sub(lambda m: m.group(1), text)


def atomic_write(path: str, text: str) -> None:
    """Write ``text`` to a temporary sibling and rename it over ``path``."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
