"""Deterministic flat-file writers (atomic temp-file + rename)."""

import json
import math
import os
import tempfile

import numpy as np

SCHEMA_LINE = "# schema=1"


def atomic_write(path, text):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def plain(x):
    """JSON-safe scalar: numpy -> python, non-finite floats -> None."""
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (list, tuple, np.ndarray)):
        return [plain(v) for v in x]
    return x


def dumps_json(obj):
    return json.dumps({k: plain(v) for k, v in obj.items()}, sort_keys=True, indent=2) + "\n"


def write_json(path, obj):
    atomic_write(path, dumps_json(obj))


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def csv_text(header, rows):
    lines = [SCHEMA_LINE, ",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows):
    atomic_write(path, csv_text(header, rows))
