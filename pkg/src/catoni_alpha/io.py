"""File formats: sample CSVs, regression CSVs and 17-digit JSON."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import DomainError


class InputFormatError(DomainError):
    """Malformed input file; ``line`` is 1-based."""

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


def read_samples(path, header: bool = False) -> np.ndarray:
    """One value per line; blank lines are skipped, ``header`` drops the first line."""
    values = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not row or not "".join(row).strip():
                continue
            if len(row) != 1:
                raise InputFormatError(path, lineno, f"expected one value, got {len(row)} fields")
            try:
                x = float(row[0])
            except ValueError:
                raise InputFormatError(path, lineno, f"not a number: {row[0]!r}") from None
            if not math.isfinite(x):
                raise InputFormatError(path, lineno, f"non-finite value {row[0]!r}")
            values.append(x)
    if not values:
        raise InputFormatError(path, 0, "no samples found")
    return np.array(values)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_regression(path) -> tuple[np.ndarray, np.ndarray]:
    """Columns ``x_1, ..., x_d, y``; a non-numeric first row is taken as the header."""
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if lineno == 1 and not all(_is_number(c) for c in row):
                width = len(row)
                continue
            if width is None:
                width = len(row)
            if len(row) != width:
                raise InputFormatError(path, lineno, f"expected {width} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise InputFormatError(path, lineno, "non-numeric field") from None
    if not rows:
        raise InputFormatError(path, 0, "no data rows found")
    if width is None or width < 2:
        raise InputFormatError(path, 1, "need at least one covariate column and a response")
    data = np.array(rows)
    if not np.isfinite(data).all():
        bad = int(np.flatnonzero(~np.isfinite(data).all(axis=1))[0])
        raise InputFormatError(path, bad + 1, "non-finite value")
    return data[:, :-1], data[:, -1]


def write_regression(path, xs: np.ndarray, ys: np.ndarray) -> None:
    xs = np.atleast_2d(xs)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x_{j + 1}" for j in range(xs.shape[1])] + ["y"])
        for x, y in zip(xs, ys):
            w.writerow([f"{v:.17g}" for v in x] + [f"{y:.17g}"])


def _encode(obj):
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        text = f"{x:.17g}"
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps17(obj) -> str:
    """JSON text with every float written to 17 significant digits; non-finite floats become null."""
    return _encode(obj) + "\n"


def load_json_arg(text: str) -> dict:
    """Parse a JSON literal, or read it from a file when ``text`` names one."""
    stripped = text.strip()
    if not stripped.startswith("{") and Path(stripped).is_file():
        stripped = Path(stripped).read_text()
    try:
        value = json.loads(stripped)
    except json.JSONDecodeError as exc:
        raise DomainError(f"invalid JSON: {exc}") from None
    if not isinstance(value, dict):
        raise DomainError("expected a JSON object")
    return value
