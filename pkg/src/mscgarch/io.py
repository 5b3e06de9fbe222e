"""Reading price/return series and writing CSV/JSON artifacts."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import DataError, InputFileError, MalformedJSONError
from .model import ModelSpec

__all__ = [
    "ReturnsSeries",
    "read_series_csv",
    "prices_to_returns",
    "descriptive_stats",
    "load_spec",
    "dump_spec",
    "save_spec",
    "write_json",
    "write_csv",
]

_VALUE_NAMES = ("adj close", "adj_close", "close", "price", "value", "return", "returns", "r", "y")


@dataclass(frozen=True, eq=False)
class ReturnsSeries:
    r: np.ndarray
    timestamps: list | None = None

    def __len__(self):
        return self.r.size


def _parse_float(text: str) -> float | None:
    try:
        return float(text)
    except ValueError:
        return None


def read_series_csv(path) -> tuple[list | None, np.ndarray]:
    """Read one numeric column from a CSV file.

    Accepts an optional header row and either bare values or rows of the form
    ``label, value[, ...]``. With a header, a column called close/price/value/
    return (case-insensitive) is preferred, otherwise the last column. A first
    column that is not numeric is returned as labels.
    """
    path = Path(path)
    if not path.is_file():
        raise InputFileError(f"input file not found: {path}")
    with path.open(newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise DataError(f"{path}: no data rows")
    header = None
    if all(_parse_float(c) is None for c in rows[0][1:] or rows[0]):
        header = [c.strip().lower() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(rows[0])
    col = width - 1
    if header is not None:
        for name in _VALUE_NAMES:
            if name in header:
                col = header.index(name)
                break
    labels = [] if width > 1 and _parse_float(rows[0][0]) is None else None
    values = np.empty(len(rows))
    line0 = 2 if header is not None else 1
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}:{i + line0}: expected {width} columns, got {len(row)}")
        v = _parse_float(row[col])
        if v is None or not math.isfinite(v):
            raise DataError(f"{path}:{i + line0}: invalid value {row[col]!r}")
        values[i] = v
        if labels is not None:
            labels.append(row[0])
    return labels, values


def prices_to_returns(prices, timestamps=None) -> ReturnsSeries:
    """Percentage log returns ``100 * ln(P_t / P_{t-1})``."""
    p = np.asarray(prices, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise DataError("need at least two prices")
    bad = np.flatnonzero(~(p > 0) | ~np.isfinite(p))
    if bad.size:
        raise DataError(f"non-positive or non-finite price at index {int(bad[0])}")
    r = 100.0 * np.diff(np.log(p))
    ts = list(timestamps)[1:] if timestamps is not None else None
    return ReturnsSeries(r, ts)


def descriptive_stats(series) -> dict:
    """Mean, std (n-1), skewness, kurtosis (non-excess), max and min.

    Skewness and kurtosis are ``None`` for a constant series.
    """
    x = np.asarray(series, dtype=float)
    if x.size < 4:
        raise DataError("descriptive statistics need at least 4 observations")
    if not np.all(np.isfinite(x)):
        raise DataError("series contains non-finite values")
    constant = bool(np.all(x == x[0]))
    return {
        "mean": float(x.mean()),
        "std": float(x.std(ddof=1)),
        "skewness": None if constant else float(stats.skew(x)),
        "kurtosis": None if constant else float(stats.kurtosis(x, fisher=False)),
        "max": float(x.max()),
        "min": float(x.min()),
    }


def load_spec(path) -> ModelSpec:
    path = Path(path)
    if not path.is_file():
        raise InputFileError(f"spec file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedJSONError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedJSONError(f"{path}: expected a JSON object")
    return ModelSpec.from_dict(doc)


def dump_spec(spec: ModelSpec) -> str:
    """Canonical JSON text: fixed key order, 2-space indent, trailing newline."""
    return json.dumps(spec.to_dict(), indent=2) + "\n"


def save_spec(spec: ModelSpec, path) -> None:
    Path(path).write_text(dump_spec(spec))


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def write_csv(path, header, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v
