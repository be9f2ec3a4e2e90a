"""Return series ingestion and artifact serialization (JSON / CSV)."""

import csv
import io
import json
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)

MISSING = {"", "na", "nan", "null", "none", "."}


@dataclass(frozen=True)
class ReturnSeries:
    """Log-returns with optional date labels (labels carry no arithmetic)."""

    values: np.ndarray
    labels: Optional[list] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("returns must be one-dimensional")
        if not np.all(np.isfinite(v)):
            raise ValueError("returns must be finite")
        if self.labels is not None:
            if len(self.labels) != v.size:
                raise ValueError("labels and values differ in length")
            if any(a >= b for a, b in zip(self.labels, self.labels[1:])):
                raise ValueError("labels must be strictly increasing")

    def __len__(self):
        return len(self.values)

    def head(self, n):
        labels = None if self.labels is None else self.labels[:n]
        return ReturnSeries(np.asarray(self.values)[:n], labels)


def _data_lines(f):
    for line in f:
        if not line.startswith("#"):
            yield line


def ingest_prices(path, column=None, mode="prices", date_column=None):
    """Read a CSV with a header row into a :class:`ReturnSeries`.

    Parameters
    ----------
    path : str or path-like
    column : str, optional
        Numeric column; defaults to ``close``/``Close`` if present, else
        ``x``, else the first column that parses as a number.
    mode : {"prices", "returns"}
        ``prices`` turns ``P_t`` into ``log P_t - log P_{t-1}``; ``returns``
        passes values through.
    date_column : str, optional
        Column used as labels.

    Lines starting with ``#`` are ignored; rows with a missing value are
    skipped and counted in the log.
    """
    if mode not in ("prices", "returns"):
        raise ValueError(f"mode must be 'prices' or 'returns', got {mode!r}")
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(_data_lines(f)))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    fields = list(rows[0].keys())
    if column is None:
        for cand in ("close", "Close", "CLOSE", "x"):
            if cand in fields:
                column = cand
                break
        else:
            column = next((c for c in fields if _is_number(rows[0][c])), None)
            if column is None:
                raise ValueError(f"{path}: no numeric column found")
    if column not in fields:
        raise ValueError(f"{path}: column {column!r} not in header {fields}")
    if date_column is not None and date_column not in fields:
        raise ValueError(f"{path}: column {date_column!r} not in header {fields}")
    values, labels, skipped = [], [], 0
    for i, row in enumerate(rows):
        raw = (row[column] or "").strip()
        if raw.lower() in MISSING:
            skipped += 1
            continue
        try:
            values.append(float(raw))
        except ValueError as exc:
            raise ValueError(f"{path}: row {i + 2}: cannot parse {raw!r}") from exc
        if date_column is not None:
            labels.append(row[date_column].strip())
    if skipped:
        logger.warning("%s: skipped %d rows with missing values", path, skipped)
    v = np.array(values)
    if mode == "prices":
        if v.size < 2:
            raise ValueError(f"{path}: need at least 2 prices")
        if np.any(v <= 0):
            raise ValueError(f"{path}: prices must be positive")
        v = np.diff(np.log(v))
        labels = labels[1:]
    if v.size == 0:
        raise ValueError(f"{path}: empty return series")
    return ReturnSeries(v, labels if date_column is not None else None)


def _is_number(s):
    try:
        float(s)
        return True
    except (TypeError, ValueError):
        return False


def fmt_float(v):
    v = float(v)
    if not math.isfinite(v):
        return "null"
    return "%.17g" % v


def dumps(obj):
    """JSON text with 17-significant-digit floats and insertion key order."""
    out = io.StringIO()
    _dump(obj, out)
    out.write("\n")
    return out.getvalue()


def _dump(obj, out):
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.write(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.write(fmt_float(obj))
    elif isinstance(obj, str):
        out.write(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.write("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.write(", ")
            out.write(json.dumps(str(k), ensure_ascii=False))
            out.write(": ")
            _dump(v, out)
        out.write("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.write("[")
        for i, v in enumerate(obj):
            if i:
                out.write(", ")
            _dump(v, out)
        out.write("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, meta, data):
    text = dumps({"meta": meta, "data": data})
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def write_csv(path, meta, columns):
    """``#``-prefixed JSON metadata line, then a header and one row per index."""
    names = list(columns)
    n = len(next(iter(columns.values()))) if columns else 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("# " + dumps(meta))
        w = csv.writer(f, lineterminator="\n")
        w.writerow(names)
        for i in range(n):
            w.writerow([_cell(columns[c][i]) for c in names])


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return fmt_float(v) if math.isfinite(v) else ""
    return v


def read_artifact(path):
    """Load ``(meta, data)`` from a JSON or CSV artifact."""
    with open(path, encoding="utf-8") as f:
        first = f.readline()
        if first.startswith("# "):
            meta = json.loads(first[2:])
            rows = list(csv.DictReader(f))
            return meta, rows
        f.seek(0)
        doc = json.load(f)
    return doc["meta"], doc["data"]
