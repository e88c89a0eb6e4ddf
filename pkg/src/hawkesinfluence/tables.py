"""Deterministic writers for the delimited + line-JSON table pairs every command emits."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def _clean(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return json.dumps(v)
    return str(v)


def write_table(rows: Iterable[dict], stem, columns: Sequence[str] | None = None) -> tuple[Path, Path]:
    """Write ``stem.tsv`` and ``stem.jsonl``; NaN and None become empty cells / null."""
    rows = [{k: _clean(v) for k, v in r.items()} for r in rows]
    if columns is None:
        columns = []
        for r in rows:
            columns.extend(k for k in r if k not in columns)
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    tsv, jsonl = stem.with_suffix(".tsv"), stem.with_suffix(".jsonl")
    with open(tsv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([_cell(r.get(c)) for c in columns])
    with open(jsonl, "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(json.dumps({c: r.get(c) for c in columns}, sort_keys=False) + "\n")
    return tsv, jsonl


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return path


def matrix_rows(groups: Sequence[str], category: str | None = None, **matrices) -> list[dict]:
    """One row per (source, destination) with a column per named K x K matrix."""
    rows = []
    for s, src in enumerate(groups):
        for d, dst in enumerate(groups):
            row = {} if category is None else {"category": category}
            row.update(source=src, destination=dst)
            for name, m in matrices.items():
                row[name] = m[s][d]
            rows.append(row)
    return rows
