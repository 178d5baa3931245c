"""Writers and readers for on-disk artifacts (CSV, JSON, SVG)."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from html import escape
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .chainbuilder import STATE_NAMES


def jsonable(obj):
    """Recursively convert numpy values and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(jsonable(obj), fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_csv(path, rows: Iterable[Sequence], delimiter: str = ",") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        for r in rows:
            w.writerow(r)
    return path


def read_csv(path, delimiter: str = ",") -> List[List[str]]:
    with open(path, newline="") as fh:
        return [row for row in csv.reader(fh, delimiter=delimiter)]


def matrix_rows(m, labels: Sequence[str], decimals: int) -> List[List[str]]:
    m = np.asarray(m, dtype=float)
    out = [[""] + list(labels)]
    for lab, row in zip(labels, m):
        out.append([lab] + [f"{v:.{decimals}f}" for v in row])
    return out


def write_tpm_csv(path, p, delimiter: str = ",") -> Path:
    return write_csv(path, matrix_rows(p, STATE_NAMES, 6), delimiter)


def read_matrix_csv(path, delimiter: str = ",") -> np.ndarray:
    rows = read_csv(path, delimiter)
    return np.array([[float(v) for v in r[1:]] for r in rows[1:]])


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _ramp(t: float) -> str:
    """Sequential white -> dark blue colour for t in [0, 1]."""
    t = min(max(t, 0.0), 1.0)
    lo, hi = (247, 251, 255), (8, 48, 107)
    r, g, b = (round(a + (c - a) * t) for a, c in zip(lo, hi))
    return f"#{r:02x}{g:02x}{b:02x}"


def svg_heatmap(
    values,
    row_labels: Sequence[str],
    col_labels: Sequence[str],
    title: str = "",
    decimals: int = 3,
    vmin: Optional[float] = None,
    vmax: Optional[float] = None,
    cell: int = 48,
) -> str:
    """Annotated heatmap as a standalone SVG document."""
    v = np.asarray(values, dtype=float)
    lo = float(np.nanmin(v)) if vmin is None else vmin
    hi = float(np.nanmax(v)) if vmax is None else vmax
    span = hi - lo if hi > lo else 1.0
    left, top = 48, 40 if title else 24
    nr, nc = v.shape
    width, height = left + nc * cell + 8, top + nr * cell + 8
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">'
    ]
    if title:
        parts.append(f'<text x="{left}" y="16" font-size="13">{escape(title)}</text>')
    for j, lab in enumerate(col_labels):
        parts.append(f'<text x="{left + j * cell + cell / 2:.1f}" y="{top - 6}" text-anchor="middle">{escape(lab)}</text>')
    for i, lab in enumerate(row_labels):
        y = top + i * cell
        parts.append(f'<text x="{left - 6}" y="{y + cell / 2 + 4:.1f}" text-anchor="end">{escape(lab)}</text>')
        for j in range(nc):
            x = left + j * cell
            t = (v[i, j] - lo) / span
            fg = "#ffffff" if t > 0.55 else "#000000"
            parts.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{_ramp(t)}" stroke="#cccccc"/>')
            parts.append(
                f'<text x="{x + cell / 2:.1f}" y="{y + cell / 2 + 4:.1f}" text-anchor="middle" '
                f'fill="{fg}">{v[i, j]:.{decimals}f}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def list_inputs(paths: Sequence) -> List[Path]:
    """Expand directories into their sorted ``*.csv``/``*.txt`` files."""
    out: List[Path] = []
    for p in paths:
        p = Path(os.fspath(p))
        if p.is_dir():
            out.extend(sorted(q for q in p.iterdir() if q.suffix.lower() in (".csv", ".txt") and q.is_file()))
        else:
            out.append(p)
    return out
