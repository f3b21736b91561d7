"""CSV reading and writing with full-precision, byte-stable float formatting."""
from __future__ import annotations

import csv
import os

import numpy as np

from .exceptions import InvalidInputError


def format_float(x) -> str:
    """Shortest round-trip decimal form; identical bytes for identical values."""
    return repr(float(x))


def _parse_row(fields):
    return [float(f) for f in fields]


def read_matrix_csv(path) -> np.ndarray:
    """Read a numeric matrix; a non-numeric first line is treated as a header."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        first = True
        for fields in reader:
            if not fields:
                continue
            if first:
                first = False
                try:
                    rows.append(_parse_row(fields))
                except ValueError:
                    continue  # header line
            else:
                rows.append(_parse_row(fields))
    if not rows:
        raise InvalidInputError(f"{path}: no numeric rows found")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidInputError(f"{path}: ragged rows (widths {sorted(widths)})")
    return np.array(rows, dtype=float)


def read_vector_csv(path) -> np.ndarray:
    mat = read_matrix_csv(path)
    if mat.shape[1] != 1:
        raise InvalidInputError(f"{path}: expected a single column, got {mat.shape[1]}")
    return mat[:, 0]


def write_matrix_csv(path, arr, header=None) -> None:
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for row in arr:
            writer.writerow([format_float(v) for v in row])


def write_vector_csv(path, vec, header=None) -> None:
    vec = np.asarray(vec, dtype=float)
    write_matrix_csv(path, vec.reshape(-1, 1),
                     header=[header] if isinstance(header, str) else header)


def write_rows_csv(path, header, rows) -> None:
    """Write pre-formatted rows (sequences of strings) under a header."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def write_estimate_report_csv(path, report) -> None:
    """Per-draw trail of an EstimateReport: draw, estimate, support size, support.

    Support indices are 0-based and semicolon-joined.
    """
    rows = []
    for i, (value, support) in enumerate(zip(report.per_draw, report.supports), start=1):
        rows.append([str(i), format_float(value), str(len(support)),
                     ";".join(str(j) for j in support.indices)])
    write_rows_csv(path, ["draw", "estimate", "support_size", "support"], rows)
