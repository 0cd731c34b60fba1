"""Trajectory CSV serialization.

One row per grid node. Series a trajectory does not carry are written as empty
cells so the column layout depends only on the dimension. Floats use ``repr``,
which round-trips binary64 exactly.
"""

from __future__ import annotations

import csv

import numpy as np

from riemctrl.dynamics import Trajectory
from riemctrl.errors import IoError, ParseError

_VECTOR_SERIES = (("q", "q"), ("qdot", "qd"), ("u", "u"), ("u_cov", "ucov"), ("p", "p"), ("xi", "xi"))
_SCALAR_SERIES = (("H", "H"), ("energy", "energy"), ("run_cost", "run_cost"))


def trajectory_header(dim):
    cols = ["t"]
    for _, prefix in _VECTOR_SERIES:
        cols += [f"{prefix}{i + 1}" for i in range(dim)]
    cols += [name for _, name in _SCALAR_SERIES]
    return cols


def _cell(x):
    return repr(float(x))


def trajectory_rows(tr: Trajectory):
    n = tr.dim
    blank = [""] * n
    for i in range(len(tr)):
        row = [_cell(tr.times[i])]
        for attr, _ in _VECTOR_SERIES:
            series = getattr(tr, attr)
            row += blank if series is None else [_cell(x) for x in series[i]]
        for attr, _ in _SCALAR_SERIES:
            series = getattr(tr, attr)
            row.append("" if series is None else _cell(series[i]))
        yield row


def write_trajectory_csv(tr: Trajectory, path):
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(trajectory_header(tr.dim))
            writer.writerows(trajectory_rows(tr))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_trajectory_csv(path) -> Trajectory:
    """Inverse of :func:`write_trajectory_csv`; a series is absent iff its cells are empty."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path} is empty", line=1)
    header = rows[0]
    n = (len(header) - 1 - len(_SCALAR_SERIES)) // len(_VECTOR_SERIES)
    if n < 1 or header != trajectory_header(n):
        raise ParseError(f"unexpected trajectory header in {path}", line=1)
    body = rows[1:]
    for k, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} cells, got {len(row)}", line=k)

    def column_block(start, width):
        cells = [row[start : start + width] for row in body]
        empty = [all(c == "" for c in r) for r in cells]
        if all(empty):
            return None
        if any(empty) or any(c == "" for r in cells for c in r):
            raise ParseError(f"partially empty column {header[start]!r}", key=header[start])
        try:
            return np.array([[float(c) for c in r] for r in cells]).reshape(len(body), width)
        except ValueError as exc:
            raise ParseError(str(exc), key=header[start]) from exc

    fields = {"times": column_block(0, 1)}
    col = 1
    for attr, _ in _VECTOR_SERIES:
        fields[attr] = column_block(col, n)
        col += n
    for attr, _ in _SCALAR_SERIES:
        block = column_block(col, 1)
        fields[attr] = None if block is None else block[:, 0]
        col += 1
    if fields["times"] is None or fields["q"] is None or fields["qdot"] is None:
        raise ParseError("t, q and qd columns are required", line=2)
    fields["times"] = fields["times"][:, 0]
    return Trajectory(**fields)
