"""CSV and key=value file formats with atomic writes."""

from __future__ import annotations

import csv
import io
import os
import tempfile

import numpy as np

from .core import InvalidInputError, SampledSignal

FLOAT_FORMAT = "%.17g"


def format_value(v):
    """Text form of a CSV cell; floats use 17 significant digits so they round-trip."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FORMAT % float(v)
    return str(v)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def atomic_write_text(path, text):
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    atomic_write_text(path, csv_text(header, rows))


def _numeric_rows(path, min_cols):
    try:
        with open(path, newline="") as fh:
            lines = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as err:
        raise InvalidInputError(f"cannot read {path}: {err.strerror}") from err
    if not lines:
        raise InvalidInputError(f"{path} is empty")
    try:
        [float(c) for c in lines[0]]
    except ValueError:
        lines = lines[1:]
    try:
        data = np.array([[float(c) for c in r] for r in lines], dtype=float)
    except ValueError as err:
        raise InvalidInputError(f"{path}: non-numeric cell ({err})") from err
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] < min_cols:
        raise InvalidInputError(f"{path}: expected at least {min_cols} column(s)")
    return data


def read_signal(path):
    """Two-column ``time,value`` CSV; a header line is optional."""
    d = _numeric_rows(path, 2)
    return SampledSignal(d[:, 0], d[:, 1])


def write_signal(path, signal):
    write_csv(path, ["time", "value"], zip(signal.times, signal.values))


def read_column(path):
    """Single-column CSV (one sample per line, header optional)."""
    return _numeric_rows(path, 1)[:, 0]


def read_snapshots(path):
    """Complex matrix from ``re,im`` column pairs (one complex column per pair).

    Snapshot files with a symbol column carry ``2 (K + 1)`` columns; the
    caller splits off the last complex column.
    """
    d = _numeric_rows(path, 2)
    if d.shape[1] % 2:
        raise InvalidInputError(f"{path}: complex CSV needs an even number of columns")
    z = d[:, 0::2] + 1j * d[:, 1::2]
    return z


def write_complex_columns(path, names, columns):
    header = []
    for n in names:
        header += [f"{n}_re", f"{n}_im"]
    cols = [np.asarray(c, dtype=complex) for c in columns]
    rows = []
    for i in range(cols[0].size):
        row = []
        for c in cols:
            row += [c[i].real, c[i].imag]
        rows.append(row)
    write_csv(path, header, rows)


def read_config(path):
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as err:
        raise InvalidInputError(f"cannot read {path}: {err.strerror}") from err
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"{path}:{no}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        if not k:
            raise InvalidInputError(f"{path}:{no}: empty key")
        out[k] = v
    return out
