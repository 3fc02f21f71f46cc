"""Signal matrix files and benchmark CSV output.

Two signal formats are supported, both with channels in rows:

* CSV: one channel per line, comma separated numbers. Blank lines and
  lines starting with ``#`` are ignored.
* PICO binary, little endian: magic ``b"PICO"``, ``u32`` version (1),
  ``u64`` N, ``u64`` T, then N*T ``float64`` values in row-major order.
"""

import csv
import struct
from pathlib import Path

import numpy as np

from ..exceptions import DataFormatError
from ..picard_o import TRACE_FIELDS

MAGIC = b"PICO"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")

TRACE_COLUMNS = ("algorithm", "seed") + TRACE_FIELDS
RECORD_COLUMNS = (
    "algorithm",
    "seed",
    "converged",
    "iterations",
    "seconds",
    "final_grad_norm",
    "amari",
    "message",
)


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def read_matrix_csv(path):
    """Read a CSV signal matrix.

    Raises
    ------
    DataFormatError
        On a non-numeric field or a row whose length differs from the first,
        with the offending line number.
    """
    path = Path(path)
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = text.split(",")
            try:
                values = [float(f) for f in fields]
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: non-numeric field in {text!r}") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise DataFormatError(
                    f"{path}:{lineno}: ragged row with {len(values)} fields, expected {width}"
                )
            rows.append(values)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def write_matrix_csv(path, x):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    with open(path, "w", newline="") as fh:
        for row in x:
            fh.write(",".join(_fmt(v) for v in row))
            fh.write("\n")


def read_matrix_bin(path):
    """Read a PICO binary signal matrix.

    Raises
    ------
    DataFormatError
        On a bad magic, an unsupported version or a truncated payload.
    """
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise DataFormatError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, n, t = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 8 * n * t
    if len(blob) < expected:
        raise DataFormatError(
            f"{path}: truncated payload at offset {len(blob)}, expected {expected} bytes"
        )
    data = np.frombuffer(blob, dtype="<f8", count=n * t, offset=_HEADER.size)
    return data.reshape(n, t).astype(np.float64)


def write_matrix_bin(path, x):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    n, t = x.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, t))
        fh.write(np.ascontiguousarray(x, dtype="<f8").tobytes())


def read_matrix(path):
    """Read a signal matrix, choosing the format from the magic bytes."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return read_matrix_bin(path)
    return read_matrix_csv(path)


def write_trace_csv(records, path):
    """Write every trace row of `records` (a list of RunRecord) to CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for rec in records:
            for row in rec.trace:
                writer.writerow([rec.algorithm, rec.seed] + [_fmt(v) for v in row])


def read_trace_csv(path):
    """Read a trace CSV back into a list of dicts with numeric fields parsed."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise DataFormatError(f"{path}: unexpected trace columns {reader.fieldnames}")
        for row in reader:
            out.append(
                {
                    "algorithm": row["algorithm"],
                    "seed": int(row["seed"]),
                    "iter": int(row["iter"]),
                    "grad_norm": float(row["grad_norm"]),
                    "loss": float(row["loss"]),
                    "elapsed_s": float(row["elapsed_s"]),
                    "ls_count": int(row["ls_count"]),
                    "sign_flips": int(row["sign_flips"]),
                }
            )
    return out


def write_records_csv(records, path):
    """One summary line per run."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(getattr(rec, c)) for c in RECORD_COLUMNS])
