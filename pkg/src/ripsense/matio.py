"""Matrix files: the CSMX binary container and plain CSV.

CSMX layout (little-endian, no padding, no trailer)::

    offset 0   4 bytes   magic b"CSMX"
    offset 4   uint32    format version (1)
    offset 8   uint64    rows
    offset 16  uint64    cols
    offset 24  float64[rows * cols], row-major

Writes go to a temporary file in the target directory and are renamed into
place, so a crash never leaves a partial file behind.
"""

from __future__ import annotations

import io
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"CSMX"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")
_MAX_ELEMENTS = 1 << 40


def atomic_write_bytes(path, payload: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_matrix(m) -> bytes:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"can only encode 2-D arrays, got shape {m.shape}")
    rows, cols = m.shape
    return _HEADER.pack(MAGIC, VERSION, rows, cols) + np.ascontiguousarray(m, dtype="<f8").tobytes()


def decode_matrix(buf: bytes) -> np.ndarray:
    if len(buf) < _HEADER.size:
        raise FormatError(f"truncated header: {len(buf)} of {_HEADER.size} bytes", offset=len(buf))
    magic, version, rows, cols = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    if rows * cols > _MAX_ELEMENTS:
        raise FormatError(f"dimensions {rows}x{cols} overflow", offset=8)
    expected = _HEADER.size + 8 * rows * cols
    if len(buf) < expected:
        raise FormatError(f"truncated data: expected {expected} bytes, found {len(buf)}", offset=len(buf))
    if len(buf) > expected:
        raise FormatError(f"{len(buf) - expected} trailing bytes", offset=expected)
    data = np.frombuffer(buf, dtype="<f8", count=rows * cols, offset=_HEADER.size)
    return data.astype(np.float64).reshape(rows, cols)


def write_matrix(path, m) -> None:
    atomic_write_bytes(path, encode_matrix(m))


def read_matrix(path) -> np.ndarray:
    return decode_matrix(Path(path).read_bytes())


def format_csv(m) -> str:
    m = np.asarray(m, dtype=np.float64)
    return "".join(",".join(f"{v:.17g}" for v in row) + "\n" for row in m)


def parse_csv(text: str) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(io.StringIO(text), 1):
        line = line.strip()
        if not line:
            continue
        try:
            rows.append([float(v) for v in line.split(",")])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
    if not rows:
        raise FormatError("empty CSV")
    if len({len(r) for r in rows}) != 1:
        raise FormatError("CSV rows have unequal lengths")
    return np.array(rows, dtype=np.float64)


def write_csv(path, m) -> None:
    atomic_write_bytes(path, format_csv(m).encode("ascii"))


def read_csv(path) -> np.ndarray:
    return parse_csv(Path(path).read_text())


def load(path) -> np.ndarray:
    """Read a matrix, choosing CSV for ``.csv`` files and CSMX otherwise."""
    return read_csv(path) if str(path).lower().endswith(".csv") else read_matrix(path)


def save(path, m) -> None:
    if str(path).lower().endswith(".csv"):
        write_csv(path, m)
    else:
        write_matrix(path, m)
