"""Binary snapshot files.

Layout (all little-endian)::

    5 bytes   magic b"YLAB1"
    int64     N
    float64   L
    int64     field count F
    float64   time t
    F blocks of N*N float64 real-space samples, row-major (row index = x1)
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError
from .spectral import Grid2D, SpectralField, same_grid

MAGIC = b"YLAB1"
_HEADER = struct.Struct("<5sqdqd")


def encode_snapshot(fields: Sequence[SpectralField], t: float) -> bytes:
    if not fields:
        raise DataError("a snapshot needs at least one field")
    grid = same_grid(*fields)
    parts = [_HEADER.pack(MAGIC, grid.N, float(grid.L), len(fields), float(t))]
    for f in fields:
        parts.append(np.ascontiguousarray(f.to_real(), dtype="<f8").tobytes())
    return b"".join(parts)


def decode_snapshot(data: bytes) -> tuple[list[SpectralField], float]:
    if len(data) < _HEADER.size:
        raise DataError("snapshot truncated: header incomplete")
    magic, n, length, count, t = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DataError(f"bad magic {magic!r}; not a YLAB1 snapshot")
    grid = Grid2D(int(n), float(length))
    expected = _HEADER.size + count * n * n * 8
    if len(data) != expected:
        raise DataError(f"snapshot has {len(data)} bytes, header implies {expected}")
    samples = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(count, n, n)
    return [SpectralField.from_real(grid, s.astype(float)) for s in samples], float(t)


def write_snapshot(path, fields: Sequence[SpectralField], t: float) -> Path:
    path = Path(path)
    path.write_bytes(encode_snapshot(fields, t))
    return path


def read_snapshot(path) -> tuple[list[SpectralField], float]:
    return decode_snapshot(Path(path).read_bytes())
