"""Reader/writer for the FEA1 binary feature-matrix format.

Layout: 4 magic bytes "FEA1", rows and cols as unsigned 32-bit little-endian
integers, then rows*cols IEEE-754 32-bit little-endian floats in row-major
order. One file holds one matrix.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import BadMagic, TruncatedFile, ZeroDims

MAGIC = b"FEA1"
_HEADER = struct.Struct("<4sII")


def read_feature_matrix(path: str | Path) -> np.ndarray:
    """Read one FEA1 file into a float32 array of shape (rows, cols)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise TruncatedFile(f"{path}: {len(raw)} bytes is too short for a FEA1 header")
    magic, rows, cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagic(f"{path}: expected {MAGIC!r}, found {magic!r}")
    if rows == 0 or cols == 0:
        raise ZeroDims(f"{path}: header declares {rows}x{cols}")
    need = rows * cols * 4
    payload = raw[_HEADER.size:_HEADER.size + need]
    if len(payload) < need:
        raise TruncatedFile(
            f"{path}: payload holds {len(payload)} bytes, header needs {need}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
    # frombuffer views are read-only; hand back an owned, writable array
    return values.astype(np.float32)


def write_feature_matrix(path: str | Path, matrix: np.ndarray) -> None:
    """Write a 2-D array as a FEA1 file (values stored as float32)."""
    m = np.asarray(matrix)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {m.shape}")
    rows, cols = m.shape
    if rows == 0 or cols == 0:
        raise ZeroDims(f"refusing to write a {rows}x{cols} matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("feature matrix contains non-finite values")
    data = np.ascontiguousarray(m, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, rows, cols))
        fh.write(data.tobytes())
