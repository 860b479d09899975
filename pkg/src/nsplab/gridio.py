"""Binary 3-D grid files.

Layout: three little-endian int64 sizes ``(nx, ny, nz)`` followed by
``nx*ny*nz`` complex values stored as interleaved little-endian float64
real/imaginary pairs, x index fastest.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .reports import atomic_write

_HEADER = np.dtype("<i8")
_PAYLOAD = np.dtype("<c16")


def grid_bytes(array) -> bytes:
    a = np.asarray(array, dtype=complex)
    if a.ndim != 3:
        raise ValueError("grid files hold 3-D arrays")
    header = np.asarray(a.shape, dtype=_HEADER).tobytes()
    return header + a.astype(_PAYLOAD).ravel(order="F").tobytes()


def write_grid(path, array) -> Path:
    return atomic_write(path, grid_bytes(array))


def read_grid(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 24:
        raise ValueError("truncated grid header")
    shape = tuple(int(v) for v in np.frombuffer(raw[:24], dtype=_HEADER))
    if any(v <= 0 for v in shape):
        raise ValueError(f"invalid grid shape {shape}")
    count = shape[0] * shape[1] * shape[2]
    if len(raw) != 24 + 16 * count:
        raise ValueError("grid payload size does not match header")
    data = np.frombuffer(raw[24:], dtype=_PAYLOAD)
    return data.reshape(shape, order="F").astype(complex)
