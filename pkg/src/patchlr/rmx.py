"""Raw binary matrix container used by the bench CLI and serializers.

Layout: 4-byte magic "RMX1", then patch/rows/cols as 32-bit little-endian
unsigned integers, zero-padded to a 24-byte header, then the matrix payload as
row-major little-endian float64.

When the patch tag is positive the payload is a reordered patch-column matrix
of shape (patch^2, (rows/patch)*(cols/patch)); when it is zero the payload is
a plain rows x cols matrix.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"RMX1"
HEADER_SIZE = 24


def _payload_shape(patch: int, rows: int, cols: int):
    if patch == 0:
        return rows, cols
    if patch < 0 or rows % patch or cols % patch:
        raise ValueError(f"patch tag {patch} does not divide {rows}x{cols}")
    return patch * patch, (rows // patch) * (cols // patch)


def pack_matrix(matrix: np.ndarray, patch: int, rows: int, cols: int) -> bytes:
    """Serialize a 2-D float array under the given (patch, rows, cols) tags."""
    a = np.ascontiguousarray(matrix, dtype=np.float64)
    expected = _payload_shape(patch, rows, cols)
    if a.shape != expected:
        raise ValueError(f"matrix shape {a.shape} does not match tags {(patch, rows, cols)}"
                         f" (expected {expected})")
    header = MAGIC + struct.pack("<III", patch, rows, cols)
    header += b"\x00" * (HEADER_SIZE - len(header))
    return header + a.astype("<f8").tobytes()


def unpack_matrix(data: bytes):
    """Inverse of pack_matrix; returns (matrix, (patch, rows, cols))."""
    if len(data) < HEADER_SIZE:
        raise ValueError(f"raw matrix data too short: {len(data)} bytes")
    if bytes(data[:4]) != MAGIC:
        raise ValueError(f"bad magic {bytes(data[:4])!r}, expected {MAGIC!r}")
    patch, rows, cols = struct.unpack("<III", data[4:16])
    shape = _payload_shape(patch, rows, cols)
    need = shape[0] * shape[1] * 8
    payload = data[HEADER_SIZE:HEADER_SIZE + need]
    if len(payload) < need:
        raise ValueError(f"truncated payload: expected {need} bytes, found {len(payload)}")
    matrix = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(shape)
    return matrix, (patch, rows, cols)
