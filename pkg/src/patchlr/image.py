"""Grayscale image model: the ImageMatrix type, PGM I/O and synthetic test images.

Intensities are normalized to [0, 1] at load time so that downstream quality
metrics operate on a unit dynamic range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_WHITESPACE = b" \t\n\r\x0b\x0c"

SYNTH_KINDS = ("gradient", "checkerboard", "gaussian-blobs", "uniform-noise")

# gaussian-blobs bump parameters: elongated, rotated bumps give the image the
# local-stroke structure of natural images instead of a globally low-rank blob.
_BLOB_COUNT = 5
_BLOB_LONG_FRAC = (0.17, 0.5)   # long-axis sigma, fraction of min(rows, cols)
_BLOB_SHORT_SIGMA = (1.5, 4.0)  # short-axis sigma, pixels
_BLOB_AMPLITUDE = (0.5, 1.0)


class PgmError(ValueError):
    """Malformed PGM data."""


def as_readonly_f64(arr: np.ndarray) -> np.ndarray:
    """Owned, C-contiguous, read-only float64 view of arr (copying if needed)."""
    a = np.asarray(arr, dtype=np.float64)
    if a.flags.c_contiguous and not a.flags.writeable and a.base is None:
        return a
    a = np.array(a, dtype=np.float64, order="C", copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ImageMatrix:
    """Dense grid of real intensities in [0, 1].

    The pixel array is frozen (read-only) on construction, so an ImageMatrix
    can be shared freely across threads.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = as_readonly_f64(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"pixel array must be 2-D and non-empty, got shape {px.shape}")
        if not ((px >= 0.0) & (px <= 1.0)).all():
            raise ValueError("pixel intensities must lie in [0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def rows(self) -> int:
        return self.pixels.shape[0]

    @property
    def cols(self) -> int:
        return self.pixels.shape[1]


def _next_token(data: bytes, pos: int):
    """Return (token, token_start, next_pos), skipping whitespace and # comments."""
    n = len(data)
    while pos < n:
        c = data[pos]
        if c in _WHITESPACE:
            pos += 1
        elif c == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
        else:
            break
    if pos >= n:
        raise PgmError(f"unexpected end of data at byte offset {pos}")
    start = pos
    while pos < n and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
        pos += 1
    return data[start:pos], start, pos


def _token_int(data: bytes, pos: int, what: str):
    token, start, pos = _next_token(data, pos)
    if not token.isdigit():
        raise PgmError(f"invalid {what} {token!r} at byte offset {start}")
    return int(token), pos


def load_pgm(data: bytes) -> ImageMatrix:
    """Parse PGM bytes (ASCII "P2" or binary "P5") into an ImageMatrix.

    Intensities are divided by the header maxval so all values lie in [0, 1].
    Header comments (lines starting with '#') are skipped.  Raises PgmError
    naming the byte offset for malformed headers, and a truncation error when
    the pixel payload is shorter than width*height.
    """
    if len(data) < 2:
        raise PgmError("unexpected end of data at byte offset 0")
    magic = bytes(data[:2])
    if magic not in (b"P2", b"P5"):
        raise PgmError(f"unsupported magic {magic!r} at byte offset 0")
    pos = 2
    width, pos = _token_int(data, pos, "width")
    height, pos = _token_int(data, pos, "height")
    maxval, pos = _token_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise PgmError(f"non-positive dimensions {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise PgmError(f"maxval {maxval} outside [1, 65535]")
    count = width * height

    if magic == b"P5":
        if pos >= len(data) or data[pos] not in _WHITESPACE:
            raise PgmError(f"expected single whitespace after maxval at byte offset {pos}")
        pos += 1
        itemsize = 1 if maxval < 256 else 2
        need = count * itemsize
        raster = data[pos:pos + need]
        if len(raster) < need:
            raise PgmError(
                f"truncated pixel data: expected {need} raster bytes, found {len(raster)}"
            )
        dtype = np.uint8 if itemsize == 1 else np.dtype(">u2")
        values = np.frombuffer(raster, dtype=dtype).astype(np.float64)
    else:
        flat = np.empty(count, dtype=np.float64)
        for i in range(count):
            try:
                v, pos = _token_int(data, pos, "pixel value")
            except PgmError as exc:
                if "end of data" in str(exc):
                    raise PgmError(
                        f"truncated pixel data: expected {count} values, found {i}"
                    ) from None
                raise
            flat[i] = v
        values = flat
        # only whitespace/comments may follow the raster
        tail = pos
        n = len(data)
        while tail < n:
            c = data[tail]
            if c in _WHITESPACE:
                tail += 1
            elif c == ord("#"):
                while tail < n and data[tail] not in b"\r\n":
                    tail += 1
            else:
                raise PgmError(f"trailing data after {count} pixel values at byte offset {tail}")

    if values.max(initial=0.0) > maxval:
        raise PgmError(f"pixel value {int(values.max())} exceeds maxval {maxval}")
    return ImageMatrix(values.reshape(height, width) / maxval)


def save_pgm(img: ImageMatrix, maxval: int = 255) -> bytes:
    """Serialize an ImageMatrix as binary PGM (P5).

    Each intensity v is written as round(v*maxval) clamped to [0, maxval], so
    load_pgm(save_pgm(img)) reproduces img within 1/(2*maxval) per pixel.
    """
    if maxval not in (255, 65535):
        raise ValueError(f"maxval must be 255 or 65535, got {maxval}")
    q = np.clip(np.rint(img.pixels * maxval), 0, maxval)
    dtype = np.uint8 if maxval == 255 else np.dtype(">u2")
    header = f"P5\n{img.cols} {img.rows}\n{maxval}\n".encode("ascii")
    return header + q.astype(dtype).tobytes()


def _gaussian_blobs(rows, cols, rng):
    base = min(rows, cols)
    ii, jj = np.meshgrid(np.arange(rows, dtype=np.float64),
                         np.arange(cols, dtype=np.float64), indexing="ij")
    acc = np.zeros((rows, cols))
    for _ in range(_BLOB_COUNT):
        ci = rng.uniform(0, rows)
        cj = rng.uniform(0, cols)
        sig_long = np.exp(rng.uniform(np.log(_BLOB_LONG_FRAC[0] * base),
                                      np.log(_BLOB_LONG_FRAC[1] * base)))
        sig_short = rng.uniform(*_BLOB_SHORT_SIGMA)
        theta = rng.uniform(0.0, np.pi)
        amp = rng.uniform(*_BLOB_AMPLITUDE)
        c, s = np.cos(theta), np.sin(theta)
        x = (ii - ci) * c + (jj - cj) * s
        y = -(ii - ci) * s + (jj - cj) * c
        acc += amp * np.exp(-0.5 * ((x / sig_long) ** 2 + (y / sig_short) ** 2))
    lo, hi = acc.min(), acc.max()
    if hi <= lo:
        return np.zeros((rows, cols))
    return (acc - lo) / (hi - lo)


def synth_image(kind: str, rows: int, cols: int, seed: int = 0) -> ImageMatrix:
    """Deterministic synthetic test image.

    kind is one of "gradient" (row-major ramp over [0, 1]), "checkerboard"
    (0/1 alternating on fixed 8x8 cells), "gaussian-blobs" (five seeded
    anisotropic Gaussian bumps, min-max normalized) or "uniform-noise"
    (i.i.d. uniform [0, 1]).  The result is a pure function of the arguments.
    """
    if kind not in SYNTH_KINDS:
        raise ValueError(f"unknown synthetic image kind {kind!r}; choose from {SYNTH_KINDS}")
    if rows < 4 or cols < 4:
        raise ValueError(f"synthetic images must be at least 4x4, got {rows}x{cols}")
    rng = np.random.default_rng(seed)
    if kind == "gradient":
        idx = np.arange(rows * cols, dtype=np.float64).reshape(rows, cols)
        pixels = idx / (rows * cols - 1)
    elif kind == "checkerboard":
        i = np.arange(rows) // 8
        j = np.arange(cols) // 8
        pixels = ((i[:, None] + j[None, :]) % 2).astype(np.float64)
    elif kind == "gaussian-blobs":
        pixels = _gaussian_blobs(rows, cols, rng)
    else:
        pixels = rng.random((rows, cols))
    return ImageMatrix(pixels)
