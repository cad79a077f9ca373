"""Pixel reordering between an image and its patch-column matrix.

An n x m image is partitioned into non-overlapping p x p patches; each patch
is flattened lexicographically (row by row, top to bottom) into a column, and
columns are arranged left-to-right, top-to-bottom across the patch grid,
giving a p^2 x (nm/p^2) matrix.  The operation is a pure permutation of the
pixels, so the inverse is exact, bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import ImageMatrix, as_readonly_f64
from . import rmx


@dataclass(frozen=True, eq=False)
class ReorderedMatrix:
    """Patch-column matrix tagged with its source geometry (rows, cols, patch)."""

    data: np.ndarray
    patch_size: int
    orig_rows: int
    orig_cols: int

    def __post_init__(self):
        p, n, m = self.patch_size, self.orig_rows, self.orig_cols
        if p < 1:
            raise ValueError(f"patch size must be positive, got {p}")
        if n % p:
            raise ValueError(f"patch size {p} does not divide row count {n}")
        if m % p:
            raise ValueError(f"patch size {p} does not divide column count {m}")
        d = as_readonly_f64(self.data)
        expected = (p * p, (n // p) * (m // p))
        if d.shape != expected:
            raise ValueError(f"data shape {d.shape} inconsistent with tags, expected {expected}")
        object.__setattr__(self, "data", d)


def reorder(img: ImageMatrix, p: int) -> ReorderedMatrix:
    """Rearrange img into its patch-column matrix for patch size p.

    Patch (r, c) of the image becomes column r*(cols/p) + c; within a column,
    entry i*p + j holds image pixel (r*p + i, c*p + j).
    """
    n, m = img.rows, img.cols
    if p < 1:
        raise ValueError(f"patch size must be positive, got {p}")
    if n % p:
        raise ValueError(f"patch size {p} does not divide row count {n}")
    if m % p:
        raise ValueError(f"patch size {p} does not divide column count {m}")
    blocks = img.pixels.reshape(n // p, p, m // p, p)
    data = blocks.transpose(1, 3, 0, 2).reshape(p * p, (n // p) * (m // p))
    data.setflags(write=False)
    return ReorderedMatrix(data, p, n, m)


def inverse_reorder(rm: ReorderedMatrix) -> ImageMatrix:
    """Exact inverse of reorder: rebuild the image from its patch columns."""
    p, n, m = rm.patch_size, rm.orig_rows, rm.orig_cols
    patches = rm.data.reshape(p, p, n // p, m // p)
    pixels = patches.transpose(2, 0, 3, 1).reshape(n, m)
    pixels.setflags(write=False)
    return ImageMatrix(pixels)


def max_rank(rm: ReorderedMatrix) -> int:
    """Largest factorization rank the patch-column matrix supports."""
    p = rm.patch_size
    return min(p * p, (rm.orig_rows * rm.orig_cols) // (p * p))


def to_bytes(rm: ReorderedMatrix) -> bytes:
    """Serialize to the raw binary matrix format of the bench CLI."""
    return rmx.pack_matrix(rm.data, rm.patch_size, rm.orig_rows, rm.orig_cols)


def from_bytes(data: bytes) -> ReorderedMatrix:
    matrix, (p, n, m) = rmx.unpack_matrix(data)
    if p == 0:
        raise ValueError("raw matrix has no patch tag; not a reordered matrix")
    return ReorderedMatrix(matrix, p, n, m)
