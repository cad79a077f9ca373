"""Dictionary atlas rendering: the columns of W drawn as a grid of patches.

Each column of a factorization's W matrix is un-flattened into a p x p patch
(the exact inverse of the patch-column flattening) and placed on a grid.
Zero values render black, positive values pink and negative values light
blue, with brightness growing monotonically in magnitude, so sign structure
is visible at a glance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .factor import Factorization

VALUE_SCALES = ("per-atlas-max", "per-patch-max")

PINK = np.array([255, 105, 180], dtype=np.float64)
LIGHT_BLUE = np.array([173, 216, 230], dtype=np.float64)
GUTTER_GRAY = 128


@dataclass(frozen=True)
class AtlasSpec:
    """Layout of the rendered dictionary grid."""

    patch_size: int
    grid_rows: int = 4
    grid_cols: int = 8
    separator_px: int = 1
    value_scale: str = "per-atlas-max"

    def __post_init__(self):
        if self.patch_size < 1:
            raise ValueError(f"patch_size must be positive, got {self.patch_size}")
        if self.grid_rows < 1 or self.grid_cols < 1:
            raise ValueError("grid dimensions must be positive")
        if self.separator_px < 0:
            raise ValueError(f"separator_px must be >= 0, got {self.separator_px}")
        if self.value_scale not in VALUE_SCALES:
            raise ValueError(f"unknown value_scale {self.value_scale!r}; choose from {VALUE_SCALES}")


def column_to_patch(column: np.ndarray, p: int) -> np.ndarray:
    """Un-flatten a length-p^2 dictionary column into its p x p patch."""
    col = np.asarray(column, dtype=np.float64)
    if col.shape != (p * p,):
        raise ValueError(f"column of shape {col.shape} is not a flattened {p}x{p} patch")
    return col.reshape(p, p)


def _colorize(patch: np.ndarray, scale: float) -> np.ndarray:
    t = np.abs(patch) / scale if scale > 0 else np.zeros_like(patch)
    rgb = np.zeros(patch.shape + (3,), dtype=np.float64)
    pos = patch > 0
    neg = patch < 0
    rgb[pos] = PINK * t[pos, None]
    rgb[neg] = LIGHT_BLUE * t[neg, None]
    return np.rint(rgb).astype(np.uint8)


def render_atlas(fact: Factorization, spec: AtlasSpec) -> np.ndarray:
    """Render the dictionary columns of fact.w as an RGB uint8 raster.

    Column c lands at grid cell (c // grid_cols, c % grid_cols).  Cells
    beyond the factorization rank stay black; gutters between cells are
    mid-gray.  Raises if W's rows are not patch_size^2 or the rank exceeds
    the grid capacity.
    """
    p = spec.patch_size
    if fact.w.shape[0] != p * p:
        raise ValueError(
            f"w has {fact.w.shape[0]} rows; expected {p * p} for {p}x{p} patches"
        )
    if fact.rank > spec.grid_rows * spec.grid_cols:
        raise ValueError(
            f"rank {fact.rank} exceeds grid capacity {spec.grid_rows}x{spec.grid_cols}"
        )
    sep = spec.separator_px
    height = spec.grid_rows * p + (spec.grid_rows - 1) * sep
    width = spec.grid_cols * p + (spec.grid_cols - 1) * sep
    canvas = np.full((height, width, 3), GUTTER_GRAY, dtype=np.uint8)

    atlas_max = float(np.abs(fact.w).max()) if fact.w.size else 0.0
    for gr in range(spec.grid_rows):
        for gc in range(spec.grid_cols):
            c = gr * spec.grid_cols + gc
            r0 = gr * (p + sep)
            c0 = gc * (p + sep)
            if c >= fact.rank:
                canvas[r0:r0 + p, c0:c0 + p] = 0
                continue
            patch = column_to_patch(fact.w[:, c], p)
            if spec.value_scale == "per-patch-max":
                scale = float(np.abs(patch).max())
            else:
                scale = atlas_max
            canvas[r0:r0 + p, c0:c0 + p] = _colorize(patch, scale)
    return canvas


def dictionary_sparsity(fact: Factorization, threshold: float) -> float:
    """Fraction of W entries at or below threshold after per-column max-normalization."""
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    w = np.abs(fact.w)
    colmax = w.max(axis=0)
    normalized = np.divide(w, colmax, out=np.zeros_like(w), where=colmax > 0)
    return float(np.mean(normalized <= threshold))


def save_ppm(rgb: np.ndarray) -> bytes:
    """Serialize an RGB uint8 raster as binary PPM (P6, maxval 255)."""
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 array of shape (h, w, 3), got {arr.dtype} {arr.shape}")
    header = f"P6\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
    return header + arr.tobytes()


def atlas_sidecar(fact: Factorization, threshold: float = 0.05) -> str:
    """Text sidecar listing per-column L2 norms and the dictionary sparsity."""
    lines = ["column l2_norm"]
    norms = np.linalg.norm(fact.w, axis=0)
    for c, value in enumerate(norms):
        lines.append(f"{c} {value:.6g}")
    lines.append(f"sparsity_threshold {threshold:.6g}")
    lines.append(f"sparsity {dictionary_sparsity(fact, threshold):.6g}")
    return "\n".join(lines) + "\n"
