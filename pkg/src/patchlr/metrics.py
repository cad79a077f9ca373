"""Reconstruction quality metrics: MSE, PSNR and mean structural similarity.

All metrics assume unit dynamic range, i.e. intensities in [0, 1].  MSE is
the mean of squared pixel differences; PSNR is 10*log10(1/MSE) in decibels.
The structural similarity index is computed per window from Gaussian-weighted
local statistics and averaged over every valid (non-padded) window position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d


@dataclass(frozen=True)
class SsimConfig:
    """Window and stabilization constants for the structural similarity index.

    The defaults follow the usual convention: an 11-pixel Gaussian window
    with sigma 1.5, and stabilizers (0.01*L)^2 and (0.03*L)^2 for dynamic
    range L = 1.
    """

    window_side: int = 11
    gaussian_sigma: float = 1.5
    c1: float = 0.01 ** 2
    c2: float = 0.03 ** 2
    dynamic_range: float = 1.0

    def __post_init__(self):
        if self.window_side < 3 or self.window_side % 2 == 0:
            raise ValueError(f"window_side must be odd and >= 3, got {self.window_side}")
        if not self.gaussian_sigma > 0:
            raise ValueError(f"gaussian_sigma must be positive, got {self.gaussian_sigma}")
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError("stabilization constants must be positive")


@dataclass(frozen=True)
class QualityReport:
    mse: float
    psnr: float
    mssim: float

    def __post_init__(self):
        if self.mse < 0:
            raise ValueError(f"mse must be nonnegative, got {self.mse}")
        if self.mssim > 1.0:
            raise ValueError(f"mssim cannot exceed 1, got {self.mssim}")


def _pixels(img) -> np.ndarray:
    return np.asarray(getattr(img, "pixels", img), dtype=np.float64)


def _check_shapes(a, b):
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")


def mse(a, b) -> float:
    """Mean squared pixel difference."""
    x, y = _pixels(a), _pixels(b)
    _check_shapes(x, y)
    return float(np.mean((x - y) ** 2))


def psnr_from_mse(value: float) -> float:
    if value < 0:
        raise ValueError(f"mse must be nonnegative, got {value}")
    if value == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / value)


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB; infinity for identical images."""
    return psnr_from_mse(mse(a, b))


def gaussian_kernel(side: int, sigma: float) -> np.ndarray:
    """Symmetric 2-D Gaussian window normalized to sum exactly 1."""
    half = (side - 1) / 2.0
    x = np.arange(side, dtype=np.float64) - half
    g = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def ssim_local(mu_x, mu_y, var_x, var_y, cov_xy, cfg: SsimConfig | None = None):
    """Structural similarity from local window statistics.

    Works elementwise on arrays of statistics.  Symmetric in x and y, bounded
    above by 1, and exactly 1 when the two windows agree.
    """
    cfg = cfg or SsimConfig()
    c1, c2 = cfg.c1, cfg.c2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov_xy + c2)
    den = (mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2)
    return num / den


def mssim(a, b, cfg: SsimConfig | None = None) -> float:
    """Mean structural similarity over all sliding window positions.

    Local means, variances and covariance are Gaussian-weighted sums over
    each valid window (stride 1, no boundary padding); the index of every
    window is averaged into a single score in (-1, 1].
    """
    cfg = cfg or SsimConfig()
    x, y = _pixels(a), _pixels(b)
    _check_shapes(x, y)
    w = cfg.window_side
    if x.shape[0] < w or x.shape[1] < w:
        raise ValueError(f"images of shape {x.shape} smaller than {w}-pixel window")
    kernel = gaussian_kernel(w, cfg.gaussian_sigma)

    def smooth(z):
        return convolve2d(z, kernel, mode="valid")

    mu_x = smooth(x)
    mu_y = smooth(y)
    var_x = smooth(x * x) - mu_x ** 2
    var_y = smooth(y * y) - mu_y ** 2
    cov_xy = smooth(x * y) - mu_x * mu_y
    return float(np.mean(ssim_local(mu_x, mu_y, var_x, var_y, cov_xy, cfg)))


def quality_report(a, b, cfg: SsimConfig | None = None) -> QualityReport:
    err = mse(a, b)
    return QualityReport(err, psnr_from_mse(err), mssim(a, b, cfg))
