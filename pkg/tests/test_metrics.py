import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from patchlr.image import ImageMatrix, synth_image
from patchlr.metrics import (QualityReport, SsimConfig, gaussian_kernel, mse,
                             mssim, psnr, psnr_from_mse, quality_report,
                             ssim_local)


def mssim_by_loops(x, y, cfg):
    """Window-by-window oracle with explicit Gaussian-weighted statistics."""
    w = cfg.window_side
    kernel = gaussian_kernel(w, cfg.gaussian_sigma)
    values = []
    for i in range(x.shape[0] - w + 1):
        for j in range(x.shape[1] - w + 1):
            wx = x[i:i + w, j:j + w]
            wy = y[i:i + w, j:j + w]
            mu_x = float((kernel * wx).sum())
            mu_y = float((kernel * wy).sum())
            var_x = float((kernel * wx * wx).sum()) - mu_x ** 2
            var_y = float((kernel * wy * wy).sum()) - mu_y ** 2
            cov = float((kernel * wx * wy).sum()) - mu_x * mu_y
            num = (2 * mu_x * mu_y + cfg.c1) * (2 * cov + cfg.c2)
            den = (mu_x ** 2 + mu_y ** 2 + cfg.c1) * (var_x + var_y + cfg.c2)
            values.append(num / den)
    return float(np.mean(values))


class TestMse:
    def test_identical(self):
        img = synth_image("uniform-noise", 8, 8, 0)
        assert mse(img, img) == 0.0

    def test_unit_range_extremes(self):
        a = ImageMatrix(np.ones((4, 4)))
        b = ImageMatrix(np.zeros((4, 4)))
        assert mse(a, b) == 1.0

    def test_single_pixel_difference(self):
        a = ImageMatrix(np.full((2, 2), 0.5))
        pix = np.full((2, 2), 0.5)
        pix[0, 1] = 0.6
        b = ImageMatrix(pix)
        assert math.isclose(mse(a, b), 0.0025, rel_tol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shapes differ"):
            mse(ImageMatrix(np.zeros((2, 2))), ImageMatrix(np.zeros((2, 3))))


class TestPsnr:
    def test_formula_values(self):
        assert psnr_from_mse(0.01) == 20.0
        assert psnr_from_mse(1.0) == 0.0

    def test_twenty_db_from_images(self):
        a = ImageMatrix(np.zeros((10, 10)))
        pix = np.zeros((10, 10))
        pix[0, 0] = 1.0
        b = ImageMatrix(pix)
        assert mse(a, b) == 0.01
        assert psnr(a, b) == 20.0

    def test_identical_images_infinite(self):
        img = synth_image("gradient", 8, 8, 0)
        assert psnr(img, img) == math.inf

    def test_strictly_decreasing_in_mse(self):
        base = np.zeros((10, 10))
        values = []
        for npix in (1, 2, 5, 20, 60):
            pix = base.copy()
            pix.flat[:npix] = 1.0
            values.append(psnr(ImageMatrix(base), ImageMatrix(pix)))
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_negative_mse_rejected(self):
        with pytest.raises(ValueError):
            psnr_from_mse(-0.1)


class TestGaussianKernel:
    def test_sums_to_one(self):
        for side, sigma in [(11, 1.5), (3, 0.8), (7, 2.5)]:
            assert abs(gaussian_kernel(side, sigma).sum() - 1.0) <= 1e-12

    def test_symmetric(self):
        k = gaussian_kernel(11, 1.5)
        np.testing.assert_array_equal(k, k.T)
        np.testing.assert_array_equal(k, k[::-1, ::-1])

    def test_peak_at_center(self):
        k = gaussian_kernel(11, 1.5)
        assert k[5, 5] == k.max()


class TestSsimLocal:
    def test_equal_stats_give_one(self):
        assert ssim_local(0.37, 0.37, 0.02, 0.02, 0.02) == 1.0

    def test_symmetry(self):
        cfg = SsimConfig()
        a = ssim_local(0.2, 0.7, 0.01, 0.05, 0.002, cfg)
        b = ssim_local(0.7, 0.2, 0.05, 0.01, 0.002, cfg)
        assert a == b

    def test_constant_windows_closed_form(self):
        cfg = SsimConfig()
        got = ssim_local(0.2, 0.8, 0.0, 0.0, 0.0, cfg)
        # variance terms cancel to 1; the mean term is the whole value
        expected = (2 * 0.2 * 0.8 + cfg.c1) / (0.2 ** 2 + 0.8 ** 2 + cfg.c1)
        assert math.isclose(got, expected, rel_tol=1e-15)

    def test_bounded_by_one(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            mx, my = rng.random(2)
            vx, vy = rng.random(2) * 0.1
            cov = rng.uniform(-1, 1) * math.sqrt(vx * vy)
            assert ssim_local(mx, my, vx, vy, cov) <= 1.0 + 1e-15


class TestMssim:
    def test_self_similarity_is_exactly_one(self):
        for seed in range(5):
            img = synth_image("uniform-noise", 16, 20, seed)
            assert mssim(img, img) == 1.0

    def test_symmetric(self):
        a = synth_image("gaussian-blobs", 16, 16, 1)
        b = synth_image("uniform-noise", 16, 16, 2)
        assert abs(mssim(a, b) - mssim(b, a)) <= 1e-12

    def test_matches_loop_oracle(self):
        cfg = SsimConfig()
        a = synth_image("gaussian-blobs", 14, 15, 3)
        b = synth_image("uniform-noise", 14, 15, 4)
        got = mssim(a, b, cfg)
        want = mssim_by_loops(a.pixels, b.pixels, cfg)
        assert math.isclose(got, want, rel_tol=1e-11, abs_tol=1e-12)

    @given(st.integers(0, 10 ** 6))
    def test_range_property(self, seed):
        rng = np.random.default_rng(seed)
        a = ImageMatrix(rng.random((12, 12)))
        b = ImageMatrix(rng.random((12, 12)))
        value = mssim(a, b)
        assert -1.0 < value <= 1.0

    def test_image_smaller_than_window(self):
        img = synth_image("gradient", 8, 8, 0)
        with pytest.raises(ValueError, match="window"):
            mssim(img, img, SsimConfig(window_side=11))

    def test_degraded_scores_lower(self):
        img = synth_image("gaussian-blobs", 32, 32, 7)
        noisy = np.clip(img.pixels + 0.2 * np.random.default_rng(0).standard_normal((32, 32)),
                        0, 1)
        assert mssim(img, ImageMatrix(noisy)) < mssim(img, img)


class TestConfigsAndReport:
    def test_ssim_config_validation(self):
        with pytest.raises(ValueError, match="odd"):
            SsimConfig(window_side=10)
        with pytest.raises(ValueError, match="odd"):
            SsimConfig(window_side=1)
        with pytest.raises(ValueError, match="sigma"):
            SsimConfig(gaussian_sigma=0.0)
        with pytest.raises(ValueError, match="stabilization"):
            SsimConfig(c1=0.0)

    def test_quality_report(self):
        a = synth_image("gaussian-blobs", 16, 16, 0)
        b = synth_image("uniform-noise", 16, 16, 0)
        rep = quality_report(a, b)
        assert rep.mse == mse(a, b)
        assert rep.psnr == psnr(a, b)
        assert rep.mssim == mssim(a, b)

    def test_report_validation(self):
        with pytest.raises(ValueError, match="mse"):
            QualityReport(-1.0, 0.0, 0.5)
        with pytest.raises(ValueError, match="mssim"):
            QualityReport(0.1, 10.0, 1.5)
