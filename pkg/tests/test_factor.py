import numpy as np
import pytest
from hypothesis import given, strategies as st

from patchlr.factor import (Factorization, NmfConfig, nmf_factor,
                            read_factorization, svd_truncate,
                            write_factorization)


def fro(a):
    return np.linalg.norm(a)


def truncation_error_by_gram_eigenvalues(a, k):
    """Oracle: sqrt of the trailing eigenvalue mass of a'a, independent of any SVD."""
    lam = np.linalg.eigvalsh(a.T @ a)           # ascending
    tail = np.clip(lam, 0.0, None)[: a.shape[1] - k]
    return float(np.sqrt(tail.sum()))


class TestSvdTruncate:
    def test_diagonal_truncation(self):
        a = np.diag([3.0, 2.0, 1.0])
        f = svd_truncate(a, 2)
        np.testing.assert_allclose(f.reconstruct(), np.diag([3.0, 2.0, 0.0]), atol=1e-12)
        assert abs(fro(a - f.reconstruct()) - 1.0) < 1e-12
        assert f.backend == "svd"
        assert f.objective_trace.size == 0

    def test_identity_full_rank(self):
        a = np.eye(4)
        f = svd_truncate(a, 4)
        np.testing.assert_allclose(f.reconstruct(), a, atol=1e-12)
        assert not f.rank_deficient

    @pytest.mark.parametrize("k", range(1, 9))
    def test_error_matches_gram_eigenvalue_oracle(self, k):
        a = np.random.default_rng(k).standard_normal((8, 8))
        f = svd_truncate(a, k)
        err = fro(a - f.reconstruct())
        oracle = truncation_error_by_gram_eigenvalues(a, k)
        assert abs(err - oracle) <= 1e-8 * (oracle + fro(a))

    def test_final_error_field(self):
        a = np.random.default_rng(3).standard_normal((10, 6))
        f = svd_truncate(a, 3)
        assert abs(f.final_error - fro(a - f.reconstruct())) < 1e-10

    def test_singular_values_non_increasing(self):
        a = np.random.default_rng(5).random((12, 9))
        f = svd_truncate(a, 9)
        norms = np.linalg.norm(f.w, axis=0)
        assert (np.diff(norms) <= 1e-12).all()

    def test_rank_deficient_pads_with_zeros(self):
        rng = np.random.default_rng(11)
        a = np.outer(rng.random(6), rng.random(6)) + np.outer(rng.random(6), rng.random(6))
        f = svd_truncate(a, 5)
        assert f.rank_deficient
        assert (f.w[:, 2:] == 0).all()
        assert (f.h[2:, :] == 0).all()
        np.testing.assert_allclose(f.reconstruct(), a, atol=1e-12)

    def test_zero_matrix(self):
        f = svd_truncate(np.zeros((4, 5)), 2)
        assert f.rank_deficient
        assert (f.w == 0).all() and (f.h == 0).all()

    def test_rank_out_of_range(self):
        a = np.ones((4, 6))
        with pytest.raises(ValueError, match="rank"):
            svd_truncate(a, 5)
        with pytest.raises(ValueError, match="rank"):
            svd_truncate(a, 0)

    @pytest.mark.parametrize("shape", [(6, 40), (40, 6)])
    def test_rectangular_qr_path_agrees_with_plain_svd(self, shape):
        a = np.random.default_rng(0).standard_normal(shape)
        k = 4
        f = svd_truncate(a, k)
        u, s, vt = np.linalg.svd(a, full_matrices=False)
        np.testing.assert_allclose(f.reconstruct(), (u[:, :k] * s[:k]) @ vt[:k], atol=1e-10)

    def test_full_rank_self_consistency(self):
        a = np.random.default_rng(9).random((16, 16)) + np.eye(16)
        f = svd_truncate(a, 16)
        assert fro(a - f.reconstruct()) <= 1e-8 * fro(a)


class TestNmfFactor:
    def test_exact_rank_one_matrix(self):
        rng = np.random.default_rng(2)
        a = np.outer(rng.random(12) + 0.1, rng.random(15) + 0.1)
        f = nmf_factor(a, 1, NmfConfig(max_iters=500, rel_tol=1e-9, seed=0))
        assert f.final_error <= 1e-6 * fro(a)

    def test_error_never_beats_svd(self):
        rng = np.random.default_rng(4)
        for trial in range(5):
            a = rng.random((10, 14))
            for k in (1, 3, 5):
                nerr = nmf_factor(a, k, NmfConfig(seed=trial)).final_error
                serr = svd_truncate(a, k).final_error
                assert nerr >= serr - 1e-9

    def test_trace_monotone_500_iters(self):
        a = np.random.default_rng(6).random((6, 6))
        f = nmf_factor(a, 3, NmfConfig(max_iters=500, rel_tol=1e-15, seed=1))
        assert (np.diff(f.objective_trace) <= 1e-10).all()

    def test_factors_nonnegative(self):
        a = np.random.default_rng(8).random((9, 7))
        f = nmf_factor(a, 4, NmfConfig(seed=3))
        assert f.w.min() >= 0 and f.h.min() >= 0

    def test_deterministic_given_seed(self):
        a = np.random.default_rng(10).random((8, 8))
        f1 = nmf_factor(a, 3, NmfConfig(seed=42))
        f2 = nmf_factor(a, 3, NmfConfig(seed=42))
        assert np.array_equal(f1.w, f2.w) and np.array_equal(f1.h, f2.h)
        assert np.array_equal(f1.objective_trace, f2.objective_trace)

    def test_seed_changes_result(self):
        a = np.random.default_rng(10).random((8, 8))
        f1 = nmf_factor(a, 3, NmfConfig(seed=1))
        f2 = nmf_factor(a, 3, NmfConfig(seed=2))
        assert not np.array_equal(f1.w, f2.w)

    def test_negative_input_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            nmf_factor(np.array([[1.0, -0.001], [0.5, 0.5]]), 1)

    def test_rank_out_of_range(self):
        with pytest.raises(ValueError, match="rank"):
            nmf_factor(np.ones((3, 3)), 4)

    def test_zero_matrix_stays_finite(self):
        f = nmf_factor(np.zeros((5, 5)), 2, NmfConfig(max_iters=20, seed=0))
        assert np.isfinite(f.w).all() and np.isfinite(f.h).all()
        assert f.final_error == 0.0

    def test_trace_records_every_iteration(self):
        a = np.random.default_rng(1).random((8, 8))
        f = nmf_factor(a, 2, NmfConfig(max_iters=37, rel_tol=1e-300, seed=0))
        assert f.objective_trace.size == 37

    @given(st.integers(0, 10 ** 6))
    def test_monotone_trace_property(self, seed):
        a = np.random.default_rng(seed).random((7, 9))
        f = nmf_factor(a, 3, NmfConfig(max_iters=60, rel_tol=1e-12, seed=seed))
        assert (np.diff(f.objective_trace) <= 1e-10).all()


class TestValidation:
    def test_nmf_config_bounds(self):
        with pytest.raises(ValueError, match="max_iters"):
            NmfConfig(max_iters=0)
        with pytest.raises(ValueError, match="rel_tol"):
            NmfConfig(rel_tol=0.0)
        with pytest.raises(ValueError, match="epsilon_guard"):
            NmfConfig(epsilon_guard=-1e-9)

    def test_factorization_shape_check(self):
        with pytest.raises(ValueError, match="rank"):
            Factorization(np.zeros((4, 2)), np.zeros((3, 5)), 2, "svd")

    def test_factorization_backend_check(self):
        with pytest.raises(ValueError, match="backend"):
            Factorization(np.zeros((4, 2)), np.zeros((2, 5)), 2, "qr")

    def test_factorization_nmf_sign_check(self):
        with pytest.raises(ValueError, match="nonnegative"):
            Factorization(-np.ones((4, 2)), np.ones((2, 5)), 2, "nmf")

    def test_factorization_increasing_trace_rejected(self):
        with pytest.raises(ValueError, match="trace"):
            Factorization(np.ones((4, 2)), np.ones((2, 5)), 2, "svd",
                          objective_trace=np.array([1.0, 2.0]))


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        a = np.random.default_rng(0).random((10, 8))
        f = nmf_factor(a, 3, NmfConfig(max_iters=40, seed=5))
        write_factorization(f, tmp_path)
        g = read_factorization(tmp_path)
        assert np.array_equal(g.w, f.w) and np.array_equal(g.h, f.h)
        assert (g.backend, g.rank) == ("nmf", 3)
        assert g.final_error == f.final_error

    def test_sidecar_single_line(self, tmp_path):
        f = svd_truncate(np.eye(4), 2)
        write_factorization(f, tmp_path)
        text = (tmp_path / "factor.txt").read_text()
        assert text.count("\n") == 1
        assert text.startswith("backend=svd rank=2 iters=0 ")
