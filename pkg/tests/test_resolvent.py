import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chiralrbm.lyapunov import complex_ginibre_exponent
from chiralrbm.model import (
    BlockTridiagonalOperator,
    build_chiral_model,
    build_full_model,
    build_general_chiral_model,
    to_dense,
)
from chiralrbm.resolvent import (
    NearSpectrumError,
    NotInvertibleError,
    SingularMatrixError,
    block_norm,
    dagger_inverse,
    fractional_moment_estimate,
    fractional_moment_samples,
    log_norm_corner,
    resolvent_block,
    write_samples_csv,
    zero_energy_corner_block,
)
from chiralrbm.sampling import RngStream, sample_ginibre


def dense_block(H, z, x, y):
    """Oracle: slice of the dense inverse."""
    W = H.W
    G = np.linalg.inv(to_dense(H) - z * np.eye(H.N))
    return G[(x - 1) * W:x * W, (y - 1) * W:y * W]


def rel_err(a, b):
    return np.linalg.norm(a - b, 2) / np.linalg.norm(b, 2)


class TestDaggerInverse:
    def test_identity(self):
        assert np.allclose(dagger_inverse(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        out = dagger_inverse(np.diag([2, 4j]))
        assert np.allclose(out, np.diag([0.5, 0.25j]))

    def test_defining_identity(self):
        M = sample_ginibre(5, RngStream(3)) + 2 * np.eye(5)
        assert np.linalg.norm(M.conj().T @ dagger_inverse(M) - np.eye(5)) < 1e-12

    @given(seed=st.integers(0, 2**32), W=st.integers(1, 6))
    @settings(max_examples=30, deadline=None)
    def test_involution(self, seed, W):
        M = sample_ginibre(W, RngStream(seed))
        if np.linalg.cond(M) > 1e4:
            return
        back = dagger_inverse(dagger_inverse(M))
        assert np.linalg.norm(back - M) <= 1e-12 * np.linalg.cond(M) * np.linalg.norm(M)

    def test_singular_raises_with_condition(self):
        with pytest.raises(SingularMatrixError) as info:
            dagger_inverse(np.array([[1.0, 2.0], [2.0, 4.0]]))
        assert info.value.condition > 1e12


class TestCornerBlock:
    def test_n2_w1(self):
        H = build_general_chiral_model(2, 1, RngStream(5))
        t = H.T[0][0, 0]
        assert np.isclose(zero_energy_corner_block(H)[0, 0], -1 / t)
        D = to_dense(H)
        assert np.isclose(np.linalg.inv(D)[0, 1], -1 / t)

    @pytest.mark.parametrize("W", [1, 2, 3, 4])
    def test_n4_product_form(self, W):
        H = build_general_chiral_model(4, W, RngStream(W))
        T1, T2, T3 = H.T
        expected = np.linalg.inv(T1) @ T2.conj().T @ np.linalg.inv(T3)
        assert rel_err(zero_energy_corner_block(H), expected) < 1e-12
        assert rel_err(zero_energy_corner_block(H), dense_block(H, 0, 1, 4)) < 1e-8

    def test_chiral_n6_two_random_factors(self):
        H = build_chiral_model(6, 3, RngStream(2))
        expected = -(H.T[1].conj().T @ H.T[3].conj().T)
        assert np.array_equal(zero_energy_corner_block(H), expected)

    @pytest.mark.parametrize("n", [2, 4, 6, 8, 10])
    @pytest.mark.parametrize("W", [1, 2, 3, 4])
    def test_matches_dense_inverse(self, n, W):
        for seed in range(10):
            H = build_general_chiral_model(n, W, RngStream(seed, n * 10 + W))
            assert rel_err(zero_energy_corner_block(H), dense_block(H, 0, 1, n)) < 1e-8

    def test_singular_values_match_alternative_ordering(self):
        # the ordering T1° T2 T3° ... has the same singular values only in law;
        # for a single draw the dense block must match the implemented ordering exactly
        H = build_general_chiral_model(6, 3, RngStream(77))
        s_impl = np.linalg.svd(zero_energy_corner_block(H), compute_uv=False)
        s_dense = np.linalg.svd(dense_block(H, 0, 1, 6), compute_uv=False)
        assert np.allclose(s_impl, s_dense, rtol=1e-8)

    def test_odd_n_not_invertible(self):
        with pytest.raises(NotInvertibleError):
            zero_energy_corner_block(build_chiral_model(5, 2, RngStream(0)))

    def test_requires_chiral(self):
        with pytest.raises(ValueError):
            zero_energy_corner_block(build_full_model(4, 2, RngStream(0)))

    @pytest.mark.parametrize("n", [3, 5, 7, 9])
    def test_odd_n_dense_singular(self, n):
        for seed in range(5):
            H = build_general_chiral_model(n, 3, RngStream(seed, n))
            s = np.linalg.svd(to_dense(H), compute_uv=False)
            assert s[-1] / s[0] < 1e-10

    def test_singular_odd_block(self):
        H0 = build_general_chiral_model(4, 2, RngStream(0))
        T = list(H0.T)
        T[0] = np.array([[1, 1], [1, 1]], dtype=complex)
        with pytest.raises(SingularMatrixError):
            zero_energy_corner_block(BlockTridiagonalOperator(H0.V, T))


class TestResolventBlock:
    @pytest.mark.parametrize("dense_cap", [10**6, 0])
    def test_matches_dense_inverse(self, dense_cap):
        H = build_full_model(5, 3, RngStream(12))
        for z in (0.3, 0.1 + 0.4j, -1.2j):
            for x, y in ((1, 5), (2, 2), (4, 1)):
                rb = resolvent_block(H, z, x, y, dense_cap=dense_cap)
                assert rel_err(rb.block, dense_block(H, z, x, y)) < 1e-10
                assert math.isclose(rb.norm, np.linalg.svd(rb.block, compute_uv=False)[0], rel_tol=1e-12)

    @pytest.mark.parametrize("dense_cap", [10**6, 0])
    def test_agrees_with_corner_formula(self, dense_cap):
        H = build_chiral_model(8, 3, RngStream(4))
        rb = resolvent_block(H, 0, 1, 8, dense_cap=dense_cap)
        assert rel_err(rb.block, zero_energy_corner_block(H)) < 1e-8

    def test_far_from_spectrum_bound(self):
        H = build_full_model(6, 4, RngStream(0))
        assert np.linalg.norm(to_dense(H), 2) <= 5
        for x, y in ((1, 1), (1, 6), (3, 4)):
            assert resolvent_block(H, 5j, x, y).norm <= 1 / 5

    def test_real_z_adjoint_symmetry(self):
        H = build_full_model(5, 2, RngStream(3))
        a = resolvent_block(H, 0.37, 2, 4).block
        b = resolvent_block(H, 0.37, 4, 2).block
        assert np.allclose(a, b.conj().T, atol=1e-12)

    @pytest.mark.parametrize("dense_cap", [10**6, 0])
    def test_in_spectrum_raises(self, dense_cap):
        H = build_chiral_model(5, 2, RngStream(0))
        with pytest.raises(NearSpectrumError):
            resolvent_block(H, 0, 1, 5, dense_cap=dense_cap)
        H = build_full_model(4, 2, RngStream(1))
        ev = np.linalg.eigvalsh(to_dense(H))[3]
        with pytest.raises(NearSpectrumError):
            resolvent_block(H, ev, 1, 4, dense_cap=dense_cap)

    def test_index_range(self):
        with pytest.raises(IndexError):
            resolvent_block(build_full_model(3, 2, RngStream(0)), 1j, 0, 3)

    def test_frobenius_option(self):
        H = build_full_model(3, 2, RngStream(0))
        rb = resolvent_block(H, 1j, 1, 3, norm="fro")
        assert math.isclose(rb.norm, np.linalg.norm(rb.block), rel_tol=1e-12)
        with pytest.raises(ValueError):
            block_norm(rb.block, "max")


class TestMonteCarlo:
    def test_log_norm_corner_n2_is_zero(self):
        assert np.array_equal(log_norm_corner(2, 3, 20, RngStream(0)), np.zeros(20))

    def test_log_norm_corner_w1_mean(self):
        # n = 4, W = 1: the corner is conj(t) for one scalar Ginibre draw
        logs = log_norm_corner(4, 1, 20_000, RngStream(1))
        se = logs.std(ddof=1) / math.sqrt(logs.size)
        assert abs(logs.mean() - complex_ginibre_exponent(1, 1)) < 3 * se

    def test_log_norm_corner_odd(self):
        with pytest.raises(NotInvertibleError):
            log_norm_corner(5, 2, 10, RngStream(0))

    def test_chiral_moment_is_corner_average(self):
        est = fractional_moment_estimate(6, 2, 0, 1.0, 1, 6, 50, RngStream(2), "chiral")
        norms = np.exp(log_norm_corner(6, 2, 50, RngStream(2)))
        assert math.isclose(est.mean, norms.mean(), rel_tol=1e-12)
        assert math.isclose(est.std_error, norms.std(ddof=1) / math.sqrt(50), rel_tol=1e-12)

    def test_odd_chiral_zero_energy_errors(self):
        with pytest.raises(NotInvertibleError):
            fractional_moment_estimate(5, 2, 0, 0.5, 1, 5, 10, RngStream(0), "chiral")

    def test_far_energy_bound(self):
        est = fractional_moment_estimate(6, 2, 10j, 0.5, 1, 6, 30, RngStream(4), "full")
        logs = fractional_moment_samples(6, 2, 10j, 1, 6, 30, RngStream(4), "full")
        assert np.all(np.exp(0.5 * logs) <= 0.1**0.5)
        assert est.mean <= 0.1**0.5 and est.failures == 0

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            fractional_moment_estimate(4, 2, 1j, 0.0, 1, 4, 10, RngStream(0))
        with pytest.raises(ValueError):
            fractional_moment_estimate(4, 2, 1j, 0.5, 1, 4, 1, RngStream(0))
        with pytest.raises(ValueError):
            fractional_moment_estimate(4, 2, 1j, 0.5, 1, 4, 10, RngStream(0), "polymer")

    def test_excess_failures_error(self):
        # every chiral draw with odd n is singular at z = 0 through the dense route
        with pytest.raises(SingularMatrixError):
            fractional_moment_estimate(5, 2, 0, 0.5, 1, 3, 10, RngStream(0), "general_chiral")

    def test_worker_count_does_not_change_samples(self):
        a = fractional_moment_samples(6, 2, 0.2, 1, 6, 12, RngStream(8), "full", workers=1)
        b = fractional_moment_samples(6, 2, 0.2, 1, 6, 12, RngStream(8), "full", workers=3)
        assert np.array_equal(a, b)

    def test_smaller_s_tames_spread(self, capsys):
        logs = fractional_moment_samples(8, 2, 0.1, 1, 8, 200, RngStream(9), "full")
        from chiralrbm.resolvent import _moment_from_logs

        small, one = _moment_from_logs(logs, 0.3), _moment_from_logs(logs, 1.0)
        # recorded, not asserted: heavy tails are typical but not guaranteed
        print(f"std_error s=0.3: {small.std_error:.4g}  s=1: {one.std_error:.4g}")

    def test_samples_csv(self, tmp_path):
        logs = np.array([0.5, np.nan, -1.25])
        path = tmp_path / "raw.csv"
        write_samples_csv(path, logs, 4, 2, 0.1 + 0.2j, 0.5)
        lines = path.read_text().splitlines()
        assert lines[0] == "sample_index,n,W,z_re,z_im,s,log_norm,failed"
        assert lines[1].endswith(",0.5,0") and lines[2].endswith(",,1")
        assert len(lines) == 4
