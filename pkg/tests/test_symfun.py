from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import newton_delta_perm, sigma_brute, sigma_charpoly
from sigmak import symfun
from sigmak.errors import CapacityError, DomainError, NumericError, ValidationError

finite = st.floats(-3.0, 3.0, allow_nan=False)
spectra = st.integers(2, 7).flatmap(lambda n: arrays(float, n, elements=finite))


def random_sym(rng, n):
    B = rng.uniform(-1.0, 1.0, size=(n, n))
    return 0.5 * (B + B.T)


class TestElemSym:
    def test_all_ones(self):
        assert symfun.elem_sym([1, 1, 1, 1, 1], 2) == 10.0

    def test_sigma_zero_is_one(self):
        assert symfun.elem_sym([1, 2, 3], 0) == 1.0

    def test_small_expansion(self):
        assert symfun.elem_sym([1, 2, 3], 2) == 11.0

    def test_k_out_of_range(self):
        with pytest.raises(DomainError):
            symfun.elem_sym([1, 2, 3], 4)
        with pytest.raises(DomainError):
            symfun.elem_sym([1, 2, 3], -1)

    def test_rejects_bad_spectra(self):
        with pytest.raises(ValidationError):
            symfun.elem_sym([1.0], 1)
        with pytest.raises(ValidationError):
            symfun.elem_sym([1.0, np.nan], 1)

    @given(spectra)
    @settings(max_examples=60, deadline=None)
    def test_matches_subset_sum(self, lam):
        for k in range(lam.size + 1):
            ref = sigma_brute(lam, k)
            assert abs(symfun.elem_sym(lam, k) - ref) <= 1e-9 * max(1.0, abs(ref))

    @given(spectra)
    @settings(max_examples=40, deadline=None)
    def test_permutation_invariant(self, lam):
        perm = lam[::-1]
        for k in range(lam.size + 1):
            assert symfun.elem_sym(lam, k) == pytest.approx(symfun.elem_sym(perm, k), rel=1e-12, abs=1e-12)

    def test_homogeneity(self, rng):
        lam = rng.normal(size=5)
        for k in range(6):
            assert symfun.elem_sym(2.5 * lam, k) == pytest.approx(2.5**k * symfun.elem_sym(lam, k), rel=1e-12, abs=1e-12)

    def test_generating_polynomial(self, rng):
        lam = rng.normal(size=6)
        allk = symfun.elem_sym_all(lam)
        # prod (1 + x l_i) = sum sigma_k x^k
        x = 0.37
        assert np.polyval(allk[::-1], x) == pytest.approx(np.prod(1 + x * lam), rel=1e-12)


class TestCone:
    def test_identity_vector(self):
        assert symfun.in_positive_cone([1, 1, 1], 3)

    def test_negative_sigma2(self):
        assert not symfun.in_positive_cone([3, 1, -1], 2)

    def test_mixed_sign_member(self):
        assert symfun.in_positive_cone([2, 1, -0.5], 2)

    @given(spectra, st.integers(1, 7))
    @settings(max_examples=80, deadline=None)
    def test_nesting(self, lam, k):
        k = min(k, lam.size)
        if symfun.in_positive_cone(lam, k):
            assert all(symfun.in_positive_cone(lam, j) for j in range(1, k))


class TestNewtonTransform:
    def test_identity_for_k1(self):
        np.testing.assert_array_equal(symfun.newton_transform(np.diag([1.0, 2, 3]), 1), np.eye(3))

    def test_diagonal_k2(self):
        np.testing.assert_allclose(symfun.newton_transform(np.diag([1.0, 2, 3]), 2), np.diag([5.0, 4, 3]), atol=1e-14)

    def test_identity_k3(self):
        np.testing.assert_allclose(symfun.newton_transform(np.eye(3), 3), np.eye(3), atol=1e-14)

    def test_delta_diagonal(self):
        np.testing.assert_allclose(symfun.newton_transform_delta(np.diag([1.0, 2, 3]), 2), np.diag([5.0, 4, 3]), atol=1e-14)

    def test_delta_zero_matrix(self):
        for k in (2, 3):
            np.testing.assert_array_equal(symfun.newton_transform_delta(np.zeros((3, 3)), k), np.zeros((3, 3)))

    def test_delta_agrees_n4_k3(self, rng):
        A = random_sym(rng, 4)
        np.testing.assert_allclose(symfun.newton_transform_delta(A, 3), symfun.newton_transform(A, 3), atol=1e-12)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_against_permutation_oracle(self, rng, n):
        A = random_sym(rng, n)
        for k in range(1, n + 1):
            np.testing.assert_allclose(symfun.newton_transform(A, k), newton_delta_perm(A, k), atol=1e-12)

    def test_derivative_of_sigma(self, rng):
        # T_{k-1} is the gradient of sigma_k: d/ds sigma_k(A + s B) = tr(T_{k-1}(A) B)
        A, B = random_sym(rng, 4), random_sym(rng, 4)
        for k in range(1, 5):
            s = 1e-6
            fd = (symfun.sigma_matrix(A + s * B, k) - symfun.sigma_matrix(A - s * B, k)) / (2 * s)
            assert fd == pytest.approx(np.trace(symfun.newton_transform(A, k) @ B), rel=1e-7, abs=1e-8)

    def test_capacity_limit(self):
        with pytest.raises(CapacityError):
            symfun.newton_transform_delta(np.eye(6), 2)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValidationError):
            symfun.newton_transform(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)


class TestHTensors:
    def test_diagonal(self):
        H, Hr = symfun.h_tensors(np.diag([1.0, 2, 3]), 2)
        np.testing.assert_allclose(H, np.diag([5.0, 8, 9]), atol=1e-14)
        np.testing.assert_allclose(Hr, np.diag([-7 / 3, 2 / 3, 5 / 3]), atol=1e-14)
        assert np.trace(H) == pytest.approx(22.0)

    @pytest.mark.parametrize("c", [-1.3, 0.0, 0.5, 4.0])
    def test_isotropic_trace_free_part_vanishes(self, c):
        for k in (1, 2, 3):
            _, Hr = symfun.h_tensors(c * np.eye(4), k)
            np.testing.assert_allclose(Hr, 0.0, atol=1e-13)

    def test_trace_identity(self, rng):
        for n in (3, 5):
            A = random_sym(rng, n)
            for k in range(1, n + 1):
                H, Hr = symfun.h_tensors(A, k)
                assert np.trace(H) == pytest.approx(k * symfun.sigma_matrix(A, k), abs=1e-12)
                assert abs(np.trace(Hr)) < 1e-12

    def test_batched(self, rng):
        As = np.stack([random_sym(rng, 3) for _ in range(5)])
        H, _ = symfun.h_tensors(As, 2)
        for i in range(5):
            np.testing.assert_allclose(H[i], symfun.h_tensors(As[i], 2)[0], atol=1e-14)


class TestSigmaMatrix:
    def test_against_charpoly(self, rng):
        for n in (2, 3, 5, 6):
            A = random_sym(rng, n)
            for k in range(n + 1):
                assert symfun.sigma_matrix(A, k) == pytest.approx(sigma_charpoly(A, k) if k else 1.0, abs=1e-12)

    def test_equals_spectrum_sigma(self, rng):
        A = random_sym(rng, 5)
        lam = np.linalg.eigvalsh(A)
        for k in range(6):
            assert symfun.sigma_matrix(A, k) == pytest.approx(symfun.elem_sym(lam, k), abs=1e-12)


class TestEigenvalues:
    def test_diagonal(self):
        np.testing.assert_allclose(symfun.eigenvalues(np.diag([3.0, 1, 2])), [1, 2, 3])

    def test_two_by_two(self):
        np.testing.assert_allclose(symfun.eigenvalues([[2.0, 1], [1, 2]]), [1, 3], atol=1e-14)

    def test_rotation_conjugated(self):
        c, s = math.cos(0.7), math.sin(0.7)
        R = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]]) @ np.array([[1, 0, 0], [0, math.cos(1.1), -math.sin(1.1)], [0, math.sin(1.1), math.cos(1.1)]])
        np.testing.assert_allclose(symfun.eigenvalues(R @ np.diag([1.0, 2, 3]) @ R.T), [1, 2, 3], atol=1e-12)

    def test_against_lapack(self, rng):
        for n in (2, 4, 7, 10):
            A = random_sym(rng, n)
            np.testing.assert_allclose(symfun.eigenvalues(A), np.linalg.eigvalsh(A), atol=1e-12)

    def test_non_convergence_reported(self, rng):
        with pytest.raises(NumericError):
            symfun.eigenvalues(random_sym(rng, 6), max_sweeps=0)
