from __future__ import annotations

import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ricci_schouten_operator, sigma_charpoly
from sigmak import symfun
from sigmak.delaunay import OdeParams, cylinder_constant, sphere_solution
from sigmak.errors import DomainError, ValidationError
from sigmak.geometry import (
    Background,
    BackgroundKind,
    Chart,
    ChartKind,
    ConformalJet,
    angular_scale_factors,
    background_schouten,
    cylinder_to_euclidean,
    euclidean_to_cylinder,
    hyperplane_2ff,
    normalized_constant,
    radial_cylinder_jet,
    round_sphere_jet,
    schouten_conformal,
    schouten_operator,
    sigma_k_curvature,
    sphere_embedding,
    sphere_tangents,
    t0_from_r0,
    transplant_jet,
)


def flat_jet(kind, n, u=1.0):
    return ConformalJet(Background(kind, n), u, np.zeros(n), np.zeros((n, n)))


class TestBackground:
    def test_euclidean_is_flat(self):
        np.testing.assert_array_equal(background_schouten(Background("euclidean", 5)), np.zeros((5, 5)))

    def test_cylinder(self):
        np.testing.assert_array_equal(background_schouten(Background("cylinder", 5)), np.diag([-0.5, 0.5, 0.5, 0.5, 0.5]))

    def test_sphere(self):
        np.testing.assert_array_equal(background_schouten(Background("sphere", 4)), 0.5 * np.eye(4))

    def test_dimension_checked(self):
        with pytest.raises(ValidationError):
            Background("sphere", 2)


class TestSchouten:
    def test_unit_factor_reduces_to_background(self):
        A = schouten_conformal(flat_jet(BackgroundKind.CYLINDER, 4))
        np.testing.assert_array_equal(A, np.diag([-0.5, 0.5, 0.5, 0.5]))

    @given(st.lists(st.floats(-3, 3), min_size=3, max_size=6))
    @settings(max_examples=40, deadline=None)
    def test_round_sphere_is_einstein(self, x):
        M = schouten_operator(round_sphere_jet(x))
        np.testing.assert_allclose(symfun.eigenvalues(M), 0.5, atol=1e-12)

    @pytest.mark.parametrize("n", [3, 4, 6])
    def test_sphere_solution_at_waist(self, n):
        u, p = sphere_solution(0.0, n)
        m = (n - 2) / 2.0
        M = schouten_operator(radial_cylinder_jet(u, p, -m * u, n))
        np.testing.assert_allclose(np.diag(M), 0.5, atol=1e-14)

    def test_nonpositive_factor_rejected(self):
        with pytest.raises(DomainError):
            schouten_conformal(flat_jet(BackgroundKind.EUCLIDEAN, 3, u=0.0))

    def test_shape_validation(self):
        with pytest.raises(ValidationError):
            ConformalJet(Background("euclidean", 3), 1.0, np.zeros(2), np.zeros((3, 3)))

    @pytest.mark.parametrize("n", [3, 4])
    def test_euclidean_against_ricci_oracle(self, n):
        X = sp.symbols(f"x1:{n + 1}")
        u = 1 + sp.Rational(3, 10) * X[0] + sp.Rational(1, 5) * X[1] ** 2 + sp.Rational(1, 10) * X[0] * X[-1]
        g = sp.eye(n) * u ** sp.Rational(4, n - 2)
        pt = [0.3, -0.2, 0.5, 0.1][:n]
        ref = ricci_schouten_operator(g, X, pt)
        sub = dict(zip(X, pt))
        jet = ConformalJet(
            Background("euclidean", n),
            float(u.subs(sub)),
            [float(sp.diff(u, a).subs(sub)) for a in X],
            [[float(sp.diff(u, a, b).subs(sub)) for b in X] for a in X],
        )
        np.testing.assert_allclose(schouten_operator(jet), ref, atol=1e-13)

    @pytest.mark.parametrize("n", [3, 4])
    def test_cylinder_chart_against_ricci_oracle(self, n):
        t = sp.Symbol("t")
        A = sp.symbols(f"a1:{n}")
        co = (t,) + A
        u = 1 + sp.exp(-t) * sp.cos(A[0]) / 5 + sp.sin(A[0]) * sp.cos(A[-1]) * sp.exp(-t / 2) / 10
        hs = [1] + [sp.prod([sp.sin(A[i]) for i in range(j)]) for j in range(n - 1)]
        g = sp.diag(*[u ** sp.Rational(4, n - 2) * h**2 for h in hs])
        pt = [0.4, 1.0, 1.2, 0.7][:n]
        ref = ricci_schouten_operator(g, co, pt)
        sub = dict(zip(co, pt))
        grad = np.array([float(sp.diff(u, a).subs(sub)) for a in co])
        hess = np.array([[float(sp.diff(u, a, b).subs(sub)) for b in co] for a in co])
        jet = Chart("cylinder", n).frame_jet(np.array(pt), float(u.subs(sub)), grad, hess)
        M = schouten_operator(jet)
        for k in range(1, n + 1):
            assert symfun.sigma_matrix(M, k) == pytest.approx(sigma_charpoly(ref, k), abs=1e-12)


class TestSigmaK:
    def test_round_sphere_normalization(self):
        s, r = sigma_k_curvature(round_sphere_jet([0.3, -1.0, 0.2, 0.0, 2.0]), 2)
        assert s == pytest.approx(2.5, abs=1e-13)
        assert abs(r) < 1e-13

    @pytest.mark.parametrize("n,k", [(3, 1), (5, 1), (5, 2), (7, 3), (8, 3)])
    def test_cylinder_constant_solution(self, n, k):
        c, _ = cylinder_constant(OdeParams(n, k))
        s, r = sigma_k_curvature(radial_cylinder_jet(c, 0.0, 0.0, n), k)
        assert s == pytest.approx(math.comb(n, k) * 0.5**k, rel=1e-13)
        assert abs(r) <= 1e-12

    def test_flat_metric(self):
        for k in (1, 2, 3):
            s, _ = sigma_k_curvature(flat_jet(BackgroundKind.EUCLIDEAN, 4), k)
            assert s == 0.0

    def test_normalized_constant(self):
        assert normalized_constant(5, 2) == 2.5

    def test_batched(self, rng):
        xs = rng.normal(size=(7, 4))
        jets = [round_sphere_jet(x) for x in xs]
        batch = ConformalJet(jets[0].background, np.array([j.u for j in jets]),
                             np.stack([j.grad_u for j in jets]), np.stack([j.hess_u for j in jets]))
        s, r = sigma_k_curvature(batch, 3)
        assert s.shape == (7,)
        np.testing.assert_allclose(r, 0.0, atol=1e-12)

    def test_k_range(self):
        with pytest.raises(DomainError):
            sigma_k_curvature(flat_jet(BackgroundKind.EUCLIDEAN, 3), 4)


class TestDictionary:
    def test_unit_sphere_point(self):
        t, u = euclidean_to_cylinder(1.0, [1.0, 0.0, 0.0, 0.0])
        assert (t, u) == (0.0, 1.0)

    @pytest.mark.parametrize("n", [3, 4, 7])
    @pytest.mark.parametrize("t", [-2.0, 0.3, 1.7])
    def test_round_sphere_becomes_cosh_profile(self, n, t):
        x = np.zeros(n)
        x[0] = math.exp(-t)
        u_euc = float(round_sphere_jet(x).u)
        tt, u_cyl = euclidean_to_cylinder(u_euc, x)
        assert tt == pytest.approx(t, abs=1e-14)
        assert u_cyl == pytest.approx(math.cosh(t) ** (-(n - 2) / 2.0), rel=1e-13)

    def test_round_trip(self):
        r, u = cylinder_to_euclidean(*euclidean_to_cylinder(0.7, [0.1, 0.5, -0.3]), 3)
        assert r == pytest.approx(math.sqrt(0.35))
        assert u == pytest.approx(0.7)

    def test_origin_rejected(self):
        with pytest.raises(DomainError):
            euclidean_to_cylinder(1.0, [0.0, 0.0, 0.0])

    def test_t0_of_equator(self):
        assert t0_from_r0(math.pi / 2) == pytest.approx(0.0, abs=1e-15)

    def test_t0_monotone(self):
        assert t0_from_r0(0.1) > t0_from_r0(1.0) > t0_from_r0(3.0)

    @pytest.mark.parametrize("n", [3, 4, 5, 7])
    def test_transplant_preserves_sigma(self, rng, n):
        x = rng.normal(size=n)
        jet = round_sphere_jet(x)
        cyl = transplant_jet(jet, x)
        for k in range(1, n):
            assert sigma_k_curvature(cyl, k)[0] == pytest.approx(sigma_k_curvature(jet, k)[0], rel=1e-12)

    def test_transplant_generic_factor(self):
        # u = 1 + x_1/4 + |x|^2/10 is not a solution, but sigma_k is still chart independent
        x = np.array([0.4, -0.3, 0.8, 0.2])
        u = 1 + x[0] / 4 + x @ x / 10
        grad = np.array([0.25, 0, 0, 0]) + x / 5
        jet = ConformalJet(Background("euclidean", 4), u, grad, np.eye(4) / 5)
        cyl = transplant_jet(jet, x)
        for k in (1, 2, 3, 4):
            assert sigma_k_curvature(cyl, k)[0] == pytest.approx(sigma_k_curvature(jet, k)[0], rel=1e-12)


class TestSecondFundamentalForm:
    def test_flat_slice(self):
        assert hyperplane_2ff(1.0, 0.0, 4) == 0.0

    def test_values(self):
        assert hyperplane_2ff(1.0, -1.0, 6) == 1.0
        assert hyperplane_2ff(2.0, 1.0, 4) == -1.0


class TestCharts:
    def test_embedding_is_unit(self, rng):
        a = rng.uniform(0.1, 3.0, size=(10, 3))
        np.testing.assert_allclose(np.linalg.norm(sphere_embedding(a), axis=-1), 1.0, atol=1e-15)

    def test_tangents_against_finite_differences(self, rng):
        a = rng.uniform(0.2, 2.9, size=3)
        T = sphere_tangents(a)
        for j in range(3):
            e = np.zeros(3)
            e[j] = 1e-6
            fd = (sphere_embedding(a + e) - sphere_embedding(a - e)) / 2e-6
            np.testing.assert_allclose(T[j], fd, atol=1e-9)

    def test_tangents_orthogonal_with_scale_factors(self, rng):
        a = rng.uniform(0.2, 2.9, size=3)
        T = sphere_tangents(a)
        h = angular_scale_factors(a)
        np.testing.assert_allclose(T @ T.T, np.diag(h**2), atol=1e-14)
        np.testing.assert_allclose(T @ sphere_embedding(a), 0.0, atol=1e-14)

    def test_radial_chart_has_one_coordinate(self):
        assert Chart(ChartKind.RADIAL, 6).d == 1
        with pytest.raises(ValidationError):
            Chart(ChartKind.RADIAL, 6).to_euclidean([0.0])

    def test_cylinder_chart_to_euclidean(self):
        p = np.array([0.5, 1.0, 2.0])
        x = Chart("cylinder", 3).to_euclidean(p)
        assert np.linalg.norm(x) == pytest.approx(math.exp(-0.5))

    def test_frame_jet_matches_transplant(self):
        # a Euclidean factor sampled in cylinder coordinates, differentiated symbolically
        n = 3
        t, a1, a2 = sp.symbols("t a1 a2")
        x = sp.exp(-t) * sp.Matrix([sp.cos(a1), sp.sin(a1) * sp.cos(a2), sp.sin(a1) * sp.sin(a2)])
        ue = (2 / (1 + x.dot(x))) ** sp.Rational(n - 2, 2)
        f = sp.exp(-t * sp.Rational(n - 2, 2)) * ue
        co = (t, a1, a2)
        pt = [0.3, 1.1, 0.4]
        sub = dict(zip(co, pt))
        grad = np.array([float(sp.diff(f, c).subs(sub)) for c in co])
        hess = np.array([[float(sp.diff(f, c, d).subs(sub)) for d in co] for c in co])
        jet = Chart("cylinder", n).frame_jet(np.array(pt), float(f.subs(sub)), grad, hess)
        np.testing.assert_allclose(symfun.eigenvalues(schouten_operator(jet)), 0.5, atol=1e-12)
