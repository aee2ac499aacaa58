import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import gram_entry_quad, random_weight, rhs_entry_quad, within

from snnpde import closed_form as cf
from snnpde.errors import (InvalidDerivativeOrder, UnsupportedPower, WidthTooSmall,
                           ZeroFrequency, ZeroWeight)


class TestActiveInterval:
    def test_examples(self):
        assert cf.active_interval(1, 0, 1, 0.5) == (0.5, 1.0)
        assert cf.active_interval(1, 0, -1, 0) is None
        lo, hi = cf.active_interval(-1, -0.4, 1, -0.6)
        assert (lo, hi) == pytest.approx((-0.6, 0.4))

    def test_clipped_to_domain(self):
        assert cf.active_interval(1, -5, 1, -3) == (-1.0, 1.0)
        assert cf.active_interval(1, 2, 1, 0) is None

    def test_zero_weight(self):
        with pytest.raises(ZeroWeight):
            cf.active_interval(0, 0, 1, 0)


class TestGramEntries:
    def test_hand_values(self):
        assert cf.gram_entry_relu(1, 0, 1, 0, 1, 0) == pytest.approx(1 / 3, rel=1e-15)
        assert cf.gram_entry_relu(2, 0, 1, 0, 1, 0) == pytest.approx(1 / 5, rel=1e-15)
        assert cf.gram_entry_relu(2, 1, 1, 0, 1, 0) == pytest.approx(4 / 3, rel=1e-15)

    def test_short_support_against_exact_rational(self):
        # integral of ((x + 1/2)(-x - 3/10))^3 over [-1/2, -3/10]
        val = cf.gram_entry_relu(3, 0, 1, -0.5, -1, 0.3)
        assert val == pytest.approx(1 / 10937500, rel=1e-11)

    def test_exact_symmetry(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            p = int(rng.integers(1, 5))
            k = int(rng.integers(0, min(2, p - 1) + 1))
            wi, wj = random_weight(rng), random_weight(rng)
            bi, bj = rng.uniform(-2, 2, 2)
            assert cf.gram_entry_relu(p, k, wi, bi, wj, bj) == cf.gram_entry_relu(p, k, wj, bj, wi, bi)

    @pytest.mark.parametrize("p,k", [(1, 0), (2, 0), (2, 1), (3, 1), (3, 2), (4, 2)])
    def test_against_quadrature(self, p, k):
        rng = np.random.default_rng(100 * p + k)
        for _ in range(25):
            args = (random_weight(rng), rng.uniform(-2, 2), random_weight(rng), rng.uniform(-2, 2))
            val = cf.gram_entry_relu(p, k, *args)
            ref = gram_entry_quad(p, k, *args)
            assert within(val, ref), (args, val, ref)

    def test_matrix_matches_entries(self):
        rng = np.random.default_rng(2)
        w = np.where(rng.random(12) < 0.5, -1.0, 1.0) * rng.uniform(0.5, 2, 12)
        b = rng.uniform(-1, 1, 12)
        G = cf.gram_matrix_relu(3, 1, w, b)
        for i in range(12):
            for j in range(12):
                assert G[i, j] == pytest.approx(cf.gram_entry_relu(3, 1, w[i], b[i], w[j], b[j]),
                                                rel=1e-13, abs=1e-300)
        np.testing.assert_array_equal(G, G.T)

    def test_errors(self):
        with pytest.raises(UnsupportedPower):
            cf.gram_entry_relu(5, 0, 1, 0, 1, 0)
        with pytest.raises(InvalidDerivativeOrder):
            cf.gram_entry_relu(2, 3, 1, 0, 1, 0)
        with pytest.raises(ZeroWeight):
            cf.gram_entry_relu(2, 0, 0, 0, 1, 0)


class TestRhsEntries:
    def test_hand_values(self):
        f = cf.SinusoidSum(((1.0, math.pi, 0.0),))
        assert cf.rhs_entry_relu(1, 0, 1, 0, f) == pytest.approx(1 / math.pi, rel=1e-13)
        zero = cf.SinusoidSum(((0.0, math.pi, 0.0),))
        assert cf.rhs_entry_relu(1, 0, 1, 0, zero) == 0.0

    def test_frozen_oracle_value(self):
        f = cf.SinusoidSum(((0.7, 2 * math.pi, math.pi / 3),))
        val = cf.rhs_entry_relu(2, 0, -1, 0.2, f)
        assert val == pytest.approx(0.0629184624824141066374, rel=1e-11)

    @pytest.mark.parametrize("p,k", [(1, 0), (2, 0), (2, 2), (3, 0), (3, 2), (4, 0), (4, 2)])
    def test_against_quadrature(self, p, k):
        rng = np.random.default_rng(7 + 10 * p + k)
        for _ in range(15):
            terms = tuple((rng.uniform(-2, 2), rng.uniform(0.5, 30) * rng.choice([-1, 1]),
                           rng.uniform(-3, 3)) for _ in range(2))
            w, b = random_weight(rng), rng.uniform(-2, 2)
            val = cf.rhs_entry_relu(p, k, w, b, cf.SinusoidSum(terms))
            ref = rhs_entry_quad(p, k, w, b, terms)
            assert within(val, ref), (p, k, w, b, terms, val, ref)

    def test_zero_frequency_rejected(self):
        with pytest.raises(ZeroFrequency):
            cf.SinusoidSum(((1.0, 0.0, 0.0),))

    def test_sinusoid_derivative(self):
        f = cf.SinusoidSum(((2.0, 3.0, 0.4),))
        x = np.linspace(-1, 1, 7)
        np.testing.assert_allclose(f.derivative(2)(x), -18.0 * np.sin(3 * x + 0.4), atol=1e-13)


class TestBSplines:
    def test_hand_values(self):
        assert cf.bspline_eval(0, 0.5) == 1.0
        assert cf.bspline_eval(1, 1.0) == 1.0
        assert cf.bspline_eval(2, 1.5) == pytest.approx(0.75)

    @settings(max_examples=60, deadline=None)
    @given(p=st.integers(1, 4), t=st.floats(-3, 8))
    def test_partition_of_unity(self, p, t):
        # p = 0 is excluded: the indicator's half-open support makes t - shift
        # round onto an endpoint for tiny |t|
        shifts = np.arange(-8, 9)
        assert np.sum(cf.bspline_eval(p, t - shifts)) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("p", [1, 2, 3, 4])
    def test_relu_sum_identity(self, p):
        t = np.random.default_rng(p).uniform(-1, p + 2, 100)
        np.testing.assert_allclose(cf.bspline_eval(p, t), cf.bspline_relu_sum(p, t), atol=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(p=st.integers(1, 4), x=st.floats(-50, 50))
    def test_telescoping_identity(self, p, x):
        s = sum((-1) ** k * math.comb(p + 1, k) * (x - k) ** p for k in range(p + 2))
        assert abs(s) <= 1e-9 * max(abs(x) ** p, 1.0)

    def test_derivative_matches_finite_difference(self):
        t = np.linspace(0.05, 3.95, 40)
        h = 1e-6
        fd = (cf.bspline_eval(3, t + h) - cf.bspline_eval(3, t - h)) / (2 * h)
        np.testing.assert_allclose(cf.bspline_derivative(3, t), fd, atol=1e-7)


class TestTransform:
    def test_linear_case(self):
        W = cf.bspline_transform(5, 1)
        dx = 0.5
        np.testing.assert_allclose(np.diag(W), 1 / dx)
        np.testing.assert_allclose(np.diag(W, -1), -2 / dx)
        np.testing.assert_allclose(np.diag(W, -2), 1 / dx)
        assert np.count_nonzero(np.tril(W, -3)) == 0

    def test_band_structure(self):
        W = cf.bspline_transform(50, 3)
        assert np.count_nonzero(np.triu(W, 1)) == 0
        assert np.count_nonzero(np.tril(W, -5)) == 0
        assert np.count_nonzero(np.diag(W, -4)) == 46

    def test_columns_are_splines(self):
        N, p = 12, 2
        W = cf.bspline_transform(N, p)
        b = cf.femsp_biases(N, p)
        dx = 2 / (N - p)
        x = np.linspace(-1, 1, 101)
        relu = np.maximum(x[:, None] - b, 0) ** p
        np.testing.assert_allclose(relu @ W, cf.bspline_eval(p, (x[:, None] - b) / dx), atol=1e-10)

    def test_width_too_small(self):
        with pytest.raises(WidthTooSmall):
            cf.bspline_transform(2, 2)
        with pytest.raises(WidthTooSmall):
            cf.femsp_biases(3, 3)


class TestSplineStiffness:
    def test_hat_values(self):
        assert cf.bspline_gram_derivative(1, 1.0, 0) == pytest.approx(2.0)
        assert cf.bspline_gram_derivative(1, 1.0, 1) == pytest.approx(-1.0)
        assert cf.bspline_gram_derivative(1, 1.0, 2) == 0.0

    def test_quadratic_against_exact(self):
        assert cf.bspline_gram_derivative(2, 0.1, 0) == pytest.approx(10.0, rel=1e-12)

    @pytest.mark.parametrize("p", [2, 3, 4])
    def test_rows_sum_to_zero(self, p):
        # constants are in the spline span, so the full-line stiffness kills them
        s = sum(cf.bspline_gram_derivative(p, 0.3, d) for d in range(-p, p + 1))
        assert abs(s) < 1e-12
