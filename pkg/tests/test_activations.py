import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snnpde.activations import (GELU, SIN, TANH, ActivationKind, LayerParams,
                                SamplingSpec, eval_activation, sample_layer)
from snnpde.errors import InvalidDerivativeOrder

RELU = {p: ActivationKind.relu_pow(p) for p in range(1, 5)}


class TestEvalActivation:
    def test_hand_values(self):
        assert eval_activation(RELU[2], 0, 0.5) == pytest.approx(0.25)
        assert eval_activation(RELU[3], 2, 2.0) == pytest.approx(12.0)
        assert eval_activation(SIN, 1, 0.0) == pytest.approx(1.0)
        assert eval_activation(RELU[1], 0, -1.0) == 0.0

    def test_relu_kink_is_zero_for_every_order(self):
        for p in range(1, 5):
            for k in range(p + 1):
                assert eval_activation(RELU[p], k, 0.0) == 0.0

    def test_top_order_is_scaled_heaviside(self):
        z = np.array([-2.0, -1e-9, 1e-9, 3.0])
        np.testing.assert_array_equal(eval_activation(RELU[3], 3, z), [0, 0, 6, 6])

    def test_order_checks(self):
        with pytest.raises(InvalidDerivativeOrder):
            eval_activation(RELU[2], 3, 0.1)
        with pytest.raises(InvalidDerivativeOrder):
            eval_activation(TANH, 3, 0.1)
        with pytest.raises(InvalidDerivativeOrder):
            eval_activation(SIN, -1, 0.1)

    def test_gelu_matches_definition(self):
        z = np.linspace(-4, 4, 41)
        phi = 0.5 * (1 + np.vectorize(math.erf)(z / math.sqrt(2)))
        np.testing.assert_allclose(eval_activation(GELU, 0, z), z * phi, atol=1e-15)

    @pytest.mark.parametrize("kind", [SIN, TANH, GELU, RELU[2], RELU[3], RELU[4]],
                             ids=str)
    def test_finite_difference_consistency(self, kind):
        rng = np.random.default_rng(3)
        z = rng.uniform(-3, 3, 100)
        z = z[np.abs(z) > 1e-2]  # stay away from the ReLU kink
        h = 1e-6
        for k in (1, 2):
            if k > kind.max_order - (1 if kind.is_relu else 0):
                continue
            fd = (eval_activation(kind, k - 1, z + h) - eval_activation(kind, k - 1, z - h)) / (2 * h)
            exact = eval_activation(kind, k, z)
            np.testing.assert_allclose(fd, exact, rtol=1e-6, atol=1e-7)

    @settings(max_examples=50, deadline=None)
    @given(p=st.integers(1, 4), S=st.floats(0.01, 100), z=st.floats(-10, 10))
    def test_relu_homogeneity(self, p, S, z):
        lhs = eval_activation(RELU[p], 0, S * z)
        rhs = S ** p * eval_activation(RELU[p], 0, z)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


class TestActivationKind:
    def test_parse(self):
        assert ActivationKind.parse("relu3") == RELU[3]
        assert ActivationKind.parse("ReLU^2") == RELU[2]
        assert ActivationKind.parse("sin") == SIN
        assert str(RELU[4]) == "relu4"

    def test_rejects_bad_power(self):
        with pytest.raises(ValueError):
            ActivationKind.relu_pow(0)
        with pytest.raises(ValueError):
            ActivationKind("sin", 2)


class TestSampling:
    def test_uniform_one(self):
        L = sample_layer(SamplingSpec("uniform_one"), 3)
        np.testing.assert_array_equal(L.w, [1, 1, 1])
        np.testing.assert_allclose(L.b, [-1, -1 / 3, 1 / 3])

    def test_sign_weights_are_deterministic(self):
        a = sample_layer(SamplingSpec("uniform_sign", seed=7), 100)
        b = sample_layer(SamplingSpec("uniform_sign", seed=7), 100)
        np.testing.assert_array_equal(a.w, b.w)
        np.testing.assert_array_equal(a.b, b.b)
        assert set(np.unique(a.w)) == {-1.0, 1.0}

    def test_scaled_uniform_bounds(self):
        L = sample_layer(SamplingSpec("scaled_uniform", seed=1, S=300), 300)
        assert np.all(np.abs(L.w) <= 300)
        assert np.all(np.abs(L.b) <= 1)
        assert L.form == "centered"
        np.testing.assert_allclose(L.shifts(), L.w * L.b)

    def test_knot_aligned_uses_spline_knots(self):
        L = sample_layer(SamplingSpec("knot_aligned", p=2), 12)
        dx = 2 / 10
        np.testing.assert_allclose(np.diff(L.b), dx)
        assert L.b[0] == pytest.approx(-1 - 2 * dx)
        assert L.b[-1] == pytest.approx(1 - dx)

    def test_different_seeds_differ(self):
        a = sample_layer(SamplingSpec("uniform_sign", seed=0), 50)
        b = sample_layer(SamplingSpec("uniform_sign", seed=1), 50)
        assert not np.array_equal(a.b, b.b)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SamplingSpec("gaussian")
        with pytest.raises(ValueError):
            SamplingSpec("scaled_uniform", S=0.0)
        with pytest.raises(ValueError):
            SamplingSpec("uniform_one", seed=-1)


class TestLayerParams:
    def test_is_read_only(self):
        L = LayerParams([1.0, -1.0], [0.0, 0.5])
        with pytest.raises(ValueError):
            L.w[0] = 2.0

    def test_rejects_mismatch_and_nonfinite(self):
        with pytest.raises(ValueError):
            LayerParams([1.0], [0.0, 1.0])
        with pytest.raises(ValueError):
            LayerParams([np.inf], [0.0])

    def test_features_include_chain_rule(self):
        L = LayerParams([2.0], [0.5])
        x = np.array([0.5])
        # d/dx ReLU^2(2x - 0.5) = 2 * 2 * (2x - 0.5)
        np.testing.assert_allclose(L.features(RELU[2], 1, x), [[4 * 0.5]])
