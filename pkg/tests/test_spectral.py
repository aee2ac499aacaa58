import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snnpde.activations import SIN, ActivationKind, LayerParams, SamplingSpec, sample_layer
from snnpde.assembly import DRM, NetworkBasis, assemble_exact
from snnpde.closed_form import SinusoidSum, gram_matrix_relu
from snnpde.errors import (EmptyReferenceMode, FloorContamination, NotSymmetric,
                           WindowBelowFloor, ZeroReference)
from snnpde.spectral import (condition_scaling_check, eig_sym, eigvec_dominant_frequency,
                             error_metrics, fit_decay_slope, interlacing_violations,
                             lifted_eigenvector_count, relative_l2_error, rsl,
                             weyl_violations)


def uniform_gram(p, k, N):
    return gram_matrix_relu(p, k, np.ones(N), -1.0 + 2.0 * np.arange(N) / N)


def random_symmetric(rng, n):
    A = rng.standard_normal((n, n))
    return 0.5 * (A + A.T)


class TestEigSym:
    def test_diagonal(self):
        rep = eig_sym(np.diag([1.0, 4.0]))
        np.testing.assert_array_equal(rep.eigenvalues, [4.0, 1.0])
        assert rep.condition_number == pytest.approx(4.0)

    def test_known_pair(self):
        rep = eig_sym(np.array([[2.0, 1.0], [1.0, 2.0]]))
        np.testing.assert_allclose(rep.eigenvalues, [3.0, 1.0], rtol=1e-15)

    def test_rejects_asymmetric(self):
        with pytest.raises(NotSymmetric):
            eig_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))
        with pytest.raises(ValueError):
            eig_sym(np.eye(2), method="power")

    @pytest.mark.parametrize("method", ["lapack", "householder_ql", "jacobi"])
    def test_reconstruction_and_orthogonality(self, method):
        M = random_symmetric(np.random.default_rng(1), 30)
        rep = eig_sym(M, want_vectors=True, method=method)
        V, lam = rep.eigenvectors, rep.eigenvalues
        assert np.max(np.abs(V.T @ V - np.eye(30))) <= 1e-10
        assert np.max(np.abs(V @ np.diag(lam) @ V.T - M)) <= 1e-9 * np.abs(lam).max()
        assert np.all(np.diff(lam) <= 0)

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2**31), n=st.integers(2, 64))
    def test_jacobi_matches_ql(self, seed, n):
        M = random_symmetric(np.random.default_rng(seed), n)
        a = eig_sym(M, method="jacobi").eigenvalues
        b = eig_sym(M, method="householder_ql").eigenvalues
        scale = np.abs(a).max()
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12 * scale)

    def test_ql_matches_lapack(self):
        M = uniform_gram(2, 1, 64)
        a = eig_sym(M, method="householder_ql").eigenvalues
        b = eig_sym(M).eigenvalues
        np.testing.assert_allclose(a, b, atol=1e-13 * b[0])

    def test_mass_matrix_decay(self):
        rep = eig_sym(uniform_gram(2, 0, 1000))
        assert abs(fit_decay_slope(rep.eigenvalues) + 6.0) <= 0.3


class TestDecayFit:
    def test_exact_power_law(self):
        k = np.arange(1, 201, dtype=float)
        assert fit_decay_slope(k ** -4.0) == pytest.approx(-4.0, abs=1e-9)

    def test_scale_invariance(self):
        k = np.arange(1, 101, dtype=float)
        assert fit_decay_slope(7 * k ** -6.0, (10, 60)) == pytest.approx(-6.0, abs=1e-9)

    def test_window_below_floor(self):
        k = np.arange(1, 101, dtype=float)
        with pytest.raises(WindowBelowFloor):
            fit_decay_slope(k ** -8.0, (10, 100))

    def test_invalid_window(self):
        with pytest.raises(ValueError):
            fit_decay_slope(np.ones(5), (3, 9))

    def test_drm_kkt_decay(self):
        params = sample_layer(SamplingSpec("knot_aligned", p=2), 300)
        sys = assemble_exact(params, 2, DRM, SinusoidSum(((0.0, 1.0, 0.0),)), (0, 0))
        lam = np.sort(np.abs(np.linalg.eigvalsh(sys.kkt()[0])))[::-1]
        assert abs(fit_decay_slope(lam) + 4.0) <= 0.4


class TestConditionScaling:
    @pytest.mark.parametrize("p,k", [(1, 0), (2, 1)])
    def test_slope(self, p, k):
        out = condition_scaling_check(p, k, [50, 100, 200, 400])
        assert abs(out.slope - 4.0) <= 0.5
        assert all(np.isfinite(out.kappas))

    def test_floor_contamination(self):
        with pytest.raises(FloorContamination) as info:
            condition_scaling_check(3, 0, [50, 100, 200, 400])
        assert info.value.widths


class TestDominantFrequency:
    def test_single_mode(self):
        basis = NetworkBasis(LayerParams([3 * math.pi], [0.0]), SIN)
        assert eigvec_dominant_frequency(np.array([1.0]), basis) == pytest.approx(3 * math.pi,
                                                                                   rel=1e-3)

    def test_rejects_non_unit(self):
        basis = NetworkBasis(LayerParams([1.0], [0.0]), SIN)
        with pytest.raises(ValueError):
            eigvec_dominant_frequency(np.zeros(1), basis)

    def test_frequency_ordering_of_top_eigenvectors(self):
        N = 1000
        params = LayerParams(np.ones(N), -1.0 + 2.0 * np.arange(N) / N)
        basis = NetworkBasis(params, ActivationKind.relu_pow(1))
        rep = eig_sym(uniform_gram(1, 0, N), want_vectors=True)
        freqs = [eigvec_dominant_frequency(rep.eigenvectors[:, i], basis) for i in range(50)]
        assert freqs[0] < freqs[49]
        inversions = sum(b < a for a, b in zip(freqs, freqs[1:]))
        assert inversions <= 5


class TestErrorMetrics:
    def test_relative_l2_examples(self):
        u = lambda x: np.sin(2 * x) + 1
        assert relative_l2_error(u, u) == 0.0
        assert relative_l2_error(lambda x: 2 * u(x), u) == pytest.approx(1.0)

    def test_three_point_hand_value(self):
        # grid (-1, 0, 1), exact = x with rms sqrt(2/3); shifting by 0.1 rms gives 0.1
        shift = 0.1 * math.sqrt(2 / 3)
        err = relative_l2_error(lambda x: x + shift, lambda x: x, grid_n=3)
        assert err == pytest.approx(0.1, rel=1e-14)

    def test_zero_reference(self):
        with pytest.raises(ZeroReference):
            relative_l2_error(np.sin, lambda x: 0 * x)

    def test_rsl_identity_and_full_loss(self):
        exact = lambda x: np.sin(2 * np.pi * x) + np.sin(10 * np.pi * x)
        assert rsl(exact, exact, 2 * np.pi) == 0.0
        only_high = lambda x: np.sin(10 * np.pi * x)
        assert rsl(only_high, exact, 2 * np.pi) == pytest.approx(100.0, abs=1e-6)
        assert rsl(only_high, exact, 10 * np.pi) == pytest.approx(0.0, abs=1e-6)

    def test_rsl_empty_mode(self):
        with pytest.raises(EmptyReferenceMode):
            rsl(np.sin, lambda x: np.sin(2 * np.pi * x), 6 * np.pi)

    def test_error_metrics_bundle(self):
        exact = lambda x: np.sin(2 * np.pi * x)
        m = error_metrics(lambda x: 0.5 * exact(x), exact, [2 * np.pi])
        assert m.rel_l2 == pytest.approx(0.5)
        assert m.rsl_by_freq[2 * np.pi] == pytest.approx(50.0)


class TestKKTStructure:
    @pytest.mark.parametrize("N", [20, 100, 300])
    def test_interlacing(self, N):
        params = sample_layer(SamplingSpec("uniform_sign", seed=N), N)
        sys = assemble_exact(params, 2, DRM, SinusoidSum(((0.0, 1.0, 0.0),)), (0, 0))
        assert interlacing_violations(sys.G, sys.kkt()[0]) == []

    def test_weyl_bounds(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n = int(rng.integers(5, 40))
            A = rng.standard_normal((n, n))
            G = A @ A.T
            B = rng.standard_normal((2, n))
            assert weyl_violations(G, B, 10 ** rng.uniform(-2, 4)) == []

    def test_lifting_holds_when_g_keeps_boundary_span(self):
        # if G leaves ran(B') invariant, every eigenvector of G is either in
        # ran(B') or in ker(B), and the ker(B) ones lift to eigenvectors of K
        rng = np.random.default_rng(4)
        n = 12
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        G = Q @ np.diag(np.linspace(1, 5, n)) @ Q.T
        B = rng.standard_normal((2, 2)) @ Q[:, :2].T
        K = np.block([[G, B.T], [B, np.zeros((2, 2))]])
        count, _ = lifted_eigenvector_count(K, n)
        assert count >= n - 2

    def test_lifting_count_reports_tails(self):
        sys = assemble_exact(sample_layer(SamplingSpec("uniform_sign", seed=0), 30), 2, DRM,
                             SinusoidSum(((0.0, 1.0, 0.0),)), (0, 0))
        count, tails = lifted_eigenvector_count(sys.kkt()[0], 30)
        assert tails.shape == (32,)
        assert 0 <= count <= 32
