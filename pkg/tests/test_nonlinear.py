from dataclasses import replace

import numpy as np
import pytest

from snnpde.assembly import VaryingCoeffProblem
from snnpde.errors import NonFiniteLoss
from snnpde.nonlinear import (BUMP, TrainableSNN, TrainConfig, bump_eval, bump_forcing,
                              bump_problem, fd_derivatives, pinn_loss_and_grad,
                              sampled_linear_solution, train_adam, training_samples)

PROBLEM = bump_problem()


def zero_problem():
    return VaryingCoeffProblem(D=lambda x: np.sin(np.pi * x) + 2.0, f=lambda x: 0 * x,
                               c0=1.0, dD=lambda x: np.pi * np.cos(np.pi * x), g=(0.0, 0.0))


class TestBump:
    def test_vanishes_outside_support(self):
        assert bump_eval(0.7) == 0.0
        assert bump_eval(-0.6) == 0.0
        assert bump_eval(0.0) != 0.0

    def test_smooth_at_cutoff(self):
        d1, d2 = fd_derivatives(BUMP, np.array([-0.6, 0.6]))
        assert np.all(np.abs(d1) <= 1e-6) and np.all(np.abs(d2) <= 1e-6)

    def test_forcing_against_richardson(self):
        x = np.linspace(-0.59, 0.59, 400)
        f = bump_forcing(PROBLEM, x)
        # the fourth-order rule at h and h/2, combined to cancel the h^4 term;
        # h = 1e-4 keeps rounding well below the truncation error being removed
        f1 = bump_forcing(PROBLEM, x, h=1e-4)
        f2 = bump_forcing(PROBLEM, x, h=5e-5)
        rich = (16 * f2 - f1) / 15
        big = np.abs(rich) > 1
        np.testing.assert_allclose(f[big], rich[big], rtol=1e-5)

    def test_problem_wiring(self):
        np.testing.assert_array_equal(PROBLEM.boundary(), [0.0, 0.0])
        x = np.array([0.1, 0.3])
        np.testing.assert_allclose(PROBLEM.f(x), bump_forcing(PROBLEM, x))


class TestNetwork:
    def test_initialize_is_deterministic(self):
        a = TrainableSNN.initialize(30, 30, seed=4)
        b = TrainableSNN.initialize(30, 30, seed=4)
        np.testing.assert_array_equal(a.flat(), b.flat())
        assert np.all(np.abs(a.w) <= 30) and np.all(np.abs(a.b) <= 1)

    def test_flat_round_trip(self):
        net = TrainableSNN.initialize(7, 3.0, seed=1)
        np.testing.assert_array_equal(TrainableSNN.from_flat(net.flat()).flat(), net.flat())

    def test_derivatives(self):
        net = TrainableSNN.initialize(5, 4.0, seed=2)
        x = np.linspace(-0.9, 0.9, 13)
        d1, d2 = fd_derivatives(net, x, h=1e-3)
        np.testing.assert_allclose(net(x, 1), d1, rtol=1e-7, atol=1e-8)
        np.testing.assert_allclose(net(x, 2), d2, rtol=1e-5, atol=1e-6)

    def test_validation(self):
        with pytest.raises(ValueError):
            TrainableSNN([1.0], [1.0, 2.0], [0.0])
        with pytest.raises(ValueError):
            TrainableSNN([np.nan], [1.0], [0.0])


class TestLoss:
    def test_zero_problem_zero_net(self):
        net = TrainableSNN(np.zeros(4), np.ones(4), np.zeros(4))
        loss, ga, gw, gb = pinn_loss_and_grad(net, zero_problem(), np.linspace(-1, 1, 9), 10.0)
        assert loss == 0.0
        for g in (ga, gw, gb):
            np.testing.assert_array_equal(g, 0.0)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_gradient_against_finite_differences(self, seed):
        net = TrainableSNN.initialize(5, 5.0, seed=seed)
        x = training_samples(TrainConfig(n_samples=50, seed=seed))
        _, ga, gw, gb = pinn_loss_and_grad(net, PROBLEM, x, 250.0)
        grad = np.concatenate([ga, gw, gb])
        theta = net.flat()
        fd = np.empty_like(theta)
        for i in range(theta.size):
            h = 1e-6 * max(1.0, abs(theta[i]))
            tp, tm = theta.copy(), theta.copy()
            tp[i] += h
            tm[i] -= h
            lp = pinn_loss_and_grad(TrainableSNN.from_flat(tp), PROBLEM, x, 250.0)[0]
            lm = pinn_loss_and_grad(TrainableSNN.from_flat(tm), PROBLEM, x, 250.0)[0]
            fd[i] = (lp - lm) / (2 * h)
        rel = np.linalg.norm(fd - grad) / np.linalg.norm(grad)
        assert rel <= 1e-6

    def test_linear_in_lambda(self):
        net = TrainableSNN.initialize(6, 5.0, seed=3)
        x = np.linspace(-1, 1, 40)
        l0 = pinn_loss_and_grad(net, PROBLEM, x, 0.0)[0]
        l1 = pinn_loss_and_grad(net, PROBLEM, x, 1.0)[0]
        l2 = pinn_loss_and_grad(net, PROBLEM, x, 2.0)[0]
        assert l2 - l0 == pytest.approx(2 * (l1 - l0), rel=1e-9)

    def test_linear_solution_minimizes_over_a(self):
        net = TrainableSNN.initialize(10, 5.0, seed=5)
        x = training_samples(TrainConfig(n_samples=200))
        best = sampled_linear_solution(net, PROBLEM, x, 250.0)
        l_best, ga, _, _ = pinn_loss_and_grad(best, PROBLEM, x, 250.0)
        assert l_best <= pinn_loss_and_grad(net, PROBLEM, x, 250.0)[0]
        assert np.linalg.norm(ga) <= 1e-6 * l_best


class TestTraining:
    def test_zero_epochs_is_identity(self):
        net0 = TrainableSNN.initialize(8, 8.0, seed=0)
        net, hist = train_adam(net0, PROBLEM, TrainConfig(epochs=0))
        np.testing.assert_array_equal(net.flat(), net0.flat())
        assert hist.size == 0

    def test_deterministic_history(self):
        net0 = TrainableSNN.initialize(10, 10.0, seed=1)
        cfg = TrainConfig(epochs=30, seed=1)
        _, h1 = train_adam(net0, PROBLEM, cfg)
        _, h2 = train_adam(net0, PROBLEM, cfg)
        np.testing.assert_array_equal(h1, h2)
        assert h1.size == 31

    def test_freeze_inner_keeps_layer(self):
        net0 = TrainableSNN.initialize(10, 10.0, seed=2)
        net, _ = train_adam(net0, PROBLEM, TrainConfig(epochs=20, freeze_inner=True))
        np.testing.assert_array_equal(net.w, net0.w)
        np.testing.assert_array_equal(net.b, net0.b)
        assert not np.array_equal(net.a, net0.a)

    def test_history_finite_at_default_settings(self):
        net0 = TrainableSNN.initialize(100, 100, seed=0)
        _, hist = train_adam(net0, PROBLEM, TrainConfig(epochs=300))
        assert np.all(np.isfinite(hist))
        assert hist[-1] < hist[0]

    def test_non_finite_loss(self):
        bad = replace(PROBLEM, f=lambda x: np.full_like(x, np.inf))
        with pytest.raises(NonFiniteLoss) as info, np.errstate(invalid="ignore"):
            train_adam(TrainableSNN.initialize(3, 1.0), bad, TrainConfig(epochs=5))
        assert info.value.epoch == 0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            TrainConfig(beta1=1.0)


@pytest.mark.slow
@pytest.mark.xfail(reason="Adam at lr 8e-4 plateaus about 16% above the least-squares "
                          "optimum after 20000 epochs (seed 0); see the decisions ledger",
                   strict=False)
def test_frozen_inner_adam_approaches_linear_optimum():
    net0 = TrainableSNN.initialize(50, 50, seed=0)
    cfg = TrainConfig(epochs=20000, freeze_inner=True)
    x = training_samples(cfg)
    _, hist = train_adam(net0, PROBLEM, cfg)
    best = sampled_linear_solution(net0, PROBLEM, x, cfg.lam)
    l_best = pinn_loss_and_grad(best, PROBLEM, x, cfg.lam)[0]
    print(f"frozen-inner Adam: final {hist[-1]:.6g}, optimum {l_best:.6g}, "
          f"ratio {hist[-1] / l_best:.4f}")
    assert hist[-1] <= 1.1 * l_best
