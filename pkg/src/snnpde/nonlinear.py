"""Fully trainable sin network ``u(x) = sum a_n sin(w_n (x - b_n))``.

The loss is the sampled PINN loss of ``-(D u')' + c0 u = f`` with a boundary
penalty,

    loss = mean_q (L u(x_q) - f(x_q))^2 + lam * sum_{x=+-1} (u(x) - g(x))^2,

and every gradient is written out by hand.  Training is full-batch Adam on
a sample set that is drawn once per run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .activations import SIN, SamplingSpec, sample_layer
from .assembly import VaryingCoeffProblem
from .errors import NonFiniteLoss


@dataclass(frozen=True)
class TrainableSNN:
    """Width-``N`` sin network with free ``a``, ``w`` and centers ``b``."""

    a: np.ndarray
    w: np.ndarray
    b: np.ndarray
    kind: object = SIN

    def __post_init__(self):
        arrs = [np.array(v, dtype=float).reshape(-1) for v in (self.a, self.w, self.b)]
        if len({v.size for v in arrs}) != 1 or arrs[0].size == 0:
            raise ValueError("a, w and b must be nonempty and of equal length")
        if not all(np.all(np.isfinite(v)) for v in arrs):
            raise ValueError("network parameters must be finite")
        if self.kind != SIN:
            raise ValueError("only the sin activation is supported for training")
        for name, v in zip("awb", arrs):
            v.flags.writeable = False
            object.__setattr__(self, name, v)

    @property
    def N(self):
        return self.a.size

    @classmethod
    def initialize(cls, N, S, seed=0):
        """``w ~ U(-S, S)``, ``b ~ U(-1, 1)`` and ``a ~ N(0, sqrt(2/N))``."""
        layer = sample_layer(SamplingSpec("scaled_uniform", seed, S=S), N)
        a = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0]).normal(
            0.0, math.sqrt(2.0 / N), N)
        return cls(a, layer.w, layer.b)

    def flat(self):
        return np.concatenate([self.a, self.w, self.b])

    @classmethod
    def from_flat(cls, theta):
        a, w, b = np.split(np.asarray(theta, dtype=float), 3)
        return cls(a, w, b)

    def __call__(self, x, k=0):
        """``u^(k)(x)`` for ``k`` in 0..2."""
        x = np.asarray(x, dtype=float)
        z = self.w * (x[..., None] - self.b)
        if k == 0:
            return np.sin(z) @ self.a
        if k == 1:
            return np.cos(z) @ (self.a * self.w)
        if k == 2:
            return -np.sin(z) @ (self.a * self.w ** 2)
        raise ValueError("derivative order must be 0, 1 or 2")


# -- the benchmark solution ------------------------------------------------------


@dataclass(frozen=True)
class BumpSolution:
    """Cut-off sum of chirped Gaussians vanishing outside ``(-0.6, 0.6)``."""

    amplitudes: tuple = (1.0, 0.8, 0.6)
    frequencies: tuple = (60.0, 300.0, 40.0)
    decays: tuple = (80.0, 50.0, 60.0)
    centers: tuple = (-0.2, 0.0, 0.2)
    half_width: float = 0.6
    eps: float = 1e-12
    scale: float = 1000.0

    def cutoff(self, x):
        x = np.asarray(x, dtype=float)
        r = self.half_width
        inside = np.abs(x) < r
        xi = np.where(inside, x, 0.0)
        with np.errstate(over="ignore", divide="ignore"):
            q = ((xi + r + self.eps) * (r - xi + self.eps)) ** 2
            val = np.exp(-1.0 / q)
        return np.where(inside, val, 0.0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        s = np.zeros_like(x)
        for A, om, al, c in zip(self.amplitudes, self.frequencies, self.decays, self.centers):
            d2 = (x - c) ** 2
            s = s + A * np.sin(om * d2) * np.exp(-al * d2)
        return self.scale * self.cutoff(x) * s


BUMP = BumpSolution()


def bump_eval(x, bump=BUMP):
    return bump(x)


def fd_derivatives(u, x, h=1e-5):
    """Fourth-order central differences ``(u', u'')`` with step ``h``."""
    x = np.asarray(x, dtype=float)
    up1, um1, up2, um2 = u(x + h), u(x - h), u(x + 2 * h), u(x - 2 * h)
    d1 = (-up2 + 8.0 * up1 - 8.0 * um1 + um2) / (12.0 * h)
    d2 = (-up2 + 16.0 * up1 - 30.0 * u(x) + 16.0 * um1 - um2) / (12.0 * h * h)
    return d1, d2


def bump_forcing(problem, x, bump=BUMP, h=1e-5):
    """``-(D u')' + c0 u`` for the bump, differentiated numerically."""
    d1, d2 = fd_derivatives(bump, x, h)
    return problem.apply(bump(x), d1, d2, np.asarray(x, dtype=float))


def bump_problem(bump=BUMP, c0=1.0, h=1e-5):
    """Varying-coefficient Dirichlet problem with ``D = sin(pi x) + 2``."""
    D = lambda x: np.sin(np.pi * x) + 2.0
    dD = lambda x: np.pi * np.cos(np.pi * x)
    base = VaryingCoeffProblem(D=D, f=lambda x: np.zeros_like(x), c0=c0, dD=dD,
                               u_exact=bump, g=(0.0, 0.0))
    return replace(base, f=lambda x: bump_forcing(base, x, bump, h))


# -- loss and gradients ------------------------------------------------------------


def pinn_loss_and_grad(net, problem, samples, lam):
    """Sampled PINN loss and its exact gradients with respect to ``a, w, b``."""
    x = np.asarray(samples, dtype=float).reshape(-1)
    a, w, b = net.a, net.w, net.b
    t = x[:, None] - b
    z = w * t
    s, c = np.sin(z), np.cos(z)
    D, dD = problem.D(x)[:, None], problem.diffusion_slope(x)[:, None]
    c0 = problem.c0
    # L applied to each basis function, per unit coefficient
    Lphi = D * w ** 2 * s - dD * w * c + c0 * s
    r = Lphi @ a - problem.f(x)
    M = x.size
    loss_in = float(r @ r) / M
    g_a = 2.0 / M * (r @ Lphi)
    dLw = D * (2.0 * w * s + w ** 2 * t * c) - dD * (c - w * t * s) + c0 * t * c
    dLb = -D * w ** 3 * c - dD * w ** 2 * s - c0 * w * c
    g_w = 2.0 / M * a * (r @ dLw)
    g_b = 2.0 / M * a * (r @ dLb)

    gvals = problem.boundary()
    loss_bd = 0.0
    for xb, gb in zip((-1.0, 1.0), gvals):
        tb = xb - b
        zb = w * tb
        sb, cb = np.sin(zb), np.cos(zb)
        e = float(sb @ a) - gb
        loss_bd += e * e
        g_a = g_a + 2.0 * lam * e * sb
        g_w = g_w + 2.0 * lam * e * a * tb * cb
        g_b = g_b - 2.0 * lam * e * a * w * cb
    return loss_in + lam * loss_bd, g_a, g_w, g_b


# -- training ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20000
    learning_rate: float = 8e-4
    lam: float = 250.0
    n_samples: int = 500
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    freeze_inner: bool = False

    def __post_init__(self):
        if self.epochs < 0 or self.n_samples < 1:
            raise ValueError("epochs must be >= 0 and n_samples >= 1")
        if not (self.learning_rate > 0 and self.lam >= 0 and self.adam_eps > 0):
            raise ValueError("learning rate and eps must be positive, lam nonnegative")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")


def training_samples(cfg):
    """The fixed ``Uniform(-1, 1)`` sample set of a run."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[1])
    return rng.uniform(-1.0, 1.0, cfg.n_samples)


def train_adam(net0, problem, cfg=TrainConfig(), samples=None):
    """Full-batch Adam on the sampled PINN loss.

    Returns the trained network and the loss before every update (so
    ``history[0]`` is the initial loss); the loss of the returned network is
    appended last.
    """
    x = training_samples(cfg) if samples is None else np.asarray(samples, dtype=float)
    theta = net0.flat()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    N = net0.N
    history = []
    net = net0
    for ep in range(cfg.epochs):
        loss, ga, gw, gb = pinn_loss_and_grad(net, problem, x, cfg.lam)
        if not math.isfinite(loss):
            raise NonFiniteLoss(f"loss became {loss} at epoch {ep}", ep)
        history.append(loss)
        g = np.concatenate([ga, gw, gb])
        if cfg.freeze_inner:
            g[N:] = 0.0
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
        mhat = m / (1.0 - cfg.beta1 ** (ep + 1))
        vhat = v / (1.0 - cfg.beta2 ** (ep + 1))
        theta = theta - cfg.learning_rate * mhat / (np.sqrt(vhat) + cfg.adam_eps)
        net = TrainableSNN.from_flat(theta)
    if cfg.epochs:
        final = pinn_loss_and_grad(net, problem, x, cfg.lam)[0]
        if not math.isfinite(final):
            raise NonFiniteLoss(f"loss became {final} after the last epoch", cfg.epochs)
        history.append(final)
    return net, np.array(history)


def sampled_linear_solution(net, problem, samples, lam):
    """Best ``a`` for frozen ``w, b`` under the same sampled loss (least squares)."""
    x = np.asarray(samples, dtype=float)
    t = x[:, None] - net.b
    z = net.w * t
    D, dD = problem.D(x)[:, None], problem.diffusion_slope(x)[:, None]
    Lphi = D * net.w ** 2 * np.sin(z) - dD * net.w * np.cos(z) + problem.c0 * np.sin(z)
    Bm = np.sin(net.w * (np.array([-1.0, 1.0])[:, None] - net.b))
    M = x.size
    A = np.vstack([Lphi / math.sqrt(M), math.sqrt(lam) * Bm])
    rhs = np.concatenate([problem.f(x) / math.sqrt(M), math.sqrt(lam) * problem.boundary()])
    a, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return TrainableSNN(a, net.w, net.b)
