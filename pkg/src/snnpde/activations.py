"""Activation families, their derivatives and first-layer sampling.

Every basis function in this package has the form ``sigma(w * x - b)``
(``LayerParams.form == "affine"``) or ``sigma(w * (x - b))``
(``form == "centered"``); :func:`LayerParams.shifts` converts either one
into the affine offset so downstream code only deals with ``w * x - shift``.

Random streams come from ``numpy.random.default_rng(seed)`` (PCG64), whose
seed-to-stream mapping is fixed across platforms.  Weights are drawn
before biases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import InvalidDerivativeOrder

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

FAMILIES = ("relu_pow", "sin", "tanh", "gelu")
SCHEMES = ("uniform_one", "uniform_sign", "scaled_uniform", "knot_aligned")


@dataclass(frozen=True)
class ActivationKind:
    """One of ``ReLU^p``, ``sin``, ``tanh`` or ``GELU`` (exact, ``z*Phi(z)``)."""

    family: str
    power: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown activation family {self.family!r}")
        if self.family == "relu_pow":
            if int(self.power) != self.power or self.power < 1:
                raise ValueError("ReLU power must be a positive integer")
        elif self.power != 0:
            raise ValueError(f"{self.family} takes no power")

    @classmethod
    def relu_pow(cls, p):
        return cls("relu_pow", int(p))

    @classmethod
    def parse(cls, text):
        """Parse ``"relu3"``, ``"relu^2"``, ``"sin"``, ``"tanh"`` or ``"gelu"``."""
        t = text.strip().lower().replace("^", "").replace("_", "")
        if t.startswith("relu"):
            return cls.relu_pow(int(t[4:] or 1))
        return cls(t)

    @property
    def is_relu(self):
        return self.family == "relu_pow"

    @property
    def max_order(self):
        """Largest derivative order that is a genuine L2 function."""
        return self.power if self.is_relu else 2

    def __str__(self):
        return f"relu{self.power}" if self.is_relu else self.family


SIN = ActivationKind("sin")
TANH = ActivationKind("tanh")
GELU = ActivationKind("gelu")


def check_order(kind, k):
    if k < 0 or k > kind.max_order:
        raise InvalidDerivativeOrder(
            f"derivative order {k} not available for {kind} "
            f"(max {kind.max_order})")


def eval_activation(kind, k, z):
    """Return the ``k``-th derivative of the activation at ``z``.

    For ``ReLU^p`` the order may go up to ``p`` itself, where the derivative is
    ``p!`` times the Heaviside step; the kink is assigned the left value 0.

    >>> float(eval_activation(ActivationKind.relu_pow(3), 2, 2.0))
    12.0
    """
    check_order(kind, k)
    z = np.asarray(z, dtype=float)
    if kind.is_relu:
        p = kind.power
        coef = math.factorial(p) // math.factorial(p - k)
        zp = np.where(z > 0.0, z, 0.0)
        if p == k:
            return np.where(z > 0.0, float(coef), 0.0)
        return coef * zp ** (p - k)
    if kind.family == "sin":
        return np.sin(z + 0.5 * k * math.pi) if k else np.sin(z)
    if kind.family == "tanh":
        t = np.tanh(z)
        if k == 0:
            return t
        if k == 1:
            return 1.0 - t * t
        return -2.0 * t * (1.0 - t * t)
    # gelu
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    if k == 0:
        return z * ndtr(z)
    if k == 1:
        return ndtr(z) + z * pdf
    return (2.0 - z * z) * pdf


@dataclass(frozen=True)
class LayerParams:
    """Frozen first-layer weights and biases of an N-width network."""

    w: np.ndarray
    b: np.ndarray
    form: str = "affine"

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        b = np.array(self.b, dtype=float).reshape(-1)
        if w.size < 1 or w.shape != b.shape:
            raise ValueError("w and b must be nonempty vectors of equal length")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("layer parameters must be finite")
        if self.form not in ("affine", "centered"):
            raise ValueError("form must be 'affine' or 'centered'")
        w.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", b)

    @property
    def N(self):
        return self.w.size

    def shifts(self):
        """Offsets ``s`` such that every basis function is ``sigma(w*x - s)``."""
        return self.w * self.b if self.form == "centered" else self.b.copy()

    def features(self, kind, k, x):
        """Matrix ``[w_i^k sigma^(k)(w_i x_q - s_i)]`` of shape ``(len(x), N)``."""
        x = np.asarray(x, dtype=float).reshape(-1, 1)
        z = x * self.w - self.shifts()
        out = eval_activation(kind, k, z)
        return out * self.w ** k if k else out


@dataclass(frozen=True)
class SamplingSpec:
    """How to draw ``LayerParams``.

    ``scheme`` is ``"uniform_one"`` (w = 1, b_i = -1 + 2(i-1)/N),
    ``"uniform_sign"`` (w = +-1, b ~ U(-1, 1)), ``"scaled_uniform"``
    (w ~ U(-S, S), centers b ~ U(-1, 1), basis ``sigma(w (x - b))``) or
    ``"knot_aligned"`` (w = 1, biases on the degree-``p`` spline knots, so the
    ``ReLU^p`` span equals the B-spline space; ``p`` is required).
    """

    scheme: str
    seed: int = 0
    S: float = field(default=1.0)
    p: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown sampling scheme {self.scheme!r}")
        if self.scheme == "scaled_uniform" and not self.S > 0:
            raise ValueError("scale S must be positive")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")


def sample_layer(spec, N):
    """Draw first-layer parameters deterministically from ``spec.seed``."""
    N = int(N)
    if N < 1:
        raise ValueError("width must be positive")
    if spec.scheme == "uniform_one":
        b = -1.0 + 2.0 * np.arange(N) / N
        return LayerParams(np.ones(N), b)
    if spec.scheme == "knot_aligned":
        if N <= spec.p:
            raise ValueError("knot-aligned layer needs N > p")
        dx = 2.0 / (N - spec.p)
        return LayerParams(np.ones(N), -1.0 + (np.arange(N) - spec.p) * dx)
    rng = np.random.default_rng(spec.seed)
    if spec.scheme == "uniform_sign":
        w = 2.0 * rng.integers(0, 2, size=N) - 1.0
        b = rng.uniform(-1.0, 1.0, size=N)
        return LayerParams(w, b)
    w = rng.uniform(-spec.S, spec.S, size=N)
    b = rng.uniform(-1.0, 1.0, size=N)
    return LayerParams(w, b, form="centered")
