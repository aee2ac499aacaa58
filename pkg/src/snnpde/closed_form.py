"""Exact integrals for ReLU-power Gram systems and cardinal B-splines.

Gram entries are antiderivative differences of the polynomial
``((w_i x - b_i)(w_j x - b_j))^q`` over the interval where both factors are
positive.  The antiderivatives are evaluated in the shifted variable
``t = x - lo`` (so ``F(lo)`` vanishes identically); the expansion is the same
polynomial, but without the cancellation between ``F(hi)`` and ``F(lo)``
that ruins short supports.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (InvalidDerivativeOrder, UnsupportedPower, WidthTooSmall,
                     ZeroFrequency, ZeroWeight)

DEGENERATE_LENGTH = 1e-14
MAX_POWER = 4


@dataclass(frozen=True)
class SinusoidSum:
    """``f(x) = sum_k m_k sin(a_k x + phi_k)``; every ``a_k`` nonzero."""

    terms: tuple

    def __post_init__(self):
        terms = tuple((float(m), float(a), float(ph)) for m, a, ph in self.terms)
        for _, a, _ in terms:
            if a == 0.0:
                raise ZeroFrequency("sinusoid term with zero frequency")
        object.__setattr__(self, "terms", terms)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for m, a, ph in self.terms:
            out = out + m * np.sin(a * x + ph)
        return out

    def derivative(self, order=1):
        """Exact derivative, itself a sinusoid sum with shifted phases."""
        return SinusoidSum(tuple((m * a ** order, a, ph + 0.5 * order * math.pi)
                                 for m, a, ph in self.terms))

    def scaled(self, c):
        return SinusoidSum(tuple((c * m, a, ph) for m, a, ph in self.terms))


# -- active intervals -------------------------------------------------------

def _half_line(w, b):
    """Bounds of ``{x : w x - b > 0}`` as ``(lo, hi)`` arrays (may be +-inf)."""
    r = b / w
    lo = np.where(w > 0, r, -np.inf)
    hi = np.where(w > 0, np.inf, r)
    return lo, hi


def _active_bounds(wi, bi, wj, bj):
    lo_i, hi_i = _half_line(wi, bi)
    lo_j, hi_j = _half_line(wj, bj)
    lo = np.maximum(np.maximum(lo_i, lo_j), -1.0)
    hi = np.minimum(np.minimum(hi_i, hi_j), 1.0)
    return lo, hi


def active_interval(w_i, b_i, w_j, b_j):
    """Interval of ``[-1, 1]`` where both ``w x - b`` factors are positive.

    Returns ``(lo, hi)`` or ``None`` when the intersection is empty.

    >>> active_interval(1.0, 0.0, 1.0, 0.5)
    (0.5, 1.0)
    """
    if w_i == 0 or w_j == 0:
        raise ZeroWeight("active interval undefined for a zero weight")
    lo, hi = _active_bounds(*(np.float64(v) for v in (w_i, b_i, w_j, b_j)))
    lo, hi = float(lo), float(hi)
    if hi <= lo:
        return None
    return lo, hi


# -- Gram antiderivatives ---------------------------------------------------
# Antiderivatives of ((wi x - bi)(wj x - bj))^q, vanishing at x = 0.

def _F0(x, wi, bi, wj, bj):
    return x


def _F1(x, wi, bi, wj, bj):
    return (wi * wj * x ** 3 / 3.0 - 0.5 * wi * bj * x ** 2
            - 0.5 * bi * wj * x ** 2 + bi * bj * x)


def _F2(x, wi, bi, wj, bj):
    return (wi ** 2 * wj ** 2 * x ** 5 / 5.0
            + (-0.5 * wi ** 2 * wj * bj - 0.5 * wi * bi * wj ** 2) * x ** 4
            + (wi ** 2 * bj ** 2 / 3.0 + 4.0 / 3.0 * wi * bi * wj * bj
               + bi ** 2 * wj ** 2 / 3.0) * x ** 3
            + (-wi * bi * bj ** 2 - bi ** 2 * wj * bj) * x ** 2
            + bi ** 2 * bj ** 2 * x)


def _F3(x, wi, bi, wj, bj):
    s = wi * bj + bi * wj
    m = wi ** 2 * bj ** 2 + 3.0 * wi * bi * wj * bj + bi ** 2 * wj ** 2
    return (wi ** 3 * wj ** 3 * x ** 7 / 7.0
            - 0.5 * wi ** 2 * wj ** 2 * s * x ** 6
            + 0.6 * wi * wj * m * x ** 5
            + 0.25 * (-wi ** 3 * bj ** 3 - 9.0 * wi ** 2 * bi * wj * bj ** 2
                      - 9.0 * wi * bi ** 2 * wj ** 2 * bj - bi ** 3 * wj ** 3) * x ** 4
            + bi * bj * m * x ** 3
            - 1.5 * bi ** 2 * bj ** 2 * s * x ** 2
            + bi ** 3 * bj ** 3 * x)


def _F4(x, wi, bi, wj, bj):
    s = wi * bj + bi * wj
    m3 = 3.0 * wi ** 2 * bj ** 2 + 8.0 * wi * bi * wj * bj + 3.0 * bi ** 2 * wj ** 2
    c3 = (wi ** 3 * bj ** 3 + 6.0 * wi ** 2 * bi * wj * bj ** 2
          + 6.0 * wi * bi ** 2 * wj ** 2 * bj + bi ** 3 * wj ** 3)
    q4 = (wi ** 4 * bj ** 4 + 16.0 * wi ** 3 * bi * wj * bj ** 3
          + 36.0 * wi ** 2 * bi ** 2 * wj ** 2 * bj ** 2
          + 16.0 * wi * bi ** 3 * wj ** 3 * bj + bi ** 4 * wj ** 4)
    return (wi ** 4 * wj ** 4 * x ** 9 / 9.0
            - 0.5 * wi ** 3 * wj ** 3 * s * x ** 8
            + 2.0 / 7.0 * wi ** 2 * wj ** 2 * m3 * x ** 7
            - 2.0 / 3.0 * wi * wj * c3 * x ** 6
            + 0.2 * q4 * x ** 5
            - bi * bj * c3 * x ** 4
            + 2.0 / 3.0 * bi ** 2 * bj ** 2 * m3 * x ** 3
            - 2.0 * bi ** 3 * bj ** 3 * s * x ** 2
            + bi ** 4 * bj ** 4 * x)


_GRAM_ANTIDERIVATIVES = (_F0, _F1, _F2, _F3, _F4)


def _reduction_factor(p, k):
    """``(ReLU^p)^(k) = p!/(p-k)! * ReLU^(p-k)``."""
    return math.factorial(p) // math.factorial(p - k)


def _check_pk(p, k):
    if p < 1 or p > MAX_POWER:
        raise UnsupportedPower(f"closed forms cover ReLU^1..ReLU^{MAX_POWER}, got {p}")
    if k < 0 or k > min(2, p):
        raise InvalidDerivativeOrder(f"derivative order {k} invalid for ReLU^{p}")


def _product_integral(q, wi, bi, wj, bj):
    """Vectorized ``int_{[-1,1]} ReLU^q(wi x - bi) ReLU^q(wj x - bj) dx``."""
    lo, hi = _active_bounds(wi, bi, wj, bj)
    length = hi - lo
    ok = length > DEGENERATE_LENGTH
    lo = np.where(ok, lo, 0.0)
    t = np.where(ok, length, 0.0)
    val = _GRAM_ANTIDERIVATIVES[q](t, wi, bi - wi * lo, wj, bj - wj * lo)
    return np.where(ok, val, 0.0)


def gram_entry_relu(p, k, w_i, b_i, w_j, b_j):
    """One entry of the ``k``-th derivative Gram matrix for ``ReLU^p``.

    ``int_{-1}^{1} w_i^k w_j^k sigma^(k)(w_i x - b_i) sigma^(k)(w_j x - b_j) dx``.
    Arguments are put in a canonical order first so the result is exactly
    symmetric in ``(i, j)``.
    """
    _check_pk(p, k)
    if w_i == 0 or w_j == 0:
        raise ZeroWeight("zero first-layer weight")
    if (w_j, b_j) < (w_i, b_i):
        w_i, b_i, w_j, b_j = w_j, b_j, w_i, b_i
    c = float(_reduction_factor(p, k)) ** 2 * (w_i * w_j) ** k
    args = (np.float64(w_i), np.float64(b_i), np.float64(w_j), np.float64(b_j))
    return float(c * _product_integral(p - k, *args))


def gram_matrix_relu(p, k, w, shifts):
    """Full ``N x N`` Gram matrix; only the upper triangle is computed."""
    _check_pk(p, k)
    w = np.asarray(w, dtype=float)
    s = np.asarray(shifts, dtype=float)
    if np.any(w == 0):
        raise ZeroWeight("zero first-layer weight")
    iu, ju = np.triu_indices(w.size)
    vals = _product_integral(p - k, w[iu], s[iu], w[ju], s[ju])
    vals *= float(_reduction_factor(p, k)) ** 2 * (w[iu] * w[ju]) ** k
    G = np.empty((w.size, w.size))
    G[iu, ju] = vals
    G[ju, iu] = vals
    return G


# -- right-hand side antiderivatives ---------------------------------------
# Antiderivatives of sin(a x + phi) (w x - b)^q.

def _H0(x, a, ph, w, b):
    return -np.cos(a * x + ph) / a


def _H1(x, a, ph, w, b):
    return (a * (b - w * x) * np.cos(a * x + ph) + w * np.sin(a * x + ph)) / a ** 2


def _H2(x, a, ph, w, b):
    u = w * x - b
    return (2.0 * a * w * u * np.sin(a * x + ph)
            - np.cos(a * x + ph) * (w ** 2 * (a ** 2 * x ** 2 - 2.0)
                                    - 2.0 * a ** 2 * w * b * x + a ** 2 * b ** 2)) / a ** 3


def _H3(x, a, ph, w, b):
    u = w * x - b
    c, s = np.cos(a * x + ph), np.sin(a * x + ph)
    return (c * (6.0 * w ** 2 * u / a ** 3 - u ** 3 / a)
            + s * (3.0 * w * u ** 2 / a ** 2 - 6.0 * w ** 3 / a ** 4))


def _H4(x, a, ph, w, b):
    u = w * x - b
    c, s = np.cos(a * x + ph), np.sin(a * x + ph)
    return (c * (-24.0 * w ** 4 / a ** 5 + 12.0 * w ** 2 * u ** 2 / a ** 3 - u ** 4 / a)
            + u * s * (4.0 * w * u ** 2 / a ** 2 - 24.0 * w ** 3 / a ** 4))


_RHS_ANTIDERIVATIVES = (_H0, _H1, _H2, _H3, _H4)


def _single_bounds(w, b):
    lo, hi = _half_line(w, b)
    return np.maximum(lo, -1.0), np.minimum(hi, 1.0)


# Below this value of |a| * (interval length) the antiderivative difference
# cancels badly; the integrand is then a gently varying analytic function and
# a fixed Gauss-Legendre rule on the active interval is accurate to rounding.
SHORT_PHASE = 2.0
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _rhs_short(q, t, a, ph_s, w, bs):
    x = 0.5 * t[..., None] * (_GL_NODES + 1.0)
    u = np.maximum(w[..., None] * x - bs[..., None], 0.0)
    vals = u ** q * np.sin(a * x + ph_s[..., None])
    return 0.5 * t * (vals @ _GL_WEIGHTS)


def _rhs_integral(q, w, b, f):
    lo, hi = _single_bounds(w, b)
    length = hi - lo
    ok = length > DEGENERATE_LENGTH
    lo = np.where(ok, lo, 0.0)
    t = np.where(ok, length, 0.0)
    bs = b - w * lo
    total = np.zeros(np.broadcast(w, b).shape)
    H = _RHS_ANTIDERIVATIVES[q]
    for m, a, ph in f.terms:
        if m == 0.0:
            continue
        ph_s = a * lo + ph
        with np.errstate(invalid="ignore", over="ignore"):
            closed = H(t, a, ph_s, w, bs) - H(0.0, a, ph_s, w, bs)
        short = abs(a) * t < SHORT_PHASE
        if np.any(short):
            wb, bb, tb, pb = np.broadcast_arrays(w, bs, t, ph_s)
            closed = np.where(short, _rhs_short(q, tb, a, pb, wb, bb), closed)
        total = total + m * closed
    return np.where(ok, total, 0.0)


def _as_sinusoids(f):
    if isinstance(f, SinusoidSum):
        return f
    return SinusoidSum(tuple(f))


def rhs_entry_relu(p, k, w_i, b_i, f):
    """``int_{-1}^{1} w_i^k sigma^(k)(w_i x - b_i) f(x) dx`` for ``ReLU^p``."""
    f = _as_sinusoids(f)
    if p - k < 0 or p - k > MAX_POWER or k < 0:
        raise InvalidDerivativeOrder(f"effective power {p - k} outside 0..{MAX_POWER}")
    if w_i == 0:
        raise ZeroWeight("zero first-layer weight")
    c = float(_reduction_factor(p, k)) * w_i ** k
    return float(c * _rhs_integral(p - k, np.float64(w_i), np.float64(b_i), f))


def rhs_vector_relu(p, k, w, shifts, f):
    f = _as_sinusoids(f)
    if p - k < 0 or p - k > MAX_POWER or k < 0:
        raise InvalidDerivativeOrder(f"effective power {p - k} outside 0..{MAX_POWER}")
    w = np.asarray(w, dtype=float)
    s = np.asarray(shifts, dtype=float)
    if np.any(w == 0):
        raise ZeroWeight("zero first-layer weight")
    return float(_reduction_factor(p, k)) * w ** k * _rhs_integral(p - k, w, s, f)


# -- cardinal B-splines -----------------------------------------------------

def bspline_eval(p, t):
    """Cardinal B-spline of degree ``p`` supported on ``[0, p+1]``.

    Built from the indicator of ``[0, 1)`` by the two-term recursion
    ``B^p(t) = t/p B^{p-1}(t) + (p+1-t)/p B^{p-1}(t-1)``.
    """
    t = np.asarray(t, dtype=float)
    if p < 0:
        raise ValueError("degree must be nonnegative")
    # values of B^0 at t - j for j = 0..p
    vals = [np.where((t - j >= 0.0) & (t - j < 1.0), 1.0, 0.0) for j in range(p + 1)]
    for d in range(1, p + 1):
        vals = [((t - j) * vals[j] + (d + 1 - (t - j)) * vals[j + 1]) / d
                for j in range(p + 1 - d)]
    return vals[0]


def bspline_relu_sum(p, t):
    """``(1/p!) sum_k (-1)^k C(p+1, k) ReLU^p(t - k)``; equals ``bspline_eval``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for k in range(p + 2):
        z = t - k
        if p == 0:
            r = np.where(z > 0.0, 1.0, 0.0)
        else:
            r = np.where(z > 0.0, z, 0.0) ** p
        out = out + (-1) ** k * math.comb(p + 1, k) * r
    return out / math.factorial(p)


def bspline_derivative(p, t, order=1):
    """Derivative of ``B^p`` via ``B^p' (t) = B^{p-1}(t) - B^{p-1}(t-1)``."""
    t = np.asarray(t, dtype=float)
    if order > p:
        raise InvalidDerivativeOrder("derivative order exceeds spline degree")
    out = np.zeros_like(t)
    for j in range(order + 1):
        out = out + (-1) ** j * math.comb(order, j) * bspline_eval(p - order, t - j)
    return out


def femsp_biases(N, p):
    """Knot-aligned biases ``b_i = -1 + (i-1-p) dx``, ``dx = 2/(N-p)``.

    ``ReLU^p(x - b_i)``, ``i = 1..N``, then span exactly the degree-``p``
    splines on the uniform partition of ``[-1, 1]`` into ``N - p`` cells.
    """
    if N <= p:
        raise WidthTooSmall(f"need N > p, got N={N}, p={p}")
    dx = 2.0 / (N - p)
    return -1.0 + (np.arange(1, N + 1) - 1 - p) * dx


def bspline_transform(N, p):
    """Banded lower-triangular map from ``ReLU^p`` coefficients to B-splines.

    ``[W]_ij = (-1)^(i-j) C(p+1, i-j) / (p! dx^p)`` for ``j <= i <= j+p+1``.
    Column ``j`` of ``W`` expresses the ``j``-th B-spline in the ReLU basis.
    """
    if N <= p:
        raise WidthTooSmall(f"need N > p, got N={N}, p={p}")
    dx = 2.0 / (N - p)
    scale = math.factorial(p) * dx ** p
    W = np.zeros((N, N))
    for d in range(min(p + 2, N)):
        # exact integer binomial, one division
        W[np.arange(d, N), np.arange(0, N - d)] = (-1) ** d * math.comb(p + 1, d) / scale
    return W


def bspline_gram_derivative(p, dx, shift):
    """``int_R b_p'(t + i dx) b_p'(t + j dx) dt`` with ``shift = i - j``.

    Uses ``-(dx)^-1 B_{2p+1}''(p + 1 + shift)`` and the second difference
    ``B_{2p+1}''(x) = B_{2p-1}(x) - 2 B_{2p-1}(x-1) + B_{2p-1}(x-2)``.
    """
    if p < 1:
        raise ValueError("degree must be at least 1")
    if not dx > 0:
        raise ValueError("spacing must be positive")
    x = p + 1 + shift
    d2 = bspline_derivative(2 * p + 1, np.float64(x), order=2)
    return float(-d2 / dx)
