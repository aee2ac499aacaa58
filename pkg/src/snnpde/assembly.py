"""Gram systems ``(G, y, B, c)`` for PINN, Deep Ritz and spline FEM.

For the 1D Poisson problem ``-u'' = f`` on ``(-1, 1)`` with ``u(+-1) = g``:

* PINN uses the second-derivative Gram matrix and ``y = -y^(2)``,
* DRM uses the first-derivative Gram matrix and ``y = y^(0)``,
* FEMsp is DRM in the degree-``p`` B-spline basis.

``B`` holds the basis values at ``x = -1`` (row 0) and ``x = +1`` (row 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import closed_form as cf
from .activations import ActivationKind, LayerParams, check_order
from .errors import (InsufficientRegularity, NonEllipticCoefficient,
                     WidthTooSmall)

# -- formulations ------------------------------------------------------------


@dataclass(frozen=True)
class Formulation:
    """``PINN``, ``DRM`` or ``FEMsp`` (with spline degree)."""

    name: str
    degree: Optional[int] = None

    def __post_init__(self):
        if self.name not in ("PINN", "DRM", "FEMsp"):
            raise ValueError(f"unknown formulation {self.name!r}")
        if (self.name == "FEMsp") != (self.degree is not None):
            raise ValueError("only FEMsp carries a degree")

    @property
    def gram_order(self):
        return 2 if self.name == "PINN" else 1

    def __str__(self):
        return f"FEMsp{self.degree}" if self.name == "FEMsp" else self.name


PINN = Formulation("PINN")
DRM = Formulation("DRM")


def femsp(p):
    return Formulation("FEMsp", int(p))


# -- bases -------------------------------------------------------------------


@dataclass(frozen=True)
class NetworkBasis:
    """Functions ``sigma(w_i x - s_i)`` for frozen ``LayerParams``."""

    params: LayerParams
    kind: ActivationKind

    @property
    def N(self):
        return self.params.N

    def features(self, x, k=0):
        return self.params.features(self.kind, k, x)


@dataclass(frozen=True)
class SplineBasis:
    """Degree-``p`` cardinal B-splines on ``N - p`` uniform cells of ``[-1, 1]``."""

    N: int
    p: int

    def __post_init__(self):
        if self.N <= self.p:
            raise WidthTooSmall(f"need N > p, got N={self.N}, p={self.p}")

    @property
    def dx(self):
        return 2.0 / (self.N - self.p)

    @property
    def starts(self):
        """Left end of each spline's support (same as the ReLU knots)."""
        return cf.femsp_biases(self.N, self.p)

    def features(self, x, k=0):
        x = np.asarray(x, dtype=float).reshape(-1, 1)
        t = (x - self.starts) / self.dx
        if k == 0:
            return cf.bspline_eval(self.p, t)
        return cf.bspline_derivative(self.p, t, order=k) / self.dx ** k


def evaluate(basis, a, x, k=0):
    """Values of ``sum_i a_i phi_i^(k)(x)``."""
    return basis.features(x, k) @ np.asarray(a, dtype=float)


# -- systems -----------------------------------------------------------------


@dataclass
class GramSystem:
    """Quadratic program ``min 1/2 a'Ga - a'y  s.t.  Ba = c``."""

    G: np.ndarray
    y: np.ndarray
    B: np.ndarray
    c: np.ndarray
    formulation: Formulation
    basis: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.G = np.asarray(self.G, dtype=float)
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.G.shape[0]
        if self.G.shape != (n, n) or self.y.shape != (n,) or self.B.shape[1] != n \
                or self.B.shape[0] != self.c.size:
            raise ValueError("inconsistent Gram system dimensions")
        scale = max(np.max(np.abs(self.G)), 1e-300)
        if np.max(np.abs(self.G - self.G.T)) > 1e-13 * scale:
            raise ValueError("Gram matrix is not symmetric")

    @property
    def N(self):
        return self.G.shape[0]

    def kkt(self):
        """Saddle-point matrix ``[[G, B'], [B, 0]]`` and its right-hand side."""
        n, m = self.N, self.B.shape[0]
        K = np.zeros((n + m, n + m))
        K[:n, :n] = self.G
        K[:n, n:] = self.B.T
        K[n:, :n] = self.B
        return K, np.concatenate([self.y, self.c])

    def evaluate(self, a, x, k=0):
        if self.basis is None:
            raise ValueError("system was built without a basis")
        return evaluate(self.basis, a, x, k)


def _boundary_values(g):
    if callable(g):
        return np.array([float(g(-1.0)), float(g(1.0))])
    g = np.asarray(g, dtype=float).reshape(-1)
    if g.size != 2:
        raise ValueError("boundary data must be (g(-1), g(1)) or a callable")
    return g


def _relu_boundary_matrix(params, p):
    s = params.shifts()
    w = params.w
    return np.vstack([np.maximum(-w - s, 0.0) ** p, np.maximum(w - s, 0.0) ** p])


def assemble_exact(params, p, form, f, g):
    """Exact ``ReLU^p`` Gram system from the closed-form integrals.

    ``f`` is the forcing of ``-u'' = f`` as a :class:`SinusoidSum` (or a
    sequence of ``(m, a, phi)`` terms); ``g`` gives the Dirichlet data.
    """
    if form.name == "FEMsp":
        raise ValueError("use assemble_femsp for the spline formulation")
    if form.name == "PINN" and p < 2:
        raise InsufficientRegularity("PINN needs ReLU^p with p >= 2")
    if not isinstance(f, cf.SinusoidSum):
        f = cf.SinusoidSum(tuple(f))
    k = form.gram_order
    w, s = params.w, params.shifts()
    G = cf.gram_matrix_relu(p, k, w, s)
    if form.name == "PINN":
        y = -cf.rhs_vector_relu(p, 2, w, s, f)
    else:
        y = cf.rhs_vector_relu(p, 0, w, s, f)
    B = _relu_boundary_matrix(params, p)
    basis = NetworkBasis(params, ActivationKind.relu_pow(p))
    return GramSystem(G, y, B, _boundary_values(g), form, basis,
                      meta={"assembly": "exact", "p": p})


# -- quadrature --------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSpec:
    """Rule on ``[-1, 1]``: ``riemann`` (left endpoints), ``trapezoid``, or
    composite ``gauss_legendre`` with ``order`` nodes per panel."""

    rule: str = "riemann"
    n_points: int = 10000
    order: int = 8

    def __post_init__(self):
        if self.rule not in ("riemann", "trapezoid", "gauss_legendre"):
            raise ValueError(f"unknown quadrature rule {self.rule!r}")
        if self.n_points < 2:
            raise ValueError("n_points must be at least 2")

    def nodes_weights(self, a=-1.0, b=1.0):
        n = self.n_points
        if self.rule == "riemann":
            h = (b - a) / n
            return a + h * np.arange(n), np.full(n, h)
        if self.rule == "trapezoid":
            x = np.linspace(a, b, n)
            wts = np.full(n, (b - a) / (n - 1))
            wts[[0, -1]] *= 0.5
            return x, wts
        panels = max(1, n // self.order)
        t, wt = np.polynomial.legendre.leggauss(self.order)
        edges = np.linspace(a, b, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        x = (mid[:, None] + half[:, None] * t).ravel()
        return x, (half[:, None] * wt).ravel()


def _weighted_gram(Phi, wts):
    G = Phi.T @ (Phi * wts[:, None])
    return 0.5 * (G + G.T)


def _boundary_matrix_from(basis):
    return basis.features(np.array([-1.0, 1.0]), 0)


def assemble_quadrature(params, kind, form, f, g, quad=QuadratureSpec()):
    """Poisson Gram system with integrals replaced by a quadrature rule."""
    if form.name == "FEMsp":
        raise ValueError("use assemble_femsp for the spline formulation")
    k = form.gram_order
    check_order(kind, k)
    basis = NetworkBasis(params, kind)
    x, wts = quad.nodes_weights()
    Phi = basis.features(x, k)
    fx = np.asarray(f(x), dtype=float) if f is not None else np.zeros_like(x)
    if form.name == "PINN":
        y = -(Phi * wts[:, None]).T @ fx
    else:
        y = (basis.features(x, 0) * wts[:, None]).T @ fx
    return GramSystem(_weighted_gram(Phi, wts), y, _boundary_matrix_from(basis),
                      _boundary_values(g), form, basis,
                      meta={"assembly": quad.rule, "n_points": quad.n_points})


# -- varying coefficients ------------------------------------------------------


@dataclass(frozen=True)
class VaryingCoeffProblem:
    """``-(D u')' + c0 u = f`` on ``(-1, 1)`` with Dirichlet data ``g``."""

    D: Callable
    f: Callable
    c0: float = 1.0
    dD: Optional[Callable] = None
    u_exact: Optional[Callable] = None
    g: Optional[object] = None

    def diffusion_slope(self, x):
        if self.dD is not None:
            return self.dD(x)
        h = 1e-6
        return (self.D(x + h) - self.D(x - h)) / (2.0 * h)

    def boundary(self):
        if self.g is not None:
            return _boundary_values(self.g)
        if self.u_exact is not None:
            return _boundary_values(self.u_exact)
        return np.zeros(2)

    def apply(self, u, du, d2u, x):
        """``L u`` from pointwise values of ``u, u', u''``."""
        return -self.D(x) * d2u - self.diffusion_slope(x) * du + self.c0 * u


def sine_diffusion_problem(u_exact, du, d2u, c0=1.0):
    """``D(x) = sin(pi x) + 2`` with forcing manufactured from ``u_exact``."""
    D = lambda x: np.sin(np.pi * x) + 2.0
    dD = lambda x: np.pi * np.cos(np.pi * x)

    def f(x):
        return -D(x) * d2u(x) - dD(x) * du(x) + c0 * u_exact(x)

    return VaryingCoeffProblem(D=D, f=f, c0=c0, dD=dD, u_exact=u_exact)


def assemble_varying(params, kind, problem, form, quad=QuadratureSpec("gauss_legendre", 20000, 10)):
    """Gram system of ``-(D u')' + c0 u = f`` by quadrature.

    PINN: ``G_ij = int (L phi_i)(L phi_j)``, ``y_i = int f L phi_i``.
    DRM:  ``G_ij = int D phi_i' phi_j' + c0 phi_i phi_j``, ``y_i = int f phi_i``.
    """
    if form.name not in ("PINN", "DRM"):
        raise ValueError("varying-coefficient assembly supports PINN and DRM")
    check_order(kind, form.gram_order)
    basis = NetworkBasis(params, kind)
    x, wts = quad.nodes_weights()
    Dx = problem.D(x)
    if np.min(Dx) <= 0.0:
        raise NonEllipticCoefficient(f"D attains {np.min(Dx):.3g} <= 0 on the grid")
    P0 = basis.features(x, 0)
    P1 = basis.features(x, 1)
    fx = problem.f(x)
    if form.name == "PINN":
        P2 = basis.features(x, 2)
        L = problem.apply(P0, P1, P2, x[:, None])
        G = _weighted_gram(L, wts)
        y = (L * wts[:, None]).T @ fx
    else:
        G = _weighted_gram(P1, wts * Dx) + problem.c0 * _weighted_gram(P0, wts)
        G = 0.5 * (G + G.T)
        y = (P0 * wts[:, None]).T @ fx
    return GramSystem(G, y, _boundary_matrix_from(basis), problem.boundary(),
                      form, basis, meta={"assembly": quad.rule, "n_points": quad.n_points})


# -- spline FEM ----------------------------------------------------------------


def _spline_stiffness_direct(basis):
    """Stiffness matrix on ``[-1, 1]``: Toeplitz band from the full-line
    identity, rows of splines clipped by the boundary by exact cellwise
    Gauss-Legendre."""
    N, p, dx = basis.N, basis.p, basis.dx
    band = [cf.bspline_gram_derivative(p, dx, s) for s in range(p + 1)]
    G = np.zeros((N, N))
    for s, v in enumerate(band):
        idx = np.arange(N - s)
        G[idx, idx + s] = v
        G[idx + s, idx] = v
    # splines 0..p-1 stick out on the left, N-p..N-1 on the right
    clipped = np.unique(np.r_[np.arange(min(p, N)), np.arange(max(N - p, 0), N)])
    t, wt = np.polynomial.legendre.leggauss(p + 1)
    cells = np.linspace(-1.0, 1.0, N - p + 1)
    for i in clipped:
        lo = max(basis.starts[i], -1.0)
        hi = min(basis.starts[i] + (p + 1) * dx, 1.0)
        c0 = int(round((lo + 1.0) / dx))
        c1 = int(round((hi + 1.0) / dx))
        a, b = cells[c0:c1], cells[c0 + 1:c1 + 1]
        x = (0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * t).ravel()
        wq = (0.5 * (b - a)[:, None] * wt).ravel()
        D = basis.features(x, 1)
        row = (D[:, i] * wq) @ D
        G[i, :] = row
        G[:, i] = row
    return G


def _spline_load(basis, f, order=10):
    t, wt = np.polynomial.legendre.leggauss(order)
    cells = np.linspace(-1.0, 1.0, basis.N - basis.p + 1)
    a, b = cells[:-1], cells[1:]
    x = (0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * t).ravel()
    wq = (0.5 * (b - a)[:, None] * wt).ravel()
    return (basis.features(x, 0) * wq[:, None]).T @ np.asarray(f(x), dtype=float)


def assemble_femsp(N, p, f, g, path="direct"):
    """Degree-``p`` B-spline FEM system for ``-u'' = f``.

    ``path="congruence"`` forms ``W' G_sigma W`` from the exact ``ReLU^p``
    Gram matrix on the knot-aligned biases; ``path="direct"`` assembles the
    spline stiffness matrix itself.  The two agree to rounding.
    """
    basis = SplineBasis(N, p)
    form = femsp(p)
    c = _boundary_values(g)
    if path == "congruence":
        W = cf.bspline_transform(N, p)
        params = LayerParams(np.ones(N), basis.starts)
        Gs = cf.gram_matrix_relu(p, 1, params.w, params.shifts())
        G = W.T @ Gs @ W
        G = 0.5 * (G + G.T)
        if isinstance(f, cf.SinusoidSum):
            ys = cf.rhs_vector_relu(p, 0, params.w, params.shifts(), f)
        else:
            ys = _relu_load_quadrature(params, p, f)
        y = W.T @ ys
        B = _relu_boundary_matrix(params, p) @ W
    elif path == "direct":
        G = _spline_stiffness_direct(basis)
        y = _spline_load(basis, f)
        B = _boundary_matrix_from(basis)
    else:
        raise ValueError(f"unknown FEM assembly path {path!r}")
    return GramSystem(G, y, B, c, form, basis, meta={"assembly": path, "p": p})


def _relu_load_quadrature(params, p, f):
    basis = NetworkBasis(params, ActivationKind.relu_pow(p))
    x, wts = QuadratureSpec("gauss_legendre", 40000, 10).nodes_weights()
    return (basis.features(x, 0) * wts[:, None]).T @ np.asarray(f(x), dtype=float)


# -- manufactured solutions ----------------------------------------------------


@dataclass(frozen=True)
class SineSolution:
    """Exact solution ``u*(x) = sum m sin(a x + phi)`` of ``-u'' = f``."""

    u: cf.SinusoidSum

    @classmethod
    def from_terms(cls, terms):
        return cls(cf.SinusoidSum(tuple(terms)))

    @classmethod
    def two_mode(cls, k_max, low_phase=3 * math.pi / 5, high_phase=-2 * math.pi / 3):
        """``sin(2 pi x + low_phase) + sin(k_max pi x + high_phase)``."""
        return cls.from_terms([(1.0, 2 * math.pi, low_phase),
                               (1.0, k_max * math.pi, high_phase)])

    def __call__(self, x):
        return self.u(x)

    @property
    def forcing(self):
        """``f = -u''``."""
        return self.u.derivative(2).scaled(-1.0)

    @property
    def slope(self):
        return self.u.derivative(1)

    def dirichlet(self):
        return np.array([float(self.u(-1.0)), float(self.u(1.0))])

    def neumann(self):
        d = self.u.derivative(1)
        return np.array([float(d(-1.0)), float(d(1.0))])

    @property
    def frequencies(self):
        return tuple(abs(a) for _, a, _ in self.u.terms)
