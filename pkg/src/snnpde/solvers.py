"""Solution procedures for the constrained quadratic program of a GramSystem.

All solvers return a :class:`SolveOutcome`.  The saddle-point (KKT) route,
the truncated-eigendecomposition route and projected gradient descent
enforce ``Ba = c`` exactly (up to rounding); the regularized route adds
``lambda * |Ba - c|^2`` to the objective instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .errors import (DivergenceDetected, IndefiniteSystem, SingularSystem)


@dataclass
class SolveOutcome:
    """Coefficients and residual diagnostics of one solve."""

    a: np.ndarray
    interior_residual: float
    boundary_residual: float
    iterations_used: int = 0
    spectrum_used: Optional[dict] = None
    multipliers: Optional[np.ndarray] = None
    snapshots: list = field(default_factory=list)


def _outcome(sys, a, **kw):
    a = np.asarray(a, dtype=float)
    return SolveOutcome(a, float(np.linalg.norm(sys.G @ a - sys.y)),
                        float(np.linalg.norm(sys.B @ a - sys.c)), **kw)


def _check_boundary_rank(B, tol=1e-12):
    s = np.linalg.svd(B, compute_uv=False)
    if s.size < B.shape[0] or s[0] == 0.0 or s[-1] <= tol * s[0]:
        raise SingularSystem(f"boundary matrix is rank deficient (singular values {s})")


# -- constrained direct solve --------------------------------------------------


def solve_kkt_direct(sys):
    """LU with partial pivoting on ``[[G, B'], [B, 0]] [a; mu] = [y; c]``."""
    _check_boundary_rank(sys.B)
    K, rhs = sys.kkt()
    with np.errstate(all="ignore"):
        try:
            lu, piv = sla.lu_factor(K, check_finite=True)
        except (ValueError, sla.LinAlgError) as exc:
            raise SingularSystem(str(exc)) from exc
    d = np.abs(np.diag(lu))
    if d.min() == 0.0:
        raise SingularSystem("exact zero pivot in the KKT factorization")
    z = sla.lu_solve((lu, piv), rhs)
    if not np.all(np.isfinite(z)):
        raise SingularSystem("KKT solve produced non-finite values")
    n = sys.N
    return _outcome(sys, z[:n], multipliers=z[n:])


# -- truncated eigendecomposition -------------------------------------------------


@dataclass(frozen=True)
class TruncatedSVDSpec:
    """Relative cut-off ``eps``: modes with ``sigma < eps * sigma_max`` are dropped."""

    eps: float

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")


def kkt_eigh(sys):
    """Eigenpairs of the symmetric KKT matrix, plus its right-hand side."""
    K, rhs = sys.kkt()
    lam, V = sla.eigh(K, driver="ev")
    return lam, V, rhs


def solve_truncated_svd(sys, spec, eig=None):
    """Pseudo-inverse solve of the KKT system with small singular values cut.

    The SVD of the symmetric ``K`` comes from its eigendecomposition:
    singular values are ``|lambda_i|`` and the signs fold into ``U``.
    A precomputed ``eig = (lam, V, rhs)`` from :func:`kkt_eigh` may be
    passed to sweep ``eps`` cheaply.
    """
    lam, V, rhs = eig if eig is not None else kkt_eigh(sys)
    sig = np.abs(lam)
    keep = sig >= spec.eps * sig.max()
    coef = (V[:, keep].T @ rhs) / lam[keep]
    z = V[:, keep] @ coef
    n = sys.N
    report = {"eps": spec.eps, "n_truncated": int((~keep).sum()),
              "n_kept": int(keep.sum()), "sigma_max": float(sig.max())}
    return _outcome(sys, z[:n], multipliers=z[n:], spectrum_used=report)


# -- boundary regularization -------------------------------------------------------


@dataclass(frozen=True)
class RegularizedSolveSpec:
    """Boundary weight ``lam >= 0``; ``math.inf`` means solve with constraints.

    ``method="cholesky"`` (default) raises :class:`IndefiniteSystem` when
    rounding makes ``R`` numerically indefinite; ``method="lu"`` uses a
    pivoted LU factorization of the same matrix instead, which is what the
    high-power ReLU Gram matrices need once their spectra fall under machine
    precision.
    """

    lam: float
    method: str = "cholesky"

    def __post_init__(self):
        if not self.lam >= 0.0:
            raise ValueError("lambda must be nonnegative")
        if self.method not in ("cholesky", "lu"):
            raise ValueError("method must be 'cholesky' or 'lu'")


def regularized_matrix(G, B, lam):
    R = G + lam * (B.T @ B)
    return 0.5 * (R + R.T)


def solve_regularized(sys, spec):
    """Cholesky solve of ``(G + lam B'B) a = y + lam B'c``."""
    if math.isinf(spec.lam):
        return solve_kkt_direct(sys)
    R = regularized_matrix(sys.G, sys.B, spec.lam)
    rhs = sys.y + spec.lam * (sys.B.T @ sys.c)
    if spec.method == "lu":
        a = _lu_solve(R, rhs)
    else:
        a = _spd_solve(R, rhs, f"G + {spec.lam:g} B'B")
    return _outcome(sys, a, spectrum_used={"lam": spec.lam})


def _lu_solve(R, rhs):
    with np.errstate(all="ignore"):
        a = sla.lu_solve(sla.lu_factor(R), rhs)
    if not np.all(np.isfinite(a)):
        raise SingularSystem("LU solve produced non-finite values")
    return a


def _spd_solve(R, rhs, label="matrix"):
    """Cholesky solve after symmetric diagonal equilibration.

    Scaling by ``d = diag(R)^(-1/2)`` leaves the solution unchanged and keeps
    basis functions of very different magnitude from tripping the
    factorization on numerically semidefinite Gram matrices.
    """
    diag = np.diag(R)
    if np.any(diag <= 0.0):
        raise IndefiniteSystem(f"{label} has a nonpositive diagonal entry")
    d = 1.0 / np.sqrt(diag)
    try:
        cho = sla.cho_factor(R * np.outer(d, d), lower=True)
    except sla.LinAlgError as exc:
        raise IndefiniteSystem(f"{label} is not positive definite") from exc
    return d * sla.cho_solve(cho, d * rhs)


# -- projected gradient descent -----------------------------------------------------


@dataclass(frozen=True)
class PGDConfig:
    """Step size (``None`` selects ``1.99 / lambda_max(PGP)``), budget and seed."""

    gamma: Optional[float] = None
    T_max: int = 10000
    init_seed: int = 0
    snapshot_every: int = 100
    gamma_factor: float = 1.99

    def __post_init__(self):
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.T_max < 0 or self.snapshot_every < 1:
            raise ValueError("T_max must be >= 0 and snapshot_every >= 1")


class ConstraintProjector:
    """Orthogonal projection onto ``{a : Ba = c}`` for a two-row ``B``."""

    def __init__(self, B, c, det_guard=1e-14):
        B = np.asarray(B, dtype=float)
        if B.shape[0] != 2:
            raise ValueError("projector expects exactly two constraints")
        M = B @ B.T
        det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        if abs(det) <= det_guard * max(M[0, 0] * M[1, 1], 1e-300):
            raise SingularSystem("B B' is singular; constraints are degenerate")
        self.B = B
        self.c = np.asarray(c, dtype=float)
        self.Minv = np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]]) / det

    def __call__(self, z):
        return z - self.B.T @ (self.Minv @ (self.B @ z - self.c))

    def tangent(self, v):
        """``P v`` with ``P = I - B'(BB')^{-1}B``."""
        return v - self.B.T @ (self.Minv @ (self.B @ v))


def power_iteration(apply, n, tol=1e-6, max_iter=5000, seed=0):
    """Largest eigenvalue of a symmetric PSD operator given as ``apply(v)``."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = apply(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, it
        new = float(v @ w)
        v = w / nw
        if abs(new - lam) <= tol * abs(new):
            return new, it
        lam = new
    return lam, max_iter


def pgd_step_size(sys, factor=1.99, proj=None):
    proj = proj or ConstraintProjector(sys.B, sys.c)
    lmax, _ = power_iteration(lambda v: proj.tangent(sys.G @ proj.tangent(v)), sys.N)
    return factor / lmax, lmax


def solve_pgd(sys, cfg=PGDConfig(), a0=None):
    """Projected gradient descent on ``1/2 a'Ga - a'y`` subject to ``Ba = c``.

    The initial iterate is ``N(0, sqrt(2/N))`` entrywise (standard deviation)
    unless ``a0`` is given.  It is not projected, so the first step performs
    the projection.  ``snapshots`` holds ``(iteration, a)`` every
    ``cfg.snapshot_every`` steps, starting with iteration 0.
    """
    proj = ConstraintProjector(sys.B, sys.c)
    if cfg.gamma is None:
        gamma, lmax = pgd_step_size(sys, cfg.gamma_factor, proj)
    else:
        gamma, lmax = cfg.gamma, None
    n = sys.N
    if a0 is None:
        a = np.random.default_rng(cfg.init_seed).normal(0.0, math.sqrt(2.0 / n), n)
    else:
        a = np.array(a0, dtype=float)
    G, y = sys.G, sys.y
    snaps = [(0, a.copy())]
    for t in range(1, cfg.T_max + 1):
        a = proj(a - gamma * (G @ a - y))
        nrm = np.linalg.norm(a)
        if not nrm <= 1e12:
            raise DivergenceDetected(f"|a| = {nrm:.3g} at iteration {t}", t)
        if t % cfg.snapshot_every == 0:
            snaps.append((t, a.copy()))
    return _outcome(sys, a, iterations_used=cfg.T_max, snapshots=snaps,
                    spectrum_used={"gamma": gamma, "lambda_max_PGP": lmax})


# -- Neumann data -------------------------------------------------------------------


def neumann_load(sys, dc_left, dc_right):
    """``y + c'_R phi(1) - c'_L phi(-1)``, the natural-boundary linear functional."""
    return sys.y + dc_right * sys.B[1] - dc_left * sys.B[0]


def solve_neumann(sys, form=None, spec=None, dc_left=0.0, dc_right=0.0,
                  slope_matrix=None, grid_n=3000):
    """Solve with Neumann data ``u'(-1) = c'_L``, ``u'(1) = c'_R``.

    DRM (``sys`` built with the first-derivative Gram matrix and ``y^(0)``)
    needs no penalty: the boundary data enter the load vector.  The solution
    is only determined up to a constant, so ``G`` may be singular along the
    coefficient vector that synthesizes the constant function; that direction
    is removed and the result is mean-normalized over a ``grid_n`` test grid.

    PINN penalizes ``lam * |B' a - c'|^2`` where ``B'`` (``slope_matrix``)
    holds the basis derivatives at the endpoints; the same constant gauge is
    fixed there.
    """
    form = form or sys.formulation
    if form.name == "PINN":
        if spec is None or slope_matrix is None:
            raise ValueError("PINN-Neumann needs a penalty and the slope matrix")
        Bp = np.asarray(slope_matrix, dtype=float)
        cp = np.array([dc_left, dc_right], dtype=float)
        R = regularized_matrix(sys.G, Bp, spec.lam)
        rhs = sys.y + spec.lam * (Bp.T @ cp)
        a, info = _solve_modulo_constant(R, rhs, sys.basis)
        info["lam"] = spec.lam
        return SolveOutcome(a, float(np.linalg.norm(R @ a - rhs)), float("nan"),
                            spectrum_used=info)
    rhs = neumann_load(sys, dc_left, dc_right)
    a, info = _solve_modulo_constant(sys.G, rhs, sys.basis)
    if sys.basis is not None:
        x = np.linspace(-1.0, 1.0, grid_n)
        info["mean_shift"] = float(np.mean(sys.evaluate(a, x)))
    out = SolveOutcome(a, float(np.linalg.norm(sys.G @ a - rhs)), float("nan"),
                       spectrum_used=info)
    return out


def constant_coefficients(basis, n_grid=1025, rtol=1e-8):
    """Unit coefficient vector synthesizing a constant, or ``None`` if the
    basis cannot reproduce constants (least-squares test on a grid)."""
    xg = np.linspace(-1.0, 1.0, n_grid)
    Phi = basis.features(xg, 0)
    v, *_ = np.linalg.lstsq(Phi, np.ones_like(xg), rcond=None)
    if np.linalg.norm(Phi @ v - 1.0) <= rtol * math.sqrt(n_grid):
        return v / np.linalg.norm(v)
    return None


def _solve_modulo_constant(G, rhs, basis):
    """Solve ``G a = rhs`` where ``G`` may vanish on the constant function.

    If the basis reproduces constants (least-squares fit of 1 on a grid with
    relative residual below 1e-8), the synthesizing vector ``v0`` spans the
    mathematical kernel of ``G``; the gauge ``v0' a = 0`` is then imposed
    through a bordered system.  Otherwise ``G`` is solved as is.
    """
    n = G.shape[0]
    v0 = constant_coefficients(basis) if basis is not None else None
    if v0 is None:
        M, b, info = G, rhs, {"kernel": "none"}
    else:
        M = np.zeros((n + 1, n + 1))
        M[:n, :n] = G
        M[:n, n] = v0
        M[n, :n] = v0
        b = np.append(rhs, 0.0)
        info = {"kernel": "constant"}
    with np.errstate(all="ignore"):
        lu, piv = sla.lu_factor(M)
        if np.min(np.abs(np.diag(lu))) == 0.0:
            raise SingularSystem("Neumann Gram matrix is singular on the mean-zero complement")
        z = sla.lu_solve((lu, piv), b)
    if not np.all(np.isfinite(z)):
        raise SingularSystem("Neumann solve produced non-finite values")
    return z[:n], info


def mean_normalized(basis_eval, a, x):
    """Values of the synthesized function on ``x`` with the grid mean removed."""
    u = basis_eval(a, x)
    return u - np.mean(u)
