"""Eigenanalysis, decay fits and error metrics.

``eig_sym`` defaults to LAPACK's ``dsyev`` (Householder tridiagonalization
followed by implicit QL/QR).  Two self-contained routes are kept next to
it.  ``householder_ql`` runs the same algorithm in numpy and ``jacobi`` is a
cyclic Jacobi sweep for small oracle checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .closed_form import gram_matrix_relu
from .errors import (EmptyReferenceMode, FloorContamination, NotSymmetric,
                     WindowBelowFloor, ZeroReference)

NOISE_FLOOR = 1e-12
KAPPA_FLOOR = 1e-13


@dataclass
class SpectralReport:
    """Descending eigenvalues with optional orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None
    condition_number: float = float("nan")
    decay_slope: Optional[float] = None
    floor: float = 0.0

    @property
    def last_above_floor(self):
        """1-based index ``K`` of the last eigenvalue above the noise floor."""
        above = np.nonzero(self.eigenvalues > self.floor)[0]
        return int(above[-1]) + 1 if above.size else 0


# -- eigensolvers -----------------------------------------------------------------


def _check_symmetric(M, rtol=1e-12):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotSymmetric("matrix must be square")
    scale = max(np.max(np.abs(M)), 1e-300)
    err = np.max(np.abs(M - M.T))
    if err > rtol * scale:
        raise NotSymmetric(f"asymmetry {err:.3g} exceeds {rtol:g} relative")
    return 0.5 * (M + M.T)


def tridiagonalize(A, want_vectors=True):
    """Householder reduction ``A = Q T Q'``; returns ``(d, e, Q)``.

    ``d`` is the diagonal of ``T`` and ``e[i] = T[i+1, i]``.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    Q = np.eye(n) if want_vectors else None
    for k in range(n - 2):
        x = A[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x.copy()
        v[0] += math.copysign(alpha, x[0])
        v /= np.linalg.norm(v)
        # A <- H A H on the trailing block, H = I - 2 v v'
        S = A[k + 1:, k:]
        S -= 2.0 * np.outer(v, v @ S)
        S = A[k:, k + 1:]
        S -= 2.0 * np.outer(S @ v, v)
        if want_vectors:
            Q[:, k + 1:] -= 2.0 * np.outer(Q[:, k + 1:] @ v, v)
    d = np.diag(A).copy()
    e = np.diag(A, -1).copy()
    return d, e, Q


def tridiagonal_ql(d, e, Z=None, max_sweeps=60):
    """Implicit-shift QL on a symmetric tridiagonal matrix.

    Eigenvalues overwrite ``d``; rotations accumulate into the columns of
    ``Z`` when given.
    """
    d = np.array(d, dtype=float)
    n = d.size
    e = np.append(np.array(e, dtype=float), 0.0)
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= np.finfo(float).eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_sweeps:
                raise np.linalg.LinAlgError("QL iteration did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if Z is not None:
                    zi1 = Z[:, i + 1].copy()
                    Z[:, i + 1] = s * Z[:, i] + c * zi1
                    Z[:, i] = c * Z[:, i] - s * zi1
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return d, Z


def jacobi_eigh(A, tol=1e-15, max_sweeps=100):
    """Cyclic Jacobi rotations; intended as an oracle for small matrices."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(max_sweeps):
        off = math.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * max(np.linalg.norm(A), 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    else:
        raise np.linalg.LinAlgError("Jacobi sweeps did not converge")
    return np.diag(A).copy(), V


def eig_sym(M, want_vectors=False, method="lapack", floor_rel=NOISE_FLOOR):
    """Full symmetric eigendecomposition, eigenvalues in descending order.

    ``method`` is ``"lapack"`` (``dsyev``), ``"householder_ql"`` or
    ``"jacobi"``.  The report's ``condition_number`` is ``lam_1 / lam_N`` and
    ``floor`` is ``floor_rel * lam_1``.
    """
    M = _check_symmetric(M)
    if method == "lapack":
        if want_vectors:
            lam, V = sla.eigh(M, driver="ev")
        else:
            lam, V = sla.eigh(M, eigvals_only=True, driver="ev"), None
    elif method == "householder_ql":
        d, e, Q = tridiagonalize(M, want_vectors)
        lam, V = tridiagonal_ql(d, e, Q)
    elif method == "jacobi":
        lam, V = jacobi_eigh(M)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    V = V[:, order] if (want_vectors and V is not None) else None
    lmin = lam[-1]
    kappa = lam[0] / lmin if lmin > 0 else float("inf")
    return SpectralReport(lam, V, float(kappa), floor=float(floor_rel * max(lam[0], 0.0)))


# -- decay fits -------------------------------------------------------------------


def default_window(eigenvalues, floor_rel=NOISE_FLOOR, lo=10):
    """``(lo, K)`` with ``K`` the last 1-based index above ``floor_rel * lam_1``."""
    lam = np.asarray(eigenvalues, dtype=float)
    above = np.nonzero(lam > floor_rel * lam[0])[0]
    return lo, int(above[-1]) + 1


def fit_decay_slope(eigenvalues, index_window=None, floor_rel=NOISE_FLOOR):
    """Least-squares slope of ``log lam_k`` against ``log k`` on a 1-based window."""
    lam = np.asarray(eigenvalues, dtype=float)
    lo, hi = index_window if index_window is not None else default_window(lam, floor_rel)
    if not 1 <= lo < hi <= lam.size:
        raise ValueError(f"invalid index window ({lo}, {hi}) for {lam.size} eigenvalues")
    seg = lam[lo - 1:hi]
    floor = floor_rel * lam[0]
    if np.any(seg <= floor):
        raise WindowBelowFloor(f"window ({lo}, {hi}) reaches below {floor:.3g}")
    k = np.arange(lo, hi + 1, dtype=float)
    slope, _ = np.polyfit(np.log(k), np.log(seg), 1)
    return float(slope)


@dataclass
class ConditionScaling:
    widths: list
    kappas: list
    slope: Optional[float]


def condition_scaling_check(p, k, widths, floor_rel=KAPPA_FLOOR):
    """Condition numbers of ``G^(k)`` for ``ReLU^p`` on uniform biases, ``w = 1``.

    Raises :class:`FloorContamination` (listing the offending widths) when the
    smallest eigenvalue falls under ``floor_rel * lam_1`` for any width;
    otherwise returns the table and the fitted ``log kappa`` vs ``log N`` slope.
    """
    kappas, bad = [], []
    for N in widths:
        b = -1.0 + 2.0 * np.arange(N) / N
        lam = eig_sym(gram_matrix_relu(p, k, np.ones(N), b)).eigenvalues
        if lam[-1] < floor_rel * lam[0]:
            bad.append(N)
        kappas.append(lam[0] / lam[-1] if lam[-1] > 0 else float("inf"))
    if bad:
        raise FloorContamination(
            f"lam_N < {floor_rel:g} lam_1 at N = {bad}; kappa is not resolvable", bad)
    slope, _ = np.polyfit(np.log(widths), np.log(kappas), 1)
    return ConditionScaling(list(widths), kappas, float(slope))


# -- eigenvector diagnostics --------------------------------------------------------


def test_grid(n=3000):
    return np.linspace(-1.0, 1.0, n)


test_grid.__test__ = False


def eigvec_dominant_frequency(v, basis, grid=None):
    """Angular frequency of the largest nonzero DFT bin of the synthesized function.

    ``basis`` is anything with ``features(x, k)`` (a network or spline basis).
    """
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v)
    if not abs(nv - 1.0) <= 1e-8:
        raise ValueError(f"eigenvector must have unit norm, got {nv:.3g}")
    x = test_grid() if grid is None else np.asarray(grid, dtype=float)
    u = basis.features(x, 0) @ v
    spec = np.abs(np.fft.rfft(u - u.mean()))
    j = 1 + int(np.argmax(spec[1:]))
    length = x[-1] - x[0] + (x[1] - x[0])
    return 2.0 * math.pi * j / length


# -- error metrics ------------------------------------------------------------------


def relative_l2_error(approx, exact, grid_n=3000):
    """Discrete relative L2 error on ``grid_n`` evenly spaced points of ``[-1, 1]``."""
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    x = np.linspace(-1.0, 1.0, grid_n)
    ue = np.asarray(exact(x), dtype=float)
    den = np.linalg.norm(ue)
    if den == 0.0:
        raise ZeroReference("exact solution vanishes on the grid")
    return float(np.linalg.norm(np.asarray(approx(x), dtype=float) - ue) / den)


def fourier_coefficient(values, x, zeta):
    """Trapezoid approximation of ``int g(x) exp(-i zeta x) dx`` over the grid."""
    return np.trapezoid(values * np.exp(-1j * zeta * x), x)


def rsl(approx, exact, zeta, grid_n=3000):
    """Relative spectral loss at angular frequency ``zeta``, in percent."""
    x = np.linspace(-1.0, 1.0, grid_n)
    ref = fourier_coefficient(np.asarray(exact(x), dtype=float), x, zeta)
    if abs(ref) <= 1e-12:
        raise EmptyReferenceMode(f"exact solution has no energy at zeta = {zeta:g}")
    got = fourier_coefficient(np.asarray(approx(x), dtype=float), x, zeta)
    return float(abs(got - ref) / abs(ref) * 100.0)


@dataclass
class ErrorMetrics:
    rel_l2: float
    rsl_by_freq: dict


def error_metrics(approx, exact, freqs, grid_n=3000):
    return ErrorMetrics(relative_l2_error(approx, exact, grid_n),
                        {float(z): rsl(approx, exact, z, grid_n) for z in freqs})


# -- KKT structure ----------------------------------------------------------------------


def lifted_eigenvector_count(K, n, tol=1e-8):
    """Number of eigenvectors of ``K`` whose trailing ``len(K) - n`` entries
    have norm at most ``tol``, along with all those tail norms."""
    lam, V = sla.eigh(K, driver="ev")
    tails = np.linalg.norm(V[n:, :], axis=0)
    return int(np.sum(tails <= tol)), tails


def interlacing_violations(G, K, shift=4, rtol=1e-10):
    """Indices ``i`` (1-based) where ``lam_i(G) <= lam_i(K) <= lam_{i-shift}(G)`` fails."""
    lg = np.sort(np.linalg.eigvalsh(G))[::-1]
    lk = np.sort(np.linalg.eigvalsh(K))[::-1]
    tol = rtol * max(abs(lg[0]), abs(lk[0]))
    bad = []
    for i in range(shift + 1, lg.size + 1):
        if not (lg[i - 1] - tol <= lk[i - 1] <= lg[i - 1 - shift] + tol):
            bad.append(i)
    return bad


def weyl_violations(G, B, lam, rtol=1e-10):
    """Indices where ``lam_i(G) + lam*min(B'B) <= lam_i(R) <= lam_i(G) + lam*max(B'B)`` fails."""
    BtB = B.T @ B
    lb = np.linalg.eigvalsh(BtB)
    lg = np.sort(np.linalg.eigvalsh(G))[::-1]
    lr = np.sort(np.linalg.eigvalsh(G + lam * BtB))[::-1]
    tol = rtol * max(abs(lr[0]), 1.0)
    lo = lg + lam * lb[0] - tol
    hi = lg + lam * lb[-1] + tol
    return [i + 1 for i in range(lg.size) if not lo[i] <= lr[i] <= hi[i]]
