"""
Dense symmetric-matrix utilities.

Everything here works on plain ``numpy`` arrays. Matrices are small (a few
dozen rows at most), so all routines are dense and favour accuracy over speed.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericsError

SYMMETRY_TOL = 1e-9
PSD_CLAMP_TOL = 1e-10
NORM_CLAMP_TOL = 1e-12
SPD_MIN_EIG = 1e-12


def _as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise NumericsError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def _check_finite(a, name):
    if not np.all(np.isfinite(a)):
        raise NumericsError(f"{name} contains NaN or Inf")


def _check_square_symmetric(m, name="matrix", tol=SYMMETRY_TOL):
    if m.shape[0] != m.shape[1]:
        raise NumericsError(f"{name} must be square, got shape {m.shape}")
    asym = np.abs(m - m.T).max(initial=0.0)
    if asym > tol * max(1.0, np.abs(m).max(initial=0.0)):
        raise NumericsError(f"{name} is not symmetric (residual {asym:.3e})")


@dataclass(frozen=True)
class SymmetricEigen:
    """Eigendecomposition ``m = V diag(w) V^T`` with ``w`` ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def frobenius_inner(a, b):
    """Frobenius inner product ``sum_ij a_ij b_ij``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise NumericsError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sum(a * b))


def weighted_norm_sq(a, m):
    """
    Squared weighted norm ``<A, M A>`` for symmetric PSD ``M``.

    Parameters
    ----------
    a : ndarray
        Matrix (or vector, treated as a column) with ``m.shape[0]`` rows.
    m : ndarray
        Symmetric positive semidefinite weight.

    Returns
    -------
    float
        The squared norm. Tiny negative round-off is clamped to zero.
    """
    a = _as_matrix(a, "a")
    m = _as_matrix(m, "m")
    _check_square_symmetric(m, "weight matrix")
    if a.shape[0] != m.shape[0]:
        raise NumericsError(f"dimension mismatch: weight {m.shape} vs argument {a.shape}")
    value = float(np.sum(a * (m @ a)))
    if value < 0.0:
        # round-off scale of the product
        slack = max(NORM_CLAMP_TOL, 1e-12 * np.sum(a * a) * np.abs(m).max(initial=0.0))
        if value < -slack:
            raise NumericsError(f"weight matrix is not PSD: <A, MA> = {value:.3e}")
        value = 0.0
    return value


def symmetric_eigen(m):
    m = _as_matrix(m)
    _check_finite(m, "matrix")
    _check_square_symmetric(m)
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    return SymmetricEigen(w, v)


def principal_sqrt(m):
    """
    Principal square root of a symmetric PSD matrix.

    Eigenvalues in ``[-1e-10 * ||m||_F, 0)`` are treated as round-off and
    clamped to zero; anything more negative is rejected.
    """
    m = _as_matrix(m)
    eig = symmetric_eigen(m)
    w = eig.eigenvalues
    floor = -PSD_CLAMP_TOL * max(1.0, np.linalg.norm(m))
    if w.size and w[0] < floor:
        raise NumericsError(f"matrix is not PSD (min eigenvalue {w[0]:.3e})")
    # a numerically zero eigenvalue of +1e-15 would otherwise become a spurious 3e-8
    rank_tol = w.size * np.finfo(float).eps * max(1.0, np.abs(w).max(initial=0.0))
    root = np.sqrt(np.where(w > rank_tol, w, 0.0))
    v = eig.eigenvectors
    s = (v * root) @ v.T
    return 0.5 * (s + s.T)


def pinv_symmetric(m, rtol=1e-10):
    """Moore-Penrose pseudo-inverse of a symmetric PSD matrix."""
    eig = symmetric_eigen(m)
    w, v = eig.eigenvalues, eig.eigenvectors
    cutoff = rtol * max(1.0, np.abs(w).max(initial=0.0))
    inv = np.zeros_like(w)
    keep = w > cutoff
    inv[keep] = 1.0 / w[keep]
    return (v * inv) @ v.T


def solve_spd(m, rhs):
    """Solve ``m x = rhs`` for symmetric positive definite ``m`` (Cholesky)."""
    m = _as_matrix(m)
    rhs_arr = np.asarray(rhs, dtype=float)
    vector_rhs = rhs_arr.ndim == 1
    rhs_mat = _as_matrix(rhs_arr, "rhs")
    _check_finite(m, "matrix")
    _check_finite(rhs_mat, "rhs")
    _check_square_symmetric(m)
    if rhs_mat.shape[0] != m.shape[0]:
        raise NumericsError(f"dimension mismatch: {m.shape} vs rhs {rhs_mat.shape}")
    try:
        factor = scipy.linalg.cho_factor(m, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericsError(f"matrix is not positive definite: {exc}") from exc
    # min eigenvalue <= smallest squared pivot, so a tiny pivot means near-singular
    if np.min(np.diag(factor[0])) ** 2 <= SPD_MIN_EIG:
        raise NumericsError("matrix is singular or nearly so")
    x = scipy.linalg.cho_solve(factor, rhs_mat, check_finite=False)
    return x[:, 0] if vector_rhs else x
