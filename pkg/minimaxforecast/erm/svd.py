"""One-sided Jacobi singular value decomposition for small dense matrices.

Columns are rotated pairwise until they are mutually orthogonal; the column
norms are then the singular values. Sized for the n <= 32 matrices of the
collaborative-filtering game.
"""

import logging
import math

import numpy as np

from minimaxforecast.errors import NumericError

logger = logging.getLogger(__name__)

JACOBI_TOLERANCE = 1e-12
MAX_SWEEPS = 60


def jacobi_svd(a, tol: float = JACOBI_TOLERANCE, max_sweeps: int = MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Singular value decomposition ``a = u @ diag(s) @ vt``.

    Parameters
    ----------
    a : 2d array
        A real matrix.
    tol : float
        Columns i, j count as orthogonal once |<a_i, a_j>| <= tol * |a_i| |a_j|.
        Pairs with a column below tol * ||a||_F, or an inner product below
        tol * ||a||_F^2, are skipped outright.
    max_sweeps : int
        Sweep cap; exceeding it raises :class:`NumericError`.

    Returns
    -------
    u, s, vt : arrays
        Thin factors with singular values sorted in decreasing order.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("jacobi_svd expects a 2-d matrix")
    transpose = a.shape[0] < a.shape[1]
    if transpose:
        a = a.T

    work = a.copy()
    n = work.shape[1]
    v = np.eye(n)
    # rotations preserve the Frobenius norm
    frobenius_sq = float(np.sum(work * work))
    negligible_norm = (tol * tol) * frobenius_sq
    negligible_product = tol * frobenius_sq

    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                alpha = float(work[:, i] @ work[:, i])
                beta = float(work[:, j] @ work[:, j])
                gamma = float(work[:, i] @ work[:, j])
                if alpha <= negligible_norm or beta <= negligible_norm or abs(gamma) <= negligible_product:
                    continue
                if abs(gamma) <= tol * math.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                col_i = work[:, i].copy()
                work[:, i] = c * col_i - s * work[:, j]
                work[:, j] = s * col_i + c * work[:, j]
                vec_i = v[:, i].copy()
                v[:, i] = c * vec_i - s * v[:, j]
                v[:, j] = s * vec_i + c * v[:, j]
        if not rotated:
            logger.debug("jacobi svd of %s converged after %d sweeps", a.shape, sweep)
            break
    else:
        raise NumericError(f"Jacobi SVD of a {a.shape[0]}x{a.shape[1]} matrix did not converge", max_sweeps)

    singular = np.linalg.norm(work, axis=0)
    order = np.argsort(-singular, kind="stable")
    singular = singular[order]
    work = work[:, order]
    v = v[:, order]
    u = np.zeros_like(work)
    nonzero = singular > 0
    u[:, nonzero] = work[:, nonzero] / singular[nonzero]

    if transpose:
        return v, singular, u.T
    return u, singular, v.T


def singular_values(a) -> np.ndarray:
    return jacobi_svd(a)[1]


def trace_norm(a) -> float:
    """Sum of singular values."""
    return float(np.sum(singular_values(a)))


def spectral_norm(a) -> float:
    """Largest singular value."""
    values = singular_values(a)
    return float(values[0]) if values.size else 0.0
