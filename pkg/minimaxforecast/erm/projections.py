"""Euclidean projections used by the trace-norm ERM solver.

REFERENCE
---------
Duchi et al., Efficient Projections onto the l1-Ball for Learning in High
Dimensions (sorting-based water filling).
Boyle & Dykstra, A method for finding projections onto the intersection of
convex sets in Hilbert spaces.
"""

import logging
import math

import numpy as np

from minimaxforecast.erm.svd import jacobi_svd
from minimaxforecast.errors import ArgumentError

logger = logging.getLogger(__name__)

DYKSTRA_SWEEPS = 50
DYKSTRA_TOLERANCE = 1e-10


def l1_ball_project(v, radius: float) -> np.ndarray:
    """Project a nonnegative vector onto {u >= 0 : sum(u) <= radius}.

    Vectors already inside the ball are returned unchanged.
    """
    if radius <= 0:
        raise ArgumentError(f"l1 radius must be positive, got {radius}")
    v = np.array(v, dtype=float)
    if np.any(v < 0):
        raise ArgumentError("l1_ball_project expects a nonnegative vector")
    if v.sum() <= radius:
        return v
    v_sorted = np.sort(v)[::-1]
    v_shifted = v_sorted - (v_sorted.cumsum() - radius) / np.arange(1, v.size + 1)
    rho = int(np.nonzero(v_shifted > 0)[0].max()) + 1
    theta = (v_sorted[:rho].sum() - radius) / rho
    return np.maximum(v - theta, 0.0)


def box_project(w, bound: float) -> np.ndarray:
    """Clip every entry to [-bound, bound]."""
    return np.clip(np.asarray(w, dtype=float), -bound, bound)


def _within_tracenorm_ball(w: np.ndarray, radius: float) -> bool:
    # ||W||_tr <= sqrt(rank) ||W||_F decides most cases without an SVD
    frobenius = float(np.linalg.norm(w))
    if math.sqrt(min(w.shape)) * frobenius <= radius:
        return True
    if frobenius > radius:
        return False
    return float(np.sum(jacobi_svd(w)[1])) <= radius


def tracenorm_project(w, radius: float) -> np.ndarray:
    """Project a matrix onto the trace-norm ball of the given radius.

    Shrinks the singular values by water filling and rebuilds the matrix;
    matrices already inside the ball are returned unchanged.
    """
    w = np.array(w, dtype=float)
    u, s, vt = jacobi_svd(w)
    if s.sum() <= radius:
        return w
    shrunk = l1_ball_project(s, radius)
    return (u * shrunk) @ vt


def dykstra_project(
    w,
    radius: float,
    bound: float,
    max_sweeps: int = DYKSTRA_SWEEPS,
    tol: float = DYKSTRA_TOLERANCE,
) -> np.ndarray:
    """Project onto {||W||_tr <= radius} intersected with {|W_ij| <= bound}.

    When one of the two projections already lands in the other set it is the
    answer. Otherwise box and trace-norm projections alternate with Dykstra's
    corrections, stopping once successive iterates move less than ``tol``.
    The box is visited first in each sweep so the result always lies in the
    trace-norm ball.
    """
    x = np.array(w, dtype=float)
    boxed = box_project(x, bound)
    if _within_tracenorm_ball(boxed, radius):
        return boxed
    shrunk = tracenorm_project(x, radius)
    if float(np.max(np.abs(shrunk), initial=0.0)) <= bound:
        return shrunk

    box_correction = np.zeros_like(x)
    ball_correction = np.zeros_like(x)
    for sweep in range(1, max_sweeps + 1):
        y = box_project(x + box_correction, bound)
        box_correction = x + box_correction - y
        x_next = tracenorm_project(y + ball_correction, radius)
        ball_correction = y + ball_correction - x_next
        moved = float(np.linalg.norm(x_next - x))
        x = x_next
        if moved < tol:
            logger.debug("dykstra projection settled after %d sweeps", sweep)
            break
    else:
        logger.debug("dykstra projection stopped at its %d-sweep cap", max_sweeps)
    return x
