"""Grid-search ERM for tiny trace-norm classes.

Used to certify :func:`tracenorm_erm` on matrices with at most four entries
and at most two rows or columns, where the trace norm has a closed form:
the Frobenius norm for a single row or column, and
sqrt(||W||_F^2 + 2 |det W|) for a 2x2 matrix.
"""

import itertools

import numpy as np

from minimaxforecast.errors import CapacityError
from minimaxforecast.losses import LossSpec
from minimaxforecast.types import TraceNormClass

COARSE_POINTS = 21
REFINE_POINTS = 9
REFINEMENTS = 8


def _trace_norms(points: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    frobenius_sq = np.sum(points**2, axis=1)
    if min(shape) == 1:
        return np.sqrt(frobenius_sq)
    det = points[:, 0] * points[:, 3] - points[:, 1] * points[:, 2]
    return np.sqrt(frobenius_sq + 2.0 * np.abs(det))


def _grid(centre: np.ndarray, half_width: float, points: int, bound: float) -> np.ndarray:
    axes = [np.clip(np.linspace(c - half_width, c + half_width, points), -bound, bound) for c in centre]
    return np.array(list(itertools.product(*axes)))


def bruteforce_tracenorm_erm(
    tracenorm_class: TraceNormClass,
    z,
    loss: LossSpec,
    scale: float = 1.0,
    refinements: int = REFINEMENTS,
) -> tuple[float, np.ndarray]:
    """Coarse grid over the box followed by shrinking local grids around the incumbent."""
    shape = (tracenorm_class.n_rows, tracenorm_class.n_cols)
    size = shape[0] * shape[1]
    if size > 4 or min(shape) > 2:
        raise CapacityError("bruteforce_tracenorm_erm", size, 4)
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        return 0.0, np.zeros(shape)
    flat = np.array([i * shape[1] + j for i, j in tracenorm_class.entry_schedule[: z.size]], dtype=int)
    bound = tracenorm_class.entry_bound_b
    radius = tracenorm_class.radius_r

    def evaluate(points: np.ndarray) -> tuple[float, np.ndarray]:
        feasible = points[_trace_norms(points, shape) <= radius + 1e-12]
        values = np.sum(loss.value(feasible[:, flat] / scale, z[np.newaxis, :]), axis=1)
        best = int(np.argmin(values))
        return float(values[best]), feasible[best]

    best_value, best_point = evaluate(_grid(np.zeros(size), bound, COARSE_POINTS, bound))
    half_width = 2.0 * bound / (COARSE_POINTS - 1)
    for _ in range(refinements):
        value, point = evaluate(np.vstack([_grid(best_point, half_width, REFINE_POINTS, bound), best_point]))
        if value <= best_value:
            best_value, best_point = value, point
        half_width /= 3.0
    return best_value, best_point.reshape(shape)
