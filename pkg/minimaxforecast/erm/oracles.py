import logging
import math
from typing import Any

import numpy as np

from minimaxforecast.erm.processing import ErmDispatcher, ErmOracle
from minimaxforecast.erm.projections import dykstra_project
from minimaxforecast.errors import ArgumentError, DimensionError
from minimaxforecast.losses import LossSpec
from minimaxforecast.types import (
    ErmResult,
    FiniteExpertClass,
    ThresholdClass,
    ThresholdFit,
    TraceNormClass,
)

logger = logging.getLogger(__name__)

# Rows of outcome table processed per block when enumerating.
CHUNK_ROWS = 1 << 14

TRACENORM_ITERATIONS = 500
TRACENORM_TOLERANCE = 1e-9
# Iterations without an improvement above the tolerance before the solver stops.
TRACENORM_PATIENCE = 25


def _outcomes(y, horizon: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size != horizon:
        raise DimensionError(f"expected a full outcome vector of length {horizon}, got shape {y.shape}")
    return y


# ============================================================================
# Finite classes
# ============================================================================


def finite_erm(expert_class: FiniteExpertClass, y, loss: LossSpec) -> tuple[float, int]:
    """Exact minimum of the cumulative loss over the rows; ties go to the lowest row."""
    y = _outcomes(y, expert_class.horizon)
    totals = np.sum(loss.value(expert_class.matrix, y[np.newaxis, :]), axis=1)
    index = int(np.argmin(totals))
    return float(totals[index]), index


class FiniteErm(ErmOracle[FiniteExpertClass]):
    kind = "finite"

    def __init__(self, expert_class: FiniteExpertClass, loss: LossSpec, scaled: bool = False):
        self.expert_class = expert_class
        self.loss = loss
        self.scaled = scaled
        self.table = expert_class.matrix / expert_class.bound_b if scaled else expert_class.matrix
        self.horizon = expert_class.horizon
        self.calls = 0

    @classmethod
    def from_class(cls, expert_class: FiniteExpertClass, loss: LossSpec, scaled: bool, **options: Any) -> "FiniteErm":
        return cls(expert_class, loss, scaled)

    def _totals(self, y: np.ndarray) -> np.ndarray:
        return np.sum(self.loss.value(self.table, y[np.newaxis, :]), axis=1)

    def infimum(self, y) -> float:
        self.calls += 1
        return float(self._totals(_outcomes(y, self.horizon)).min())

    def infimum_many(self, ys) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        if ys.ndim != 2 or ys.shape[1] != self.horizon:
            raise DimensionError(f"expected an outcome table with {self.horizon} columns, got shape {ys.shape}")
        self.calls += ys.shape[0]
        result = np.empty(ys.shape[0])
        for start in range(0, ys.shape[0], CHUNK_ROWS):
            block = ys[start : start + CHUNK_ROWS]
            values = self.loss.value(self.table[np.newaxis, :, :], block[:, np.newaxis, :])
            result[start : start + CHUNK_ROWS] = np.sum(values, axis=2).min(axis=1)
        return result

    def minimize(self, y) -> ErmResult:
        self.calls += 1
        totals = self._totals(_outcomes(y, self.horizon))
        index = int(np.argmin(totals))
        return ErmResult(value=float(totals[index]), minimizer=tuple(float(v) for v in self.table[index]), index=index)


# ============================================================================
# Threshold classes
# ============================================================================


def _threshold_value(instances: np.ndarray, gap: int) -> float:
    if gap == 0:
        return float(instances[0] - 1.0)
    if gap == instances.size:
        return float(instances[-1] + 1.0)
    return float(0.5 * (instances[gap - 1] + instances[gap]))


def threshold_erm(instances, y, polarity: str = "both") -> ThresholdFit:
    """Zero-one loss minimizer over thresholds placed in the T + 1 gaps.

    A positive threshold predicts -1 left of theta and +1 right of it; a
    negative one the opposite. Among optimal thresholds the leftmost wins,
    and at equal position the positive polarity wins.
    """
    x = np.asarray(instances, dtype=float)
    labels = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ArgumentError("threshold_erm needs a nonempty instance list")
    if np.any(np.diff(x) <= 0):
        raise ArgumentError("instances must be strictly increasing")
    if labels.shape != x.shape:
        raise DimensionError(f"{x.size} instances but {labels.size} labels")
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise ArgumentError("threshold labels must be -1 or +1")
    if polarity not in ("both", "positive"):
        raise ArgumentError(f"unknown polarity {polarity!r}")

    n = x.size
    positive_left = np.concatenate([[0], np.cumsum(labels > 0)])
    gaps = np.arange(n + 1)
    negatives_right = (n - gaps) - (positive_left[-1] - positive_left)
    errors_positive = positive_left + negatives_right
    if polarity == "both":
        candidates = np.stack([errors_positive, n - errors_positive], axis=1).reshape(-1)
    else:
        candidates = errors_positive
    best = int(np.argmin(candidates))
    gap, sign = (best // 2, 1 if best % 2 == 0 else -1) if polarity == "both" else (best, 1)
    return ThresholdFit(errors=int(candidates[best]), threshold=_threshold_value(x, gap), polarity=sign)


def induced_threshold_class(instances, polarity: str = "both") -> FiniteExpertClass:
    """Distinct behaviour vectors of the thresholds on the instances, in sorted-instance order."""
    n = len(instances)
    rows = [np.where(np.arange(n) < gap, -1.0, 1.0) for gap in range(n + 1)]
    if polarity == "both":
        rows += [-row for row in rows]
    return FiniteExpertClass.new(np.array(rows)).deduplicated()


class ThresholdErm(ErmOracle[ThresholdClass]):
    """Absolute loss on +-1 labels, i.e. twice the zero-one loss, over the threshold class."""

    kind = "threshold"

    def __init__(self, threshold_class: ThresholdClass, loss: LossSpec, scaled: bool = False):
        if loss.kind != "absolute":
            raise ArgumentError("the threshold oracle only handles the absolute loss")
        self.threshold_class = threshold_class
        self.loss = loss
        self.scaled = scaled
        self.instances = np.array(threshold_class.instances, dtype=float)
        self.horizon = threshold_class.horizon
        order = threshold_class.order if threshold_class.order is not None else range(self.horizon)
        self.order = np.array(order, dtype=int)
        self.calls = 0

    @classmethod
    def from_class(cls, expert_class: ThresholdClass, loss: LossSpec, scaled: bool, **options: Any) -> "ThresholdErm":
        return cls(expert_class, loss, scaled)

    def _fit(self, y) -> ThresholdFit:
        y = _outcomes(y, self.horizon)
        labels = np.empty(self.horizon)
        labels[self.order] = y
        return threshold_erm(self.instances, labels, self.threshold_class.polarity)

    def infimum(self, y) -> float:
        self.calls += 1
        return 2.0 * self._fit(y).errors

    def infimum_many(self, ys) -> np.ndarray:
        return np.array([self.infimum(y) for y in np.asarray(ys, dtype=float)])

    def minimize(self, y) -> ErmResult:
        self.calls += 1
        fit = self._fit(y)
        revealed = self.instances[self.order]
        predictions = fit.polarity * np.where(revealed > fit.threshold, 1.0, -1.0)
        return ErmResult(value=2.0 * fit.errors, minimizer=tuple(float(v) for v in predictions))


# ============================================================================
# Trace-norm classes
# ============================================================================


def _schedule_arrays(tracenorm_class: TraceNormClass, length: int) -> tuple[np.ndarray, np.ndarray]:
    schedule = np.array(tracenorm_class.entry_schedule[:length], dtype=int).reshape(-1, 2)
    return schedule[:, 0], schedule[:, 1]


def tracenorm_erm(
    tracenorm_class: TraceNormClass,
    z,
    loss: LossSpec,
    scale: float = 1.0,
    step_constant: float | None = None,
    max_iterations: int = TRACENORM_ITERATIONS,
    tolerance: float = TRACENORM_TOLERANCE,
    initial=None,
    patience: int = TRACENORM_PATIENCE,
) -> ErmResult:
    """Approximate ERM over {||W||_tr <= r} intersected with {|W_ij| <= b}.

    Minimizes sum_k loss(W[i_k, j_k] / scale, z_k) over the first len(z)
    scheduled entries by projected subgradient descent with steps
    c / sqrt(k), projecting with Dykstra's alternating scheme. Descent starts
    from ``initial`` (projected into the class) or from zero.

    Returns the best iterate. The solver stops, ``converged``, once
    successive iterates move less than ``tolerance`` or ``patience``
    iterations pass without the best value improving by more than
    ``tolerance``; ``converged`` is False when the iteration cap came first.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size > tracenorm_class.horizon:
        raise DimensionError(f"{z.size} outcomes for {tracenorm_class.horizon} scheduled entries")
    shape = (tracenorm_class.n_rows, tracenorm_class.n_cols)
    if z.size == 0:
        return ErmResult(value=0.0, minimizer=(), matrix=tuple(map(tuple, np.zeros(shape))))

    radius, bound = tracenorm_class.radius_r, tracenorm_class.entry_bound_b
    if initial is None:
        w = np.zeros(shape)
    else:
        w = np.asarray(initial, dtype=float)
        if w.shape != shape:
            raise DimensionError(f"a {w.shape} starting point for a {shape} class")
        w = dykstra_project(w, radius, bound)
    rows, cols = _schedule_arrays(tracenorm_class, z.size)
    step_constant = bound if step_constant is None else step_constant

    def objective(matrix: np.ndarray) -> float:
        return float(np.sum(loss.value(matrix[rows, cols] / scale, z)))

    best_w, best_value = w, objective(w)
    converged = False
    stalled = 0
    iteration = 0
    for iteration in range(1, max_iterations + 1):
        gradient = np.zeros(shape)
        np.add.at(gradient, (rows, cols), np.asarray(loss.subgradient(w[rows, cols] / scale, z), dtype=float) / scale)
        step = step_constant / math.sqrt(iteration)
        w_next = dykstra_project(w - step * gradient, radius, bound)
        value = objective(w_next)
        stalled = 0 if value < best_value - tolerance else stalled + 1
        if value < best_value:
            best_w, best_value = w_next, value
        moved = float(np.linalg.norm(w_next - w))
        w = w_next
        if moved < tolerance or stalled >= patience:
            converged = True
            break
    if not converged:
        logger.debug("trace-norm ERM hit its %d-iteration cap; best value %.6g", max_iterations, best_value)
    return ErmResult(
        value=best_value,
        minimizer=tuple(float(v) for v in best_w[rows, cols] / scale),
        matrix=tuple(tuple(float(v) for v in row) for row in best_w),
        converged=converged,
        iterations=iteration,
    )


class TraceNormErm(ErmOracle[TraceNormClass]):
    """Trace-norm ERM; each call starts from the previous call's minimizer when ``warm_start`` is set."""

    kind = "tracenorm"

    def __init__(
        self,
        tracenorm_class: TraceNormClass,
        loss: LossSpec,
        scaled: bool = False,
        step_constant: float | None = None,
        max_iterations: int = TRACENORM_ITERATIONS,
        tolerance: float = TRACENORM_TOLERANCE,
        warm_start: bool = True,
    ):
        self.tracenorm_class = tracenorm_class
        self.loss = loss
        self.scaled = scaled
        self.scale = tracenorm_class.entry_bound_b if scaled else 1.0
        self.horizon = tracenorm_class.horizon
        self.step_constant = step_constant
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.warm_start = warm_start
        self.previous: np.ndarray | None = None
        self.calls = 0
        self.unconverged = 0

    @classmethod
    def from_class(cls, expert_class: TraceNormClass, loss: LossSpec, scaled: bool, **options: Any) -> "TraceNormErm":
        return cls(expert_class, loss, scaled, **options)

    def minimize(self, y) -> ErmResult:
        self.calls += 1
        result = tracenorm_erm(
            self.tracenorm_class,
            _outcomes(y, self.horizon),
            self.loss,
            scale=self.scale,
            step_constant=self.step_constant,
            max_iterations=self.max_iterations,
            tolerance=self.tolerance,
            initial=self.previous if self.warm_start else None,
        )
        if not result.converged:
            self.unconverged += 1
        if self.warm_start and result.matrix is not None:
            self.previous = np.array(result.matrix)
        return result

    def infimum(self, y) -> float:
        return self.minimize(y).value

    def infimum_many(self, ys) -> np.ndarray:
        return np.array([self.infimum(y) for y in np.asarray(ys, dtype=float)])


# ============================================================================
# Registry
# ============================================================================


def register_erm_oracles(dispatcher: ErmDispatcher) -> None:
    """Register the oracle of every comparison-class type."""
    oracles = [
        (FiniteExpertClass, FiniteErm),
        (ThresholdClass, ThresholdErm),
        (TraceNormClass, TraceNormErm),
    ]

    for class_type, oracle_cls in oracles:
        dispatcher.register_oracle(class_type, oracle_cls)


def create_erm_dispatcher() -> ErmDispatcher:
    """Create and return a fully configured ERM dispatcher."""
    dispatcher = ErmDispatcher()
    register_erm_oracles(dispatcher)
    return dispatcher


def create_oracle(expert_class: object, loss: LossSpec, scaled: bool = False, **options: Any) -> ErmOracle:
    """Shortcut: build the oracle of a class through a fresh dispatcher."""
    return create_erm_dispatcher().create(expert_class, loss, scaled, **options)
