"""Loss functions and the checks the forecasters rely on.

Losses are vectorised: ``value`` and ``subgradient`` accept scalars or numpy
arrays and broadcast. New kinds are added through :func:`register_loss`.
"""

from __future__ import annotations

import logging
from typing import Any, Callable, Literal, Protocol

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from minimaxforecast.errors import ArgumentError, DimensionError, InvariantViolation

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 101

LossFunction = Callable[[Any, Any], Any]


class LossSpec(BaseModel):
    """A convex loss with its subgradient and Lipschitz constant on [-b, b]."""

    model_config = ConfigDict(frozen=True)

    value: LossFunction
    subgradient: LossFunction
    lipschitz_rho: float = Field(gt=0)
    kind: Literal["absolute", "squared", "custom"]
    bound_b: float = Field(default=1.0, gt=0)
    # None means "unknown": run check_lemma4_condition on a grid.
    lemma4_admissible: bool | None = None


def absolute_subgradient(p, y):
    """sign(p - y), with 0 at the kink p == y."""
    return np.sign(np.asarray(p, dtype=float) - np.asarray(y, dtype=float))


def _absolute_value(p, y):
    return np.abs(np.asarray(p, dtype=float) - np.asarray(y, dtype=float))


def absolute_loss(bound_b: float = 1.0) -> LossSpec:
    """|p - y|, 1-Lipschitz for any bound."""
    return LossSpec(
        value=_absolute_value,
        subgradient=absolute_subgradient,
        lipschitz_rho=1.0,
        kind="absolute",
        bound_b=bound_b,
        lemma4_admissible=True,
    )


def squared_loss(bound_b: float = 1.0) -> LossSpec:
    """(p - y)^2 with both arguments clipped to [-b, b]; rho = 4b is stored."""

    def value(p, y):
        return (np.clip(p, -bound_b, bound_b) - np.clip(y, -bound_b, bound_b)) ** 2

    def subgradient(p, y):
        return 2.0 * (np.clip(p, -bound_b, bound_b) - np.clip(y, -bound_b, bound_b))

    return LossSpec(
        value=value,
        subgradient=subgradient,
        lipschitz_rho=4.0 * bound_b,
        kind="squared",
        bound_b=bound_b,
        lemma4_admissible=True,
    )


def custom_loss(value: LossFunction, subgradient: LossFunction, rho: float, bound_b: float = 1.0) -> LossSpec:
    return LossSpec(value=value, subgradient=subgradient, lipschitz_rho=rho, kind="custom", bound_b=bound_b)


class LossFactory(Protocol):
    def __call__(self, bound_b: float = 1.0) -> LossSpec: ...


_LOSS_FACTORIES: dict[str, LossFactory] = {}


def register_loss(kind: str, factory: LossFactory) -> None:
    """Register a loss constructor under a kind tag."""
    _LOSS_FACTORIES[kind] = factory


def create_loss(kind: str, bound_b: float = 1.0) -> LossSpec:
    """Build a registered loss for predictions and outcomes in [-b, b]."""
    try:
        factory = _LOSS_FACTORIES[kind]
    except KeyError:
        raise ArgumentError(f"unknown loss kind {kind!r}; known kinds: {sorted(_LOSS_FACTORIES)}") from None
    return factory(bound_b)


register_loss("absolute", absolute_loss)
register_loss("squared", squared_loss)


def uniform_grid(bound_b: float = 1.0, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    return np.linspace(-bound_b, bound_b, points)


def cumulative_loss(f, y, loss: LossSpec) -> float:
    """L(f, y) = sum_t loss(f_t, y_t)."""
    f = np.asarray(f, dtype=float)
    y = np.asarray(y, dtype=float)
    if f.shape != y.shape or f.ndim != 1:
        raise DimensionError(f"prediction vector of shape {f.shape} does not match outcome vector of shape {y.shape}")
    return float(np.sum(loss.value(f, y)))


def check_lipschitz(loss: LossSpec, points: int = DEFAULT_GRID_POINTS, tol: float = 1e-9) -> bool:
    """|subgradient(p, y)| <= rho on a grid over [-b, b]^2."""
    grid = uniform_grid(loss.bound_b, points)
    grads = np.asarray(loss.subgradient(grid[:, np.newaxis], grid[np.newaxis, :]), dtype=float)
    return bool(np.all(np.abs(grads) <= loss.lipschitz_rho + tol))


def check_convexity(loss: LossSpec, points: int = DEFAULT_GRID_POINTS, tol: float = 1e-9) -> bool:
    """Midpoint convexity in p along every grid line y = const."""
    grid = uniform_grid(loss.bound_b, points)
    values = np.asarray(loss.value(grid[:, np.newaxis], grid[np.newaxis, :]), dtype=float)
    for offset in range(1, (points - 1) // 2 + 1):
        middle = values[offset : points - offset]
        chord = 0.5 * (values[: points - 2 * offset] + values[2 * offset :])
        if np.any(middle > chord + tol):
            return False
    return True


def validate_loss(loss: LossSpec, points: int = DEFAULT_GRID_POINTS, tol: float = 1e-9) -> LossSpec:
    """Return the loss unchanged, or raise if its grid checks fail."""
    if not check_lipschitz(loss, points, tol):
        raise InvariantViolation(f"{loss.kind} loss has a subgradient larger than rho={loss.lipschitz_rho}")
    if not check_convexity(loss, points, tol):
        raise InvariantViolation(f"{loss.kind} loss is not convex in its first argument")
    return loss


def lemma4_value(loss: LossSpec, prediction_grid, outcome_grid) -> float:
    """inf_{p'} sup_y inf_p (loss(p, y) - loss(p', y)) over the grids."""
    predictions = np.asarray(prediction_grid, dtype=float)
    outcomes = np.asarray(outcome_grid, dtype=float)
    if predictions.size == 0 or outcomes.size == 0:
        raise ArgumentError("prediction and outcome grids must be nonempty")
    values = np.asarray(loss.value(predictions[:, np.newaxis], outcomes[np.newaxis, :]), dtype=float)
    best_per_outcome = values.min(axis=0)
    # rows: p', columns: y
    excess = best_per_outcome[np.newaxis, :] - values
    return float(excess.max(axis=1).min())


def check_lemma4_condition(loss: LossSpec, prediction_grid, outcome_grid, tol: float = 1e-9) -> bool:
    """True when the uniform-regret condition holds on the grids."""
    value = lemma4_value(loss, prediction_grid, outcome_grid)
    logger.debug("uniform-regret condition value for %s loss: %.3g", loss.kind, value)
    return value >= -tol


__all__ = [
    "LossSpec",
    "absolute_loss",
    "absolute_subgradient",
    "check_convexity",
    "check_lemma4_condition",
    "check_lipschitz",
    "create_loss",
    "cumulative_loss",
    "custom_loss",
    "lemma4_value",
    "register_loss",
    "squared_loss",
    "uniform_grid",
    "validate_loss",
]
