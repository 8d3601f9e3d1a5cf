"""The Randomized Rounding (R^2) Forecaster.

Each round the forecaster averages J = ceil(eta T) one-sample minimax
predictions, each computed on the rounded history z_1..z_{t-1} completed
with fresh random signs for rounds t+1..T. After the outcome is revealed,
the subgradient of the loss at the prediction is rounded to a sign z_t
that feeds the next round:

    r_t = (1 - subgradient(p_t, y_t) / rho) / 2,    z_t = +1 w.p. r_t.
"""

from __future__ import annotations

import logging
import math
from typing import Tuple

import numpy as np
from pydantic import Field, model_validator

from minimaxforecast.erm.processing import ErmOracle
from minimaxforecast.errors import ArgumentError, CapacityError, ErmFailure, InvariantViolation
from minimaxforecast.losses import LossSpec
from minimaxforecast.minimax import ENUMERATION_CAP, enumerate_infima
from minimaxforecast.streams import RandomStream
from minimaxforecast.types import GameConfig, _FrozenModel

logger = logging.getLogger(__name__)

PLAYOUT_PURPOSE = "r2_playout"
ROUNDING_PURPOSE = "r2_rounding"


def inner_iterations(eta: float, horizon: int) -> int:
    """J = ceil(eta T), ignoring float noise such as (1/3) * 3."""
    return max(1, math.ceil(round(eta * horizon, 9)))


class R2State(_FrozenModel):
    """Round index and rounded history of one R^2 game."""

    round_t: int = Field(default=1, ge=1)
    z_history: Tuple[int, ...] = ()
    config: GameConfig
    inner_j: int = Field(ge=1)

    @model_validator(mode="after")
    def _check_history(self) -> R2State:
        if len(self.z_history) != self.round_t - 1:
            raise ValueError(f"round {self.round_t} needs {self.round_t - 1} rounded signs, got {len(self.z_history)}")
        if any(z not in (-1, 1) for z in self.z_history):
            raise ValueError("rounded signs must be +1 or -1")
        return self

    @classmethod
    def initial(cls, config: GameConfig) -> R2State:
        return cls(config=config, inner_j=inner_iterations(config.eta, config.horizon_T))

    def advance(self, z: int) -> R2State:
        """State of the next round once z_t is known."""
        return self.model_copy(update={"round_t": self.round_t + 1, "z_history": self.z_history + (int(z),)})


def _with_round(round_index: int, compute):
    try:
        return compute()
    except (ArithmeticError, ValueError) as exc:
        raise ErmFailure(round_index, exc) from exc


def r2_predict(state: R2State, erm: ErmOracle, stream: RandomStream) -> float:
    """p_t = (b / J) sum_j Delta_j over J independent random playouts.

    ``erm`` works on the class divided by b. Draw j of round t comes from the
    stream derived with purpose ``r2_playout``, round t and draw j.
    """
    config = state.config
    t = state.round_t
    horizon = config.horizon_T
    if t > horizon:
        raise ArgumentError(f"round {t} is past the horizon {horizon}")
    history = np.array(state.z_history, dtype=float)

    def deltas() -> np.ndarray:
        values = np.empty(state.inner_j)
        for j in range(state.inner_j):
            playout = stream.derive(PLAYOUT_PURPOSE, t, j).rademacher(horizon - t)
            minus = erm.infimum(np.concatenate([history, [-1.0], playout]))
            plus = erm.infimum(np.concatenate([history, [1.0], playout]))
            # exact infima differ by at most 2; approximate ones are clipped back
            values[j] = min(1.0, max(-1.0, 0.5 * (minus - plus)))
        return values

    values = _with_round(t, deltas)
    prediction = config.bound_b * float(np.mean(values))
    logger.debug("r2 round %d: prediction %.6g from %d playouts", t, prediction, state.inner_j)
    return prediction


def r2_predict_exact(state: R2State, erm: ErmOracle) -> float:
    """The expectation r2_predict estimates, by enumerating every playout."""
    config = state.config
    t = state.round_t
    if config.horizon_T - t > ENUMERATION_CAP:
        raise CapacityError("r2_predict_exact", config.horizon_T - t, ENUMERATION_CAP)
    history = np.array(state.z_history, dtype=float)

    def expectation() -> float:
        minus = enumerate_infima(erm, np.append(history, -1.0))
        plus = enumerate_infima(erm, np.append(history, 1.0))
        return 0.5 * float(np.mean(minus) - np.mean(plus))

    return config.bound_b * _with_round(t, expectation)


def r2_round_labels(p_t: float, y_t: float, loss: LossSpec, stream: RandomStream) -> tuple[float, int]:
    """Round the subgradient at (p_t, y_t) into a sign; 1 - 2 r_t = subgradient / rho."""
    gradient = float(loss.subgradient(p_t, y_t))
    rho = loss.lipschitz_rho
    if abs(gradient) > rho + 1e-12:
        raise InvariantViolation(f"subgradient {gradient} at p={p_t}, y={y_t} exceeds rho={rho}")
    r_t = min(1.0, max(0.0, 0.5 * (1.0 - gradient / rho)))
    return r_t, stream.bernoulli_sign(r_t)


def theorem3_bound(rho: float, bound_b: float, eta: float, horizon: int, delta: float, rademacher: float) -> float:
    """rho R + rho b (sqrt(1/eta) + 2) sqrt(2 T ln(2T / delta))."""
    if rho <= 0 or bound_b <= 0 or eta <= 0 or horizon < 1:
        raise ArgumentError("rho, b, eta and T must be positive")
    if not 0.0 < delta < 1.0:
        raise ArgumentError(f"delta must lie in (0, 1), got {delta}")
    if eta * horizon < 1 - 1e-9:
        raise ArgumentError(f"eta={eta} is below 1/T for T={horizon}")
    if rademacher < 0:
        raise ArgumentError("the Rademacher complexity is nonnegative")
    deviation = math.sqrt(2.0 * horizon * math.log(2.0 * horizon / delta))
    return rho * rademacher + rho * bound_b * (math.sqrt(1.0 / eta) + 2.0) * deviation


__all__ = [
    "PLAYOUT_PURPOSE",
    "ROUNDING_PURPOSE",
    "R2State",
    "inner_iterations",
    "r2_predict",
    "r2_predict_exact",
    "r2_round_labels",
    "theorem3_bound",
]
