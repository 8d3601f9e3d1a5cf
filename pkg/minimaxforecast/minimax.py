"""The Minimax Forecaster for the absolute loss and binary outcomes.

Two equivalent views of the optimal strategy live here:

- the dynamic program over 0/1 outcome prefixes, where
  A_T(y) = -inf_f L(f, y) and A_{t-1}(y) = (A_t(y0) + A_t(y1) + 1) / 2, and the
  optimal prediction is p_t = (A_t(y1) - A_t(y0) + 1) / 2;
- the +-1 world expectation form
  p_t = 1/2 E_Y[inf_f L(f, y (-1) Y) - inf_f L(f, y (+1) Y)],
  whose one-sample version is MF*.

The factor 1/2 in the expectation form is what makes the two views agree
under the conversion p = 2 p~ - 1; without it singleton classes would get
predictions outside [-1, 1].

Outcome sequences are enumerated in lexicographic order with -1 (or 0)
before +1 (or 1).
"""

from __future__ import annotations

import logging
import math
from typing import Protocol, Sequence

import numpy as np

from minimaxforecast.erm.oracles import FiniteErm, create_oracle
from minimaxforecast.erm.processing import ErmOracle
from minimaxforecast.errors import ArgumentError, CapacityError, DimensionError, ProtocolViolation
from minimaxforecast.losses import LossSpec, absolute_loss
from minimaxforecast.streams import RandomStream
from minimaxforecast.types import FiniteExpertClass, PlayoutMode

logger = logging.getLogger(__name__)

DP_HORIZON_CAP = 20
ENUMERATION_CAP = 20
WORST_CASE_HORIZON_CAP = 16
# Rows of the enumeration generated at a time.
CHUNK_ROWS = 1 << 14


# ============================================================================
# Enumeration helpers
# ============================================================================


def sign_sequences(length: int, low: float = -1.0, high: float = 1.0, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows ``start:stop`` of all sequences over {low, high}, in lexicographic order."""
    stop = (1 << length) if stop is None else stop
    indices = np.arange(start, stop, dtype=np.int64)[:, np.newaxis]
    shifts = np.arange(length - 1, -1, -1, dtype=np.int64)[np.newaxis, :]
    bits = (indices >> shifts) & 1
    return np.where(bits == 1, high, low).astype(float)


def enumerate_infima(oracle: ErmOracle, prefix, low: float = -1.0, high: float = 1.0) -> np.ndarray:
    """Infima over every completion of the prefix, in lexicographic order."""
    prefix = np.asarray(prefix, dtype=float)
    remaining = oracle.horizon - prefix.size
    if remaining < 0:
        raise DimensionError(f"prefix of length {prefix.size} exceeds the horizon {oracle.horizon}")
    if remaining > ENUMERATION_CAP:
        raise CapacityError("enumerate_infima", remaining, ENUMERATION_CAP)
    total = 1 << remaining
    result = np.empty(total)
    for start in range(0, total, CHUNK_ROWS):
        stop = min(total, start + CHUNK_ROWS)
        suffixes = sign_sequences(remaining, low, high, start, stop)
        block = np.hstack([np.broadcast_to(prefix, (stop - start, prefix.size)), suffixes])
        result[start:stop] = oracle.infimum_many(block)
    return result


# ============================================================================
# World conversion
# ============================================================================


def to_01_world(values):
    """Map the +-1 world to the 0/1 world with x -> (x + 1) / 2.

    Classes must have entries in [-1, 1]; outcome vectors must be +-1.
    Cumulative absolute losses halve: L(f, y) = 2 L(f~, y~).
    """
    if isinstance(values, FiniteExpertClass):
        table = values.matrix
        if np.any(np.abs(table) > 1.0):
            raise ArgumentError("only classes inside [-1, 1]^T can be shifted to the 0/1 world")
        return FiniteExpertClass.new((table + 1.0) / 2.0, 1.0)
    outcomes = np.asarray(values, dtype=float)
    if not np.all(np.isin(outcomes, (-1.0, 1.0))):
        raise ArgumentError("outcomes must be -1 or +1")
    return (outcomes + 1.0) / 2.0


def from_01_world(prediction):
    """Map a 0/1-world prediction back to [-1, 1]: p = 2 p~ - 1."""
    return 2.0 * np.asarray(prediction, dtype=float) - 1.0 if np.ndim(prediction) else 2.0 * float(prediction) - 1.0


# ============================================================================
# Dynamic program
# ============================================================================


def _prefix_index(prefix) -> tuple[int, int]:
    if isinstance(prefix, str):
        digits = [int(c) for c in prefix]
    else:
        digits = [int(round(float(v))) for v in prefix]
    if any(d not in (0, 1) for d in digits):
        raise ArgumentError(f"0/1 prefix expected, got {prefix!r}")
    index = 0
    for digit in digits:
        index = 2 * index + digit
    return len(digits), index


class DpTable:
    """A_t values for every 0/1 prefix of length 0..T.

    ``levels[t][k]`` is A_t at the prefix whose binary digits spell k.
    """

    def __init__(self, horizon: int, levels: list[np.ndarray]):
        self.horizon = horizon
        self.levels = levels
        for level in levels:
            level.setflags(write=False)

    def value(self, prefix) -> float:
        length, index = _prefix_index(prefix)
        if length > self.horizon:
            raise ArgumentError(f"prefix {prefix!r} longer than the horizon {self.horizon}")
        return float(self.levels[length][index])

    @property
    def root(self) -> float:
        return float(self.levels[0][0])

    def max_increment(self) -> float:
        """max over prefixes of |A_t(y1) - A_t(y0)|; never above 1."""
        return max(float(np.max(np.abs(level[1::2] - level[0::2]))) for level in self.levels[1:])


def dp_build(class01: FiniteExpertClass, loss: LossSpec | None = None) -> DpTable:
    """Fill the table backwards from A_T(y) = -inf_f L(f, y)."""
    if loss is not None and loss.kind != "absolute":
        raise ArgumentError("the dynamic program is specific to the absolute loss")
    horizon = class01.horizon
    if horizon > DP_HORIZON_CAP:
        raise CapacityError("dp_build", horizon, DP_HORIZON_CAP)
    table = class01.matrix
    if np.any(table < 0.0) or np.any(table > 1.0):
        raise ArgumentError("dp_build expects a class in the 0/1 world, inside [0, 1]^T")
    oracle = FiniteErm(class01, absolute_loss())
    levels: list[np.ndarray] = [np.empty(0)] * (horizon + 1)
    levels[horizon] = -enumerate_infima(oracle, (), low=0.0, high=1.0)
    for t in range(horizon, 0, -1):
        child = levels[t]
        levels[t - 1] = 0.5 * (child[0::2] + child[1::2] + 1.0)
    logger.debug("built minimax table for T=%d, root value %.6g", horizon, levels[0][0])
    return DpTable(horizon, levels)


def dp_prediction(table: DpTable, y_prefix) -> float:
    """p_t = (A_t(y1) - A_t(y0) + 1) / 2 in the 0/1 world."""
    length, index = _prefix_index(y_prefix)
    if length >= table.horizon:
        raise ArgumentError(f"no prediction after the last round (prefix length {length}, horizon {table.horizon})")
    level = table.levels[length + 1]
    return 0.5 * (float(level[2 * index + 1]) - float(level[2 * index]) + 1.0)


def dp_value_minmax(table: DpTable, y_prefix) -> float:
    """A_{t-1} recomputed as min over p in [0, 1] of max{p + A_t(y0), 1 - p + A_t(y1)}."""
    length, index = _prefix_index(y_prefix)
    if length >= table.horizon:
        raise ArgumentError("the min-max form needs a prefix shorter than the horizon")
    level = table.levels[length + 1]
    zero, one = float(level[2 * index]), float(level[2 * index + 1])
    crossing = min(1.0, max(0.0, 0.5 * (one - zero + 1.0)))
    return min(max(p + zero, 1.0 - p + one) for p in (0.0, 1.0, crossing))


def dp_value_explicit(class01: FiniteExpertClass, y_prefix) -> float:
    """A_t(y^t) = E_Y[-inf_f L(f, y^t Y)] + (T - t) / 2 over uniform 0/1 completions Y."""
    length, _ = _prefix_index(y_prefix)
    digits = [float(c) for c in y_prefix] if isinstance(y_prefix, str) else [float(v) for v in y_prefix]
    infima = enumerate_infima(FiniteErm(class01, absolute_loss()), digits, low=0.0, high=1.0)
    return float(-np.mean(infima) + 0.5 * (class01.horizon - length))


# ============================================================================
# +-1 world forecasters
# ============================================================================


def _check_prefix(y_prefix, horizon: int) -> np.ndarray:
    prefix = np.asarray(y_prefix, dtype=float).reshape(-1)
    if prefix.size >= horizon:
        raise ArgumentError(f"prefix of length {prefix.size} leaves no round to predict (horizon {horizon})")
    return prefix


def mf_exact_prediction(expert_class, y_prefix, erm: ErmOracle | None = None) -> float:
    """Exact minimax prediction by enumerating all 2^(T-t) suffixes."""
    oracle = erm if erm is not None else create_oracle(expert_class, absolute_loss())
    prefix = _check_prefix(y_prefix, oracle.horizon)
    remaining = oracle.horizon - prefix.size - 1
    if remaining > ENUMERATION_CAP:
        raise CapacityError("mf_exact_prediction", remaining, ENUMERATION_CAP)
    minus = enumerate_infima(oracle, np.append(prefix, -1.0))
    plus = enumerate_infima(oracle, np.append(prefix, 1.0))
    return 0.5 * float(np.mean(minus) - np.mean(plus))


def mf_star_predictions(erm: ErmOracle, y_prefix, playouts) -> np.ndarray:
    """MF* predictions at one prefix for each row of ``playouts`` (signs for rounds t+1..T)."""
    prefix = _check_prefix(y_prefix, erm.horizon)
    remaining = erm.horizon - prefix.size - 1
    playouts = np.asarray(playouts, dtype=float)
    if playouts.ndim == 1:
        playouts = playouts[np.newaxis, :]
    if playouts.ndim != 2 or playouts.shape[1] != remaining:
        raise DimensionError(f"playouts must cover the {remaining} rounds after the prediction, got shape {playouts.shape}")
    rows = playouts.shape[0]
    head = np.broadcast_to(prefix, (rows, prefix.size))
    minus = erm.infimum_many(np.hstack([head, np.full((rows, 1), -1.0), playouts]))
    plus = erm.infimum_many(np.hstack([head, np.full((rows, 1), 1.0), playouts]))
    return 0.5 * (minus - plus)


def mf_star_round(
    expert_class,
    y_prefix,
    mode: PlayoutMode,
    stream: RandomStream | None = None,
    erm: ErmOracle | None = None,
) -> float:
    """One-sample MF* prediction: half the difference of two ERMs on a random playout."""
    oracle = erm if erm is not None else create_oracle(expert_class, absolute_loss())
    prefix = _check_prefix(y_prefix, oracle.horizon)
    t = prefix.size + 1
    if mode.tag == "reused":
        assert mode.frozen_signs is not None
        if len(mode.frozen_signs) != oracle.horizon:
            raise DimensionError(f"{len(mode.frozen_signs)} frozen signs for horizon {oracle.horizon}")
        playout = np.array(mode.frozen_signs[t:], dtype=float)
    else:
        if stream is None:
            raise ArgumentError("fresh playout needs a random stream")
        playout = stream.rademacher(oracle.horizon - t)
    return float(mf_star_predictions(oracle, prefix, playout)[0])


def theorem2_bound(rademacher: float, horizon: int, delta: float) -> float:
    """High-probability regret bound of MF*: R_T(F) + sqrt(2 T ln(1/delta))."""
    if not 0.0 < delta < 1.0:
        raise ArgumentError(f"delta must lie in (0, 1), got {delta}")
    return rademacher + math.sqrt(2.0 * horizon * math.log(1.0 / delta))


# ============================================================================
# Exhaustive worst case
# ============================================================================


class PredictionRule(Protocol):
    """A forecaster whose prediction is a function of the outcome prefix alone."""

    deterministic: bool

    def predict_prefix(self, y_prefix: Sequence[float]) -> float: ...


def worst_case_regret_exhaustive(
    forecaster: PredictionRule,
    expert_class,
    loss: LossSpec | None = None,
    erm: ErmOracle | None = None,
) -> tuple[float, np.ndarray]:
    """Maximum regret over all 2^T binary outcome sequences.

    Ties go to the lexicographically last maximizer (outcomes +1 preferred).
    """
    if not getattr(forecaster, "deterministic", False):
        raise ProtocolViolation("exhaustive worst-case evaluation needs a deterministic forecaster")
    loss = loss if loss is not None else absolute_loss()
    oracle = erm if erm is not None else create_oracle(expert_class, loss)
    horizon = oracle.horizon
    if horizon > WORST_CASE_HORIZON_CAP:
        raise CapacityError("worst_case_regret_exhaustive", horizon, WORST_CASE_HORIZON_CAP)

    # cumulative forecaster loss of every prefix at the current depth
    prefixes = np.zeros((1, 0))
    cumulative = np.zeros(1)
    for _ in range(horizon):
        predictions = np.array([forecaster.predict_prefix(tuple(row)) for row in prefixes])
        children = np.repeat(prefixes, 2, axis=0)
        outcomes = np.tile([-1.0, 1.0], prefixes.shape[0])
        cumulative = np.repeat(cumulative, 2) + np.asarray(loss.value(np.repeat(predictions, 2), outcomes), dtype=float)
        prefixes = np.hstack([children, outcomes[:, np.newaxis]])
    regrets = cumulative - oracle.infimum_many(prefixes)
    best = regrets.size - 1 - int(np.argmax(regrets[::-1]))
    return float(regrets[best]), prefixes[best].copy()


__all__ = [
    "DpTable",
    "PredictionRule",
    "dp_build",
    "dp_prediction",
    "dp_value_explicit",
    "dp_value_minmax",
    "enumerate_infima",
    "from_01_world",
    "mf_exact_prediction",
    "mf_star_predictions",
    "mf_star_round",
    "sign_sequences",
    "theorem2_bound",
    "to_01_world",
    "worst_case_regret_exhaustive",
]
