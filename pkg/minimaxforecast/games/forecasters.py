"""Forecasters that take part in the games.

Every forecaster follows the :class:`Forecaster` protocol and is created
through a :class:`ForecasterDispatcher`, which maps a kind tag to a class.
Forecasters that are a pure function of the outcome prefix also expose
``predict_prefix`` and set ``deterministic``, which the exhaustive
worst-case evaluator requires.
"""

from __future__ import annotations

import logging
from typing import Any, Literal, Protocol, Sequence

import numpy as np

from minimaxforecast.erm.oracles import create_oracle, induced_threshold_class
from minimaxforecast.erm.processing import ErmOracle
from minimaxforecast.errors import ArgumentError, DimensionError
from minimaxforecast.losses import LossSpec, absolute_loss
from minimaxforecast.minimax import DpTable, dp_build, dp_prediction, from_01_world, mf_star_round, to_01_world
from minimaxforecast.r2 import ROUNDING_PURPOSE, R2State, r2_predict, r2_round_labels
from minimaxforecast.streams import RandomStream
from minimaxforecast.types import FiniteExpertClass, GameConfig, PlayoutMode, ThresholdClass

logger = logging.getLogger(__name__)


def as_finite_class(expert_class) -> FiniteExpertClass:
    """The explicit table of a class, with threshold classes read in revelation order."""
    if isinstance(expert_class, FiniteExpertClass):
        return expert_class
    if isinstance(expert_class, ThresholdClass):
        induced = induced_threshold_class(expert_class.instances, expert_class.polarity)
        return induced if expert_class.order is None else induced.permuted(expert_class.order)
    raise ArgumentError(f"{type(expert_class).__name__} has no explicit expert table")


class Forecaster(Protocol):
    """Protocol for a player that predicts p_t before y_t is revealed."""

    kind: str
    deterministic: bool
    # (r_t, z_t) of the last observed round, for forecasters that round.
    last_rounding: tuple[float, int] | None

    @classmethod
    def from_game(cls, expert_class: Any, loss: LossSpec, config: GameConfig, **options: Any) -> "Forecaster": ...

    def reset(self, config: GameConfig) -> None:
        """Start a new game; all randomness derives from ``config.master_seed``."""
        ...

    def predict(self, round_t: int) -> float: ...

    def observe(self, prediction: float, outcome: float) -> None: ...


class _PrefixForecaster(Forecaster):
    """A deterministic forecaster: the prediction depends on the outcome prefix only."""

    deterministic = True

    def __init__(self):
        self.history: list[float] = []
        self.last_rounding = None

    def predict_prefix(self, y_prefix: Sequence[float]) -> float:
        raise NotImplementedError

    def reset(self, config: GameConfig) -> None:
        self.history = []

    def predict(self, round_t: int) -> float:
        return self.predict_prefix(tuple(self.history))

    def observe(self, prediction: float, outcome: float) -> None:
        self.history.append(float(outcome))


class ExactMinimaxForecaster(_PrefixForecaster):
    """The Minimax Forecaster, read off the 0/1-world dynamic program."""

    kind = "mf"

    def __init__(self, expert_class: FiniteExpertClass):
        super().__init__()
        self.expert_class = expert_class
        self.table: DpTable = dp_build(to_01_world(expert_class))

    @classmethod
    def from_game(cls, expert_class: Any, loss: LossSpec, config: GameConfig, **options: Any) -> ExactMinimaxForecaster:
        if loss.kind != "absolute":
            raise ArgumentError("the exact minimax forecaster is defined for the absolute loss")
        return cls(as_finite_class(expert_class))

    def predict_prefix(self, y_prefix: Sequence[float]) -> float:
        shifted = to_01_world(np.asarray(y_prefix, dtype=float))
        return from_01_world(dp_prediction(self.table, shifted))


class MinimaxStarForecaster(Forecaster):
    """MF*: one random playout and two ERM calls per round."""

    kind = "mf_star"
    deterministic = False

    def __init__(self, oracle: ErmOracle, mode: Literal["fresh", "reused"] = "fresh"):
        if mode not in ("fresh", "reused"):
            raise ArgumentError(f"unknown playout mode {mode!r}")
        self.oracle = oracle
        self.mode_tag = mode
        self.mode = PlayoutMode.fresh()
        self.stream = RandomStream(0, "mf_star")
        self.history: list[float] = []
        self.last_rounding = None

    @classmethod
    def from_game(cls, expert_class: Any, loss: LossSpec, config: GameConfig, **options: Any) -> MinimaxStarForecaster:
        if loss.kind != "absolute":
            raise ArgumentError("MF* is defined for the absolute loss")
        return cls(create_oracle(expert_class, absolute_loss()), options.get("mode", "fresh"))

    def reset(self, config: GameConfig) -> None:
        self.history = []
        self.stream = RandomStream(config.master_seed, "mf_star")
        if self.mode_tag == "reused":
            self.mode = PlayoutMode.reused(self.stream.derive("mf_star_reused"), self.oracle.horizon)
        else:
            self.mode = PlayoutMode.fresh()

    def predict(self, round_t: int) -> float:
        return mf_star_round(None, self.history, self.mode, self.stream.derive("mf_star", round_t), erm=self.oracle)

    def observe(self, prediction: float, outcome: float) -> None:
        self.history.append(float(outcome))


class R2Forecaster(Forecaster):
    """Random playout on the rounded history plus randomized rounding of subgradients."""

    kind = "r2"
    deterministic = False

    def __init__(self, oracle: ErmOracle, loss: LossSpec, config: GameConfig):
        if oracle.horizon != config.horizon_T:
            raise DimensionError(f"class horizon {oracle.horizon} differs from the game horizon {config.horizon_T}")
        self.oracle = oracle
        self.loss = loss
        self.state = R2State.initial(config)
        self.stream = RandomStream(config.master_seed, "r2")
        self.last_rounding = None

    @classmethod
    def from_game(cls, expert_class: Any, loss: LossSpec, config: GameConfig, **options: Any) -> R2Forecaster:
        # z_t is binary, so the inner ERM always runs the absolute loss on the scaled class.
        return cls(create_oracle(expert_class, absolute_loss(), scaled=True, **options), loss, config)

    def reset(self, config: GameConfig) -> None:
        self.state = R2State.initial(config)
        self.stream = RandomStream(config.master_seed, "r2")
        self.last_rounding = None

    def predict(self, round_t: int) -> float:
        return r2_predict(self.state, self.oracle, self.stream)

    def observe(self, prediction: float, outcome: float) -> None:
        t = self.state.round_t
        r_t, z_t = r2_round_labels(prediction, outcome, self.loss, self.stream.derive(ROUNDING_PURPOSE, t))
        logger.debug("r2 round %d: r=%.6g z=%d", t, r_t, z_t)
        self.last_rounding = (r_t, z_t)
        self.state = self.state.advance(z_t)


class ConstantForecaster(_PrefixForecaster):
    kind = "constant"

    def __init__(self, value: float = 0.0):
        super().__init__()
        self.value = float(value)

    @classmethod
    def from_game(cls, expert_class: Any, loss: LossSpec, config: GameConfig, **options: Any) -> ConstantForecaster:
        return cls(options.get("value", 0.0))

    def predict_prefix(self, y_prefix: Sequence[float]) -> float:
        return self.value


class FollowTheLeaderForecaster(_PrefixForecaster):
    """Predict with the expert of smallest loss so far; ties go to the lowest row."""

    kind = "ftl"

    def __init__(self, expert_class: FiniteExpertClass, loss: LossSpec):
        super().__init__()
        self.table = expert_class.matrix
        self.loss = loss

    @classmethod
    def from_game(cls, expert_class: Any, loss: LossSpec, config: GameConfig, **options: Any) -> FollowTheLeaderForecaster:
        return cls(as_finite_class(expert_class), loss)

    def predict_prefix(self, y_prefix: Sequence[float]) -> float:
        t = len(y_prefix)
        if t == 0:
            return float(self.table[0, 0])
        totals = np.sum(self.loss.value(self.table[:, :t], np.asarray(y_prefix, dtype=float)[np.newaxis, :]), axis=1)
        return float(self.table[int(np.argmin(totals)), t])


class ForecasterDispatcher:
    """Maps forecaster kinds to their classes."""

    def __init__(self):
        self._forecaster_types: dict[str, type[Forecaster]] = {}

    def register_forecaster(self, kind: str, forecaster: type[Forecaster]) -> None:
        self._forecaster_types[kind] = forecaster

    def create(self, kind: str, expert_class: Any, loss: LossSpec, config: GameConfig, **options: Any) -> Forecaster:
        try:
            forecaster_type = self._forecaster_types[kind]
        except KeyError:
            raise ArgumentError(f"unknown forecaster kind {kind!r}; known kinds: {sorted(self._forecaster_types)}") from None
        forecaster = forecaster_type.from_game(expert_class, loss, config, **options)
        forecaster.reset(config)
        return forecaster


def register_all_forecasters(dispatcher: ForecasterDispatcher) -> None:
    forecasters: list[type[Forecaster]] = [
        ExactMinimaxForecaster,
        MinimaxStarForecaster,
        R2Forecaster,
        ConstantForecaster,
        FollowTheLeaderForecaster,
    ]

    for forecaster_cls in forecasters:
        dispatcher.register_forecaster(forecaster_cls.kind, forecaster_cls)


def create_forecaster_dispatcher() -> ForecasterDispatcher:
    """Create and return a dispatcher with every forecaster registered."""
    dispatcher = ForecasterDispatcher()
    register_all_forecasters(dispatcher)
    return dispatcher


def create_forecaster(kind: str, expert_class: Any, loss: LossSpec, config: GameConfig, **options: Any) -> Forecaster:
    return create_forecaster_dispatcher().create(kind, expert_class, loss, config, **options)


__all__ = [
    "ConstantForecaster",
    "ExactMinimaxForecaster",
    "FollowTheLeaderForecaster",
    "Forecaster",
    "ForecasterDispatcher",
    "MinimaxStarForecaster",
    "R2Forecaster",
    "as_finite_class",
    "create_forecaster",
    "create_forecaster_dispatcher",
    "register_all_forecasters",
]
