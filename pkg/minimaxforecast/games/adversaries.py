"""Adversaries: the players that reveal outcomes.

Adversaries are described by a pure-data :class:`AdversarySpec` and built by
:func:`create_adversary` from a tag-to-builder registry. At round t an
adversary sees every earlier prediction and outcome (but not p_t).
"""

from __future__ import annotations

import logging
from typing import Any, Callable, Literal, Protocol, Sequence, Tuple

import numpy as np
from pydantic import Field, model_validator

from minimaxforecast.erm.oracles import tracenorm_erm
from minimaxforecast.errors import ArgumentError, DimensionError, InvariantViolation
from minimaxforecast.games.forecasters import as_finite_class
from minimaxforecast.losses import LossSpec, check_lemma4_condition, uniform_grid
from minimaxforecast.minimax import worst_case_regret_exhaustive
from minimaxforecast.streams import RandomStream
from minimaxforecast.types import GameConfig, TraceNormClass, _FrozenModel

logger = logging.getLogger(__name__)

LEMMA4_TOLERANCE = 1e-9


class Adversary(Protocol):
    """Protocol for a player that reveals y_t once p_t is committed."""

    tag: str

    def reset(self, config: GameConfig) -> None:
        """Start a new game; all randomness derives from ``config.master_seed``."""
        ...

    def outcome(self, round_t: int, predictions: Sequence[float], outcomes: Sequence[float]) -> float:
        """y_t given the predictions and outcomes of rounds 1..t-1."""
        ...


class FixedSequenceAdversary(Adversary):
    tag = "fixed_sequence"

    def __init__(self, sequence: Sequence[float]):
        self.sequence = tuple(float(y) for y in sequence)

    def reset(self, config: GameConfig) -> None:
        if len(self.sequence) < config.horizon_T:
            raise DimensionError(f"fixed sequence of length {len(self.sequence)} is shorter than T={config.horizon_T}")

    def outcome(self, round_t: int, predictions: Sequence[float], outcomes: Sequence[float]) -> float:
        return self.sequence[round_t - 1]


class IidRandomAdversary(Adversary):
    """Independent outcomes: uniform signs, or uniform reals in [-b, b]."""

    tag = "iid_random"

    def __init__(self, distribution: Literal["rademacher", "uniform"] = "rademacher", bound_b: float = 1.0):
        if distribution not in ("rademacher", "uniform"):
            raise ArgumentError(f"unknown outcome distribution {distribution!r}")
        self.distribution = distribution
        self.bound_b = bound_b
        self.master_seed = 0

    def reset(self, config: GameConfig) -> None:
        self.master_seed = config.master_seed

    def outcome(self, round_t: int, predictions: Sequence[float], outcomes: Sequence[float]) -> float:
        stream = RandomStream(self.master_seed, "adversary", round_t)
        if self.distribution == "rademacher":
            return float(stream.rademacher(1)[0])
        return float(stream.uniform(-self.bound_b, self.bound_b))


class ExhaustiveWorstCaseAdversary(Adversary):
    """Replays the outcome sequence that maximizes a deterministic forecaster's regret."""

    tag = "exhaustive_worst_case"

    def __init__(self, forecaster: Any, expert_class: Any, loss: LossSpec):
        self.forecaster = forecaster
        self.expert_class = expert_class
        self.loss = loss
        self.worst_regret = 0.0
        self.sequence: tuple[float, ...] = ()

    def reset(self, config: GameConfig) -> None:
        regret, sequence = worst_case_regret_exhaustive(self.forecaster, self.expert_class, self.loss)
        logger.debug("worst-case outcome sequence %s with regret %.6g", sequence, regret)
        self.worst_regret = regret
        self.sequence = tuple(float(y) for y in sequence)

    def outcome(self, round_t: int, predictions: Sequence[float], outcomes: Sequence[float]) -> float:
        return self.sequence[round_t - 1]


class SwitchRecord(_FrozenModel):
    """One post-switch round of the uniform-regret construction."""

    round: int
    f_star: float
    outcome: float
    # sup_y inf_p (loss(p, y) - loss(f_star, y)) over the grids
    margin: float


def _prefix_minimizer(expert_class: Any, outcomes: np.ndarray, loss: LossSpec) -> np.ndarray:
    """Predictions of the best expert on the revealed prefix, for every round."""
    if isinstance(expert_class, TraceNormClass):
        result = tracenorm_erm(expert_class, outcomes, loss)
        assert result.matrix is not None
        matrix = np.array(result.matrix)
        schedule = np.array(expert_class.entry_schedule, dtype=int)
        return matrix[schedule[:, 0], schedule[:, 1]]
    table = as_finite_class(expert_class).matrix
    totals = np.sum(loss.value(table[:, : outcomes.size], outcomes[np.newaxis, :]), axis=1)
    return table[int(np.argmin(totals))]


class Lemma4SwitchAdversary(Adversary):
    """Play ``base`` through round r, then punish every deviation from the prefix leader.

    After the switch, f* is the minimizer of the loss on y_1..y_r and each
    outcome is y*_t = argmax_y inf_p (loss(p, y) - loss(f*_t, y)), ties going
    to the smallest outcome. With ``real_outcomes`` the leader's own
    prediction f*_t joins both grids, so y ranges over the outcome domain
    rather than its grid points.
    """

    tag = "lemma4_switch"

    def __init__(
        self,
        base: Adversary,
        switch_round: int,
        expert_class: Any,
        loss: LossSpec,
        outcome_grid: Sequence[float],
        prediction_grid: Sequence[float],
        real_outcomes: bool = True,
    ):
        if switch_round < 0:
            raise ArgumentError("the switch round must be nonnegative")
        self.base = base
        self.switch_round = switch_round
        self.expert_class = expert_class
        self.loss = loss
        self.outcome_grid = np.sort(np.asarray(outcome_grid, dtype=float))
        self.prediction_grid = np.asarray(prediction_grid, dtype=float)
        self.real_outcomes = real_outcomes
        self.f_star: np.ndarray | None = None
        self.switch_log: list[SwitchRecord] = []

    def reset(self, config: GameConfig) -> None:
        if self.switch_round > config.horizon_T:
            raise ArgumentError(f"switch round {self.switch_round} is past the horizon {config.horizon_T}")
        self.base.reset(config)
        self.f_star = None
        self.switch_log = []

    def best_response(self, f_star_t: float) -> tuple[float, float]:
        """(y*_t, margin) for a single round."""
        outcomes, predictions = self.outcome_grid, self.prediction_grid
        if self.real_outcomes and outcomes[0] <= f_star_t <= outcomes[-1]:
            outcomes = np.union1d(outcomes, [f_star_t])
            predictions = np.append(predictions, f_star_t)
        values = np.asarray(self.loss.value(predictions[:, np.newaxis], outcomes[np.newaxis, :]))
        reference = np.asarray(self.loss.value(f_star_t, outcomes))
        inner = values.min(axis=0) - reference
        best = int(np.argmax(inner))
        return float(outcomes[best]), float(inner[best])

    def outcome(self, round_t: int, predictions: Sequence[float], outcomes: Sequence[float]) -> float:
        if round_t <= self.switch_round:
            return self.base.outcome(round_t, predictions, outcomes)
        if self.f_star is None:
            revealed = np.asarray(outcomes[: self.switch_round], dtype=float)
            self.f_star = _prefix_minimizer(self.expert_class, revealed, self.loss)
            logger.debug("switching to the uniform-regret adversary after round %d", self.switch_round)
        f_star_t = float(self.f_star[round_t - 1])
        y_star, margin = self.best_response(f_star_t)
        self.switch_log.append(SwitchRecord(round=round_t, f_star=f_star_t, outcome=y_star, margin=margin))
        return y_star


def lemma4_adversary(
    base: Adversary,
    switch_round: int,
    expert_class: Any,
    loss: LossSpec,
    outcome_grid: Sequence[float] | None = None,
    prediction_grid: Sequence[float] | None = None,
    real_outcomes: bool = True,
) -> Lemma4SwitchAdversary:
    """Build the switching adversary, refusing losses that fail the grid condition.

    Both grids default to the uniform grid over [-b, b].
    """
    default = uniform_grid(loss.bound_b)
    outcome_grid = default if outcome_grid is None else outcome_grid
    prediction_grid = default if prediction_grid is None else prediction_grid
    if not check_lemma4_condition(loss, prediction_grid, outcome_grid, LEMMA4_TOLERANCE):
        raise InvariantViolation(f"the {loss.kind} loss fails the uniform-regret condition on the given grids")
    return Lemma4SwitchAdversary(base, switch_round, expert_class, loss, outcome_grid, prediction_grid, real_outcomes)


# ============================================================================
# Pure-data description and registry
# ============================================================================


class AdversarySpec(_FrozenModel):
    """Strategy tag and parameters of an adversary."""

    tag: Literal["fixed_sequence", "iid_random", "exhaustive_worst_case", "lemma4_switch"]
    sequence: Tuple[float, ...] | None = None
    distribution: Literal["rademacher", "uniform"] = "rademacher"
    switch_round: int | None = Field(default=None, ge=0)
    base: AdversarySpec | None = None
    outcome_grid: Tuple[float, ...] | None = None
    prediction_grid: Tuple[float, ...] | None = None

    @model_validator(mode="after")
    def _check_parameters(self) -> AdversarySpec:
        if self.tag == "fixed_sequence" and self.sequence is None:
            raise ValueError("a fixed-sequence adversary needs its sequence")
        if self.tag == "lemma4_switch" and (self.switch_round is None or self.base is None):
            raise ValueError("a switching adversary needs a base strategy and a switch round")
        return self


AdversaryBuilder = Callable[..., Adversary]

_ADVERSARY_BUILDERS: dict[str, AdversaryBuilder] = {}


def register_adversary(tag: str, builder: AdversaryBuilder) -> None:
    _ADVERSARY_BUILDERS[tag] = builder


def create_adversary(
    spec: AdversarySpec,
    expert_class: Any = None,
    loss: LossSpec | None = None,
    forecaster: Any = None,
    bound_b: float = 1.0,
) -> Adversary:
    """Build the adversary a spec describes."""
    try:
        builder = _ADVERSARY_BUILDERS[spec.tag]
    except KeyError:
        raise ArgumentError(f"unknown adversary tag {spec.tag!r}") from None
    return builder(spec, expert_class=expert_class, loss=loss, forecaster=forecaster, bound_b=bound_b)


def _build_fixed(spec: AdversarySpec, **context: Any) -> Adversary:
    assert spec.sequence is not None
    return FixedSequenceAdversary(spec.sequence)


def _build_iid(spec: AdversarySpec, bound_b: float = 1.0, **context: Any) -> Adversary:
    return IidRandomAdversary(spec.distribution, bound_b)


def _build_exhaustive(
    spec: AdversarySpec,
    expert_class: Any = None,
    loss: LossSpec | None = None,
    forecaster: Any = None,
    **context: Any,
) -> Adversary:
    if forecaster is None or expert_class is None or loss is None:
        raise ArgumentError("the exhaustive adversary needs the forecaster, the class and the loss")
    return ExhaustiveWorstCaseAdversary(forecaster, expert_class, loss)


def _build_switch(
    spec: AdversarySpec,
    expert_class: Any = None,
    loss: LossSpec | None = None,
    bound_b: float = 1.0,
    **context: Any,
) -> Adversary:
    assert spec.base is not None and spec.switch_round is not None
    if expert_class is None or loss is None:
        raise ArgumentError("the switching adversary needs the class and the loss")
    base = create_adversary(spec.base, expert_class=expert_class, loss=loss, bound_b=bound_b, **context)
    return lemma4_adversary(base, spec.switch_round, expert_class, loss, spec.outcome_grid, spec.prediction_grid)


register_adversary("fixed_sequence", _build_fixed)
register_adversary("iid_random", _build_iid)
register_adversary("exhaustive_worst_case", _build_exhaustive)
register_adversary("lemma4_switch", _build_switch)


__all__ = [
    "Adversary",
    "AdversarySpec",
    "ExhaustiveWorstCaseAdversary",
    "FixedSequenceAdversary",
    "IidRandomAdversary",
    "Lemma4SwitchAdversary",
    "SwitchRecord",
    "create_adversary",
    "lemma4_adversary",
    "register_adversary",
]
