"""Game loops: expert advice, the transductive reduction and collaborative filtering.

Each round the forecaster commits p_t, the adversary reveals y_t having seen
only rounds 1..t-1, and the forecaster observes y_t. Regret is always
measured against the best expert on the same prefix.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Sequence

import numpy as np

from minimaxforecast.erm.oracles import TRACENORM_ITERATIONS, TRACENORM_TOLERANCE, tracenorm_erm
from minimaxforecast.errors import ArgumentError, DimensionError, ProtocolViolation
from minimaxforecast.games.adversaries import Adversary, Lemma4SwitchAdversary
from minimaxforecast.games.forecasters import Forecaster, R2Forecaster, as_finite_class, create_forecaster
from minimaxforecast.losses import LossSpec, absolute_loss, check_lemma4_condition, uniform_grid
from minimaxforecast.types import CfSchedule, GameConfig, ThresholdClass, TraceNormClass, Transcript, _FrozenModel

logger = logging.getLogger(__name__)

RANGE_SLACK = 1e-12
# Prefix ERMs run every round up to this matrix dimension, at checkpoints beyond it.
CF_EVERY_ROUND_MAX_DIMENSION = 8


def _check_prediction(prediction: float, bound_b: float, round_t: int) -> float:
    if not math.isfinite(prediction) or abs(prediction) > bound_b + RANGE_SLACK:
        raise ProtocolViolation(f"round {round_t}: prediction {prediction} outside [-{bound_b}, {bound_b}]")
    return float(prediction)


def _play_rounds(
    forecaster: Forecaster,
    adversary: Adversary,
    rounds: int,
    loss: LossSpec,
    bound_b: float,
) -> tuple[np.ndarray, np.ndarray, list[tuple[float, int] | None]]:
    predictions: list[float] = []
    outcomes: list[float] = []
    rounding: list[tuple[float, int] | None] = []
    for t in range(1, rounds + 1):
        p_t = _check_prediction(forecaster.predict(t), bound_b, t)
        y_t = float(adversary.outcome(t, tuple(predictions), tuple(outcomes)))
        forecaster.observe(p_t, y_t)
        predictions.append(p_t)
        outcomes.append(y_t)
        rounding.append(forecaster.last_rounding)
        logger.debug("round %d: p=%.6g y=%.6g loss=%.6g", t, p_t, y_t, float(loss.value(p_t, y_t)))
    return np.array(predictions), np.array(outcomes), rounding


def play_expert_game(
    forecaster: Forecaster,
    adversary: Adversary,
    expert_class: Any,
    loss: LossSpec,
    config: GameConfig,
) -> Transcript:
    """Play T rounds of prediction with expert advice."""
    table = as_finite_class(expert_class).matrix
    if table.shape[1] != config.horizon_T:
        raise DimensionError(f"class horizon {table.shape[1]} differs from the game horizon {config.horizon_T}")
    forecaster.reset(config)
    adversary.reset(config)
    predictions, outcomes, rounding = _play_rounds(forecaster, adversary, config.horizon_T, loss, config.bound_b)
    losses = np.asarray(loss.value(predictions, outcomes), dtype=float)
    best = np.cumsum(loss.value(table, outcomes[np.newaxis, :]), axis=1).min(axis=0)
    transcript = Transcript.from_rounds(predictions, outcomes, losses, best, rounding)
    logger.info("%s forecaster, T=%d: final regret %.6g", forecaster.kind, config.horizon_T, transcript.final_regret)
    return transcript


def ordered_threshold_class(threshold_class: ThresholdClass, permutation: Sequence[int]) -> ThresholdClass:
    """The class with instance ``permutation[t]`` revealed at round t."""
    order = np.asarray(permutation, dtype=int)
    if order.ndim != 1 or sorted(order.tolist()) != list(range(threshold_class.horizon)):
        raise ArgumentError("the revelation order must be a permutation of the instance indices")
    return threshold_class.with_order(order)


def play_transductive(
    threshold_class: ThresholdClass,
    forecaster_kind: str,
    adversary: Adversary,
    permutation: Sequence[int],
    config: GameConfig,
    loss: LossSpec | None = None,
    **forecaster_options: Any,
) -> Transcript:
    """Label the known instances in the order ``permutation`` reveals them.

    Round t asks for the label of instance ``permutation[t]``; the forecaster
    plays against the induced class of behaviour vectors read in that order.
    """
    ordered = ordered_threshold_class(threshold_class, permutation)
    loss = loss if loss is not None else absolute_loss()
    forecaster = create_forecaster(forecaster_kind, ordered, loss, config, **forecaster_options)
    return play_expert_game(forecaster, adversary, ordered, loss, config)


def cf_class(schedule: CfSchedule, radius_r: float, bound_b: float = 1.0) -> TraceNormClass:
    """The trace-norm class over every entry, read in the schedule's order."""
    return TraceNormClass.full(schedule.n_rows, schedule.n_cols, radius_r, bound_b, order=schedule.order)


def cf_checkpoints(rounds: int, n: int) -> set[int]:
    """Rounds at which the prefix ERM is evaluated."""
    if n <= CF_EVERY_ROUND_MAX_DIMENSION:
        return set(range(1, rounds + 1))
    return {max(1, math.ceil(rounds / k)) for k in (8, 4, 2)} | {rounds}


def play_cf_game(
    schedule: CfSchedule,
    radius_r: float,
    adversary: Adversary,
    loss: LossSpec,
    config: GameConfig,
    forecaster: Forecaster | None = None,
    max_iterations: int = TRACENORM_ITERATIONS,
    tolerance: float = TRACENORM_TOLERANCE,
    step_constant: float | None = None,
) -> Transcript:
    """Online matrix completion with R^2 run over the full m x n horizon.

    ``config.horizon_T`` must be m n; ``schedule.horizon`` rounds are played.
    The running best-in-class loss comes from the approximate trace-norm ERM
    on the revealed prefix; rows where it was carried over from an earlier
    checkpoint have ``best_evaluated`` False.
    """
    entries = schedule.n_rows * schedule.n_cols
    if config.horizon_T != entries:
        raise DimensionError(f"the game horizon {config.horizon_T} must equal the number of entries {entries}")
    if len(set(schedule.order)) != len(schedule.order):
        raise ArgumentError("the schedule reveals an entry twice")
    grid = uniform_grid(config.bound_b)
    if not check_lemma4_condition(loss, grid, grid):
        logger.warning("%s loss fails the uniform-regret condition; intermediate rounds carry no guarantee", loss.kind)
    tracenorm_class = cf_class(schedule, radius_r, config.bound_b)
    solver = {"max_iterations": max_iterations, "tolerance": tolerance, "step_constant": step_constant}
    if forecaster is None:
        forecaster = R2Forecaster.from_game(tracenorm_class, loss, config, **solver)
    forecaster.reset(config)
    adversary.reset(config)

    rounds = schedule.horizon
    predictions, outcomes, rounding = _play_rounds(forecaster, adversary, rounds, loss, config.bound_b)
    if np.any(np.abs(outcomes) > config.bound_b + RANGE_SLACK):
        raise ProtocolViolation(f"outcomes must lie in [-{config.bound_b}, {config.bound_b}]")
    losses = np.asarray(loss.value(predictions, outcomes), dtype=float)

    checkpoints = cf_checkpoints(rounds, max(schedule.n_rows, schedule.n_cols))
    best: list[float] = []
    evaluated: list[bool] = []
    current = 0.0
    previous = None
    for t in range(1, rounds + 1):
        if t in checkpoints:
            fit = tracenorm_erm(tracenorm_class, outcomes[:t], loss, initial=previous, **solver)
            current, previous = fit.value, fit.matrix
        best.append(current)
        evaluated.append(t in checkpoints)
    transcript = Transcript.from_rounds(predictions, outcomes, losses, best, rounding, evaluated)
    logger.info(
        "cf game %dx%d, %d rounds: final regret %.6g", schedule.n_rows, schedule.n_cols, rounds, transcript.final_regret
    )
    return transcript


def max_running_regret(transcript: Transcript) -> float:
    """max_t of the regret after round t (0 for an empty transcript)."""
    return transcript.max_running_regret


class SwitchExcess(_FrozenModel):
    """Excess loss of the forecaster over f* in one post-switch round."""

    round: int
    # loss(p_t, y*_t) - loss(f*_t, y*_t), nonnegative for every forecaster
    excess: float
    # sup_y inf_p (loss(p, y) - loss(f*_t, y)) as the adversary evaluated it
    margin: float


def post_switch_excess(transcript: Transcript, adversary: Lemma4SwitchAdversary, loss: LossSpec) -> list[SwitchExcess]:
    """loss(p_t, y*_t) - loss(f*_t, y*_t) for every round after the switch."""
    result = []
    for record in adversary.switch_log:
        row = transcript.rows[record.round - 1]
        excess = float(loss.value(row.prediction, row.outcome)) - float(loss.value(record.f_star, row.outcome))
        result.append(SwitchExcess(round=record.round, excess=excess, margin=record.margin))
    return result


def play_many[R](run_trial: Callable[[int], R], seeds: Sequence[int], workers: int | None = 1) -> list[R]:
    """Run one game per seed and return the results in seed order.

    ``workers=None`` sizes the pool to the available processors. ``run_trial``
    must be picklable whenever a pool is used.
    """
    seeds = list(seeds)
    if len(seeds) <= 1 or (workers is not None and workers <= 1):
        return [run_trial(seed) for seed in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_trial, seeds))


__all__ = [
    "SwitchExcess",
    "cf_checkpoints",
    "cf_class",
    "max_running_regret",
    "ordered_threshold_class",
    "play_cf_game",
    "play_expert_game",
    "play_many",
    "play_transductive",
    "post_switch_excess",
]
