"""Turn an :class:`ExperimentSpec` into seeded games and output files.

Outputs (all floats at 12 significant digits):

- ``transcript.csv``: the rounds of the first trial,
  ``round,prediction,outcome,loss,r_t,z_t,cum_loss,cum_best,regret``;
- ``summary.json``: aggregate statistics over every trial;
- ``curve.csv``: ``T,mean_regret,stderr,bound``, one row per horizon, when
  horizons are given.
"""

from __future__ import annotations

import csv
import functools
import json
import logging
import time
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict

from minimaxforecast.config import ExperimentSpec
from minimaxforecast.erm.oracles import induced_threshold_class
from minimaxforecast.errors import ConfigError
from minimaxforecast.games.adversaries import AdversarySpec, Lemma4SwitchAdversary, create_adversary
from minimaxforecast.games.forecasters import R2Forecaster, create_forecaster
from minimaxforecast.games.play import (
    cf_class,
    ordered_threshold_class,
    play_cf_game,
    play_expert_game,
    play_many,
    post_switch_excess,
)
from minimaxforecast.losses import create_loss
from minimaxforecast.minimax import ENUMERATION_CAP, theorem2_bound
from minimaxforecast.r2 import theorem3_bound
from minimaxforecast.rademacher import exact_rademacher, mc_rademacher, spectral_rademacher_tracenorm
from minimaxforecast.streams import RandomStream, derive_trial_seed
from minimaxforecast.types import (
    CfSchedule,
    FiniteExpertClass,
    RademacherEstimate,
    ThresholdClass,
    TraceNormClass,
    Transcript,
)

logger = logging.getLogger(__name__)

TRANSCRIPT_FILE = "transcript.csv"
SUMMARY_FILE = "summary.json"
CURVE_FILE = "curve.csv"
TRANSCRIPT_HEADER = ["round", "prediction", "outcome", "loss", "r_t", "z_t", "cum_loss", "cum_best", "regret"]
CURVE_HEADER = ["T", "mean_regret", "stderr", "bound"]
# Regret may exceed the exact minimax value by float noise only.
BOUND_SLACK = 1e-9
# Largest n for which the trace-norm Rademacher complexity is enumerated exactly.
SPECTRAL_EXACT_MAX_N = 2

_FORECASTER_KINDS = {"mf": "mf", "mf_star": "mf_star", "r2": "r2", "transductive": "mf_star"}


def fmt(value: float) -> str:
    """Locale-independent 12-significant-digit rendering."""
    return f"{float(value):.12g}"


def _round12(value: float | None) -> float | None:
    return None if value is None else float(fmt(value))


class TrialResult(BaseModel):
    """Outcome of one seeded game."""

    model_config = ConfigDict(frozen=True)

    seed: int
    transcript: Transcript
    # final regret, or the running maximum for the CF game
    regret: float
    erm_calls: int
    # smallest loss(p_t, y*_t) - loss(f*_t, y*_t) over the post-switch rounds, when an adversary switched
    min_switch_excess: float | None = None
    seconds: float = 0.0


# ============================================================================
# Building blocks
# ============================================================================


def default_instances(horizon: int) -> tuple[float, ...]:
    """Evenly spaced points in (0, 1)."""
    return tuple(float(fmt((i + 0.5) / horizon)) for i in range(horizon))


def build_class(spec: ExperimentSpec) -> Any:
    """The comparison class a spec describes; random classes depend on the seed only."""
    match spec.class_source:
        case "inline":
            assert spec.expert_class is not None
            return FiniteExpertClass.new(spec.expert_class, spec.bound_b)
        case "random":
            return FiniteExpertClass.random(spec.n_experts, spec.horizon, RandomStream(spec.seed, "class"), spec.bound_b)
        case "thresholds":
            instances = spec.instances if spec.instances is not None else default_instances(spec.horizon)
            return ThresholdClass(instances=instances, polarity=spec.polarity)
        case "tracenorm":
            return TraceNormClass.full(spec.n, spec.n, spec.radius, spec.bound_b)
    raise ConfigError(f"unknown class source {spec.class_source!r}")


def permutation_for(spec: ExperimentSpec, trial_seed: int, size: int) -> np.ndarray:
    match spec.order:
        case "identity":
            return np.arange(size)
        case "reversed":
            return np.arange(size)[::-1]
        case _:
            return RandomStream(trial_seed, "permutation").permutation(size)


def schedule_for(spec: ExperimentSpec, trial_seed: int) -> CfSchedule:
    entries = [(i, j) for i in range(spec.n) for j in range(spec.n)]
    order = [entries[k] for k in permutation_for(spec, trial_seed, len(entries))]
    return CfSchedule(n_rows=spec.n, n_cols=spec.n, order=tuple(order), horizon=len(order))


def rademacher_for(spec: ExperimentSpec, expert_class: Any) -> RademacherEstimate:
    """R_T of the comparison class: exact where enumeration is affordable."""
    stream = RandomStream(spec.seed, "rademacher")
    if isinstance(expert_class, TraceNormClass):
        exact = spec.n <= SPECTRAL_EXACT_MAX_N
        return spectral_rademacher_tracenorm(spec.n, spec.radius, spec.rademacher_samples, stream, exact=exact)
    if isinstance(expert_class, ThresholdClass):
        expert_class = induced_threshold_class(expert_class.instances, expert_class.polarity)
    if expert_class.horizon <= ENUMERATION_CAP:
        return RademacherEstimate(estimate=exact_rademacher(expert_class), method="exact")
    return mc_rademacher(expert_class, spec.rademacher_samples, stream)


def bound_for(spec: ExperimentSpec, rademacher: float) -> float | None:
    """The regret bound the experiment is checked against."""
    config = spec.game_config(spec.seed)
    match spec.kind:
        case "mf":
            return rademacher
        case "mf_star" | "transductive":
            return theorem2_bound(rademacher, config.horizon_T, spec.delta)
        case "r2" | "cf":
            return theorem3_bound(config.rho, spec.bound_b, spec.eta, config.horizon_T, spec.delta, rademacher)
    return None


def adversary_spec(spec: ExperimentSpec) -> AdversarySpec:
    base = AdversarySpec(tag="iid_random", distribution=spec.adversary_distribution)
    return AdversarySpec(
        tag=spec.adversary,
        sequence=spec.adversary_sequence,
        distribution=spec.adversary_distribution,
        switch_round=spec.switch_round,
        base=base if spec.adversary == "lemma4_switch" else None,
        outcome_grid=spec.outcome_grid,
    )


def run_trial(spec: ExperimentSpec, trial_seed: int) -> TrialResult:
    """Play one seeded game. Module level so worker processes can unpickle it."""
    started = time.perf_counter()
    config = spec.game_config(trial_seed)
    loss = create_loss(spec.loss, spec.bound_b)
    expert_class = build_class(spec)

    if spec.kind == "cf":
        schedule = schedule_for(spec, trial_seed)
        solver: dict[str, Any] = {
            "max_iterations": spec.solver_iterations,
            "tolerance": spec.solver_tolerance,
            "step_constant": spec.solver_step,
        }
        tracenorm_class = cf_class(schedule, spec.radius, spec.bound_b)
        forecaster = R2Forecaster.from_game(tracenorm_class, loss, config, **solver)
        adversary = create_adversary(adversary_spec(spec), tracenorm_class, loss, forecaster, spec.bound_b)
        transcript = play_cf_game(schedule, spec.radius, adversary, loss, config, forecaster, **solver)
        regret = transcript.max_running_regret
    else:
        if isinstance(expert_class, ThresholdClass):
            expert_class = ordered_threshold_class(expert_class, permutation_for(spec, trial_seed, expert_class.horizon))
        options = {"mode": spec.mode} if _FORECASTER_KINDS[spec.kind] == "mf_star" else {}
        forecaster = create_forecaster(_FORECASTER_KINDS[spec.kind], expert_class, loss, config, **options)
        adversary = create_adversary(adversary_spec(spec), expert_class, loss, forecaster, spec.bound_b)
        transcript = play_expert_game(forecaster, adversary, expert_class, loss, config)
        regret = transcript.final_regret

    min_excess = None
    if isinstance(adversary, Lemma4SwitchAdversary):
        excess = post_switch_excess(transcript, adversary, loss)
        min_excess = min((row.excess for row in excess), default=None)
    oracle = getattr(forecaster, "oracle", None)
    return TrialResult(
        seed=trial_seed,
        transcript=transcript,
        regret=regret,
        erm_calls=oracle.calls if oracle is not None else 0,
        min_switch_excess=min_excess,
        seconds=time.perf_counter() - started,
    )


def run_trials(spec: ExperimentSpec) -> list[TrialResult]:
    """Every trial of a spec, in trial order."""
    seeds = [derive_trial_seed(spec.seed, trial) for trial in range(spec.trials)]
    return play_many(functools.partial(run_trial, spec), seeds, spec.workers)


# ============================================================================
# Writers
# ============================================================================


def write_transcript(transcript: Transcript, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRANSCRIPT_HEADER)
        for row in transcript.rows:
            writer.writerow(
                [
                    row.round,
                    fmt(row.prediction),
                    fmt(row.outcome),
                    fmt(row.loss),
                    "" if row.r_t is None else fmt(row.r_t),
                    "" if row.z_t is None else row.z_t,
                    fmt(row.cum_loss),
                    fmt(row.cum_best),
                    fmt(row.regret),
                ]
            )


def write_json(payload: dict[str, Any], path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _mean_and_stderr(values: np.ndarray) -> tuple[float, float]:
    if values.size < 2:
        return float(np.mean(values)), 0.0
    return float(np.mean(values)), float(np.std(values, ddof=1) / np.sqrt(values.size))


def summarise(
    spec: ExperimentSpec,
    results: list[TrialResult],
    rademacher: RademacherEstimate,
    bound: float | None,
    wall_time: float,
) -> dict[str, Any]:
    regrets = np.array([result.regret for result in results], dtype=float)
    mean, stderr = _mean_and_stderr(regrets) if results else (None, None)
    calls = sum(result.erm_calls for result in results) / max(1, len(results))
    violations = None
    if bound is not None and results:
        violations = float(np.mean(regrets > bound + BOUND_SLACK))
    return {
        "kind": spec.kind,
        "seed": spec.seed,
        "trials": spec.trials,
        "mean_regret": _round12(mean),
        "regret_stderr": _round12(stderr),
        "rademacher_estimate": _round12(rademacher.estimate),
        "bound_value": _round12(bound),
        "bound_violation_fraction": _round12(violations),
        "erm_calls": int(calls) if float(calls).is_integer() else _round12(calls),
        "wall_time_s": round(wall_time, 3),
        "solver_tolerance": spec.solver_tolerance if spec.kind == "cf" else 0.0,
    }


# ============================================================================
# Entry points
# ============================================================================


def run(spec: ExperimentSpec) -> dict[str, Any]:
    """Run a game or estimation experiment and write its files; returns the summary."""
    if spec.kind == "verify":
        from minimaxforecast.verify import run_verify

        return run_verify(spec)

    started = time.perf_counter()
    out = spec.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    expert_class = build_class(spec)
    rademacher = rademacher_for(spec, expert_class)

    results: list[TrialResult] = []
    bound = None
    if spec.kind != "rademacher":
        bound = bound_for(spec, rademacher.estimate)
        results = run_trials(spec)
        write_transcript(results[0].transcript, out / TRANSCRIPT_FILE)
        excesses = [r.min_switch_excess for r in results if r.min_switch_excess is not None]
        if excesses:
            logger.info("smallest post-switch excess over f*: %.3g", min(excesses))

    summary = summarise(spec, results, rademacher, bound, time.perf_counter() - started)
    write_json(summary, out / SUMMARY_FILE)
    logger.info("wrote %s results to %s", spec.kind, out)
    if spec.horizons is not None:
        emit_curve(spec, spec.horizons)
    return summary


def emit_curve(spec: ExperimentSpec, horizons) -> list[tuple[int, float, float, float]]:
    """Mean regret against horizon, with the R^2 bound re-evaluated at each T."""
    if spec.kind in ("verify", "rademacher", "cf"):
        raise ConfigError(f"no regret curve for {spec.kind} experiments")
    horizons = [int(h) for h in horizons]
    if any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ConfigError("horizons must be increasing")
    rows = []
    for horizon in horizons:
        point = spec.updated(horizon=horizon, horizons=None)
        rademacher = rademacher_for(point, build_class(point))
        config = point.game_config(point.seed)
        bound = theorem3_bound(config.rho, point.bound_b, point.eta, horizon, point.delta, rademacher.estimate)
        regrets = np.array([result.regret for result in run_trials(point)], dtype=float)
        mean, stderr = _mean_and_stderr(regrets)
        logger.info("curve point T=%d: mean regret %.6g (bound %.6g)", horizon, mean, bound)
        rows.append((horizon, mean, stderr, bound))

    out = spec.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    with (out / CURVE_FILE).open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for horizon, mean, stderr, bound in rows:
            writer.writerow([horizon, fmt(mean), fmt(stderr), fmt(bound)])
    return rows


__all__ = [
    "CURVE_FILE",
    "SUMMARY_FILE",
    "TRANSCRIPT_FILE",
    "TrialResult",
    "bound_for",
    "build_class",
    "emit_curve",
    "fmt",
    "rademacher_for",
    "run",
    "run_trial",
    "run_trials",
    "write_transcript",
]
