"""Domain types shared by the forecasters, oracles and game harnesses.

Everything here is an immutable pydantic model. Matrix-valued fields are
stored as nested tuples; ``.matrix`` / ``.vector`` properties hand out fresh
numpy arrays for computation. Validation lives here; the algorithms that
consume these values live in the minimax, r2, erm and games packages.
"""

from __future__ import annotations

import math
from typing import Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from minimaxforecast.losses import LossSpec, cumulative_loss
from minimaxforecast.streams import RandomStream

# Slack allowed when checking stored entries against their declared bound.
BOUND_SLACK = 1e-12
# Tolerance of the regret-reconstruction invariant.
REGRET_TOLERANCE = 1e-12


class _FrozenModel(BaseModel):
    """Base class for immutable value types."""

    model_config = ConfigDict(frozen=True)


class FiniteExpertClass(_FrozenModel):
    """An explicit N x T table of static expert predictions in [-b, b]."""

    predictions: Tuple[Tuple[float, ...], ...]
    bound_b: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _check_table(self) -> FiniteExpertClass:
        if len(self.predictions) < 1:
            raise ValueError("a finite class needs at least one expert")
        horizon = len(self.predictions[0])
        if horizon < 1:
            raise ValueError("experts must predict at least one round")
        for row in self.predictions:
            if len(row) != horizon:
                raise ValueError("all experts must have the same horizon")
            for entry in row:
                if not math.isfinite(entry) or abs(entry) > self.bound_b + BOUND_SLACK:
                    raise ValueError(f"expert prediction {entry} outside [-{self.bound_b}, {self.bound_b}]")
        return self

    @classmethod
    def new(cls, predictions, bound_b: float = 1.0) -> FiniteExpertClass:
        """Create a class from any 2-d array-like of predictions."""
        table = np.asarray(predictions, dtype=float)
        if table.ndim == 1:
            table = table[np.newaxis, :]
        return cls(predictions=tuple(tuple(float(v) for v in row) for row in table), bound_b=bound_b)

    @classmethod
    def random(cls, n_experts: int, horizon: int, stream: RandomStream, bound_b: float = 1.0) -> FiniteExpertClass:
        """Experts with entries drawn uniformly from [-b, b]."""
        return cls.new(stream.uniform(-bound_b, bound_b, size=(n_experts, horizon)), bound_b)

    @property
    def n_experts(self) -> int:
        return len(self.predictions)

    @property
    def horizon(self) -> int:
        return len(self.predictions[0])

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.predictions, dtype=float)

    def scaled(self) -> FiniteExpertClass:
        """The class divided by its bound, living in [-1, 1]^T."""
        return FiniteExpertClass.new(self.matrix / self.bound_b, 1.0)

    def rescaled(self, factor: float) -> FiniteExpertClass:
        return FiniteExpertClass.new(self.matrix * factor, self.bound_b * abs(factor))

    def permuted(self, order) -> FiniteExpertClass:
        """Reorder the columns so that round t shows column ``order[t]``."""
        return FiniteExpertClass.new(self.matrix[:, np.asarray(order, dtype=int)], self.bound_b)

    def deduplicated(self) -> FiniteExpertClass:
        """Keep the distinct behaviour vectors, in order of first appearance."""
        _, first = np.unique(self.matrix, axis=0, return_index=True)
        return FiniteExpertClass.new(self.matrix[np.sort(first)], self.bound_b)

    def extended(self, other: FiniteExpertClass) -> FiniteExpertClass:
        return FiniteExpertClass.new(np.vstack([self.matrix, other.matrix]), max(self.bound_b, other.bound_b))


class GameConfig(_FrozenModel):
    """Horizon, bounds, precision, confidence and seed of one game."""

    horizon_T: int = Field(gt=0)
    bound_b: float = Field(default=1.0, gt=0)
    rho: float = Field(default=1.0, gt=0)
    eta: float = Field(default=1.0, gt=0)
    delta: float = Field(default=0.1, gt=0, lt=1)
    master_seed: int = Field(default=0, ge=0, lt=1 << 64)

    @model_validator(mode="after")
    def _check_eta(self) -> GameConfig:
        if self.eta * self.horizon_T < 1 - 1e-9:
            raise ValueError(f"eta={self.eta} must be at least 1/T = {1 / self.horizon_T}")
        return self

    def with_seed(self, master_seed: int) -> GameConfig:
        return self.model_copy(update={"master_seed": master_seed})


class TranscriptRow(_FrozenModel):
    """One round of a game."""

    round: int = Field(ge=1)
    prediction: float
    outcome: float
    loss: float
    r_t: float | None = None
    z_t: Literal[-1, 1] | None = None
    cum_loss: float
    cum_best: float
    regret: float
    # False when cum_best was carried over from an earlier checkpoint.
    best_evaluated: bool = True

    @model_validator(mode="after")
    def _check_row(self) -> TranscriptRow:
        if (self.r_t is None) != (self.z_t is None):
            raise ValueError("r_t and z_t must be recorded together")
        if self.r_t is not None and not 0.0 <= self.r_t <= 1.0:
            raise ValueError(f"rounding probability {self.r_t} outside [0, 1]")
        if abs(self.regret - (self.cum_loss - self.cum_best)) > REGRET_TOLERANCE:
            raise ValueError("regret must equal cumulative loss minus cumulative best-in-class loss")
        return self


class Transcript(_FrozenModel):
    """Per-round record of a complete game."""

    rows: Tuple[TranscriptRow, ...] = ()

    @model_validator(mode="after")
    def _check_rounds(self) -> Transcript:
        for index, row in enumerate(self.rows, start=1):
            if row.round != index:
                raise ValueError(f"row {index} carries round index {row.round}")
        return self

    @classmethod
    def from_rounds(
        cls,
        predictions,
        outcomes,
        losses,
        best,
        rounding: list[tuple[float, int] | None] | None = None,
        evaluated: list[bool] | None = None,
    ) -> Transcript:
        """Build the cumulative columns from per-round values.

        ``best`` is the best-in-class cumulative loss on each prefix.
        """
        rows: list[TranscriptRow] = []
        cum_loss = 0.0
        for t, (p, y, loss, best_t) in enumerate(zip(predictions, outcomes, losses, best, strict=True)):
            cum_loss += float(loss)
            r_t, z_t = rounding[t] if rounding is not None and rounding[t] is not None else (None, None)
            rows.append(
                TranscriptRow(
                    round=t + 1,
                    prediction=float(p),
                    outcome=float(y),
                    loss=float(loss),
                    r_t=r_t,
                    z_t=z_t,
                    cum_loss=cum_loss,
                    cum_best=float(best_t),
                    regret=cum_loss - float(best_t),
                    best_evaluated=True if evaluated is None else evaluated[t],
                )
            )
        return cls(rows=tuple(rows))

    @property
    def horizon(self) -> int:
        return len(self.rows)

    @property
    def predictions(self) -> np.ndarray:
        return np.array([row.prediction for row in self.rows], dtype=float)

    @property
    def outcomes(self) -> np.ndarray:
        return np.array([row.outcome for row in self.rows], dtype=float)

    @property
    def regrets(self) -> np.ndarray:
        return np.array([row.regret for row in self.rows], dtype=float)

    @property
    def final_regret(self) -> float:
        return self.rows[-1].regret if self.rows else 0.0

    @property
    def max_running_regret(self) -> float:
        return max((row.regret for row in self.rows), default=0.0)

    def replay_regret(self, loss: LossSpec) -> np.ndarray:
        """Regret recomputed from the predictions and outcomes against the best-in-class column."""
        predictions, outcomes = self.predictions, self.outcomes
        cumulative = [cumulative_loss(predictions[:t], outcomes[:t], loss) for t in range(1, self.horizon + 1)]
        best = np.array([row.cum_best for row in self.rows], dtype=float)
        return np.array(cumulative, dtype=float) - best


class TraceNormClass(_FrozenModel):
    """Matrices with trace norm at most r and entries at most b, read through a schedule."""

    n_rows: int = Field(gt=0)
    n_cols: int = Field(gt=0)
    radius_r: float = Field(gt=0)
    entry_bound_b: float = Field(default=1.0, gt=0)
    entry_schedule: Tuple[Tuple[int, int], ...]

    @model_validator(mode="after")
    def _check_schedule(self) -> TraceNormClass:
        if len(set(self.entry_schedule)) != len(self.entry_schedule):
            raise ValueError("scheduled entries must be distinct")
        for i, j in self.entry_schedule:
            if not (0 <= i < self.n_rows and 0 <= j < self.n_cols):
                raise ValueError(f"entry ({i}, {j}) outside a {self.n_rows}x{self.n_cols} matrix")
        return self

    @classmethod
    def full(cls, n_rows: int, n_cols: int, radius_r: float, entry_bound_b: float = 1.0, order=None) -> TraceNormClass:
        """Schedule every entry, row-major unless an order is given."""
        schedule = order if order is not None else [(i, j) for i in range(n_rows) for j in range(n_cols)]
        return cls(
            n_rows=n_rows,
            n_cols=n_cols,
            radius_r=radius_r,
            entry_bound_b=entry_bound_b,
            entry_schedule=tuple((int(i), int(j)) for i, j in schedule),
        )

    @property
    def horizon(self) -> int:
        return len(self.entry_schedule)


class CfSchedule(_FrozenModel):
    """Revelation order of the collaborative-filtering game."""

    n_rows: int = Field(gt=0)
    n_cols: int = Field(gt=0)
    order: Tuple[Tuple[int, int], ...]
    horizon: int = Field(ge=0)

    @model_validator(mode="after")
    def _check_order(self) -> CfSchedule:
        expected = {(i, j) for i in range(self.n_rows) for j in range(self.n_cols)}
        if len(self.order) != len(expected) or set(self.order) != expected:
            raise ValueError("revelation order must visit every entry exactly once")
        if self.horizon > self.n_rows * self.n_cols:
            raise ValueError("cannot play more rounds than there are entries")
        return self

    @classmethod
    def row_major(cls, n_rows: int, n_cols: int, horizon: int | None = None) -> CfSchedule:
        order = tuple((i, j) for i in range(n_rows) for j in range(n_cols))
        return cls(n_rows=n_rows, n_cols=n_cols, order=order, horizon=len(order) if horizon is None else horizon)

    @classmethod
    def shuffled(cls, n_rows: int, n_cols: int, stream: RandomStream, horizon: int | None = None) -> CfSchedule:
        entries = [(i, j) for i in range(n_rows) for j in range(n_cols)]
        order = tuple(entries[k] for k in stream.permutation(len(entries)))
        return cls(n_rows=n_rows, n_cols=n_cols, order=order, horizon=len(order) if horizon is None else horizon)


class RademacherEstimate(_FrozenModel):
    """A Rademacher complexity value with its Monte-Carlo standard error."""

    estimate: float
    standard_error: float = Field(default=0.0, ge=0)
    method: Literal["exact", "monte_carlo", "spectral"]
    samples: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_exact(self) -> RademacherEstimate:
        if self.method == "exact" and self.standard_error != 0.0:
            raise ValueError("exact estimates carry no standard error")
        return self


class PlayoutMode(_FrozenModel):
    """How MF* completes the unseen future: fresh signs per round or one frozen draw."""

    tag: Literal["fresh", "reused"]
    frozen_signs: Tuple[float, ...] | None = None

    @model_validator(mode="after")
    def _check_signs(self) -> PlayoutMode:
        if self.tag == "reused":
            if self.frozen_signs is None:
                raise ValueError("reused playout needs its frozen signs")
            if any(s not in (-1.0, 1.0) for s in self.frozen_signs):
                raise ValueError("frozen signs must be +1 or -1")
        elif self.frozen_signs is not None:
            raise ValueError("fresh playout draws its signs every round")
        return self

    @classmethod
    def fresh(cls) -> PlayoutMode:
        return cls(tag="fresh")

    @classmethod
    def reused(cls, stream: RandomStream, horizon: int) -> PlayoutMode:
        """Draw Y_1..Y_T once."""
        return cls(tag="reused", frozen_signs=tuple(float(s) for s in stream.rademacher(horizon)))


class ThresholdClass(_FrozenModel):
    """One-dimensional thresholds x -> sign(x - theta) on a known instance set.

    ``order[t]`` is the index of the instance revealed at round t; ``None``
    means the instances are revealed in sorted order.
    """

    instances: Tuple[float, ...]
    polarity: Literal["both", "positive"] = "both"
    order: Tuple[int, ...] | None = None

    @model_validator(mode="after")
    def _check_instances(self) -> ThresholdClass:
        if len(self.instances) < 1:
            raise ValueError("a threshold class needs at least one instance")
        if any(b <= a for a, b in zip(self.instances, self.instances[1:])):
            raise ValueError("instances must be strictly increasing")
        if self.order is not None and sorted(self.order) != list(range(len(self.instances))):
            raise ValueError("order must be a permutation of the instance indices")
        return self

    @property
    def horizon(self) -> int:
        return len(self.instances)

    @property
    def bound_b(self) -> float:
        return 1.0

    def with_order(self, order) -> ThresholdClass:
        return self.model_copy(update={"order": tuple(int(k) for k in order)})


class ThresholdFit(_FrozenModel):
    """Best threshold under the zero-one loss."""

    errors: int
    threshold: float
    polarity: Literal[1, -1]


class ErmResult(_FrozenModel):
    """Infimum of the cumulative loss over a class, with its minimizer when known."""

    value: float
    minimizer: Tuple[float, ...] | None = None
    index: int | None = None
    matrix: Tuple[Tuple[float, ...], ...] | None = None
    converged: bool = True
    iterations: int = 0


__all__ = [
    "CfSchedule",
    "ErmResult",
    "FiniteExpertClass",
    "GameConfig",
    "PlayoutMode",
    "RademacherEstimate",
    "ThresholdClass",
    "ThresholdFit",
    "TraceNormClass",
    "Transcript",
    "TranscriptRow",
]
