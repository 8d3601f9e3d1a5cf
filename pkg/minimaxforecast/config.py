"""Experiment configuration.

Experiments are described by flat ``key = value`` text files. Blank lines and
``#`` comments are ignored; every key appears at most once and unknown keys
are errors. List values are comma separated, and the inline expert table
(``class``) separates experts with ``;``::

    kind = r2
    horizon = 8
    class = 1,1,1,1,1,1,1,1; -1,-1,-1,-1,-1,-1,-1,-1
    adversary = iid_random
    trials = 100

Every problem is reported as a :class:`~minimaxforecast.errors.ConfigError`
carrying the line number of the offending key.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from minimaxforecast.errors import ArgumentError, ConfigError
from minimaxforecast.losses import create_loss
from minimaxforecast.types import GameConfig

OUTPUT_ENV = "MINIMAXFORECAST_OUT"

ExperimentKind = Literal["verify", "mf", "mf_star", "r2", "transductive", "cf", "rademacher"]

SUITES = (
    "theorem1",
    "dp",
    "theorem2_expectation",
    "theorem2_high_probability",
    "theorem3",
    "lemma4",
    "theorem4_rate",
    "theorem5",
    "determinism",
)
DEFAULT_SUITES = ("theorem1", "dp")


class ExperimentSpec(BaseModel):
    """Everything needed to reproduce one experiment."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ExperimentKind = "verify"
    seed: int = Field(default=0, ge=0, lt=1 << 64)
    trials: int = Field(default=1, ge=1)
    # None uses every available processor
    workers: int | None = Field(default=None, ge=1)

    # game
    horizon: int = Field(default=4, ge=1)
    bound_b: float = Field(default=1.0, gt=0)
    rho: float | None = Field(default=None, gt=0)
    eta: float = Field(default=1.0, gt=0)
    delta: float = Field(default=0.1, gt=0, lt=1)
    loss: str = "absolute"
    mode: Literal["fresh", "reused"] = "fresh"

    # comparison class
    class_source: Literal["inline", "random", "thresholds", "tracenorm"] = "random"
    expert_class: Tuple[Tuple[float, ...], ...] | None = None
    n_experts: int = Field(default=4, ge=1)
    instances: Tuple[float, ...] | None = None
    polarity: Literal["both", "positive"] = "both"
    n: int = Field(default=2, ge=1)
    radius: float = Field(default=1.0, gt=0)
    order: Literal["identity", "reversed", "random"] = "identity"

    # adversary
    adversary: Literal["fixed_sequence", "iid_random", "exhaustive_worst_case", "lemma4_switch"] = "iid_random"
    adversary_sequence: Tuple[float, ...] | None = None
    adversary_distribution: Literal["rademacher", "uniform"] = "rademacher"
    switch_round: int | None = Field(default=None, ge=0)
    outcome_grid: Tuple[float, ...] | None = None

    # solvers and estimators
    solver_iterations: int = Field(default=500, ge=1)
    solver_tolerance: float = Field(default=1e-9, gt=0)
    solver_step: float | None = Field(default=None, gt=0)
    rademacher_samples: int = Field(default=2000, ge=2)

    # verify
    suites: Tuple[str, ...] = DEFAULT_SUITES
    verify_seeds: int | None = Field(default=None, ge=2)

    # output
    out: str = "out"
    horizons: Tuple[int, ...] | None = None

    @model_validator(mode="before")
    @classmethod
    def _default_class_source(cls, data: Any) -> Any:
        if isinstance(data, dict) and "class_source" not in data:
            implied = {"cf": "tracenorm", "transductive": "thresholds"}.get(data.get("kind", ""))
            if implied is None and data.get("expert_class") is not None:
                implied = "inline"
            if implied is not None:
                data = {**data, "class_source": implied}
        return data

    @model_validator(mode="after")
    def _check_kind(self) -> ExperimentSpec:
        try:
            create_loss(self.loss, self.bound_b)
        except ArgumentError as exc:
            raise ValueError(str(exc)) from None
        if self.kind == "cf" and self.class_source != "tracenorm":
            raise ValueError("cf experiments need class_source = tracenorm")
        if self.kind == "transductive" and self.class_source != "thresholds":
            raise ValueError("transductive experiments need class_source = thresholds")
        if self.class_source == "inline":
            if self.expert_class is None:
                raise ValueError("class_source = inline needs a class table")
            if len(self.expert_class[0]) != self.horizon:
                raise ValueError(f"the inline class has horizon {len(self.expert_class[0])}, not {self.horizon}")
            if self.horizons is not None:
                raise ValueError("an inline class has a fixed horizon; horizons cannot vary it")
        if self.instances is not None and len(self.instances) != self.horizon:
            raise ValueError(f"{len(self.instances)} instances for horizon {self.horizon}")
        if self.adversary == "fixed_sequence" and self.adversary_sequence is None:
            raise ValueError("adversary = fixed_sequence needs adversary_sequence")
        if self.adversary == "lemma4_switch" and self.switch_round is None:
            raise ValueError("adversary = lemma4_switch needs switch_round")
        if self.adversary == "lemma4_switch" and self.kind in ("mf", "mf_star", "transductive"):
            raise ValueError(f"adversary = lemma4_switch reveals real outcomes; {self.kind} plays sign outcomes only")
        if self.horizons is not None and any(b <= a for a, b in zip(self.horizons, self.horizons[1:])):
            raise ValueError("horizons must be increasing")
        unknown = [name for name in self.suites if name != "all" and name not in SUITES]
        if unknown:
            raise ValueError(f"unknown verify suites {unknown}; known suites: {list(SUITES)}")
        return self

    @property
    def game_horizon(self) -> int:
        """Rounds of one game; the CF game runs over every entry."""
        return self.n * self.n if self.kind == "cf" else self.horizon

    @property
    def selected_suites(self) -> tuple[str, ...]:
        return SUITES if "all" in self.suites else self.suites

    def game_config(self, master_seed: int) -> GameConfig:
        rho = self.rho if self.rho is not None else create_loss(self.loss, self.bound_b).lipschitz_rho
        return GameConfig(
            horizon_T=self.game_horizon,
            bound_b=self.bound_b,
            rho=rho,
            eta=self.eta,
            delta=self.delta,
            master_seed=master_seed,
        )

    def output_dir(self) -> Path:
        """The output directory, overridden by the environment when set."""
        return Path(os.environ.get(OUTPUT_ENV) or self.out)

    def updated(self, **changes: Any) -> ExperimentSpec:
        """A validated copy with some fields replaced."""
        return ExperimentSpec.model_validate({**self.model_dump(exclude_unset=True), **changes})


# ============================================================================
# Parsing
# ============================================================================

# config key -> model field, where they differ
_KEY_FIELDS = {"class": "expert_class"}


def _parse_list(raw: str, convert) -> tuple:
    return tuple(convert(item.strip()) for item in raw.split(",") if item.strip())


def _parse_table(raw: str) -> tuple:
    return tuple(_parse_list(row, float) for row in raw.split(";") if row.strip())


_PARSERS: dict[str, Any] = {
    "expert_class": _parse_table,
    "instances": lambda raw: _parse_list(raw, float),
    "adversary_sequence": lambda raw: _parse_list(raw, float),
    "outcome_grid": lambda raw: _parse_list(raw, float),
    "horizons": lambda raw: _parse_list(raw, int),
    "suites": lambda raw: _parse_list(raw, str),
}


def parse_config(text: str) -> ExperimentSpec:
    """Parse the text of a config file."""
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw_line.strip()!r}", number)
        key, raw = (part.strip() for part in line.split("=", 1))
        field = _KEY_FIELDS.get(key, key)
        if field not in ExperimentSpec.model_fields or (field in _KEY_FIELDS.values() and key not in _KEY_FIELDS):
            raise ConfigError(f"unknown key {key!r}", number)
        if field in values:
            raise ConfigError(f"duplicate key {key!r} (first given on line {lines[field]})", number)
        try:
            values[field] = _PARSERS[field](raw) if field in _PARSERS else (None if raw.lower() == "none" else raw)
        except ValueError as exc:
            raise ConfigError(f"cannot parse {key!r}: {exc}", number) from None
        lines[field] = number
    return validate_spec(values, lines)


def validate_spec(values: dict[str, Any], lines: dict[str, int] | None = None) -> ExperimentSpec:
    """Build a spec, turning validation errors into config errors."""
    try:
        return ExperimentSpec.model_validate(values)
    except ValidationError as exc:
        error = exc.errors()[0]
        field = str(error["loc"][0]) if error["loc"] else None
        line = (lines or {}).get(field) if field is not None else None
        where = f"{field}: " if field is not None else ""
        raise ConfigError(f"{where}{error['msg']}", line) from None


def load_config(path: str | Path) -> ExperimentSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


__all__ = [
    "DEFAULT_SUITES",
    "OUTPUT_ENV",
    "SUITES",
    "ExperimentKind",
    "ExperimentSpec",
    "load_config",
    "parse_config",
    "validate_spec",
]
