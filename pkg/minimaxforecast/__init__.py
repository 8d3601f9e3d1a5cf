"""minimaxforecast - minimax forecasting with random playout and randomized rounding.

This package provides:
- the exact Minimax Forecaster for the absolute loss and binary outcomes
- MF*, its one-playout randomized version
- the R^2 forecaster for convex Lipschitz losses and real outcomes
- ERM oracles, Rademacher complexity estimators and seeded game harnesses,
  including transductive threshold learning and trace-norm matrix completion

Basic usage:
    >>> from minimaxforecast import FiniteExpertClass, GameConfig, absolute_loss
    >>> from minimaxforecast import FixedSequenceAdversary, create_forecaster, play_expert_game
    >>> experts = FiniteExpertClass.new([[1, 1], [-1, -1]])
    >>> config = GameConfig(horizon_T=2)
    >>> forecaster = create_forecaster("mf", experts, absolute_loss(), config)
    >>> transcript = play_expert_game(forecaster, FixedSequenceAdversary([1, -1]), experts, absolute_loss(), config)
    >>> transcript.final_regret
    1.0
"""

from minimaxforecast.errors import (
    ArgumentError,
    CapacityError,
    ConfigError,
    DimensionError,
    ErmFailure,
    ForecastError,
    InvariantViolation,
    NumericError,
    ProtocolViolation,
)
from minimaxforecast.games import (
    AdversarySpec,
    ExactMinimaxForecaster,
    ExhaustiveWorstCaseAdversary,
    FixedSequenceAdversary,
    IidRandomAdversary,
    Lemma4SwitchAdversary,
    MinimaxStarForecaster,
    R2Forecaster,
    create_adversary,
    create_forecaster,
    lemma4_adversary,
    max_running_regret,
    play_cf_game,
    play_expert_game,
    play_many,
    play_transductive,
    post_switch_excess,
)
from minimaxforecast.losses import LossSpec, absolute_loss, create_loss, custom_loss, squared_loss
from minimaxforecast.minimax import (
    dp_build,
    dp_prediction,
    mf_exact_prediction,
    mf_star_round,
    theorem2_bound,
    worst_case_regret_exhaustive,
)
from minimaxforecast.r2 import R2State, r2_predict, r2_round_labels, theorem3_bound
from minimaxforecast.rademacher import exact_rademacher, mc_rademacher, spectral_rademacher_tracenorm
from minimaxforecast.streams import RandomStream, derive_trial_seed
from minimaxforecast.types import (
    CfSchedule,
    FiniteExpertClass,
    GameConfig,
    PlayoutMode,
    RademacherEstimate,
    ThresholdClass,
    TraceNormClass,
    Transcript,
    TranscriptRow,
)

__all__ = [
    "AdversarySpec",
    "ArgumentError",
    "CapacityError",
    "CfSchedule",
    "ConfigError",
    "DimensionError",
    "ErmFailure",
    "ExactMinimaxForecaster",
    "ExhaustiveWorstCaseAdversary",
    "FiniteExpertClass",
    "FixedSequenceAdversary",
    "ForecastError",
    "GameConfig",
    "IidRandomAdversary",
    "InvariantViolation",
    "Lemma4SwitchAdversary",
    "LossSpec",
    "MinimaxStarForecaster",
    "NumericError",
    "PlayoutMode",
    "ProtocolViolation",
    "R2Forecaster",
    "R2State",
    "RademacherEstimate",
    "RandomStream",
    "ThresholdClass",
    "TraceNormClass",
    "Transcript",
    "TranscriptRow",
    "absolute_loss",
    "create_adversary",
    "create_forecaster",
    "create_loss",
    "custom_loss",
    "derive_trial_seed",
    "dp_build",
    "dp_prediction",
    "exact_rademacher",
    "lemma4_adversary",
    "max_running_regret",
    "mc_rademacher",
    "mf_exact_prediction",
    "mf_star_round",
    "play_cf_game",
    "play_expert_game",
    "play_many",
    "play_transductive",
    "post_switch_excess",
    "r2_predict",
    "r2_round_labels",
    "spectral_rademacher_tracenorm",
    "squared_loss",
    "theorem2_bound",
    "theorem3_bound",
    "worst_case_regret_exhaustive",
]
