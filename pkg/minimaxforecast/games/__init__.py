"""Game protocols, forecasters and adversaries."""

from minimaxforecast.games.adversaries import (
    Adversary,
    AdversarySpec,
    ExhaustiveWorstCaseAdversary,
    FixedSequenceAdversary,
    IidRandomAdversary,
    Lemma4SwitchAdversary,
    SwitchRecord,
    create_adversary,
    lemma4_adversary,
)
from minimaxforecast.games.forecasters import (
    ConstantForecaster,
    ExactMinimaxForecaster,
    FollowTheLeaderForecaster,
    Forecaster,
    ForecasterDispatcher,
    MinimaxStarForecaster,
    R2Forecaster,
    as_finite_class,
    create_forecaster,
    create_forecaster_dispatcher,
)
from minimaxforecast.games.play import (
    SwitchExcess,
    cf_class,
    max_running_regret,
    ordered_threshold_class,
    play_cf_game,
    play_expert_game,
    play_many,
    play_transductive,
    post_switch_excess,
)

__all__ = [
    "Adversary",
    "AdversarySpec",
    "ConstantForecaster",
    "ExactMinimaxForecaster",
    "ExhaustiveWorstCaseAdversary",
    "FixedSequenceAdversary",
    "FollowTheLeaderForecaster",
    "Forecaster",
    "ForecasterDispatcher",
    "IidRandomAdversary",
    "Lemma4SwitchAdversary",
    "MinimaxStarForecaster",
    "R2Forecaster",
    "SwitchExcess",
    "SwitchRecord",
    "as_finite_class",
    "cf_class",
    "create_adversary",
    "create_forecaster",
    "create_forecaster_dispatcher",
    "lemma4_adversary",
    "max_running_regret",
    "ordered_threshold_class",
    "play_cf_game",
    "play_expert_game",
    "play_many",
    "play_transductive",
    "post_switch_excess",
]
