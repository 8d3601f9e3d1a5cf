"""Empirical-risk-minimization oracles and the convex machinery behind them."""

from minimaxforecast.erm.bruteforce import bruteforce_tracenorm_erm
from minimaxforecast.erm.oracles import (
    FiniteErm,
    ThresholdErm,
    TraceNormErm,
    create_erm_dispatcher,
    create_oracle,
    finite_erm,
    induced_threshold_class,
    threshold_erm,
    tracenorm_erm,
)
from minimaxforecast.erm.processing import ErmDispatcher, ErmOracle
from minimaxforecast.erm.projections import box_project, dykstra_project, l1_ball_project, tracenorm_project
from minimaxforecast.erm.svd import jacobi_svd, spectral_norm, trace_norm

__all__ = [
    "ErmDispatcher",
    "ErmOracle",
    "FiniteErm",
    "ThresholdErm",
    "TraceNormErm",
    "box_project",
    "bruteforce_tracenorm_erm",
    "create_erm_dispatcher",
    "create_oracle",
    "dykstra_project",
    "finite_erm",
    "induced_threshold_class",
    "jacobi_svd",
    "l1_ball_project",
    "spectral_norm",
    "threshold_erm",
    "trace_norm",
    "tracenorm_erm",
    "tracenorm_project",
]
