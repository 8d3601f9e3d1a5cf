"""Rademacher complexity estimators.

R_T(F) = E sup_f sum_t sigma_t f_t for i.i.d. uniform signs sigma. Finite
classes are handled by enumeration or direct sampling; any other class goes
through its ERM oracle using sup_f sum sigma f = b (T - inf_f L(f/b, sigma))
under the absolute loss. The trace-norm ball has the closed form
r * ||Sigma||_spectral for a sign matrix Sigma.
"""

import logging

import numpy as np

from minimaxforecast.erm.processing import ErmOracle
from minimaxforecast.erm.svd import spectral_norm
from minimaxforecast.errors import ArgumentError, CapacityError
from minimaxforecast.minimax import CHUNK_ROWS, ENUMERATION_CAP, sign_sequences
from minimaxforecast.streams import RandomStream
from minimaxforecast.types import FiniteExpertClass, RademacherEstimate

logger = logging.getLogger(__name__)

SPECTRAL_DIMENSION_CAP = 32
SPECTRAL_EXACT_ENTRIES_CAP = 16


def exact_rademacher(expert_class: FiniteExpertClass) -> float:
    """E sup_f sum_t sigma_t f_t over all 2^T sign vectors."""
    horizon = expert_class.horizon
    if horizon > ENUMERATION_CAP:
        raise CapacityError("exact_rademacher", horizon, ENUMERATION_CAP)
    table = expert_class.matrix
    total_vectors = 1 << horizon
    total = 0.0
    for start in range(0, total_vectors, CHUNK_ROWS):
        signs = sign_sequences(horizon, start=start, stop=min(total_vectors, start + CHUNK_ROWS))
        total += float(np.sum(np.max(signs @ table.T, axis=1)))
    return total / total_vectors


def rademacher_via_erm_identity(erm: ErmOracle, sigma, bound_b: float = 1.0) -> float:
    """sup_f sum sigma f recovered from one absolute-loss ERM call.

    ``bound_b`` is the factor the oracle's class was divided by (1 for an
    unscaled oracle over [-1, 1]^T).
    """
    if erm.loss.kind != "absolute":
        raise ArgumentError("the ERM identity holds for the absolute loss only")
    sigma = np.asarray(sigma, dtype=float)
    return bound_b * (sigma.size - erm.infimum(sigma))


def _summarise(sups: np.ndarray, method: str) -> RademacherEstimate:
    return RademacherEstimate(
        estimate=float(np.mean(sups)),
        standard_error=float(np.std(sups, ddof=1) / np.sqrt(sups.size)),
        method=method,  # type: ignore[arg-type]
        samples=int(sups.size),
    )


def mc_rademacher(
    class_or_erm: FiniteExpertClass | ErmOracle,
    samples: int,
    stream: RandomStream,
    bound_b: float = 1.0,
) -> RademacherEstimate:
    """Sample mean and standard error of the supremum over ``samples`` sign vectors.

    For finite classes each supremum is centred on the first expert,
    sup_f sum sigma (f - f_1); the mean is unchanged and a singleton class
    gets exactly 0 with no spread.
    """
    if samples < 2:
        raise ArgumentError("a Monte-Carlo estimate needs at least two samples")
    if isinstance(class_or_erm, FiniteExpertClass):
        table = class_or_erm.matrix
        signs = stream.rademacher((samples, class_or_erm.horizon))
        sups = np.max(signs @ (table - table[0]).T, axis=1)
    else:
        erm = class_or_erm
        if erm.loss.kind != "absolute":
            raise ArgumentError("the ERM identity holds for the absolute loss only")
        signs = stream.rademacher((samples, erm.horizon))
        sups = bound_b * (erm.horizon - erm.infimum_many(signs))
    return _summarise(sups, "monte_carlo")


def spectral_rademacher_tracenorm(
    n: int,
    radius_r: float,
    samples: int,
    stream: RandomStream,
    exact: bool = False,
) -> RademacherEstimate:
    """r E ||Sigma||_spectral over n x n sign matrices, every entry scheduled.

    This is the Rademacher complexity of the whole trace-norm ball, an upper
    bound for the ball intersected with an entry box.
    """
    if n < 1 or radius_r <= 0:
        raise ArgumentError("n and the radius must be positive")
    if n > SPECTRAL_DIMENSION_CAP:
        raise CapacityError("spectral_rademacher_tracenorm", n, SPECTRAL_DIMENSION_CAP)
    if exact:
        entries = n * n
        if entries > SPECTRAL_EXACT_ENTRIES_CAP:
            raise CapacityError("spectral_rademacher_tracenorm (exact)", entries, SPECTRAL_EXACT_ENTRIES_CAP)
        norms = [spectral_norm(signs.reshape(n, n)) for signs in sign_sequences(entries)]
        return RademacherEstimate(estimate=radius_r * float(np.mean(norms)), method="exact", samples=len(norms))
    if samples < 2:
        raise ArgumentError("a Monte-Carlo estimate needs at least two samples")
    matrices = stream.rademacher((samples, n, n))
    sups = radius_r * np.array([spectral_norm(m) for m in matrices])
    return _summarise(sups, "spectral")


def tracenorm_growth_ratios(ns, samples: int, stream: RandomStream) -> list[tuple[int, float]]:
    """spectral_rademacher_tracenorm(n, r=n) / n^(3/2) for each n."""
    ratios = []
    for n in ns:
        estimate = spectral_rademacher_tracenorm(n, float(n), samples, stream.derive("tracenorm_growth", int(n)))
        ratio = estimate.estimate / n**1.5
        logger.info("trace-norm Rademacher growth: n=%d ratio=%.6g", n, ratio)
        ratios.append((int(n), ratio))
    return ratios


__all__ = [
    "exact_rademacher",
    "mc_rademacher",
    "rademacher_via_erm_identity",
    "spectral_rademacher_tracenorm",
    "tracenorm_growth_ratios",
]
