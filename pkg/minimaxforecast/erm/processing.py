from typing import Any, Protocol

import numpy as np

from minimaxforecast.errors import ArgumentError
from minimaxforecast.losses import LossSpec
from minimaxforecast.types import ErmResult


class ErmOracle[C: object = object](Protocol):
    """Protocol for empirical-risk-minimization oracles over one comparison class.

    Oracles always receive full-length outcome vectors (real prefix plus
    playout suffix). ``calls`` counts every infimum the oracle computes.
    """

    kind: str
    loss: LossSpec
    horizon: int
    scaled: bool
    calls: int

    @classmethod
    def from_class(cls, expert_class: C, loss: LossSpec, scaled: bool, **options: Any) -> "ErmOracle[C]": ...

    def infimum(self, y: np.ndarray) -> float:
        """inf over the class of the cumulative loss on y."""
        ...

    def infimum_many(self, ys: np.ndarray) -> np.ndarray:
        """Infima for every row of a (K, T) outcome table."""
        ...

    def minimize(self, y: np.ndarray) -> ErmResult:
        """Infimum together with a minimizer."""
        ...


class ErmDispatcher:
    """Maps comparison-class types to the oracle that handles them."""

    def __init__(self):
        self._oracle_types: dict[type, type[ErmOracle[Any]]] = {}

    def register_oracle[C: object](self, class_type: type[C], oracle: type[ErmOracle[C]]) -> None:
        self._oracle_types[class_type] = oracle

    def create(self, expert_class: object, loss: LossSpec, scaled: bool = False, **options: Any) -> ErmOracle:
        """Build the registered oracle for the given class instance."""
        try:
            oracle_type = self._oracle_types[type(expert_class)]
        except KeyError:
            raise ArgumentError(f"no ERM oracle registered for {type(expert_class).__name__}") from None
        return oracle_type.from_class(expert_class, loss, scaled, **options)
