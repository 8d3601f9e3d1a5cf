"""Deterministic random streams.

A :class:`RandomStream` is derived from a tuple
``(master_seed, purpose, round_index, draw_index)``. Identical tuples always
produce identical draws; distinct tuples produce independent streams. A
stream is owned by one consumer at a time.
"""

from __future__ import annotations

import hashlib

import numpy as np

_SEED_MASK = (1 << 64) - 1


def _label_key(label: str) -> int:
    """Stable 64-bit key for a purpose label (``hash()`` is salted per process)."""
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def derive_trial_seed(seed: int, trial: int) -> int:
    """Derive the master seed of one independent trial."""
    sequence = np.random.SeedSequence(entropy=seed & _SEED_MASK, spawn_key=(_label_key("trial"), trial))
    return int(sequence.generate_state(1, np.uint64)[0])


class RandomStream:
    """A seeded generator tied to one derivation tuple."""

    def __init__(self, master_seed: int, purpose: str, round_index: int = 0, draw_index: int = 0):
        self.key = (master_seed & _SEED_MASK, purpose, round_index, draw_index)
        sequence = np.random.SeedSequence(
            entropy=master_seed & _SEED_MASK,
            spawn_key=(_label_key(purpose), round_index, draw_index),
        )
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    def derive(self, purpose: str, round_index: int = 0, draw_index: int = 0) -> RandomStream:
        """Return a sibling stream that shares this stream's master seed."""
        return RandomStream(self.key[0], purpose, round_index, draw_index)

    def rademacher(self, size: int | tuple[int, ...]) -> np.ndarray:
        """Draw i.i.d. uniform signs in {-1, +1}."""
        return np.where(self._generator.integers(0, 2, size=size) == 1, 1.0, -1.0)

    def uniform(self, low: float = 0.0, high: float = 1.0, size: int | tuple[int, ...] | None = None):
        return self._generator.uniform(low, high, size=size)

    def bernoulli_sign(self, probability: float) -> int:
        """Return +1 with the given probability and -1 otherwise."""
        return 1 if self._generator.random() < probability else -1

    def choice(self, values: np.ndarray, size: int | None = None):
        return self._generator.choice(values, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def __repr__(self) -> str:
        return f"RandomStream{self.key!r}"


__all__ = ["RandomStream", "derive_trial_seed"]
