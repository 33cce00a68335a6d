"""Deterministic, splittable random streams.

A stream is identified by ``(seed, stream_index)``; the same pair always
reproduces the same draws, and distinct indices give statistically
independent streams (PCG64 seeded through ``SeedSequence`` spawn keys).

Sample budgets are always consumed in fixed-size batches keyed by a batch
index derived from the stream, never by worker count, so any split of the
work across workers yields bitwise-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: Number of draws served by one derived batch stream.
BATCH_SIZE = 1024

_MASK64 = (1 << 64) - 1


@dataclass
class RandomStream:
    seed: int
    stream_index: int = 0
    _key: tuple[int, ...] = field(default=(), repr=False, compare=False)
    _generator: np.random.Generator | None = field(default=None, repr=False, compare=False)

    def generator(self) -> np.random.Generator:
        """The stream's stateful generator (created lazily)."""
        if self._generator is None:
            seq = np.random.SeedSequence(
                entropy=self.seed & _MASK64,
                spawn_key=(self.stream_index & _MASK64, *self._key),
            )
            self._generator = np.random.Generator(np.random.PCG64(seq))
        return self._generator

    def batch(self, *key: int) -> "RandomStream":
        """An independent sub-stream for the given batch key."""
        return RandomStream(self.seed, self.stream_index, _key=self._key + key)

    # Convenience passthroughs used by scalar sampling paths.
    def random(self) -> float:
        return float(self.generator().random())

    def uniform(self, low: float, high: float) -> float:
        return float(self.generator().uniform(low, high))


def batch_plan(n: int) -> list[tuple[int, int]]:
    """Split a draw budget into (batch_index, batch_count) pieces.

    The plan depends only on ``n``, so results aggregated over it cannot
    depend on how batches are distributed among workers.
    """
    plan = []
    b = 0
    remaining = n
    while remaining > 0:
        take = min(BATCH_SIZE, remaining)
        plan.append((b, take))
        remaining -= take
        b += 1
    return plan
