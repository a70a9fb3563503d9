"""Deterministic randomness for the simulation.

Every run draws all of its random bits from a single 64-bit seed through a
tree of independent streams backed by numpy's Philox counter-based
generator. A stream is identified by a label path (seed, then e.g.
"voter:2", then "shares"); the Philox key is the truncated SHA-256 of that
path. Because streams are keyed rather than split sequentially, adding or
removing draws on one stream never shifts the values produced by another,
which is what makes transport choice and worker count irrelevant to the
simulated protocol randomness.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import NeedsMoreRandomness

_KEY_PREFIX = b"votesim.randomness/"


def _philox_key(labels):
    material = "/".join(str(part) for part in labels).encode()
    digest = hashlib.sha256(_KEY_PREFIX + material).digest()
    return np.frombuffer(digest[:16], dtype=np.uint64)


class RandomSource:
    """A labelled Philox stream; derive children with :meth:`spawn`."""

    def __init__(self, labels):
        self.labels = tuple(labels)
        self._gen = np.random.Generator(np.random.Philox(key=_philox_key(self.labels)))

    @classmethod
    def from_seed(cls, seed: int) -> "RandomSource":
        return cls((int(seed),))

    def spawn(self, label) -> "RandomSource":
        return RandomSource(self.labels + (label,))

    def bit(self) -> int:
        return int(self._gen.integers(0, 2))

    def bits(self, count: int) -> np.ndarray:
        """`count` independent uniform bits as a uint8 array."""
        return self._gen.integers(0, 2, size=count, dtype=np.uint8)

    def bit_matrix(self, shape) -> np.ndarray:
        return self._gen.integers(0, 2, size=shape, dtype=np.uint8)

    def bernoulli(self, rate: float, shape) -> np.ndarray:
        return (self._gen.random(shape) < rate).astype(np.uint8)

    def raw_bytes(self, count: int) -> bytes:
        return self._gen.bytes(count)

    def permutation(self, size: int) -> np.ndarray:
        return self._gen.permutation(size)

    def positions(self, total: int, count: int) -> np.ndarray:
        """`count` distinct indices drawn uniformly from range(total)."""
        return self._gen.choice(total, size=count, replace=False)

    def __repr__(self):
        return f"RandomSource({'/'.join(str(p) for p in self.labels)})"


class EnumeratedBits:
    """Scripted bit source used by tests to enumerate a generator's
    entire randomness space. Supports the subset of the RandomSource
    surface that bit-consuming primitives use."""

    def __init__(self, bits):
        self._bits = np.asarray(list(bits), dtype=np.uint8)
        self._cursor = 0

    def bit(self) -> int:
        return int(self.bits(1)[0])

    def bits(self, count: int) -> np.ndarray:
        end = self._cursor + count
        if end > len(self._bits):
            raise NeedsMoreRandomness(
                f"script holds {len(self._bits)} bits, {end} requested"
            )
        out = self._bits[self._cursor : end]
        self._cursor = end
        return out

    @property
    def exhausted(self) -> bool:
        return self._cursor >= len(self._bits)
