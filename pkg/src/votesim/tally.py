"""Statistical tally decoding.

With v of n voters supporting a candidate, each broadcast parity bit for
that candidate is odd with probability p_v, where p_0 = 0, p_1 = 1/n and
p_{v+1} = p_v(1 - 1/n) + (1 - p_v)/n. The decoder inverts an observed
odd-parity rate sigma back to v by nearest-table lookup inside a fixed
tolerance of 1/(2*e^2*n).

The table is computed by the recurrence (numerically stable; the closed
form divides by n-2 and is kept as a cross-check in the tests). Nearest
lookup rather than bare within-tolerance membership is deliberate: for v
close to n adjacent windows can overlap, so existence does not imply
uniqueness; the nearest rule with an equidistant-tie failure keeps honest
runs correct and never invents a count.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InvalidParameter, ProtocolAbort

__all__ = [
    "decode_tolerance",
    "odd_parity_probability",
    "probability_gap",
    "DecoderTable",
    "decode_count",
    "TallyAccumulator",
    "aggregate_parities",
    "TallyResult",
    "finalize_tally",
    "NO_DECODE",
    "SUM_MISMATCH",
    "DISAGREEMENT",
    "BROADCAST_ABORT",
]

NO_DECODE = "no-decode"
SUM_MISMATCH = "sum-mismatch"
DISAGREEMENT = "disagreement"
BROADCAST_ABORT = "broadcast-abort"


def decode_tolerance(voters: int) -> float:
    return 1.0 / (2.0 * math.e**2 * voters)


@lru_cache(maxsize=None)
def _probability_table(voters: int) -> tuple:
    probs = [0.0]
    for _ in range(voters):
        probs.append(probs[-1] * (1.0 - 1.0 / voters) + (1.0 - probs[-1]) / voters)
    return tuple(probs)


def odd_parity_probability(count: int, voters: int) -> float:
    """p_count for `voters` participants, by the recurrence."""
    if voters < 3:
        raise InvalidParameter("decoder needs at least 3 voters")
    if not 0 <= count <= voters:
        raise InvalidParameter(f"count {count} outside 0..{voters}")
    return _probability_table(voters)[count]


def probability_gap(count: int, voters: int) -> float:
    """p_{count+1} - p_count; equals (1 - 2*p_count) / voters."""
    if voters < 3:
        raise InvalidParameter("decoder needs at least 3 voters")
    if not 0 <= count < voters:
        raise InvalidParameter(f"count {count} outside 0..{voters - 1}")
    table = _probability_table(voters)
    return table[count + 1] - table[count]


@dataclass(frozen=True)
class DecoderTable:
    """Probability table plus decode windows for a fixed voter count."""

    voters: int
    probs: np.ndarray
    tolerance: float

    @classmethod
    def build(cls, voters: int) -> "DecoderTable":
        if voters < 3:
            raise InvalidParameter("decoder needs at least 3 voters")
        return cls(voters, np.array(_probability_table(voters)), decode_tolerance(voters))

    def window(self, count: int) -> tuple:
        p = self.probs[count]
        return (p - self.tolerance, p + self.tolerance)

    def decode(self, sigma: float):
        distances = np.abs(self.probs - sigma)
        best = distances.min()
        if not best < self.tolerance:
            return None
        winners = np.flatnonzero(distances == best)
        if winners.size > 1:
            return None
        return int(winners[0])

    def to_csv(self, destination=None) -> str:
        """Diagnostic export with columns v, p_v, window_low, window_high."""
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(["v", "p_v", "window_low", "window_high"])
        for v, p in enumerate(self.probs):
            low, high = self.window(v)
            writer.writerow([v, repr(float(p)), repr(low), repr(high)])
        text = buffer.getvalue()
        if destination is not None:
            with open(destination, "w") as fh:
                fh.write(text)
        return text


@lru_cache(maxsize=None)
def _decoder(voters: int) -> DecoderTable:
    return DecoderTable.build(voters)


def decode_count(sigma: float, voters: int):
    """Count whose p_v is nearest to sigma, if strictly inside the decode
    tolerance and unique; None otherwise."""
    if voters < 3:
        raise InvalidParameter("decoder needs at least 3 voters")
    return _decoder(voters).decode(sigma)


@dataclass
class TallyAccumulator:
    """Per-candidate combined parities and their odd rates."""

    parities: np.ndarray  # candidates x positions, uint8
    sigma: np.ndarray  # candidates, float

    @property
    def candidates(self) -> int:
        return self.parities.shape[0]


def aggregate_parities(submissions, candidates: int, positions: int) -> TallyAccumulator:
    """XOR the broadcast parity strings across participants and take the
    per-candidate odd rate."""
    stacked = []
    for sub in submissions:
        arr = np.asarray(sub, dtype=np.uint8).ravel()
        if arr.size != candidates * positions:
            raise ProtocolAbort(
                f"parity submission has {arr.size} bits, expected {candidates * positions}"
            )
        stacked.append(arr)
    if not stacked:
        raise ProtocolAbort("no parity submissions")
    folded = np.bitwise_xor.reduce(np.stack(stacked), axis=0)
    parities = folded.reshape(candidates, positions)
    sigma = parities.mean(axis=1)
    return TallyAccumulator(parities=parities, sigma=sigma)


@dataclass
class TallyResult:
    """Final per-candidate counts, or a failure marker with its cause."""

    counts: list | None
    failure: str | None = None
    revoked: list = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return self.counts is None


def finalize_tally(acc: TallyAccumulator, counted_voters: int, voters: int) -> TallyResult:
    """Decode every candidate rate and enforce that the counts add up to
    the number of counted voters. Never raises; failures are values."""
    counts = []
    for rate in acc.sigma:
        decoded = decode_count(float(rate), voters)
        if decoded is None:
            return TallyResult(None, NO_DECODE)
        counts.append(decoded)
    if sum(counts) != counted_voters:
        return TallyResult(None, SUM_MISMATCH)
    return TallyResult(counts)
