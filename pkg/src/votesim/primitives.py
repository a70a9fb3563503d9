"""Bit-level building blocks of the voting protocols.

A *distributed bit* is a bit held jointly as XOR shares: the first
num_shares-1 shares are independent uniform bits and the last one is
forced so the fold equals the value. A *vote matrix* is one row of
voters**2 * security bits per candidate; a well-formed ballot marks
exactly voters*security positions in a single row and leaves every other
row zero. All functions are pure given an explicit randomness source.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import InvalidBallot, InvalidParameter, NeedsMoreRandomness, ProtocolAbort
from .wire import bits_to_int, unrank_subset

__all__ = [
    "make_distributed_bit",
    "reconstruct",
    "share_bits",
    "build_vote_matrix",
    "is_correct_vote",
    "VoteEncryption",
    "permute_vote",
    "common_random_bits",
    "distributed_bit_equality",
    "random_half_subset",
    "subset_chunk_width",
]


def make_distributed_bit(value: int, num_shares: int, source) -> np.ndarray:
    """Split `value` into num_shares XOR shares."""
    if num_shares < 1:
        raise InvalidParameter("a distributed bit needs at least one share")
    if value not in (0, 1):
        raise InvalidParameter("bit value must be 0 or 1")
    shares = np.empty(num_shares, dtype=np.uint8)
    shares[: num_shares - 1] = source.bits(num_shares - 1)
    shares[num_shares - 1] = value ^ int(np.bitwise_xor.reduce(shares[: num_shares - 1], initial=0))
    return shares


def reconstruct(shares) -> int:
    shares = np.asarray(shares, dtype=np.uint8)
    if shares.size == 0:
        raise InvalidParameter("cannot reconstruct from zero shares")
    return int(np.bitwise_xor.reduce(shares.ravel()))


def share_bits(bits: np.ndarray, num_shares: int, source) -> list:
    """Vectorised sharing: every entry of `bits` becomes a distributed bit.

    Returns one array per shareholder, each shaped like `bits`. Equivalent
    to applying make_distributed_bit entrywise, drawing the uniform share
    layers one whole array at a time.
    """
    if num_shares < 1:
        raise InvalidParameter("a distributed bit needs at least one share")
    bits = np.asarray(bits, dtype=np.uint8)
    layers = [source.bits(bits.size).reshape(bits.shape) for _ in range(num_shares - 1)]
    forced = bits.copy()
    for layer in layers:
        forced ^= layer
    layers.append(forced)
    return layers


def build_vote_matrix(choice: int, voters: int, candidates: int, security: int, source) -> np.ndarray:
    """Plaintext ballot for `choice`: that row gets exactly voters*security
    ones at uniform positions, all other rows stay zero."""
    if voters < 3:
        raise InvalidParameter("at least 3 voters are required")
    if security < 1:
        raise InvalidParameter("security parameter must be >= 1")
    if not 1 <= choice <= candidates:
        raise InvalidBallot(f"choice {choice} outside 1..{candidates}")
    positions = voters * voters * security
    matrix = np.zeros((candidates, positions), dtype=np.uint8)
    marked = source.positions(positions, voters * security)
    matrix[choice - 1, marked] = 1
    return matrix


def is_correct_vote(matrix: np.ndarray, voters: int, security: int) -> bool:
    """True iff exactly one row carries voters*security ones and the rest
    are all zero. Invariant under row and column permutations."""
    matrix = np.asarray(matrix, dtype=np.uint8)
    if matrix.ndim != 2 or matrix.shape[1] != voters * voters * security:
        raise InvalidParameter("matrix shape does not match the parameters")
    weights = matrix.sum(axis=1, dtype=np.int64)
    marked = weights[weights > 0]
    return marked.size == 1 and int(marked[0]) == voters * security


@dataclass(frozen=True)
class VoteEncryption:
    """Two random permutations: one over candidate rows, one over bit
    positions (shared by all rows of the same vote copy)."""

    candidate_perm: np.ndarray
    position_perm: np.ndarray

    @classmethod
    def random(cls, candidates: int, positions: int, source) -> "VoteEncryption":
        return cls(source.permutation(candidates), source.permutation(positions))

    @classmethod
    def identity(cls, candidates: int, positions: int) -> "VoteEncryption":
        return cls(np.arange(candidates), np.arange(positions))

    def inverse(self) -> "VoteEncryption":
        return VoteEncryption(
            np.argsort(self.candidate_perm), np.argsort(self.position_perm)
        )

    def then(self, later: "VoteEncryption") -> "VoteEncryption":
        """Encryption equal to applying self first, then `later`."""
        return VoteEncryption(
            later.candidate_perm[self.candidate_perm],
            later.position_perm[self.position_perm],
        )


def _check_perm(perm, size, what):
    perm = np.asarray(perm)
    if perm.shape != (size,) or not np.array_equal(np.sort(perm), np.arange(size)):
        raise InvalidParameter(f"{what} permutation is not a bijection on {size} elements")
    return perm


def permute_vote(matrix: np.ndarray, enc: VoteEncryption) -> np.ndarray:
    """Relabel rows by enc.candidate_perm and columns by enc.position_perm:
    output[cp[i], pp[j]] = input[i, j]."""
    matrix = np.asarray(matrix, dtype=np.uint8)
    rows, cols = matrix.shape
    cp = _check_perm(enc.candidate_perm, rows, "candidate")
    pp = _check_perm(enc.position_perm, cols, "position")
    out = np.empty_like(matrix)
    out[np.ix_(cp, pp)] = matrix
    return out


def common_random_bits(contributions) -> np.ndarray:
    """Parity-combine one bit-string per contributor; uniform as long as
    any single contribution is uniform."""
    arrays = [np.asarray(c, dtype=np.uint8) for c in contributions]
    if not arrays:
        raise ProtocolAbort("no randomness contributions")
    length = arrays[0].shape
    if any(a.shape != length for a in arrays):
        raise ProtocolAbort("randomness contributions differ in length")
    out = arrays[0].copy()
    for a in arrays[1:]:
        out ^= a
    return out


def distributed_bit_equality(shares_a, shares_b, broadcast) -> bool:
    """Compare two distributed bits without revealing either value.

    Each holder i submits a_i XOR b_i through `broadcast`, a callable
    realising one simultaneous-broadcast round over per-holder bits; the
    bits are equal iff the revealed submissions fold to zero. Only the
    XOR of the two values ever reaches the wire.
    """
    a = np.asarray(shares_a, dtype=np.uint8)
    b = np.asarray(shares_b, dtype=np.uint8)
    if a.shape != b.shape or a.size == 0:
        raise InvalidParameter("share vectors must be nonempty and equally long")
    revealed = broadcast([int(x) for x in a ^ b])
    if len(revealed) != a.size:
        raise ProtocolAbort("equality round is missing contributions")
    return int(np.bitwise_xor.reduce(np.asarray(revealed, dtype=np.uint8))) == 0


def subset_chunk_width(universe_size: int) -> int:
    """Entropy bits consumed per unranking attempt for a half-size subset."""
    total = comb(universe_size, universe_size // 2)
    return max(1, (total - 1).bit_length())


def random_half_subset(entropy, universe_size: int) -> frozenset:
    """Deterministically map shared entropy to a uniform subset of size
    universe_size/2 of {1..universe_size}.

    Reads fixed-width chunks MSB-first and rejects values >= C(2s, s);
    each chunk is accepted with probability > 1/2.
    """
    if universe_size < 2 or universe_size % 2:
        raise InvalidParameter("universe size must be even and positive")
    half = universe_size // 2
    total = comb(universe_size, half)
    width = subset_chunk_width(universe_size)
    entropy = np.asarray(entropy, dtype=np.uint8)
    for start in range(0, entropy.size - width + 1, width):
        value = bits_to_int(entropy[start : start + width])
        if value < total:
            return frozenset(unrank_subset(value, universe_size, half))
    raise NeedsMoreRandomness(
        f"no accepted value in {entropy.size // width} chunks of {width} bits"
    )
