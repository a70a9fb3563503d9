"""Wire encodings for message payloads.

Bit-strings travel most-significant-bit first, packed eight per byte with
zero padding at the tail. Permutations travel as a 32-bit little-endian
length followed by one 32-bit little-endian unsigned index per entry
(0-based images). Index sets and tally announcements use the rank/unrank
helpers below so their sizes stay at the information-theoretic minimum.
"""

from __future__ import annotations

import struct
from math import comb

import numpy as np

from .errors import InvalidParameter

__all__ = [
    "pack_bits",
    "unpack_bits",
    "bytes_to_bits",
    "int_to_bits",
    "bits_to_int",
    "encode_permutation",
    "decode_permutation",
    "encode_index_mask",
    "decode_index_mask",
    "rank_subset",
    "unrank_subset",
    "composition_to_rank",
    "rank_to_composition",
    "composition_bit_width",
]


def pack_bits(bits) -> bytes:
    """Pack a 0/1 array into bytes, MSB first, zero-padded at the tail."""
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def unpack_bits(data: bytes, bit_count: int) -> np.ndarray:
    if bit_count > 8 * len(data):
        raise InvalidParameter(f"{bit_count} bits requested from {len(data)} bytes")
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), count=bit_count)


def bytes_to_bits(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def int_to_bits(value: int, width: int) -> np.ndarray:
    """Big-endian fixed-width bit representation of a non-negative int."""
    if value < 0 or (width < value.bit_length()):
        raise InvalidParameter(f"{value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits) -> int:
    out = 0
    for b in np.asarray(bits, dtype=np.uint8):
        out = (out << 1) | int(b)
    return out


def encode_permutation(perm) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.uint32)
    raw = struct.pack("<I", len(perm)) + perm.astype("<u4").tobytes()
    return bytes_to_bits(raw)


def decode_permutation(bits) -> np.ndarray:
    raw = pack_bits(bits)
    if len(raw) < 4:
        raise InvalidParameter("permutation payload shorter than its length prefix")
    (count,) = struct.unpack("<I", raw[:4])
    need = 4 + 4 * count
    if len(raw) < need:
        raise InvalidParameter("permutation payload truncated")
    perm = np.frombuffer(raw[4:need], dtype="<u4").astype(np.int64)
    if sorted(perm.tolist()) != list(range(count)):
        raise InvalidParameter("permutation entries are not a bijection")
    return perm


def encode_index_mask(indices, universe_size: int) -> np.ndarray:
    """1-based index set as a membership bitmask of `universe_size` bits."""
    mask = np.zeros(universe_size, dtype=np.uint8)
    for idx in indices:
        if not 1 <= idx <= universe_size:
            raise InvalidParameter(f"index {idx} outside 1..{universe_size}")
        mask[idx - 1] = 1
    return mask


def decode_index_mask(mask) -> frozenset:
    mask = np.asarray(mask, dtype=np.uint8)
    return frozenset(int(i) + 1 for i in np.flatnonzero(mask))


def rank_subset(indices, universe_size: int) -> int:
    """Lexicographic rank of a k-subset of {1..universe_size}."""
    chosen = sorted(indices)
    k = len(chosen)
    rank = 0
    prev = 0
    for pos, element in enumerate(chosen):
        remaining = k - pos - 1
        for skipped in range(prev + 1, element):
            rank += comb(universe_size - skipped, remaining)
        prev = element
    return rank


def unrank_subset(rank: int, universe_size: int, subset_size: int) -> tuple:
    """Inverse of rank_subset; subsets are 1-based and lex-ordered."""
    total = comb(universe_size, subset_size)
    if not 0 <= rank < total:
        raise InvalidParameter(f"rank {rank} outside 0..{total - 1}")
    out = []
    candidate = 1
    need = subset_size
    while need > 0:
        block = comb(universe_size - candidate, need - 1)
        if rank < block:
            out.append(candidate)
            need -= 1
        else:
            rank -= block
        candidate += 1
    return tuple(out)


def composition_to_rank(counts) -> int:
    """Rank of (y_1..y_m) with sum t among all such count vectors.

    Stars-and-bars: the vector maps to the (m-1)-subset of bar positions
    in {1..t+m-1}; the rank is that subset's lex rank.
    """
    counts = list(counts)
    total = sum(counts)
    parts = len(counts)
    if parts == 1:
        return 0
    bars = []
    acc = 0
    for t, y in enumerate(counts[:-1], start=1):
        acc += y
        bars.append(acc + t)
    return rank_subset(bars, total + parts - 1)


def rank_to_composition(rank: int, total: int, parts: int) -> list:
    if parts == 1:
        if rank != 0:
            raise InvalidParameter("single-part composition has rank 0 only")
        return [total]
    bars = unrank_subset(rank, total + parts - 1, parts - 1)
    counts = []
    prev = 0
    for t, bar in enumerate(bars, start=1):
        counts.append(bar - t - prev)
        prev = bar - t
    counts.append(total - prev)
    return counts


def composition_bit_width(total: int, parts: int) -> int:
    """Bits needed to announce one count vector; at least 1 so that a
    successful announcement is never empty (empty means local failure)."""
    variants = comb(total + parts - 1, parts - 1)
    return max(1, (variants - 1).bit_length())
