"""Hash splitting shared by the plain and the compressed sketch.

A single 64-bit hash is split into a bucket index, a within-bucket register
slot, and a geometric rank.  Both sketch types use exactly this split, so a
compressed sketch and a plain one fed the same hashes hold identical register
values by construction, not merely in distribution.

Bucket and slot use fixed-point multiplication rather than bit masking so
that bucket counts and bucket sizes need not be powers of two.  The rank is
the 1-based position of the leftmost 1-bit in the low ``rank_width`` bits of
the hash.

The library never hashes raw records; callers supply 64-bit hashes.  For
reproducible synthetic streams (and the CLI ``--seed`` flag) this module
ships a fixed splitmix-style mixer: distinct inputs give distinct outputs,
so a counter stream is automatically a stream of distinct elements.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

U64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX_MUL_1 = 0xBF58476D1CE4E5B9
_MIX_MUL_2 = 0x94D049BB133111EB

DEFAULT_RANK_WIDTH = 48
DEFAULT_MAX_RANK = 63


@dataclass(frozen=True)
class SketchParams:
    """Geometry of a sketch: ``m`` registers grouped into buckets of
    ``bucket_size`` registers each (the last bucket may be padding-extended,
    see ``m_eff``)."""

    m: int
    bucket_size: int
    rank_width: int = DEFAULT_RANK_WIDTH
    max_rank: int = DEFAULT_MAX_RANK

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"m must be positive, got {self.m}")
        if not 1 <= self.bucket_size <= self.m:
            raise ValueError(f"bucket_size must be in [1, m], got {self.bucket_size}")
        if not 1 <= self.rank_width <= 64:
            raise ValueError(f"rank_width must be in [1, 64], got {self.rank_width}")
        if not 1 <= self.max_rank <= 63:
            raise ValueError(f"max_rank must be in [1, 63], got {self.max_rank}")

    @property
    def num_buckets(self) -> int:
        return -(-self.m // self.bucket_size)

    @property
    def m_eff(self) -> int:
        """Total register count after rounding up to whole buckets."""
        return self.num_buckets * self.bucket_size


class RegisterAddress(NamedTuple):
    bucket: int
    slot: int


def rank_of(bits: int, width: int, max_rank: int = DEFAULT_MAX_RANK) -> int:
    """1-based position of the leftmost 1-bit within a ``width``-bit window.

    An all-zero window yields ``width + 1``.  The result is clamped to
    ``max_rank``.  Total function: never raises for in-range widths.
    """
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    bits &= (1 << width) - 1
    r = width - bits.bit_length() + 1 if bits else width + 1
    return r if r < max_rank else max_rank


def split_hash(h: int, params: SketchParams) -> tuple[RegisterAddress, int]:
    """Split a 64-bit hash into ``(address, rank)``.

    Bucket comes from the high 32 bits, slot from the next 16, both mapped
    by fixed-point multiply; rank from the low ``rank_width`` bits.  Pure
    function of its inputs.
    """
    h &= U64
    bucket = ((h >> 32) * params.num_buckets) >> 32
    slot = (((h >> 16) & 0xFFFF) * params.bucket_size) >> 16
    rank = rank_of(h, params.rank_width, params.max_rank)
    return RegisterAddress(bucket, slot), rank


def mix64(x: int) -> int:
    """Fixed 64-bit finalizer (splitmix-style).  Bijective on 64-bit ints."""
    x &= U64
    x = ((x ^ (x >> 30)) * _MIX_MUL_1) & U64
    x = ((x ^ (x >> 27)) * _MIX_MUL_2) & U64
    return x ^ (x >> 31)


def substream_seed(seed: int, index: int) -> int:
    """Derive the seed of an independent substream, e.g. one per trial."""
    return mix64((mix64(seed) + (index & U64) * GOLDEN_GAMMA) & U64)


def hash_stream(seed: int, count: int, start: int = 0) -> Iterator[int]:
    """Yield ``count`` 64-bit hashes of a synthetic distinct-element stream.

    Element ``i`` hashes to ``mix64(base + (i + 1) * GOLDEN_GAMMA)``; since
    the mixer is a bijection, all elements are distinct.
    """
    base = mix64(seed)
    for i in range(start, start + count):
        yield mix64((base + (i + 1) * GOLDEN_GAMMA) & U64)


def hash_array(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Vectorized :func:`hash_stream`: identical values as a uint64 array."""
    base = np.uint64(mix64(seed))
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    x = base + idx * np.uint64(GOLDEN_GAMMA)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_MIX_MUL_1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_MIX_MUL_2)
    return x ^ (x >> np.uint64(31))


def _bit_length_exact(values: np.ndarray) -> np.ndarray:
    """Exact bit length of each entry of a nonneg integer array (< 2**63)."""
    f = values.astype(np.float64)
    with np.errstate(divide="ignore"):
        bl = np.where(values > 0, np.floor(np.log2(f)) + 1.0, 0.0).astype(np.int64)
    # float log2 can be off by one at power-of-two boundaries; repair exactly
    bl_pos = np.maximum(bl, 1)
    too_big = (np.uint64(1) << (bl_pos - 1).astype(np.uint64)) > values
    bl = bl - too_big.astype(np.int64)
    too_small = (np.uint64(1) << np.minimum(bl, 62).astype(np.uint64)) <= values
    bl = bl + too_small.astype(np.int64)
    return np.where(values > 0, bl, 0)


def split_hash_array(
    hashes: np.ndarray, params: SketchParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized :func:`split_hash` over a uint64 array.

    Returns ``(bucket, slot, rank)`` arrays.  Must stay in lockstep with the
    scalar function; the test suite asserts element-exact agreement.
    """
    h = hashes.astype(np.uint64, copy=False)
    nb = np.uint64(params.num_buckets)
    bs = np.uint64(params.bucket_size)
    bucket = ((h >> np.uint64(32)) * nb) >> np.uint64(32)
    slot = (((h >> np.uint64(16)) & np.uint64(0xFFFF)) * bs) >> np.uint64(16)
    w = params.rank_width
    low = h & np.uint64((1 << w) - 1)
    bl = _bit_length_exact(low)
    rank = np.where(low > 0, w - bl + 1, w + 1)
    rank = np.minimum(rank, params.max_rank)
    return bucket.astype(np.int64), slot.astype(np.int64), rank.astype(np.int64)
