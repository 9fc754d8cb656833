"""Bit-exact bucket of Huffman-coded registers.

A bucket stores ``B`` registers as concatenated codewords plus a unary
record of each codeword's length (``1``^len ``0`` per register).  The unary
array is what makes point access possible without decoding everything: the
j-th codeword starts after the first j lengths plus j separators.  Lengths
are recoverable by decoding, but the explicit unary array is kept because it
is the structure whose size the experiments account for.

``r_min`` / ``c_min`` cache the minimum rank and its multiplicity; the
insert path uses them to discard most updates without touching any bits.
They are maintained by the caller (see the sketch), not by ``poke``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bitio import replace_bits
from .errors import CorruptStateError
from .huffman import HuffmanCodebook

META_RANK_BITS = 6  # r_min field width in the size accounting


@dataclass
class BucketBudget:
    """Codeword-array policy: unlimited growth, or a fixed bit budget with
    overflowing buckets escaped to an unbounded side table."""

    bit_budget: int | None = None

    @property
    def fixed(self) -> bool:
        return self.bit_budget is not None


class Bucket:
    __slots__ = ("code_bits", "code_len", "unary_bits", "unary_len", "r_min", "c_min", "size")

    def __init__(
        self,
        code_bits: int,
        code_len: int,
        unary_bits: int,
        unary_len: int,
        r_min: int,
        c_min: int,
        size: int,
    ):
        self.code_bits = code_bits
        self.code_len = code_len
        self.unary_bits = unary_bits
        self.unary_len = unary_len
        self.r_min = r_min
        self.c_min = c_min
        self.size = size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Bucket):
            return NotImplemented
        return (
            self.code_bits == other.code_bits
            and self.code_len == other.code_len
            and self.unary_bits == other.unary_bits
            and self.unary_len == other.unary_len
            and self.r_min == other.r_min
            and self.c_min == other.c_min
            and self.size == other.size
        )

    def copy(self) -> "Bucket":
        return Bucket(
            self.code_bits,
            self.code_len,
            self.unary_bits,
            self.unary_len,
            self.r_min,
            self.c_min,
            self.size,
        )

    def _locate(self, j: int) -> tuple[int, int]:
        """(start offset in the codeword array, length) of codeword ``j``,
        found by walking the unary separators."""
        if not 0 <= j < self.size:
            raise ValueError(f"slot {j} outside bucket of {self.size}")
        ul = self.unary_len
        inv = self.unary_bits ^ ((1 << ul) - 1)  # separators become 1-bits
        prev = -1
        sep = -1
        for _ in range(j + 1):
            p = inv.bit_length()
            if p == 0:
                raise CorruptStateError("unary array has too few separators")
            prev = sep
            sep = ul - p
            inv ^= 1 << (p - 1)
        # bits before separator `prev` = (prev+1) total, of which j are separators
        return prev + 1 - j, sep - prev - 1

    def iter_lengths(self):
        """Yield (start, length) for every register, one unary pass."""
        ul = self.unary_len
        inv = self.unary_bits ^ ((1 << ul) - 1)
        prev = -1
        start = 0
        for _ in range(self.size):
            p = inv.bit_length()
            if p == 0:
                raise CorruptStateError("unary array has too few separators")
            sep = ul - p
            inv ^= 1 << (p - 1)
            length = sep - prev - 1
            yield start, length
            start += length
            prev = sep
        if inv:
            raise CorruptStateError("unary array has extra separators")
        if prev != ul - 1:
            raise CorruptStateError("trailing bits after the last unary record")


def new_bucket(book: HuffmanCodebook, size: int) -> Bucket:
    """Fresh bucket: every register at rank 0, so r_min=0 and c_min=size."""
    code0, len0 = book.encode(0)
    cb = 0
    ub = 0
    record = ((1 << len0) - 1) << 1
    for _ in range(size):
        cb = (cb << len0) | code0
        ub = (ub << (len0 + 1)) | record
    return Bucket(cb, len0 * size, ub, (len0 + 1) * size, 0, size, size)


def peek(bucket: Bucket, j: int, book: HuffmanCodebook) -> int:
    """Decode register ``j`` without modifying the bucket."""
    start, length = bucket._locate(j)
    if start + length > bucket.code_len:
        raise CorruptStateError("unary lengths overrun the codeword array")
    pattern = (bucket.code_bits >> (bucket.code_len - start - length)) & ((1 << length) - 1)
    symbol = book.decode_table.get((length, pattern))
    if symbol is None:
        raise CorruptStateError(
            f"codeword ({length} bits, {pattern:#x}) not in the codebook"
        )
    return symbol


def poke(bucket: Bucket, j: int, rank: int, book: HuffmanCodebook) -> None:
    """Overwrite register ``j`` with ``rank``, shifting the tail as needed.

    Leaves r_min/c_min untouched; the insert flow owns that bookkeeping.
    """
    start, old_len = bucket._locate(j)
    new_code, new_len = book.encode(rank)
    bucket.code_bits, bucket.code_len = replace_bits(
        bucket.code_bits, bucket.code_len, start, old_len, new_code, new_len
    )
    record = ((1 << new_len) - 1) << 1
    bucket.unary_bits, bucket.unary_len = replace_bits(
        bucket.unary_bits, bucket.unary_len, start + j, old_len + 1, record, new_len + 1
    )


def decode_all(bucket: Bucket, book: HuffmanCodebook) -> list[int]:
    """All register values, in slot order."""
    out = []
    cb, cl = bucket.code_bits, bucket.code_len
    table = book.decode_table
    for start, length in bucket.iter_lengths():
        if start + length > cl:
            raise CorruptStateError("unary lengths overrun the codeword array")
        pattern = (cb >> (cl - start - length)) & ((1 << length) - 1)
        symbol = table.get((length, pattern))
        if symbol is None:
            raise CorruptStateError(
                f"codeword ({length} bits, {pattern:#x}) not in the codebook"
            )
        out.append(symbol)
    if start + length != cl:
        raise CorruptStateError("codeword array length disagrees with unary lengths")
    return out


def recompute_min(bucket: Bucket, book: HuffmanCodebook) -> None:
    """Re-derive r_min/c_min by decoding every register."""
    ranks = decode_all(bucket, book)
    bucket.r_min = min(ranks)
    bucket.c_min = ranks.count(bucket.r_min)


def encode_ranks(ranks: list[int], book: HuffmanCodebook) -> Bucket:
    """Build a bucket holding the given ranks, min metadata included."""
    cb = 0
    cl = 0
    ub = 0
    codes = book.codes
    lengths = book.lengths
    for r in ranks:
        length = lengths[r]
        cb = (cb << length) | codes[r]
        cl += length
        ub = (ub << (length + 1)) | (((1 << length) - 1) << 1)
    r_min = min(ranks)
    return Bucket(cb, cl, ub, cl + len(ranks), r_min, ranks.count(r_min), len(ranks))


def reencode(bucket: Bucket, old_book: HuffmanCodebook, new_book: HuffmanCodebook) -> Bucket:
    """Re-express the bucket under a new codebook; ranks and min metadata
    are unchanged."""
    ranks = decode_all(bucket, old_book)
    out = encode_ranks(ranks, new_book)
    out.r_min = bucket.r_min
    out.c_min = bucket.c_min
    return out


def bucket_bits(bucket: Bucket) -> tuple[int, int, int]:
    """(codeword bits L, unary bits, metadata bits) for size accounting.

    Metadata is the 6-bit r_min plus ceil(log2(size)) bits of c_min, matching
    how a packed implementation would store them.
    """
    meta = META_RANK_BITS + (bucket.size - 1).bit_length()
    return bucket.code_len, bucket.unary_len, meta


def build_skip_index(bucket: Bucket, book: HuffmanCodebook) -> list[tuple[int, int]]:
    """Offsets of ceil(log2(size)) - 1 equally spaced registers.

    Optional accelerator for peeks in large buckets: entry ``(j, start)``
    lets a scan begin at register j instead of 0.  Off by default; callers
    must rebuild it after any poke.
    """
    k = max((bucket.size - 1).bit_length() - 1, 0)
    if k == 0:
        return []
    stride = bucket.size // (k + 1)
    anchors = [stride * (i + 1) for i in range(k)]
    index = []
    starts = {}
    for j, (start, _) in enumerate(bucket.iter_lengths()):
        starts[j] = start
    for j in anchors:
        index.append((j, starts[j]))
    return index


def peek_indexed(
    bucket: Bucket, j: int, book: HuffmanCodebook, index: list[tuple[int, int]]
) -> int:
    """Peek a register starting the unary walk from the nearest index anchor.

    Equivalent to :func:`peek` for any valid index; tested against it.
    """
    anchor_j = 0
    anchor_start = 0
    for aj, astart in index:
        if aj <= j:
            anchor_j, anchor_start = aj, astart
        else:
            break
    ul = bucket.unary_len
    # skip anchor_start code bits + anchor_j separators, then walk as usual
    pos = anchor_start + anchor_j
    start = anchor_start
    inv = (bucket.unary_bits ^ ((1 << ul) - 1)) & ((1 << (ul - pos)) - 1)
    length = -1
    for _ in range(j - anchor_j + 1):
        p = inv.bit_length()
        if p == 0:
            raise CorruptStateError("unary array has too few separators")
        sep = ul - p
        inv ^= 1 << (p - 1)
        length = sep - pos
        pos = sep + 1
        start += length
    start -= length
    pattern = (bucket.code_bits >> (bucket.code_len - start - length)) & ((1 << length) - 1)
    symbol = book.decode_table.get((length, pattern))
    if symbol is None:
        raise CorruptStateError(f"codeword ({length} bits, {pattern:#x}) not in the codebook")
    return symbol
