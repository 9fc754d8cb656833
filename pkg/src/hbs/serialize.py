"""Versioned byte container shared by both sketch types.

Layout (all integers little-endian):

    magic   b"HBS1"
    tag     u8      0 = plain registers, 1 = compressed buckets
    params  u32 m, u32 bucket_size, u8 rank_width, u8 max_rank

Plain payload: ``m_eff`` raw register bytes.

Compressed payload: f64 n_hat, f64 n_hat_old, u16 tree bit count + padded
tree bytes, then per bucket: u16 codeword bit count + padded bytes, u16
unary bit count + padded bytes, u8 r_min, u16 c_min.

The codebook is not shipped symbol-by-symbol: it is rebuilt from the stored
``n_hat_old`` (which determines it), and the stored tree bits must match
the rebuilt book's, which doubles as a corruption check.  Estimator state
is likewise recomputed from the decoded registers instead of being trusted
from the wire.
"""

from __future__ import annotations

import struct

from .bitio import bits_to_bytes, bytes_from_bits
from .bucket import Bucket, decode_all
from .errors import FormatError
from .hashing import SketchParams
from .hll import HllSketch

MAGIC = b"HBS1"
TAG_HLL = 0
TAG_HBS = 1


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def read(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(
                f"container truncated: need {n} bytes, have {len(self.data) - self.pos}",
                offset=self.pos,
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.read(struct.calcsize(fmt)))

    def expect_end(self) -> None:
        if self.pos != len(self.data):
            raise FormatError(
                f"{len(self.data) - self.pos} trailing bytes after payload",
                offset=self.pos,
            )


def _pack_header(tag: int, params: SketchParams) -> bytes:
    return MAGIC + struct.pack(
        "<BIIBB", tag, params.m, params.bucket_size, params.rank_width, params.max_rank
    )


def _read_header(cur: _Cursor) -> tuple[int, SketchParams]:
    magic = cur.read(4)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    tag, m, bucket_size, rank_width, max_rank = cur.unpack("<BIIBB")
    if tag not in (TAG_HLL, TAG_HBS):
        raise FormatError(f"unknown format tag {tag}", offset=4)
    try:
        params = SketchParams(m, bucket_size, rank_width, max_rank)
    except ValueError as exc:
        raise FormatError(f"invalid parameters: {exc}", offset=5) from None
    return tag, params


def _pack_bits(value: int, nbits: int) -> bytes:
    if nbits > 0xFFFF:
        raise ValueError(f"bit field of {nbits} bits exceeds the u16 length prefix")
    return struct.pack("<H", nbits) + bits_to_bytes(value, nbits)


def _read_bits(cur: _Cursor, what: str) -> tuple[int, int]:
    (nbits,) = cur.unpack("<H")
    at = cur.pos
    payload = cur.read((nbits + 7) // 8)
    try:
        return bytes_from_bits(payload, nbits), nbits
    except ValueError as exc:
        raise FormatError(f"bad {what}: {exc}", offset=at) from None


# -- plain sketch ------------------------------------------------------------


def dump_hll(sketch: HllSketch) -> bytes:
    return _pack_header(TAG_HLL, sketch.params) + sketch.registers.tobytes()


def load_hll(data: bytes) -> HllSketch:
    cur = _Cursor(data)
    tag, params = _read_header(cur)
    if tag != TAG_HLL:
        raise FormatError(f"expected a plain-register container, got tag {tag}", offset=4)
    at = cur.pos
    regs = cur.read(params.m_eff)
    cur.expect_end()
    if max(regs, default=0) > params.max_rank:
        raise FormatError("register value above max_rank", offset=at)
    return HllSketch.from_ranks(params, regs)


# -- compressed sketch -------------------------------------------------------


def dump_hbs(sketch) -> bytes:
    tree_payload, tree_nbits = sketch.book.tree_bits
    parts = [
        _pack_header(TAG_HBS, sketch.params),
        struct.pack("<dd", sketch.n_hat, sketch.n_hat_old),
        struct.pack("<H", tree_nbits),
        tree_payload,
    ]
    for bucket in sketch.buckets:
        parts.append(_pack_bits(bucket.code_bits, bucket.code_len))
        parts.append(_pack_bits(bucket.unary_bits, bucket.unary_len))
        parts.append(struct.pack("<BH", bucket.r_min, bucket.c_min))
    return b"".join(parts)


def load_hbs(data: bytes):
    from .estimator import EstimatorState
    from .sketch import HbsSketch, _book_for

    cur = _Cursor(data)
    tag, params = _read_header(cur)
    if tag != TAG_HBS:
        raise FormatError(f"expected a compressed container, got tag {tag}", offset=4)
    n_hat, n_hat_old = cur.unpack("<dd")
    if not (n_hat >= 0.0 and n_hat_old >= 0.0):
        raise FormatError("negative or NaN estimate", offset=cur.pos - 16)
    tree_at = cur.pos
    tree_value, tree_nbits = _read_bits(cur, "tree bits")

    book = _book_for(n_hat_old, params)
    expect_payload, expect_nbits = book.tree_bits
    if (tree_nbits, bits_to_bytes(tree_value, tree_nbits)) != (expect_nbits, expect_payload):
        raise FormatError(
            "stored tree does not match the codebook implied by the stored estimate",
            offset=tree_at,
        )

    buckets: list[Bucket] = []
    ranks: list[int] = []
    size = params.bucket_size
    for _ in range(params.num_buckets):
        code_value, code_len = _read_bits(cur, "codeword array")
        unary_value, unary_len = _read_bits(cur, "unary array")
        at = cur.pos
        r_min, c_min = cur.unpack("<BH")
        bucket = Bucket(code_value, code_len, unary_value, unary_len, r_min, c_min, size)
        try:
            decoded = decode_all(bucket, book)
        except Exception as exc:
            raise FormatError(f"undecodable bucket: {exc}", offset=at) from None
        if min(decoded) != r_min or decoded.count(r_min) != c_min:
            raise FormatError("bucket min metadata disagrees with its contents", offset=at)
        buckets.append(bucket)
        ranks.extend(decoded)
    cur.expect_end()

    est = EstimatorState.from_registers(ranks, params.m_eff)
    if est.corrected_estimate() != n_hat:
        raise FormatError("stored estimate disagrees with the register contents", offset=12)

    out = HbsSketch.__new__(HbsSketch)
    out.params = params
    from .bucket import BucketBudget

    out.budget = BucketBudget()
    out.n_hat = n_hat
    out.n_hat_old = n_hat_old
    out.book = book
    out.buckets = buckets
    out.est = est
    out.overflowed = set()
    out.ordinary_updates = 0
    out.min_recomputes = 0
    out.rebuilds = 0
    out._cache_geometry()
    return out


def load(data: bytes):
    """Load either sketch type, dispatching on the format tag."""
    cur = _Cursor(data)
    tag, _ = _read_header(cur)
    return load_hll(data) if tag == TAG_HLL else load_hbs(data)
