"""MSB-first bit strings backed by arbitrary-precision ints.

A bit string is a ``(value, length)`` pair: the first bit of the string is
the most significant of the ``length`` valid bits in ``value``.  The empty
string is ``(0, 0)``.  All splicing is pure int arithmetic, so strings of a
few thousand bits (one bucket) stay cheap.
"""

from __future__ import annotations


def read_bits(value: int, length: int, start: int, count: int) -> int:
    """Extract ``count`` bits beginning at offset ``start``."""
    if start < 0 or count < 0 or start + count > length:
        raise ValueError(f"read of [{start}, {start + count}) outside {length}-bit string")
    return (value >> (length - start - count)) & ((1 << count) - 1)


def replace_bits(
    value: int, length: int, start: int, old_count: int, pattern: int, new_count: int
) -> tuple[int, int]:
    """Replace the ``old_count`` bits at ``start`` with ``new_count`` new bits.

    The tail of the string shifts by the length difference.  Returns the new
    ``(value, length)`` pair.
    """
    if start < 0 or old_count < 0 or start + old_count > length:
        raise ValueError(f"splice of [{start}, {start + old_count}) outside {length}-bit string")
    tail_len = length - start - old_count
    head = value >> (length - start)
    tail = value & ((1 << tail_len) - 1)
    return ((head << new_count) | pattern) << tail_len | tail, length + new_count - old_count


def bits_to_bytes(value: int, length: int) -> bytes:
    """Pack a bit string into bytes, zero-padded at the tail to a byte boundary."""
    nbytes = (length + 7) // 8
    return (value << (nbytes * 8 - length)).to_bytes(nbytes, "big")


def bytes_from_bits(data: bytes, length: int) -> int:
    """Inverse of :func:`bits_to_bytes`; trailing pad bits must be zero."""
    nbytes = (length + 7) // 8
    if len(data) != nbytes:
        raise ValueError(f"expected {nbytes} bytes for {length} bits, got {len(data)}")
    raw = int.from_bytes(data, "big")
    pad = nbytes * 8 - length
    if raw & ((1 << pad) - 1):
        raise ValueError("nonzero padding bits")
    return raw >> pad


class BitWriter:
    """Accumulates an MSB-first bit string."""

    def __init__(self) -> None:
        self.value = 0
        self.length = 0

    def write(self, pattern: int, count: int) -> None:
        if count < 0 or pattern >> count:
            raise ValueError(f"pattern {pattern:#x} does not fit in {count} bits")
        self.value = (self.value << count) | pattern
        self.length += count

    def getvalue(self) -> tuple[int, int]:
        return self.value, self.length


class BitReader:
    """Sequential cursor over an MSB-first bit string."""

    def __init__(self, value: int, length: int) -> None:
        self.value = value
        self.length = length
        self.pos = 0

    @property
    def remaining(self) -> int:
        return self.length - self.pos

    def take(self, count: int) -> int:
        if count > self.remaining:
            raise ValueError(f"read of {count} bits with only {self.remaining} remaining")
        out = read_bits(self.value, self.length, self.pos, count)
        self.pos += count
        return out
