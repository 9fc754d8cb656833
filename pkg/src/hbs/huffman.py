"""Deterministic canonical Huffman codes over the register-value alphabet.

Construction is the classic two-queue merge over symbols pre-sorted by
weight, which is O(n) after sorting and, more importantly here, makes the
result reproducible: ties never depend on heap internals.

Tie rules (these are part of the contract, since codebooks must be
bit-identical across runs and machines):

* leaves are ordered by (weight ascending, symbol ascending);
* when a leaf and a merged node (or two merged nodes) tie on weight, the
  node created earlier wins -- leaves count as created first, merged nodes
  are consumed in creation (FIFO) order;
* zero-weight symbols still get codewords.  They are treated as carrying
  vanishing pseudo-weights that shrink as the symbol grows, mirroring the
  limiting shape of the register distribution at small loads, and are
  pre-merged into a chain before any positive weight is touched.  The
  degenerate all-mass-at-zero distribution therefore yields the expected
  comb: symbol r gets a codeword of r + 1 bits (the last pair shares the
  deepest level), i.e. a unary code.

The merge tree itself is thrown away; only the code lengths survive, and
codewords are reassigned canonically (shorter first, then lower symbol).
Canonical form is what makes structural equality a plain lengths
comparison and lets the tree be serialized as bare shape bits: a preorder
indicator bit per node, 2 * leaves - 1 bits total, so 127 bits for the full
64-symbol alphabet.
"""

from __future__ import annotations

from collections import deque
from functools import cached_property
from typing import Sequence

from .bitio import BitReader, BitWriter, bits_to_bytes, bytes_from_bits
from .errors import CorruptStateError
from .rank_model import RankModel


class HuffmanCodebook:
    """Immutable rank <-> codeword mapping in canonical form.

    ``lengths[s]`` and ``codes[s]`` give symbol ``s``'s codeword;
    ``decode_table`` maps ``(length, pattern)`` back to the symbol.
    ``source_estimate`` records the cardinality estimate the book was built
    from, when it came from a rank model; sketches rely on it to rebuild
    the identical book after deserialization.
    """

    def __init__(self, lengths: Sequence[int], source_estimate: float | None = None):
        lengths = list(lengths)
        _check_kraft_equality(lengths)
        self.lengths: list[int] = lengths
        self.source_estimate = source_estimate
        self.canonical_order: list[int] = sorted(
            range(len(lengths)), key=lambda s: (lengths[s], s)
        )
        self.codes: list[int] = [0] * len(lengths)
        code = 0
        prev_len = lengths[self.canonical_order[0]]
        for s in self.canonical_order:
            code <<= lengths[s] - prev_len
            prev_len = lengths[s]
            self.codes[s] = code
            code += 1
        self.min_length = lengths[self.canonical_order[0]]
        self.max_length = lengths[self.canonical_order[-1]]
        self.decode_table: dict[tuple[int, int], int] = {
            (lengths[s], self.codes[s]): s for s in range(len(lengths))
        }

    @property
    def num_symbols(self) -> int:
        return len(self.lengths)

    def encode(self, symbol: int) -> tuple[int, int]:
        """Return ``(pattern, length)`` for a symbol; total over the alphabet."""
        if not 0 <= symbol < len(self.lengths):
            raise ValueError(f"symbol {symbol} outside alphabet of {len(self.lengths)}")
        return self.codes[symbol], self.lengths[symbol]

    def decode(self, reader: BitReader) -> tuple[int, int]:
        """Consume exactly one codeword from the cursor.

        Returns ``(symbol, bits_consumed)``.  Raises
        :class:`~hbs.errors.CorruptStateError` if the stream ends before any
        codeword matches.
        """
        table = self.decode_table
        pattern = 0
        for length in range(1, self.max_length + 1):
            if reader.remaining == 0:
                raise CorruptStateError(
                    f"bit stream ended mid-codeword after {length - 1} bits"
                )
            pattern = (pattern << 1) | reader.take(1)
            if length >= self.min_length:
                symbol = table.get((length, pattern))
                if symbol is not None:
                    return symbol, length
        raise CorruptStateError(f"no codeword matches pattern {pattern:#x}")

    @cached_property
    def tree_bits(self) -> tuple[bytes, int]:
        return serialize_tree(self)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HuffmanCodebook):
            return NotImplemented
        return self.lengths == other.lengths

    def __hash__(self) -> int:
        return hash(tuple(self.lengths))


def trees_equal(a: HuffmanCodebook, b: HuffmanCodebook) -> bool:
    """Structural equality; canonical form reduces it to the lengths arrays."""
    return a.lengths == b.lengths


def _check_kraft_equality(lengths: Sequence[int]) -> None:
    if len(lengths) == 0:
        raise ValueError("empty alphabet")
    if len(lengths) == 1:
        if lengths[0] != 0:
            raise ValueError("single-symbol alphabet must use the empty codeword")
        return
    max_len = max(lengths)
    if min(lengths) < 1:
        raise ValueError("zero-length codeword in a multi-symbol alphabet")
    # integer arithmetic: sum of 2**(max-l) must hit 2**max exactly
    if sum(1 << (max_len - l) for l in lengths) != 1 << max_len:
        raise ValueError("codeword lengths do not satisfy the Kraft equality")


def _merge_lengths(weights: Sequence[float]) -> list[int]:
    """Code lengths from the two-queue Huffman merge described above."""
    n = len(weights)
    if n == 1:
        return [0]
    depth = [0] * n
    zeros = [s for s in range(n) if weights[s] == 0.0]
    positive = sorted(
        (s for s in range(n) if weights[s] > 0.0), key=lambda s: (weights[s], s)
    )
    if not positive:
        raise ValueError("weights must contain positive mass")

    leaves: deque[tuple[float, list[int]]] = deque()
    if zeros:
        # pre-merged chain over the zero-weight symbols, largest symbol deepest
        members = [zeros[-1]]
        if len(zeros) > 1:
            members.append(zeros[-2])
            depth[zeros[-1]] = depth[zeros[-2]] = 1
            for s in reversed(zeros[:-2]):
                for t in members:
                    depth[t] += 1
                members.append(s)
                depth[s] = 1
        leaves.append((0.0, members))
    for s in positive:
        leaves.append((weights[s], [s]))

    merged: deque[tuple[float, list[int]]] = deque()

    def pop_min() -> tuple[float, list[int]]:
        # tie -> earlier-created node, and leaves predate merged nodes
        if leaves and merged:
            return leaves.popleft() if leaves[0][0] <= merged[0][0] else merged.popleft()
        return leaves.popleft() if leaves else merged.popleft()

    remaining = len(leaves)
    while remaining > 1:
        wa, sa = pop_min()
        wb, sb = pop_min()
        for t in sa:
            depth[t] += 1
        for t in sb:
            depth[t] += 1
        sa.extend(sb)
        merged.append((wa + wb, sa))
        remaining -= 1
    return depth


def codebook_from_weights(
    weights: Sequence[float], source_estimate: float | None = None
) -> HuffmanCodebook:
    """Build a canonical codebook for an arbitrary weight vector.

    Weights need not be normalized.  Every symbol receives a codeword, even
    at weight zero, so anything in the alphabet stays encodable.
    """
    if any(w < 0 for w in weights):
        raise ValueError("negative weight")
    return HuffmanCodebook(_merge_lengths(weights), source_estimate=source_estimate)


def build_codebook(
    model: RankModel, source_estimate: float | None = None
) -> HuffmanCodebook:
    """Build the codebook for a register-value distribution."""
    total = sum(model.pmf)
    if not abs(total - 1.0) < 1e-9:
        raise ValueError(f"model pmf sums to {total}, not 1")
    return codebook_from_weights(model.pmf, source_estimate=source_estimate)


def expected_length(book: HuffmanCodebook, pmf: Sequence[float]) -> float:
    """Average codeword length in bits under the given distribution."""
    return sum(p * l for p, l in zip(pmf, book.lengths))


def serialize_tree(book: HuffmanCodebook) -> tuple[bytes, int]:
    """Shape of the canonical code tree as preorder indicator bits.

    Internal nodes emit 1, leaves 0.  Leaves appear in canonical order, so a
    full ``n``-leaf alphabet costs exactly ``2n - 1`` bits (127 for 64
    symbols).  Returns ``(payload, bit_count)`` with zero padding to a byte
    boundary.
    """
    # normalized code value ranges reconstruct the trie without node objects
    order = book.canonical_order
    max_len = book.max_length
    keys = [book.codes[s] << (max_len - book.lengths[s]) for s in order]
    out = BitWriter()

    def emit(depth: int, lo: int, hi: int) -> None:
        if hi - lo == 1 and book.lengths[order[lo]] == depth:
            out.write(0, 1)
            return
        out.write(1, 1)
        # first key whose bit at this depth is set starts the right subtree
        boundary_bit = 1 << (max_len - depth - 1)
        split = lo
        while split < hi and not keys[split] & boundary_bit:
            split += 1
        emit(depth + 1, lo, split)
        emit(depth + 1, split, hi)

    if book.num_symbols == 1:
        out.write(0, 1)
    else:
        emit(0, 0, book.num_symbols)
    value, nbits = out.getvalue()
    return bits_to_bytes(value, nbits), nbits


def deserialize_tree(
    payload: bytes, nbits: int, symbols: Sequence[int]
) -> HuffmanCodebook:
    """Rebuild a codebook from tree-shape bits plus the canonical symbol order.

    ``symbols`` lists the leaf symbols left to right (i.e. canonical order);
    the shape alone pins the multiset of lengths but not which symbol owns
    which length.  Malformed shapes -- truncated, non-full, wrong leaf
    count, or shapes that are not canonical -- raise
    :class:`~hbs.errors.CorruptStateError`.
    """
    try:
        value = bytes_from_bits(payload, nbits)
    except ValueError as exc:
        raise CorruptStateError(f"bad tree payload: {exc}") from None
    reader = BitReader(value, nbits)
    depths: list[int] = []
    pending: list[int] = []
    depth = 0
    while True:
        if reader.remaining == 0:
            raise CorruptStateError("tree bits ended before the tree was complete")
        if reader.take(1):
            pending.append(depth + 1)
            depth += 1
        else:
            depths.append(depth)
            if not pending:
                break
            depth = pending.pop()
    if reader.remaining:
        raise CorruptStateError(f"{reader.remaining} trailing bits after the tree")
    if len(depths) != len(symbols):
        raise CorruptStateError(f"tree has {len(depths)} leaves for {len(symbols)} symbols")
    if any(a > b for a, b in zip(depths, depths[1:])):
        raise CorruptStateError("leaf depths are not canonical (non-decreasing)")
    if sorted(symbols) != list(range(len(symbols))):
        raise CorruptStateError("symbols must be a permutation of the alphabet")
    lengths = [0] * len(symbols)
    for s, d in zip(symbols, depths):
        lengths[s] = d
    try:
        book = HuffmanCodebook(lengths)
    except ValueError as exc:
        raise CorruptStateError(f"tree shape is not a full code tree: {exc}") from None
    if book.canonical_order != list(symbols):
        raise CorruptStateError("symbol order inconsistent with canonical form")
    return book


class TreeWalkDecoder:
    """Bit-by-bit decoder walking an explicit node tree.

    The table decoder is the production path; this one exists to cross-check
    it, mirroring how a tree traversal would behave.
    """

    _LEAF = object()

    def __init__(self, book: HuffmanCodebook):
        self.root: list = [None, None]
        if book.num_symbols == 1:
            self.root = [0, self._LEAF]
            return
        for s in range(book.num_symbols):
            code, length = book.encode(s)
            node = self.root
            for i in range(length - 1, -1, -1):
                bit = (code >> i) & 1
                if i == 0:
                    node[bit] = [s, self._LEAF]
                else:
                    if node[bit] is None:
                        node[bit] = [None, None]
                    node = node[bit]

    def decode(self, reader: BitReader) -> tuple[int, int]:
        if self.root[1] is self._LEAF:
            return self.root[0], 0
        node = self.root
        consumed = 0
        while True:
            if reader.remaining == 0:
                raise CorruptStateError("bit stream ended mid-codeword")
            node = node[reader.take(1)]
            consumed += 1
            if node is None:
                raise CorruptStateError("pattern matches no codeword")
            if node[1] is self._LEAF:
                return node[0], consumed
