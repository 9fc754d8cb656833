"""The compressed sketch: Huffman-coded buckets with a self-tuning codebook.

Losslessness is the headline property: after any hash sequence, decoding
every bucket yields exactly the register array a plain :class:`HllSketch`
would hold for the same sequence.  The codebook is derived from the
sketch's own cardinality estimate; as the estimate grows the register
distribution shifts, so the book is rebuilt (and every bucket re-encoded)
roughly each time the estimate doubles, which keeps rebuilds logarithmic in
the stream length.

A sketch always satisfies ``book == codebook built at estimate n_hat_old``;
serialization relies on this to reconstruct the book from the stored
estimate and verify it against the stored tree bits.
"""

from __future__ import annotations

from .bucket import (
    Bucket,
    BucketBudget,
    bucket_bits,
    decode_all,
    encode_ranks,
    new_bucket,
    peek,
    poke,
    recompute_min,
    reencode,
)
from .errors import IncompatibleSketchError
from .estimator import MIN_REGISTERS, EstimatorState, harmonic_weight
from .hashing import U64, SketchParams
from .hll import HllSketch
from .huffman import HuffmanCodebook, build_codebook, trees_equal
from .rank_model import RankModel


def rebuild_trigger(n_hat: float, n_hat_old: float) -> bool:
    """Decide whether the codebook is stale.

    Doubling rule: rebuild once the estimate reaches twice its value at the
    last build.  From the initial zero estimate, any positive estimate
    triggers, so the first real insert immediately replaces the degenerate
    startup book.
    """
    if n_hat_old <= 0.0:
        return n_hat > 0.0
    return n_hat >= max(2.0 * n_hat_old, n_hat_old + 1.0)


def _book_for(estimate: float, params: SketchParams) -> HuffmanCodebook:
    model = RankModel(estimate / params.m_eff, params.max_rank)
    return build_codebook(model, source_estimate=estimate)


class HbsSketch:
    """Bucketed, Huffman-compressed HyperLogLog with identical semantics.

    Single writer per sketch; reads (estimate, to_hll, serialization) are
    safe between writes.  ``merge`` never mutates its operands.
    """

    def __init__(self, params: SketchParams, budget: BucketBudget | None = None):
        if params.m_eff < MIN_REGISTERS:
            raise ValueError(f"sketch needs at least {MIN_REGISTERS} registers")
        self.params = params
        self.budget = budget or BucketBudget()
        self.n_hat = 0.0
        self.n_hat_old = 0.0
        self.book = _book_for(0.0, params)
        self.buckets: list[Bucket] = [
            new_bucket(self.book, params.bucket_size) for _ in range(params.num_buckets)
        ]
        self.est = EstimatorState.fresh(params.m_eff)
        self.overflowed: set[int] = set()
        # operation counters, exposed for the cost experiments
        self.ordinary_updates = 0
        self.min_recomputes = 0
        self.rebuilds = 0
        self._cache_geometry()

    def _cache_geometry(self) -> None:
        # params fields pulled into plain attributes for the insert hot path
        self._num_buckets = self.params.num_buckets
        self._bucket_size = self.params.bucket_size
        self._rank_width = self.params.rank_width
        self._rank_mask = (1 << self._rank_width) - 1
        self._max_rank = self.params.max_rank

    # -- updates -----------------------------------------------------------

    def insert(self, h: int) -> bool:
        """Fold one 64-bit hash in.  Returns True if a register changed.

        The address/rank split is inlined from ``hashing.split_hash`` for
        speed and must stay in lockstep with it (asserted by the tests).
        """
        h &= U64
        bucket_i = ((h >> 32) * self._num_buckets) >> 32
        slot = (((h >> 16) & 0xFFFF) * self._bucket_size) >> 16
        width = self._rank_width
        low = h & self._rank_mask
        rank = width - low.bit_length() + 1 if low else width + 1
        if rank > self._max_rank:
            rank = self._max_rank

        bucket = self.buckets[bucket_i]
        if rank <= bucket.r_min:
            return False
        r_old = peek(bucket, slot, self.book)
        if r_old >= rank:
            return False

        self.ordinary_updates += 1
        poke(bucket, slot, rank, self.book)
        if self.budget.fixed and bucket.code_len > self.budget.bit_budget:
            self.overflowed.add(bucket_i)
        if r_old == bucket.r_min:
            bucket.c_min -= 1
            if bucket.c_min == 0:
                recompute_min(bucket, self.book)
                self.min_recomputes += 1
        self.est.on_register_change(r_old, rank)
        self.n_hat = self.est.corrected_estimate()
        if rebuild_trigger(self.n_hat, self.n_hat_old):
            self._rebuild(self.n_hat)
        return True

    def insert_many(self, hashes) -> None:
        if hasattr(hashes, "tolist"):  # numpy arrays: plain ints iterate faster
            hashes = hashes.tolist()
        insert = self.insert
        for h in hashes:
            insert(h)

    def _rebuild(self, estimate: float) -> None:
        new_book = _book_for(estimate, self.params)
        if not trees_equal(new_book, self.book):
            budget_check = self.budget.fixed
            for i, bucket in enumerate(self.buckets):
                self.buckets[i] = replacement = reencode(bucket, self.book, new_book)
                if budget_check and replacement.code_len > self.budget.bit_budget:
                    self.overflowed.add(i)
        self.book = new_book
        self.n_hat_old = estimate
        self.rebuilds += 1

    # -- queries -----------------------------------------------------------

    def estimate(self) -> float:
        return self.est.corrected_estimate()

    def register_values(self) -> list[int]:
        out = []
        for bucket in self.buckets:
            out.extend(decode_all(bucket, self.book))
        return out

    def bucket_harmonic_sums(self) -> list[int]:
        """Per-bucket partial harmonic sums in integer 2**-63 units.

        Their plain sum equals the global estimator sum exactly.
        """
        sums = []
        for bucket in self.buckets:
            sums.append(sum(harmonic_weight(r) for r in decode_all(bucket, self.book)))
        return sums

    def stats(self) -> dict:
        code = unary = meta = 0
        for bucket in self.buckets:
            c, u, m = bucket_bits(bucket)
            code += c
            unary += u
            meta += m
        _, tree_nbits = self.book.tree_bits
        out = {
            "m_eff": self.params.m_eff,
            "num_buckets": self.params.num_buckets,
            "codeword_bits": code,
            "unary_bits": unary,
            "metadata_bits": meta,
            "tree_bits": tree_nbits,
            "ordinary_updates": self.ordinary_updates,
            "min_recomputes": self.min_recomputes,
            "rebuilds": self.rebuilds,
            "overflowed_buckets": len(self.overflowed),
        }
        if self.budget.fixed:
            # fixed layout reserves the full budget per in-place bucket;
            # escaped buckets cost their true size on top
            reserved = self.params.num_buckets * self.budget.bit_budget
            side = sum(self.buckets[i].code_len for i in self.overflowed)
            out["reserved_codeword_bits"] = reserved
            out["side_table_bits"] = side
            total = reserved + side + unary + meta + tree_nbits + 128
        else:
            total = code + unary + meta + tree_nbits + 128  # + two f64 estimates
        out["total_bits"] = total
        out["bits_per_register"] = total / self.params.m_eff
        return out

    # -- conversions -------------------------------------------------------

    def to_hll(self) -> HllSketch:
        """Decompress to the plain sketch; exact by construction."""
        return HllSketch.from_ranks(self.params, self.register_values())

    @classmethod
    def from_hll(
        cls, source: HllSketch, book: HuffmanCodebook | None = None
    ) -> "HbsSketch":
        """Compress a plain sketch.

        ``book`` optionally reuses an existing model-derived codebook (one
        carrying its source estimate); otherwise a book is built at the
        source's own estimate.
        """
        params = source.params
        est = EstimatorState.from_registers(source.registers, params.m_eff)
        n_hat = est.corrected_estimate()
        if book is None:
            n_hat_old = n_hat
            book = _book_for(n_hat_old, params)
        else:
            if book.source_estimate is None:
                raise ValueError("codebook hint must carry its source estimate")
            n_hat_old = book.source_estimate
        out = cls.__new__(cls)
        out.params = params
        out.budget = BucketBudget()
        out.n_hat = n_hat
        out.n_hat_old = n_hat_old
        out.book = book
        bs = params.bucket_size
        regs = source.registers
        out.buckets = [
            encode_ranks(list(regs[i : i + bs]), book) for i in range(0, len(regs), bs)
        ]
        out.est = est
        out.overflowed = set()
        out.ordinary_updates = 0
        out.min_recomputes = 0
        out.rebuilds = 0
        out._cache_geometry()
        return out

    # -- merge -------------------------------------------------------------

    def merge(self, other: "HbsSketch") -> "HbsSketch":
        """Union of two sketches over the same parameters.

        Two passes: decode both sides and take elementwise maxima, then
        encode the result -- under the reused codebook if the merged
        estimate is close enough to the newer operand's build estimate,
        under a fresh one otherwise.
        """
        if self.params != other.params:
            raise IncompatibleSketchError(
                f"cannot merge {self.params} with {other.params}"
            )
        params = self.params
        maxima: list[list[int]] = []
        hsum = 0
        zeros = 0
        for ba, bb in zip(self.buckets, other.buckets):
            ra = decode_all(ba, self.book)
            rb = decode_all(bb, other.book)
            merged = [a if a >= b else b for a, b in zip(ra, rb)]
            maxima.append(merged)
            for r in merged:
                hsum += harmonic_weight(r)
                zeros += r == 0
        est = EstimatorState(hsum, zeros, params.m_eff)
        n_hat = est.corrected_estimate()
        reuse_from = max(self.n_hat_old, other.n_hat_old)
        if rebuild_trigger(n_hat, reuse_from):
            n_hat_old = n_hat
            book = _book_for(n_hat_old, params)
        else:
            n_hat_old = reuse_from
            book = self.book if self.n_hat_old >= other.n_hat_old else other.book
        out = HbsSketch.__new__(HbsSketch)
        out.params = params
        out.budget = BucketBudget()
        out.n_hat = n_hat
        out.n_hat_old = n_hat_old
        out.book = book
        out.buckets = [encode_ranks(ranks, book) for ranks in maxima]
        out.est = est
        out.overflowed = set()
        out.ordinary_updates = 0
        out.min_recomputes = 0
        out.rebuilds = 0
        out._cache_geometry()
        return out

    # -- serialization -----------------------------------------------------

    def to_bytes(self) -> bytes:
        from .serialize import dump_hbs

        return dump_hbs(self)

    @classmethod
    def from_bytes(cls, data: bytes) -> "HbsSketch":
        from .serialize import load_hbs

        return load_hbs(data)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HbsSketch):
            return NotImplemented
        return (
            self.params == other.params
            and self.n_hat == other.n_hat
            and self.n_hat_old == other.n_hat_old
            and self.book.lengths == other.book.lengths
            and self.buckets == other.buckets
            and self.est == other.est
        )
