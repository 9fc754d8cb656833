import math
import random

import pytest

from hbs.bitio import BitReader, BitWriter
from hbs.errors import CorruptStateError
from hbs.huffman import (
    HuffmanCodebook,
    TreeWalkDecoder,
    build_codebook,
    codebook_from_weights,
    deserialize_tree,
    expected_length,
    serialize_tree,
    trees_equal,
)
from hbs.rank_model import TWO_LN2, RankModel, entropy_bits

# load factors where the worst-case length bound is meaningful (above the
# mode-at-zero threshold, every probability is small enough)
LAM_GRID = [TWO_LN2 * 1.0001 * 2.0 ** (i / 4) for i in range(4 * 39)]


def kraft_sum_exact(lengths):
    max_len = max(lengths)
    return sum(1 << (max_len - l) for l in lengths), 1 << max_len


class TestConstruction:
    def test_degenerate_comb(self):
        book = build_codebook(RankModel(0.0))
        assert book.lengths[0] == 1
        # unary-style growth: one extra bit per rank, deepest pair shared
        assert book.lengths[1:63] == list(range(2, 64))
        assert book.lengths[63] == 63

    def test_uniform_four_symbols(self):
        book = codebook_from_weights([0.25, 0.25, 0.25, 0.25])
        assert book.lengths == [2, 2, 2, 2]

    def test_single_symbol(self):
        book = codebook_from_weights([1.0])
        assert book.lengths == [0]
        assert book.encode(0) == (0, 0)

    def test_zero_probability_symbols_encodable(self):
        book = build_codebook(RankModel(2.0**30))  # left tail underflows
        model = RankModel(2.0**30)
        assert model.pmf[0] == 0.0
        for r in range(64):
            code, length = book.encode(r)
            assert length >= 1
            assert code < (1 << length)

    def test_deterministic(self):
        a = build_codebook(RankModel(12345.678))
        b = build_codebook(RankModel(12345.678))
        assert a.lengths == b.lengths and a.codes == b.codes

    def test_rejects_bad_pmf(self):
        with pytest.raises(ValueError):
            codebook_from_weights([0.5, -0.1])
        with pytest.raises(ValueError):
            codebook_from_weights([0.0, 0.0])
        bad = RankModel(1.0)
        bad.pmf = [0.5] * 64
        with pytest.raises(ValueError):
            build_codebook(bad)

    def test_most_probable_symbol_gets_minimal_length(self):
        for lam in (1.0, 2.0**8, 2.0**15):
            model = RankModel(lam)
            book = build_codebook(model)
            mode = max(range(64), key=model.pmf.__getitem__)
            assert book.lengths[mode] == min(book.lengths)


class TestOptimality:
    def test_kraft_equality_everywhere(self):
        for lam in [0.0] + LAM_GRID:
            total, full = kraft_sum_exact(build_codebook(RankModel(lam)).lengths)
            assert total == full, f"lam={lam}"

    def test_prefix_free_everywhere(self):
        for lam in (0.0, 1.0, 2.0**4, 2.0**15, 2.0**33):
            book = build_codebook(RankModel(lam))
            pairs = [(book.lengths[s], book.codes[s]) for s in range(64)]
            for i in range(64):
                for j in range(64):
                    if i == j:
                        continue
                    li, ci = pairs[i]
                    lj, cj = pairs[j]
                    if li <= lj:
                        assert ci != (cj >> (lj - li)), f"lam={lam} {i} prefixes {j}"

    def test_expected_length_within_entropy_plus_one(self):
        for lam in LAM_GRID:
            model = RankModel(lam)
            book = build_codebook(model)
            avg = expected_length(book, model.pmf)
            h = entropy_bits(lam)
            assert avg <= h + 1 + 1e-9, f"lam={lam}: {avg} > {h}+1"

    def test_worst_case_length_bound(self):
        for lam in LAM_GRID:
            model = RankModel(lam)
            book = build_codebook(model)
            for r, p in enumerate(model.pmf):
                if p > 0.0:
                    assert book.lengths[r] <= -1.44041 * math.log2(p) + 1e-9, (
                        f"lam={lam} r={r}"
                    )


class TestEncodeDecode:
    def test_round_trip_every_symbol(self):
        book = build_codebook(RankModel(2.0**12))
        for r in range(64):
            code, length = book.encode(r)
            reader = BitReader(code, length)
            assert book.decode(reader) == (r, length)

    def test_comb_encode_zero(self):
        book = build_codebook(RankModel(0.0))
        assert book.encode(0)[1] == 1

    def test_concatenated_stream(self):
        book = build_codebook(RankModel(100.0))
        w = BitWriter()
        for r in (5, 7):
            w.write(*book.encode(r))
        reader = BitReader(*w.getvalue())
        assert book.decode(reader)[0] == 5
        assert book.decode(reader)[0] == 7
        assert reader.remaining == 0

    def test_empty_stream_is_corruption(self):
        book = build_codebook(RankModel(100.0))
        with pytest.raises(CorruptStateError):
            book.decode(BitReader(0, 0))

    def test_truncated_stream_is_corruption(self):
        book = build_codebook(RankModel(2.0**15))
        code, length = book.encode(40)  # a long codeword
        assert length > 4
        with pytest.raises(CorruptStateError):
            book.decode(BitReader(code >> 2, length - 2))

    def test_long_random_sequence_round_trips(self):
        model = RankModel(2.0**9)
        book = build_codebook(model)
        rng = random.Random(11)
        symbols = [rng.choices(range(64), weights=model.pmf)[0] for _ in range(10_000)]
        w = BitWriter()
        for s in symbols:
            w.write(*book.encode(s))
        reader = BitReader(*w.getvalue())
        decoded = [book.decode(reader)[0] for _ in symbols]
        assert decoded == symbols
        assert reader.remaining == 0

    def test_tree_walk_decoder_equivalent(self):
        for lam in (0.0, 3.7, 2.0**15):
            book = build_codebook(RankModel(lam))
            walker = TreeWalkDecoder(book)
            rng = random.Random(7)
            symbols = [rng.randrange(64) for _ in range(500)]
            w = BitWriter()
            for s in symbols:
                w.write(*book.encode(s))
            r1 = BitReader(*w.getvalue())
            r2 = BitReader(*w.getvalue())
            for s in symbols:
                assert book.decode(r1) == walker.decode(r2) == (s, book.lengths[s])


class TestTreeSerialization:
    def test_exactly_127_bits_for_full_alphabet(self):
        for lam in (0.0, 1.0, 2.0**15, 2.0**40):
            _, nbits = serialize_tree(build_codebook(RankModel(lam)))
            assert nbits == 127

    def test_round_trip(self):
        for lam in (0.0, 0.9, 2.0**5, 2.0**15, 2.0**39):
            book = build_codebook(RankModel(lam))
            payload, nbits = serialize_tree(book)
            back = deserialize_tree(payload, nbits, book.canonical_order)
            assert back.lengths == book.lengths
            assert back.codes == book.codes

    def test_single_leaf(self):
        book = codebook_from_weights([1.0])
        payload, nbits = serialize_tree(book)
        assert nbits == 1
        assert deserialize_tree(payload, nbits, [0]).lengths == [0]

    def test_malformed_truncated(self):
        book = build_codebook(RankModel(64.0))
        payload, nbits = serialize_tree(book)
        with pytest.raises(CorruptStateError):
            deserialize_tree(payload[: nbits // 16], nbits // 2, book.canonical_order)

    def test_malformed_wrong_leaf_count(self):
        book = build_codebook(RankModel(64.0))
        payload, nbits = serialize_tree(book)
        with pytest.raises(CorruptStateError):
            deserialize_tree(payload, nbits, list(range(63)))

    def test_malformed_trailing_bits(self):
        book = codebook_from_weights([0.5, 0.5])
        payload, nbits = serialize_tree(book)  # "100" = 3 bits
        assert nbits == 3
        with pytest.raises(CorruptStateError):
            deserialize_tree(payload, 2, [0, 1])

    def test_malformed_symbol_order(self):
        book = build_codebook(RankModel(2.0**15))
        payload, nbits = serialize_tree(book)
        scrambled = list(reversed(book.canonical_order))
        with pytest.raises(CorruptStateError):
            deserialize_tree(payload, nbits, scrambled)


class TestTreesEqual:
    def test_reflexive(self):
        book = build_codebook(RankModel(77.0))
        assert trees_equal(book, book)

    def test_tiny_perturbation_equal(self):
        lam = 1234.5
        a = build_codebook(RankModel(lam))
        b = build_codebook(RankModel(lam * (1 + 1e-9)))
        assert trees_equal(a, b)

    def test_decade_apart_unequal(self):
        a = build_codebook(RankModel(2.0**10))
        b = build_codebook(RankModel(2.0**20))
        assert not trees_equal(a, b)
