import pytest

from hbs.errors import FormatError, IncompatibleSketchError
from hbs.hashing import SketchParams, hash_array, hash_stream, mix64, split_hash
from hbs.hll import HllSketch

PARAMS = SketchParams(256, 16)


def hash_with_rank_at(params, target_bucket, target_slot, rank):
    """Search the mixer stream for a hash with the requested split."""
    for seed in range(100_000):
        h = mix64(seed)
        addr, r = split_hash(h, params)
        if (addr.bucket, addr.slot, r) == (target_bucket, target_slot, rank):
            return h
    raise AssertionError("no hash found")


class TestInsert:
    def test_update_from_zero(self):
        h = hash_with_rank_at(PARAMS, 0, 0, 3)
        sketch = HllSketch(PARAMS)
        sketch.insert(h)
        assert sketch.registers[0] == 3
        assert sum(sketch.registers) == 3

    def test_max_rule_keeps_larger(self):
        sketch = HllSketch(PARAMS)
        high = hash_with_rank_at(PARAMS, 0, 0, 5)
        low = hash_with_rank_at(PARAMS, 0, 0, 3)
        sketch.insert(high)
        sketch.insert(low)
        assert sketch.registers[0] == 5

    def test_idempotent(self):
        sketch = HllSketch(PARAMS)
        h = mix64(424242)
        sketch.insert(h)
        snapshot = sketch.copy()
        sketch.insert(h)
        assert sketch == snapshot

    def test_registers_never_decrease(self):
        sketch = HllSketch(PARAMS)
        prev = list(sketch.registers)
        for h in hash_stream(5, 2000):
            sketch.insert(h)
            cur = list(sketch.registers)
            assert all(a <= b for a, b in zip(prev, cur))
            prev = cur

    def test_register_cap(self):
        params = SketchParams(16, 4, rank_width=2, max_rank=3)
        sketch = HllSketch(params)
        sketch.insert_many(hash_stream(1, 5000))
        assert max(sketch.registers) <= 3


class TestMerge:
    def test_identity_element(self):
        sketch = HllSketch(PARAMS)
        sketch.insert_many(hash_stream(2, 3000))
        assert sketch.merge(HllSketch(PARAMS)) == sketch

    def test_idempotent(self):
        sketch = HllSketch(PARAMS)
        sketch.insert_many(hash_stream(3, 3000))
        assert sketch.merge(sketch) == sketch

    def test_commutative_associative(self):
        a, b, c = (HllSketch(PARAMS) for _ in range(3))
        a.insert_many(hash_stream(10, 1000))
        b.insert_many(hash_stream(11, 1000))
        c.insert_many(hash_stream(12, 1000))
        assert a.merge(b) == b.merge(a)
        assert a.merge(b).merge(c) == a.merge(b.merge(c))

    def test_split_stream_equals_whole(self):
        whole = HllSketch(PARAMS)
        whole.insert_many(hash_stream(7, 10_000))
        first, second = HllSketch(PARAMS), HllSketch(PARAMS)
        first.insert_many(hash_stream(7, 5_000))
        second.insert_many(hash_stream(7, 5_000, start=5_000))
        assert first.merge(second) == whole

    def test_parameter_mismatch_rejected(self):
        with pytest.raises(IncompatibleSketchError):
            HllSketch(PARAMS).merge(HllSketch(SketchParams(256, 8)))


class TestBatchBuild:
    def test_from_hashes_matches_loop(self):
        hashes = hash_array(99, 100_000)
        batch = HllSketch.from_hashes(PARAMS, hashes)
        loop = HllSketch(PARAMS)
        loop.insert_many(hashes)
        assert batch == loop

    def test_from_hashes_larger_params(self):
        params = SketchParams(4096, 32)
        hashes = hash_array(98, 50_000)
        batch = HllSketch.from_hashes(params, hashes)
        loop = HllSketch(params)
        loop.insert_many(hashes)
        assert batch == loop


class TestSerialization:
    def test_round_trip(self):
        sketch = HllSketch(PARAMS)
        sketch.insert_many(hash_stream(21, 4000))
        data = sketch.to_bytes()
        assert HllSketch.from_bytes(data) == sketch

    def test_bad_magic(self):
        sketch = HllSketch(PARAMS)
        data = b"XXXX" + sketch.to_bytes()[4:]
        with pytest.raises(FormatError) as info:
            HllSketch.from_bytes(data)
        assert info.value.offset == 0

    def test_truncated(self):
        data = HllSketch(PARAMS).to_bytes()
        with pytest.raises(FormatError):
            HllSketch.from_bytes(data[:-5])

    def test_trailing_garbage(self):
        data = HllSketch(PARAMS).to_bytes()
        with pytest.raises(FormatError):
            HllSketch.from_bytes(data + b"\x00")

    def test_from_ranks_validation(self):
        with pytest.raises(ValueError):
            HllSketch.from_ranks(PARAMS, [0] * 255)
        with pytest.raises(ValueError):
            HllSketch.from_ranks(PARAMS, [64] * 256)
