"""Plain HyperLogLog sketch with uncompressed registers.

This is the reference the compressed sketch is measured against: after any
stream, decompressing the compressed sketch must reproduce this register
array exactly.  Registers are stored one byte each for clarity; this type is
the correctness baseline and the size baseline, not the compact product.
"""

from __future__ import annotations

import array

import numpy as np

from .errors import IncompatibleSketchError
from .estimator import MIN_REGISTERS, EstimatorState
from .hashing import SketchParams, split_hash, split_hash_array


class HllSketch:
    """Array of max-rank registers with insert / merge / estimate.

    Registers only ever increase, so inserts are idempotent and merge is the
    elementwise maximum.
    """

    def __init__(self, params: SketchParams):
        if params.m_eff < MIN_REGISTERS:
            raise ValueError(f"sketch needs at least {MIN_REGISTERS} registers")
        self.params = params
        self.registers = array.array("B", bytes(params.m_eff))

    @classmethod
    def from_ranks(cls, params: SketchParams, ranks) -> "HllSketch":
        sketch = cls(params)
        regs = array.array("B", ranks)
        if len(regs) != params.m_eff:
            raise ValueError(f"expected {params.m_eff} registers, got {len(regs)}")
        if max(regs, default=0) > params.max_rank:
            raise ValueError("register above max_rank")
        sketch.registers = regs
        return sketch

    def insert(self, h: int) -> None:
        """Fold one 64-bit hash into the sketch."""
        addr, rank = split_hash(h, self.params)
        i = addr.bucket * self.params.bucket_size + addr.slot
        if rank > self.registers[i]:
            self.registers[i] = rank

    def insert_many(self, hashes) -> None:
        if hasattr(hashes, "tolist"):  # numpy arrays: plain ints iterate faster
            hashes = hashes.tolist()
        bucket_size = self.params.bucket_size
        params = self.params
        regs = self.registers
        for h in hashes:
            addr, rank = split_hash(h, params)
            i = addr.bucket * bucket_size + addr.slot
            if rank > regs[i]:
                regs[i] = rank

    @classmethod
    def from_hashes(cls, params: SketchParams, hashes: np.ndarray) -> "HllSketch":
        """Vectorized bulk build; register-exact with sequential inserts."""
        bucket, slot, rank = split_hash_array(hashes, params)
        flat = bucket * params.bucket_size + slot
        regs = np.zeros(params.m_eff, dtype=np.int64)
        np.maximum.at(regs, flat, rank)
        sketch = cls(params)
        sketch.registers = array.array("B", regs.astype(np.uint8).tobytes())
        return sketch

    def merge(self, other: "HllSketch") -> "HllSketch":
        """Elementwise-maximum union; returns a new sketch."""
        if self.params != other.params:
            raise IncompatibleSketchError(
                f"cannot merge {self.params} with {other.params}"
            )
        out = HllSketch(self.params)
        out.registers = array.array(
            "B", (max(a, b) for a, b in zip(self.registers, other.registers))
        )
        return out

    def estimator_state(self) -> EstimatorState:
        return EstimatorState.from_registers(self.registers, self.params.m_eff)

    def estimate(self) -> float:
        return self.estimator_state().corrected_estimate()

    def copy(self) -> "HllSketch":
        out = HllSketch(self.params)
        out.registers = array.array("B", self.registers)
        return out

    def to_bytes(self) -> bytes:
        from .serialize import dump_hll

        return dump_hll(self)

    @classmethod
    def from_bytes(cls, data: bytes) -> "HllSketch":
        from .serialize import load_hll

        return load_hll(data)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HllSketch):
            return NotImplemented
        return self.params == other.params and self.registers == other.registers
