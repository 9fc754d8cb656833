"""Cardinality estimation from register values.

The raw estimate is the classic bias-corrected harmonic mean
``alpha_m * m**2 / sum(2**-R_j)``; small cardinalities fall back to linear
counting ``m * ln(m / zeros)`` while the raw estimate is below
``2.5 * m`` and zero registers remain.

The harmonic sum is kept as an exact integer in units of ``2**-63`` (every
``2**-R_j`` is a whole number of those units), so incremental updates drift
by exactly nothing relative to a full recomputation, and partial sums over
buckets add up to the global sum exactly.
"""

from __future__ import annotations

import math
from typing import Iterable

# classic harmonic-mean bias constant for m >= 128; kept as the single
# closed form across the supported range
MIN_REGISTERS = 16
LINEAR_COUNTING_THRESHOLD = 2.5
_SCALE = 63  # harmonic weights stored as integer multiples of 2**-63


def alpha_m(m_eff: int) -> float:
    return 0.7213 / (1.0 + 1.079 / m_eff)


def harmonic_weight(rank: int) -> int:
    """2**-rank in integer 2**-63 units."""
    return 1 << (_SCALE - rank)


class EstimatorState:
    """Incrementally maintained inputs of the estimator.

    ``zero_count`` equals the number of rank-0 registers, which the sketch
    can also derive from its buckets' min-rank metadata.
    """

    __slots__ = ("hsum_scaled", "zero_count", "m_eff")

    def __init__(self, hsum_scaled: int, zero_count: int, m_eff: int):
        if m_eff < MIN_REGISTERS:
            raise ValueError(f"need at least {MIN_REGISTERS} registers, got {m_eff}")
        self.hsum_scaled = hsum_scaled
        self.zero_count = zero_count
        self.m_eff = m_eff

    @classmethod
    def fresh(cls, m_eff: int) -> "EstimatorState":
        return cls(m_eff << _SCALE, m_eff, m_eff)

    @classmethod
    def from_registers(cls, ranks: Iterable[int], m_eff: int) -> "EstimatorState":
        hsum = 0
        zeros = 0
        count = 0
        for r in ranks:
            hsum += 1 << (_SCALE - r)
            zeros += r == 0
            count += 1
        if count != m_eff:
            raise ValueError(f"got {count} registers, expected {m_eff}")
        return cls(hsum, zeros, m_eff)

    @property
    def harmonic_sum(self) -> float:
        return self.hsum_scaled * 2.0**-_SCALE

    def raw_estimate(self) -> float:
        if self.hsum_scaled <= 0:
            raise RuntimeError("harmonic sum must be positive; estimator state corrupt")
        return alpha_m(self.m_eff) * self.m_eff * self.m_eff / self.harmonic_sum

    def corrected_estimate(
        self, threshold: float = LINEAR_COUNTING_THRESHOLD
    ) -> float:
        raw = self.raw_estimate()
        if raw <= threshold * self.m_eff and self.zero_count > 0:
            return self.m_eff * math.log(self.m_eff / self.zero_count)
        return raw

    def on_register_change(self, r_old: int, r_new: int) -> None:
        """Account for one register moving from ``r_old`` up to ``r_new``."""
        if r_new <= r_old:
            raise ValueError(f"register must increase, got {r_old} -> {r_new}")
        self.hsum_scaled += (1 << (_SCALE - r_new)) - (1 << (_SCALE - r_old))
        if r_old == 0:
            self.zero_count -= 1

    def copy(self) -> "EstimatorState":
        return EstimatorState(self.hsum_scaled, self.zero_count, self.m_eff)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EstimatorState):
            return NotImplemented
        return (
            self.hsum_scaled == other.hsum_scaled
            and self.zero_count == other.zero_count
            and self.m_eff == other.m_eff
        )
