"""Closed-form register-value distribution under the Poisson stream model.

With ``m`` registers and ``n`` distinct elements, a register sees a load of
``lam = n / m`` expected elements, and its value ``R`` (the maximum rank it
has received) follows

    P[R <= r] = exp(-lam * 2**-r)
    P[R = 0]  = exp(-lam)
    P[R = r]  = g(lam * 2**-r),   g(x) = exp(-x) * (1 - exp(-x)),  r >= 1.

The distribution concentrates tightly around ``r_star = ceil(log2(lam))``:
the right tail halves per step, the left tail decays doubly exponentially,
and the entropy settles near 2.83 bits regardless of ``lam``.  That is what
makes fixed-budget entropy coding of registers work.

Everything here is double precision.  For ``lam * 2**-r > 700`` the
exponential underflows; those probabilities are pinned to exactly 0.0 so no
NaNs can arise.  Mass beyond ``max_rank`` is folded into the final symbol,
keeping the alphabet finite while the pmf still sums to one.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .hashing import DEFAULT_MAX_RANK

EXP_UNDERFLOW = 700.0
TWO_LN2 = 2.0 * math.log(2.0)


def cdf_at(lam: float, r: int) -> float:
    """P[R <= r] = exp(-lam * 2**-r), exactly 0.0 past the underflow cutoff."""
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    x = lam * 2.0 ** (-r)
    return 0.0 if x > EXP_UNDERFLOW else math.exp(-x)


def pmf_at(lam: float, r: int, max_rank: int = DEFAULT_MAX_RANK) -> float:
    """P[R = r] over the folded alphabet ``0..max_rank``.

    The final symbol absorbs the right-tail mass ``1 - P[R <= max_rank-1]``
    so the folded pmf sums to one.
    """
    if not 0 <= r <= max_rank:
        raise ValueError(f"r must be in [0, {max_rank}], got {r}")
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    if r == 0:
        return cdf_at(lam, 0)
    if r == max_rank:
        # folded right-tail mass 1 - P[R <= max_rank-1]; expm1 keeps it
        # exact when the tail is tiny
        x = lam * 2.0 ** (-(max_rank - 1))
        return 1.0 if x > EXP_UNDERFLOW else -math.expm1(-x)
    x = lam * 2.0 ** (-r)
    if x > EXP_UNDERFLOW:
        return 0.0
    # 1 - exp(-x) via expm1 keeps precision for small x
    return math.exp(-x) * -math.expm1(-x)


def r_star(lam: float) -> int:
    """``ceil(log2(lam))``, computed so that ``2**(r-1) < lam <= 2**r`` holds
    exactly in floating point (plain ceil(log2) can slip one at powers of two)."""
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    r = math.ceil(math.log2(lam))
    while 2.0 ** (r - 1) >= lam:
        r -= 1
    while 2.0**r < lam:
        r += 1
    return r


class ModeBracket(NamedTuple):
    r_star: int
    mode: int


def mode_bracket(lam: float, max_rank: int = DEFAULT_MAX_RANK) -> ModeBracket:
    """Locate the pmf mode and check it stays within one step of ``r_star``.

    For ``lam <= 2*ln(2)`` the mode sits at 0; otherwise it is one of
    ``r_star - 1``, ``r_star``, ``r_star + 1``.  Violations raise, since they
    would mean the distribution code is wrong.
    """
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    rs = r_star(lam)
    pmf = [pmf_at(lam, r, max_rank) for r in range(max_rank + 1)]
    mode = max(range(max_rank + 1), key=pmf.__getitem__)
    if lam <= TWO_LN2:
        if mode != 0:
            raise AssertionError(f"mode {mode} != 0 for lam={lam} <= 2 ln 2")
    elif not rs - 1 <= mode <= rs + 1:
        raise AssertionError(f"mode {mode} outside [{rs - 1}, {rs + 1}] for lam={lam}")
    return ModeBracket(rs, mode)


def entropy_bits(lam: float, max_rank: int = DEFAULT_MAX_RANK) -> float:
    """Shannon entropy of the folded pmf in bits (0 log 0 = 0)."""
    total = 0.0
    for r in range(max_rank + 1):
        p = pmf_at(lam, r, max_rank)
        if p > 0.0:
            total -= p * math.log2(p)
    return total


def sample_register(lam: float, u: float, max_rank: int = DEFAULT_MAX_RANK) -> int:
    """Inverse-CDF sample: smallest ``r`` with ``cdf_at(lam, r) >= u``,
    capped at ``max_rank``."""
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must be in (0, 1), got {u}")
    for r in range(max_rank):
        if cdf_at(lam, r) >= u:
            return r
    return max_rank


def right_tail_bound(k: int) -> float:
    """Envelope for P[R > r_star + k]: ``2**-k``."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    return 2.0 ** (-k)


def left_tail_bound(k: int) -> float:
    """Envelope for P[R <= r_star - k] (valid for lam > 1): ``exp(-2**(k-1))``."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    return math.exp(-(2.0 ** (k - 1)))


def tails_within_bounds(lam: float, k: int) -> bool:
    """Check the true tails against both envelopes at offset ``k``.

    The right check applies for any ``lam > 0``; the left check additionally
    requires ``lam > 1`` (below that the left tail is empty anyway).
    """
    rs = r_star(lam)
    right_ok = 1.0 - cdf_at(lam, rs + k) <= right_tail_bound(k)
    if lam > 1.0:
        r = rs - k
        left_true = cdf_at(lam, r) if r >= 0 else 0.0
        left_ok = left_true <= left_tail_bound(k)
    else:
        left_ok = True
    return right_ok and left_ok


class RankModel:
    """The folded register-value distribution at a fixed load factor.

    Precomputes the pmf and the analytic CDF once; the sampler methods share
    the exact inverse-CDF semantics of :func:`sample_register`.
    """

    def __init__(self, lam: float, max_rank: int = DEFAULT_MAX_RANK):
        if lam < 0:
            raise ValueError(f"lam must be >= 0, got {lam}")
        self.lam = float(lam)
        self.max_rank = max_rank
        self.pmf: list[float] = [pmf_at(self.lam, r, max_rank) for r in range(max_rank + 1)]
        # analytic CDF, used by the samplers; the folded pmf sums to 1 anyway
        self._cdf = np.array([cdf_at(self.lam, r) for r in range(max_rank)])

    def entropy_bits(self) -> float:
        return entropy_bits(self.lam, self.max_rank)

    def mode_bracket(self) -> ModeBracket:
        return mode_bracket(self.lam, self.max_rank)

    def sample(self, u: float) -> int:
        return sample_register(self.lam, u, self.max_rank)

    def sample_many(self, us: Sequence[float] | np.ndarray) -> np.ndarray:
        """Vectorized sampler, element-exact with :meth:`sample`."""
        us = np.asarray(us, dtype=np.float64)
        if us.size and (us.min() <= 0.0 or us.max() >= 1.0):
            raise ValueError("all u must be in (0, 1)")
        # smallest r with cdf[r] >= u; indexes past the table mean the cap
        return np.searchsorted(self._cdf, us, side="left").astype(np.int64)
