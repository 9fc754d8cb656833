"""Acceptance suite: one test per headline requirement, in order.

Each test prints a single PASS/FAIL line (visible with ``pytest -s``) and
asserts the requirement at its stated tolerance.  Run with::

    pytest tests/test_acceptance.py -v -s
"""

import math

import numpy as np
import pytest

from hbs import experiments
from hbs.estimator import EstimatorState
from hbs.hashing import SketchParams, hash_array, hash_stream, substream_seed
from hbs.hll import HllSketch
from hbs.huffman import build_codebook, expected_length
from hbs.rank_model import (
    TWO_LN2,
    RankModel,
    cdf_at,
    entropy_bits,
    left_tail_bound,
    mode_bracket,
    r_star,
    right_tail_bound,
)
from hbs.sketch import HbsSketch

SEED = 0xACCE97ED

# 500 log-spaced load factors in (2 ln 2, 2**40]
LAM_LO = TWO_LN2
LAM_GRID = [
    LAM_LO * (2.0**40 / LAM_LO) ** ((i + 1) / 500) for i in range(500)
]


def report(index, name, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    suffix = f" -- {detail}" if detail else ""
    print(f"[{status}] {index}/10 {name}{suffix}")
    assert passed, f"{name}: {detail}"


def test_criterion_01_losslessness_oracle():
    # 1000 random streams split across both sketch geometries and three
    # stream lengths; the compressed sketch must decompress to the plain
    # register array exactly, every time.
    plan = [(100, 470), (10_000, 26), (1_000_000, 4)]
    geometries = [SketchParams(256, 16), SketchParams(4096, 32)]
    streams = 0
    failures = 0
    for g, params in enumerate(geometries):
        for length, count in plan:
            for trial in range(count):
                seed = substream_seed(SEED, g * 1_000_000 + length + trial)
                packed = HbsSketch(params)
                if length >= 100_000:
                    hashes = hash_array(seed, length)
                    packed.insert_many(hashes)
                    plain = HllSketch.from_hashes(params, hashes)
                else:
                    plain = HllSketch(params)
                    hashes = list(hash_stream(seed, length))
                    packed.insert_many(hashes)
                    plain.insert_many(hashes)
                streams += 1
                if packed.to_hll() != plain:
                    failures += 1
    report(
        1,
        "lossless equivalence with the plain sketch",
        streams == 1000 and failures == 0,
        f"{streams - failures}/{streams} streams register-exact",
    )


def test_criterion_02_entropy_constant():
    h = entropy_bits(2.0**20)
    report(
        2,
        "register entropy approaches 2.83196 bits",
        abs(h - 2.83196) <= 1e-3,
        f"entropy at load 2^20 = {h:.6f}",
    )


def test_criterion_03_mode_bracket_and_tails():
    worst_k = None
    for lam in LAM_GRID:
        mb = mode_bracket(lam)  # raises internally if outside the bracket
        assert mb.mode in (mb.r_star - 1, mb.r_star, mb.r_star + 1) or (
            lam <= TWO_LN2 and mb.mode == 0
        )
        rs = r_star(lam)
        for k in range(21):
            right = 1.0 - cdf_at(lam, rs + k)
            left = cdf_at(lam, rs - k) if rs - k >= 0 else 0.0
            if right > right_tail_bound(k) or left > left_tail_bound(k):
                worst_k = (lam, k)
    report(
        3,
        "mode bracket and both tail envelopes on a 500-point grid",
        worst_k is None,
        f"{len(LAM_GRID)} load factors, offsets 0..20",
    )


def test_criterion_04_reference_sizes():
    result = experiments.mvp(2**15, [64, 512, 1024], [10, 144, 313])
    bad = [c for c in result.checks if not c.passed]
    report(
        4,
        "sketch sizes and MVP within 2% of the reference table",
        not bad,
        f"{len(result.checks)} size/MVP anchors checked",
    )


def test_criterion_05_bucket_budget_feasibility():
    result = experiments.bucket_size(
        2**30, 2**15, [10, 20, 40, 80, 144, 160, 313, 320], reps=10_000, seed=SEED
    )
    bad = [c for c in result.checks if not c.passed]
    maxima = {row[0]: row[3] for row in result.rows}
    report(
        5,
        "sampled buckets fit their bit budgets and grow linearly",
        not bad,
        f"max bits: B=10:{maxima[10]}<=64 B=144:{maxima[144]}<=512 B=313:{maxima[313]}<=1024",
    )


def test_criterion_06_bucket_size_load_independence():
    result = experiments.bucket_size_vs_lambda(
        [10, 144, 313], [2.0**8, 2.0**12, 2.0**16, 2.0**20], reps=10_000, seed=SEED
    )
    bad = [c for c in result.checks if not c.passed]
    report(
        6,
        "mean bucket size varies <5% across large load factors",
        not bad,
        "; ".join(c.detail for c in result.checks if "varies" in c.name),
    )


def test_criterion_07_rebuilds_logarithmic():
    n = 1_000_000
    result = experiments.update_costs(4096, 32, n, seed=SEED)
    rebuilds = result.rows[-1][3]
    cap = 2 * math.log2(n) + 4
    bad = [c.name for c in result.checks if not c.passed]
    report(
        7,
        "codebook rebuilds over a million-element stream stay logarithmic",
        rebuilds <= cap and not bad,
        f"rebuilds={rebuilds}, cap={cap:.1f}" + (f"; failed: {bad}" if bad else ""),
    )


def test_criterion_08_codeword_optimality():
    failures = []
    for lam in LAM_GRID:
        model = RankModel(lam)
        book = build_codebook(model)
        max_len = max(book.lengths)
        if sum(1 << (max_len - l) for l in book.lengths) != 1 << max_len:
            failures.append((lam, "kraft"))
        avg = expected_length(book, model.pmf)
        if avg > entropy_bits(lam) + 1 + 1e-9:
            failures.append((lam, "expected length"))
        for r, p in enumerate(model.pmf):
            if p > 0.0 and book.lengths[r] > -1.44041 * math.log2(p) + 1e-9:
                failures.append((lam, f"worst case r={r}"))
        codes = sorted(zip(book.lengths, book.codes))
        for (la, ca), (lb, cb) in zip(codes, codes[1:]):
            if ca == (cb >> (lb - la)):
                failures.append((lam, "prefix"))
    report(
        8,
        "every codebook is prefix-free, Kraft-tight, and near-optimal",
        not failures,
        f"{len(LAM_GRID)} codebooks checked" if not failures else str(failures[:3]),
    )


def test_criterion_09_merge_algebra():
    params = SketchParams(256, 16)
    failures = 0

    def stream_sketch(seed, count, start=0):
        s = HbsSketch(params)
        s.insert_many(hash_stream(seed, count, start=start))
        return s

    for trial in range(100):
        base = substream_seed(SEED, 50_000 + trial)
        a = stream_sketch(base, 2000)
        b = stream_sketch(base + 1, 2000)
        c = stream_sketch(base + 2, 2000)
        ok = (
            a.merge(b).to_hll() == b.merge(a).to_hll()
            and a.merge(b).merge(c).to_hll() == a.merge(b.merge(c)).to_hll()
            and a.merge(a).to_hll() == a.to_hll()
        )
        failures += not ok
    # split stream vs whole stream, including fully disjoint halves
    whole = stream_sketch(123, 10_000)
    first = stream_sketch(123, 5_000)
    second = stream_sketch(123, 5_000, start=5_000)  # disjoint from `first`
    split_ok = first.merge(second).to_hll() == whole.to_hll()
    report(
        9,
        "merge is commutative, associative, idempotent, and stream-split exact",
        failures == 0 and split_ok,
        "100 random triples + disjoint split-stream union",
    )


def test_criterion_10_estimator_accuracy():
    params = SketchParams(4096, 32)
    n = 1_000_000
    trials = 200
    estimates = []
    identical = True
    for t in range(trials):
        hashes = hash_array(substream_seed(SEED, 900_000 + t), n)
        plain = HllSketch.from_hashes(params, hashes)
        packed = HbsSketch.from_hll(plain)
        e_plain = plain.estimate()
        e_packed = packed.estimate()
        identical = identical and e_plain == e_packed
        estimates.append(e_packed)
    rel = np.asarray(estimates) / n - 1.0
    rel_std = float(rel.std(ddof=1))
    bound = 1.3 * 1.04 / math.sqrt(params.m_eff)
    report(
        10,
        "estimates identical to the plain sketch and within error bounds",
        identical and rel_std <= bound,
        f"identical in {trials}/{trials} trials, rel std={rel_std:.5f} <= {bound:.5f}",
    )
