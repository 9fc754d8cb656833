"""Cardinality estimation with a lossless, Huffman-compressed register store.

Two interchangeable sketches: :class:`HllSketch`, the plain uncompressed
reference, and :class:`HbsSketch`, which stores the same registers as
entropy-coded buckets at a fraction of the size while remaining mergeable
and decompressible back to the plain form at any point.
"""

from .bucket import Bucket, BucketBudget, bucket_bits, new_bucket, peek, poke, recompute_min, reencode
from .errors import CorruptStateError, FormatError, IncompatibleSketchError, SketchError
from .estimator import EstimatorState, alpha_m
from .hashing import RegisterAddress, SketchParams, mix64, rank_of, split_hash
from .hll import HllSketch
from .huffman import (
    HuffmanCodebook,
    build_codebook,
    codebook_from_weights,
    deserialize_tree,
    serialize_tree,
    trees_equal,
)
from .rank_model import (
    ModeBracket,
    RankModel,
    cdf_at,
    entropy_bits,
    left_tail_bound,
    mode_bracket,
    pmf_at,
    right_tail_bound,
    sample_register,
)
from .serialize import load
from .sketch import HbsSketch, rebuild_trigger

__version__ = "0.1.0"

__all__ = [
    "Bucket",
    "BucketBudget",
    "CorruptStateError",
    "EstimatorState",
    "FormatError",
    "HbsSketch",
    "HllSketch",
    "HuffmanCodebook",
    "IncompatibleSketchError",
    "ModeBracket",
    "RankModel",
    "RegisterAddress",
    "SketchError",
    "SketchParams",
    "alpha_m",
    "bucket_bits",
    "build_codebook",
    "cdf_at",
    "codebook_from_weights",
    "deserialize_tree",
    "entropy_bits",
    "left_tail_bound",
    "load",
    "mix64",
    "mode_bracket",
    "new_bucket",
    "peek",
    "pmf_at",
    "poke",
    "rank_of",
    "rebuild_trigger",
    "recompute_min",
    "reencode",
    "right_tail_bound",
    "sample_register",
    "serialize_tree",
    "split_hash",
    "trees_equal",
]
