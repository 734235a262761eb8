"""Exact top-k / top-p logit truncation without sorting.

A Gaussian pre-filter keeps the few entries that can matter, a quaternary
pivot search finds the exact boundary, and deterministic duplicate trimming
makes the result bit-identical to a stable sort-based reference.
"""
from .core import (DEFAULT_TOL, NEG_INF, LogitBatch, RowMetrics, Tolerances,
                   TruncTargets, TruncationOutput, masked_softmax,
                   stable_softmax, validate_batch)
from .engine import (BatchReport, Divergence, EngineConfig, bench, run_batch,
                     synth_batch, verify_batch, write_report_csv)
from .logit_io import read_logits, read_targets_csv, write_logits, write_targets_csv
from .oracle import oracle_topk, oracle_topk_topp, oracle_topp
from .pipeline import truncate_topk, truncate_topk_topp, truncate_topp
from .pivot_search import (binary_topk, binary_topp, quaternary_topk,
                           quaternary_topp)
from .sigma_trunc import (TOPK_TABLE, TOPP_TABLE, GaussianStats, SigmaTable,
                          gather_outliers, generate_table, is_hit,
                          lookup_delta_topk, lookup_delta_topp, row_stats,
                          threshold_from)

__version__ = "0.1.0"

__all__ = [
    "BatchReport", "DEFAULT_TOL", "Divergence", "EngineConfig",
    "GaussianStats", "LogitBatch", "NEG_INF", "RowMetrics", "SigmaTable",
    "TOPK_TABLE", "TOPP_TABLE", "Tolerances", "TruncTargets",
    "TruncationOutput", "bench", "binary_topk", "binary_topp",
    "gather_outliers", "generate_table", "is_hit", "lookup_delta_topk",
    "lookup_delta_topp", "masked_softmax", "oracle_topk", "oracle_topk_topp",
    "oracle_topp", "quaternary_topk", "quaternary_topp", "read_logits",
    "read_targets_csv", "row_stats", "run_batch", "stable_softmax",
    "synth_batch", "threshold_from", "truncate_topk", "truncate_topk_topp",
    "truncate_topp", "validate_batch", "verify_batch", "write_logits",
    "write_report_csv", "write_targets_csv",
]
