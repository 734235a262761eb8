"""Shared domain types, tolerances, and row/batch containers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NEG_INF = np.float32(-np.inf)


@dataclass(frozen=True)
class Tolerances:
    """Numeric knobs shared by every search and masking pass.

    eq_eps is the value-equality tolerance (|a - b| < eq_eps), range_eps the
    search-range collapse threshold, max_iters the pivot-search iteration cap.
    """

    eq_eps: float = 1e-12
    range_eps: float = 1e-12
    max_iters: int = 20

    def __post_init__(self):
        if self.eq_eps <= 0 or self.range_eps <= 0:
            raise ValueError("tolerances must be strictly positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class LogitBatch:
    """B x V matrix of finite float32 logits."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim != 2:
            raise ValueError("logit batch must be 2-D (rows x vocab)")
        object.__setattr__(self, "values", v)

    @property
    def batch_size(self) -> int:
        return self.values.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class TruncTargets:
    """Per-row truncation targets. k = V disables top-k, p = 1.0 disables top-p."""

    k: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "k", np.asarray(self.k, dtype=np.int64))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=np.float64))
        if self.k.shape != self.p.shape or self.k.ndim != 1:
            raise ValueError("k and p must be 1-D arrays of equal length")

    @classmethod
    def uniform(cls, batch_size: int, k: int, p: float) -> "TruncTargets":
        return cls(np.full(batch_size, k), np.full(batch_size, p))


@dataclass
class RowMetrics:
    """Per-row accounting emitted by the pipeline."""

    trunc_hit: bool = False
    outlier_count: int = 0
    outlier_prob_sum: float = 0.0
    k_search_iters: int = 0
    p_search_iters: int = 0
    fallback_used: bool = False


@dataclass
class TruncationOutput:
    """Masked row: kept entries bit-identical to input, removed entries -inf."""

    masked_row: np.ndarray
    kept_count: int
    metrics: RowMetrics = field(default_factory=RowMetrics)


def stable_softmax(row: np.ndarray):
    """Full-row softmax with max subtraction, 64-bit accumulation.

    Returns (probs, denom, row_max). The denominator is always summed in the
    row's native index order so that repeated calls are bit-reproducible.
    """
    z = np.asarray(row, dtype=np.float64)
    row_max = float(z.max())
    exps = np.exp(z - row_max)
    denom = float(exps.sum())
    return exps / denom, denom, row_max


def masked_softmax(row: np.ndarray, keep: np.ndarray):
    """Softmax renormalized over the surviving subset only.

    The denominator sums exp(z - row_max) over kept entries (index order);
    row_max is the full-row maximum. Returns (survivor probs in index order,
    denom, row_max).
    """
    z = np.asarray(row, dtype=np.float64)
    row_max = float(z.max())
    exps = np.exp(z[keep] - row_max)
    denom = float(exps.sum())
    return exps / denom, denom, row_max


def validate_batch(batch: LogitBatch, targets: TruncTargets) -> list:
    """Report every violated input invariant. Pure; returns [] when valid."""
    report = []
    vals = batch.values
    bad = ~np.isfinite(vals)
    if bad.any():
        for r, c in zip(*np.nonzero(bad)):
            kind = "NaN" if np.isnan(vals[r, c]) else "non-finite"
            report.append(f"{kind} logit at row {r}, col {c}")
    if targets.k.shape[0] != batch.batch_size:
        report.append(
            f"targets length {targets.k.shape[0]} != batch size {batch.batch_size}"
        )
    v = batch.vocab_size
    for r, k in enumerate(targets.k):
        if not (1 <= k <= v):
            report.append(f"row {r}: k out of range [1,V] (k={k}, V={v})")
    for r, p in enumerate(targets.p):
        if not (0.0 < p <= 1.0):
            report.append(f"row {r}: p out of range (0,1] (p={p})")
    return report
