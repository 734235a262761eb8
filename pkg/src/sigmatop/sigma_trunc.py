"""Gaussian statistics, threshold lookup, and order-stable outlier gathering.

The pre-filter keeps row entries above t = mu + delta_adj * sigma, where
delta comes from an embedded quantile table and delta_adj applies a 20%
safety margin toward zero. A "hit" means the kept set provably contains the
final answer, so the pivot search can run on it instead of the full row.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import stable_softmax
from .tables import TABLE_SIZE, TOPK_DELTA_ENTRIES, TOPP_DELTA_ENTRIES

SAFETY_MARGIN = 0.2
DEFAULT_SAMPLE_SIZE = 4096


@dataclass(frozen=True)
class GaussianStats:
    mu: float
    sigma: float
    sample_size: int


@dataclass(frozen=True)
class SigmaTable:
    """200-entry quantile table; kind is 'topk' or 'topp'."""

    entries: np.ndarray
    kind: str

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        if e.shape != (TABLE_SIZE,):
            raise ValueError(f"table must have exactly {TABLE_SIZE} entries")
        if self.kind not in ("topk", "topp"):
            raise ValueError("kind must be 'topk' or 'topp'")
        object.__setattr__(self, "entries", e)


TOPK_TABLE = SigmaTable(TOPK_DELTA_ENTRIES, "topk")
TOPP_TABLE = SigmaTable(TOPP_DELTA_ENTRIES, "topp")


@dataclass(frozen=True)
class TruncThreshold:
    delta_raw: float
    delta_adj: float
    t: float


@dataclass(frozen=True)
class OutlierSet:
    """Stable compaction of all row entries strictly above the threshold."""

    values: np.ndarray
    count: int
    row_max: float
    row_min: float
    prob_sum: Optional[float] = None


def row_stats(row: np.ndarray, sample_size: int = DEFAULT_SAMPLE_SIZE) -> GaussianStats:
    """Mean/std of the first min(sample_size, V) entries, accumulated at 64-bit.

    The variance estimate E[x^2] - E[x]^2 is floored at zero so catastrophic
    cancellation can never produce a negative sigma.
    """
    if sample_size < 1:
        raise ValueError("sample_size must be >= 1")
    s = min(sample_size, row.shape[0])
    prefix = np.asarray(row[:s], dtype=np.float64)
    mu = float(prefix.mean())
    var = float((prefix * prefix).mean()) - mu * mu
    sigma = math.sqrt(max(var, 0.0))
    return GaussianStats(mu=mu, sigma=sigma, sample_size=s)


def lookup_delta_topk(k: int, vocab_size: int, table: SigmaTable = TOPK_TABLE) -> float:
    if not 1 <= k <= vocab_size:
        raise ValueError("k must be in [1, V]")
    idx = min(int(k / vocab_size * TABLE_SIZE), TABLE_SIZE - 1)
    return float(table.entries[idx])


def lookup_delta_topp(p: float, table: SigmaTable = TOPP_TABLE) -> float:
    if not 0.0 < p <= 1.0:
        raise ValueError("p must be in (0, 1]")
    idx = min(int(p * TABLE_SIZE), TABLE_SIZE - 1)
    return float(table.entries[idx])


def threshold_from(stats: GaussianStats, delta: float) -> TruncThreshold:
    """Apply the safety margin to delta and form t = mu + delta_adj * sigma."""
    delta_adj = delta - SAFETY_MARGIN * abs(delta)
    return TruncThreshold(delta_raw=delta, delta_adj=delta_adj,
                          t=stats.mu + delta_adj * stats.sigma)


def gather_outliers(row: np.ndarray, stats: GaussianStats, delta: float,
                    mode: str = "topk", probs: Optional[np.ndarray] = None) -> OutlierSet:
    """Stable-compact all entries strictly above t, tracking row extrema.

    In 'topp' mode also accumulates the outliers' softmax mass against the
    full-row denominator (probs may be passed in to avoid recomputation).
    """
    thr = threshold_from(stats, delta)
    z = np.asarray(row, dtype=np.float64)
    mask = z > thr.t
    values = z[mask]
    prob_sum = None
    if mode == "topp":
        if probs is None:
            probs, _, _ = stable_softmax(row)
        prob_sum = float(probs[mask].sum())
    return OutlierSet(values=values, count=int(values.shape[0]),
                      row_max=float(z.max()), row_min=float(z.min()),
                      prob_sum=prob_sum)


def is_hit(outliers: OutlierSet, k: Optional[int] = None, p: Optional[float] = None,
           mode: str = "topk") -> bool:
    """Strict hit test: count > k for top-k, outlier mass > p for top-p.

    The combined pipeline gathers once with the k-derived threshold, so it
    uses the top-k rule.
    """
    if mode == "topk":
        return outliers.count > k
    if outliers.prob_sum is None:
        raise ValueError("top-p hit test requires prob_sum")
    return outliers.prob_sum > p


def generate_table_entries(kind: str, num_samples: int, seed: int,
                           entries: int = TABLE_SIZE) -> np.ndarray:
    """Monte-Carlo regeneration of table entries from N(0,1) draws.

    topk: entry i is the sample value at descending rank ceil((i+1)/n * N),
    the empirical quantile of the (i+1)/n rank fraction. topp: entry i is
    the sample value where the descending cumulative softmax mass first
    reaches (i+1)/n. Deterministic for a fixed seed; any granularity.
    """
    if num_samples < 100_000:
        raise ValueError("num_samples must be >= 100000")
    rng = np.random.default_rng(seed)
    sample = np.sort(rng.standard_normal(num_samples))[::-1]
    if kind == "topk":
        ranks = np.ceil(np.arange(1, entries + 1) / entries * num_samples)
        idx = np.minimum(ranks.astype(np.int64) - 1, num_samples - 1)
        return sample[idx].copy()
    if kind == "topp":
        exps = np.exp(sample - sample[0])
        probs = exps / exps.sum()
        csum = np.cumsum(probs)
        targets = np.arange(1, entries + 1) / entries
        idx = np.minimum(np.searchsorted(csum, targets, side="left"), num_samples - 1)
        return sample[idx].copy()
    raise ValueError("kind must be 'topk' or 'topp'")


def generate_table(kind: str, num_samples: int, seed: int) -> SigmaTable:
    """Regenerate a standard 200-entry SigmaTable (see generate_table_entries)."""
    return SigmaTable(generate_table_entries(kind, num_samples, seed), kind)


def write_table_csv(entries: np.ndarray, path) -> None:
    """Two-column CSV (index, value), 6-decimal fixed notation."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "value"])
        for i, v in enumerate(entries):
            w.writerow([i, f"{v:.6f}"])


def read_table_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return np.array([float(r[1]) for r in rows[1:]], dtype=np.float64)
