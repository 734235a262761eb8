"""Sort-based reference implementations defining ground-truth semantics.

Deliberately O(V log V): used for differential testing and as the baseline
in benchmarks, never on the hot path. Shares the pipeline's softmax so that
equality checks exercise selection logic, not reduction order.
"""
from __future__ import annotations

import math

import numpy as np

from .core import NEG_INF, TruncationOutput, stable_softmax


def _stable_descending_order(row: np.ndarray) -> np.ndarray:
    """Indices sorted by (value desc, index asc)."""
    return np.argsort(-np.asarray(row, dtype=np.float64), kind="stable")


def _mask_from_kept(row: np.ndarray, kept_idx: np.ndarray) -> TruncationOutput:
    keep = np.zeros(row.shape[0], dtype=bool)
    keep[kept_idx] = True
    masked = np.where(keep, row, NEG_INF).astype(row.dtype, copy=False)
    return TruncationOutput(masked_row=masked, kept_count=int(keep.sum()))


def oracle_topk(row: np.ndarray, k: int) -> TruncationOutput:
    """Stable descending sort, keep the first k."""
    row = np.asarray(row)
    v = row.shape[0]
    if not 1 <= k <= v:
        raise ValueError(f"k must be in [1, V], got k={k}, V={v}")
    return _mask_from_kept(row, _stable_descending_order(row)[:k])


def _nucleus_prefix(order: np.ndarray, probs_sorted: np.ndarray, p: float) -> np.ndarray:
    """Shortest prefix whose exactly-rounded sum reaches p.

    Prefix sums use math.fsum so the crossing test is independent of
    summation order; the pivot-search pipeline applies the same rule to the
    same multiset, which is what makes bit-identical agreement possible.
    """
    vals = probs_sorted.tolist()
    if p >= math.fsum(vals):
        return order
    lo, hi = 1, len(vals)
    while lo < hi:
        mid = (lo + hi) // 2
        if math.fsum(vals[:mid]) >= p:
            hi = mid
        else:
            lo = mid + 1
    return order[:lo]


def oracle_topp(row: np.ndarray, p: float) -> TruncationOutput:
    """Shortest descending-sorted prefix whose probability mass reaches p."""
    row = np.asarray(row)
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    if p == 1.0:
        return TruncationOutput(masked_row=np.array(row, copy=True),
                                kept_count=int(row.shape[0]))
    probs, _, _ = stable_softmax(row)
    order = _stable_descending_order(row)
    return _mask_from_kept(row, _nucleus_prefix(order, probs[order], p))


def oracle_topk_topp(row: np.ndarray, k: int, p: float) -> TruncationOutput:
    """Top-k, renormalize softmax over survivors, then minimal nucleus."""
    row = np.asarray(row)
    v = row.shape[0]
    if not 1 <= k <= v:
        raise ValueError(f"k must be in [1, V], got k={k}, V={v}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    if k == v:
        return oracle_topp(row, p)
    if p == 1.0:
        return oracle_topk(row, k)
    row64 = row.astype(np.float64)
    survivors = _stable_descending_order(row)[:k]
    row_max = float(row64.max())
    # Denominator over survivors in original index order, as the pipeline does.
    denom = float(np.exp(row64[np.sort(survivors)] - row_max).sum())
    probs_desc = np.exp(row64[survivors] - row_max) / denom
    kept = _nucleus_prefix(survivors, probs_desc, p)
    return _mask_from_kept(row, kept)


def naive_order_softmax(row: np.ndarray):
    """Softmax whose denominator sums in descending-value order.

    Exists only to quantify reduction-order sensitivity; excluded from all
    equality gates.
    """
    row64 = np.asarray(row, dtype=np.float64)
    row_max = float(row64.max())
    exps = np.exp(np.sort(row64)[::-1] - row_max)
    denom = float(exps.sum())
    return np.exp(row64 - row_max) / denom, denom, row_max
