"""Quaternary and binary pivot search over a value set.

Top-k variants locate a threshold tau with the required count above it;
top-p variants locate a probability pivot with the required mass above it.
Both track the boundary value and its duplicate count so the caller can trim
excess copies deterministically instead of looping forever on ties.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_TOL, Tolerances


@dataclass(frozen=True)
class PivotResult:
    """Top-k search outcome: threshold, count above it, boundary bookkeeping.

    z_dup is the smallest kept value and n_dup its occurrence count among the
    kept entries. ties_only marks the degenerate all-equal input where no
    threshold can separate anything.
    """

    tau: float
    n_above: int
    z_dup: float
    n_dup: int
    iters: int = 0
    ties_only: bool = False


@dataclass(frozen=True)
class NucleusPivotResult:
    """Top-p search outcome in probability space.

    s_above is the mass strictly above pi (exactly-rounded sum); p_mn the
    smallest kept probability, with n_dup its duplicate count and n_keep the
    number of duplicates inside the minimal nucleus.
    """

    pi: float
    s_above: float
    p_mn: float
    n_dup: int
    n_keep: int
    iters: int = 0


def _topk_pivot_stats(values: np.ndarray, pivot: float, eq_eps: float):
    """Count entries above pivot and size the boundary duplicate cluster."""
    kept = values[values > pivot]
    n = int(kept.shape[0])
    if n == 0:
        return 0, math.inf, 0
    z_mn = float(kept.min())
    n_dup = int(np.count_nonzero(np.abs(kept - z_mn) < eq_eps))
    return n, z_mn, n_dup


def _topp_pivot_stats(probs: np.ndarray, pivot: float, eq_eps: float):
    """Mass above pivot plus boundary-duplicate mass and count.

    Duplicate clustering is relative (|p - p_mn| < eq_eps * p_mn): softmax
    probabilities live on wildly varying scales, and an absolute tolerance
    would merge distinct neighboring values on large vocabularies.
    """
    kept = probs[probs > pivot]
    if kept.shape[0] == 0:
        return 0.0, math.inf, 0.0, 0
    s = float(kept.sum())
    p_mn = float(kept.min())
    dup = np.abs(kept - p_mn) < eq_eps * p_mn
    return s, p_mn, float(kept[dup].sum()), int(np.count_nonzero(dup))


def _prepare(values: np.ndarray, lo, hi):
    if values.shape[0] == 0:
        raise ValueError("pivot search requires a non-empty value set")
    v = np.asarray(values, dtype=np.float64)
    l = float(v.min()) if lo is None else float(lo)
    r = float(v.max()) if hi is None else float(hi)
    return v, l, r


def _finish_topk(values, tau, eq_eps, iters):
    n, z_mn, n_dup = _topk_pivot_stats(values, tau, eq_eps)
    return PivotResult(tau=tau, n_above=n, z_dup=z_mn, n_dup=n_dup, iters=iters)


def _search_topk(values, k, tol, lo, hi, pivot_fractions):
    values, l, r = _prepare(values, lo, hi)
    if not 1 <= k <= values.shape[0]:
        raise ValueError("k must be in [1, |values|]")
    if l == r:
        # All candidates equal: no threshold separates them, caller keeps
        # the first k occurrences directly.
        return PivotResult(tau=l, n_above=0, z_dup=l, n_dup=values.shape[0],
                           iters=0, ties_only=True)
    if k > int(np.count_nonzero(values > l)):
        # Boundary value sits at the range minimum; every in-range pivot
        # undercounts, so keep everything and let duplicate trimming cut
        # the excess minimum copies.
        return _finish_topk(values, -math.inf, tol.eq_eps, 0)

    iters = 0
    while iters < tol.max_iters and abs(r - l) >= tol.range_eps:
        pivots = [l + f * (r - l) for f in pivot_fractions]
        stats = [_topk_pivot_stats(values, t_n, tol.eq_eps) for t_n in pivots]
        iters += 1
        for t_n, (n, z_mn, n_dup) in zip(pivots, stats):
            if n >= k and n - n_dup < k:
                return PivotResult(tau=t_n, n_above=n, z_dup=z_mn,
                                   n_dup=n_dup, iters=iters)
        counts = [s[0] for s in stats]
        for t_n, n in zip(pivots, counts):
            if n < k:
                r = t_n
                break
        for t_n, n in zip(reversed(pivots), reversed(counts)):
            if n > k:
                l = t_n
                break
    return _finish_topk(values, (l + r) / 2.0, tol.eq_eps, iters)


def quaternary_topk(values: np.ndarray, k: int,
                    tol: Tolerances = DEFAULT_TOL,
                    lo: float = None, hi: float = None) -> PivotResult:
    """Three pivots per iteration at the 25/50/75th points of the range."""
    return _search_topk(values, k, tol, lo, hi, (0.25, 0.5, 0.75))


def binary_topk(values: np.ndarray, k: int,
                tol: Tolerances = DEFAULT_TOL,
                lo: float = None, hi: float = None) -> PivotResult:
    """Single-midpoint variant, kept for the search-arity ablation."""
    return _search_topk(values, k, tol, lo, hi, (0.5,))


def _min_dup_count(head, p_mn, n_dup, p):
    """Smallest j with fsum(head + j copies of p_mn) >= p, via binary search.

    fsum is exactly rounded and therefore order-independent, so this matches
    the sort oracle's cumulative-prefix test on the same multiset exactly.
    """
    lo_j, hi_j = 1, n_dup
    while lo_j < hi_j:
        mid = (lo_j + hi_j) // 2
        if math.fsum(head + [p_mn] * mid) >= p:
            hi_j = mid
        else:
            lo_j = mid + 1
    return lo_j


def _resolve_topp(probs, p, pivot, eq_eps, iters):
    """Walk from an approximate pivot to the exact nucleus-crossing cluster.

    The pairwise sums used during the search can disagree with the oracle's
    exactly-rounded prefix sums right at the crossing, so the final cluster
    and its duplicate count are re-derived here with fsum. The returned
    pivot is renormalized to sit eq_eps-relative below the boundary value,
    giving the log/exp round trip back to logit space a safe margin.
    """
    for _ in range(100):
        kept = probs[probs > pivot]
        if kept.shape[0] == 0:
            pivot = float(probs.max()) * (1.0 - 2.0 * eq_eps)
            continue
        p_mn = float(kept.min())
        dup = np.abs(kept - p_mn) < eq_eps * p_mn
        head = kept[~dup].tolist()
        n_dup = int(np.count_nonzero(dup))
        s_wo = math.fsum(head)
        s_all = math.fsum(head + [p_mn] * n_dup)
        if s_all < p:
            rest = probs[probs <= pivot]
            nxt = float(rest.max()) if rest.shape[0] else 0.0
            if nxt <= 0.0:
                # Even the whole (positive-mass) row falls short: keep all.
                return NucleusPivotResult(pi=0.0, s_above=s_all, p_mn=0.0,
                                          n_dup=0, n_keep=0, iters=iters)
            pivot = nxt * (1.0 - 2.0 * eq_eps)
            continue
        if s_wo >= p:
            # Crossing lies above this cluster: exclude it and re-derive.
            pivot = p_mn * (1.0 + 2.0 * eq_eps)
            continue
        n_keep = _min_dup_count(head, p_mn, n_dup, p)
        return NucleusPivotResult(pi=p_mn * (1.0 - 2.0 * eq_eps), s_above=s_all,
                                  p_mn=p_mn, n_dup=n_dup, n_keep=n_keep,
                                  iters=iters)
    raise RuntimeError("top-p cluster resolution did not converge")


def _search_topp(probs, p, tol, lo, hi, pivot_fractions):
    probs, l, r = _prepare(probs, lo, hi)
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    if float(probs.sum()) <= p or l == r:
        # Less mass than requested (keep everything) or an all-equal range
        # (pure duplicate counting): no pivoting to do.
        return _resolve_topp(probs, p, l * (1.0 - 2.0 * tol.eq_eps), tol.eq_eps, 0)
    if float(probs[probs > l].sum()) < p:
        # The nucleus boundary sits at the range minimum; no in-range pivot
        # can reach mass p.
        return _resolve_topp(probs, p, l * (1.0 - 2.0 * tol.eq_eps), tol.eq_eps, 0)

    # Collapse test is relative to the initial span: the search runs on
    # probability scales far below the logit-scale default.
    collapse = tol.range_eps * (r - l)
    iters = 0
    while iters < tol.max_iters and abs(r - l) >= collapse:
        pivots = [l + f * (r - l) for f in pivot_fractions]
        stats = [_topp_pivot_stats(probs, pi_n, tol.eq_eps) for pi_n in pivots]
        iters += 1
        for pi_n, (s, p_mn, s_pmn, n_pmn) in zip(pivots, stats):
            if s >= p and s - s_pmn < p:
                return _resolve_topp(probs, p, pi_n, tol.eq_eps, iters)
        sums = [s[0] for s in stats]
        for pi_n, s in zip(pivots, sums):
            if s < p:
                r = pi_n
                break
        for pi_n, s in zip(reversed(pivots), reversed(sums)):
            if s > p:
                l = pi_n
                break
    return _resolve_topp(probs, p, (l + r) / 2.0, tol.eq_eps, iters)


def quaternary_topp(probs: np.ndarray, p: float,
                    tol: Tolerances = DEFAULT_TOL,
                    lo: float = None, hi: float = None) -> NucleusPivotResult:
    return _search_topp(probs, p, tol, lo, hi, (0.25, 0.5, 0.75))


def binary_topp(probs: np.ndarray, p: float,
                tol: Tolerances = DEFAULT_TOL,
                lo: float = None, hi: float = None) -> NucleusPivotResult:
    return _search_topp(probs, p, tol, lo, hi, (0.5,))
