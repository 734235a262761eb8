"""Per-row end-to-end truncation: hit/fallback routing, pivot search,
duplicate trimming, and output masking.

All three entry points (top-k, top-p, combined k-then-p) reduce to building
a MaskPlan in logit space and applying it in one left-to-right pass over the
original row. Kept entries are bit-identical to the input; removed entries
become -inf.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (DEFAULT_TOL, NEG_INF, RowMetrics, Tolerances,
                   TruncationOutput, stable_softmax)
from .pivot_search import (binary_topk, binary_topp, quaternary_topk,
                           quaternary_topp)
from .sigma_trunc import (DEFAULT_SAMPLE_SIZE, gather_outliers, is_hit,
                          lookup_delta_topk, lookup_delta_topp, row_stats,
                          threshold_from)

_TOPK_SEARCH = {"quaternary": quaternary_topk, "binary": binary_topk}
_TOPP_SEARCH = {"quaternary": quaternary_topp, "binary": binary_topp}


@dataclass(frozen=True)
class MaskPlan:
    """Logit-space masking instructions produced by a completed search.

    Keep entries above tau_or_pi; among entries tolerance-equal to z_dup,
    keep only the first n_keep occurrences (counted over kept candidates).
    """

    tau_or_pi: float
    z_dup: float
    n_dup: int
    n_keep: int


def _clamp_keep(n_keep: int, n_dup: int) -> int:
    return max(0, min(n_keep, n_dup))


def _apply_plan(row64: np.ndarray, plan: MaskPlan, tol: Tolerances,
                dup_handling: bool, candidate_mask: Optional[np.ndarray] = None):
    """One pass: threshold mask, then cumulative duplicate trimming."""
    keep = row64 > plan.tau_or_pi
    if candidate_mask is not None:
        keep &= candidate_mask
    if dup_handling and math.isfinite(plan.z_dup):
        cluster = keep & (np.abs(row64 - plan.z_dup) < tol.eq_eps)
        occurrence = np.cumsum(cluster)
        keep &= ~(cluster & (occurrence > plan.n_keep))
    return keep


def finalize_mask(row: np.ndarray, plan: MaskPlan, tol: Tolerances = DEFAULT_TOL,
                  *, dup_handling: bool = True,
                  candidate_mask: Optional[np.ndarray] = None,
                  metrics: Optional[RowMetrics] = None,
                  inplace: bool = False) -> TruncationOutput:
    """Apply a MaskPlan to the original row.

    Out-of-place by default; inplace=True overwrites the caller's row buffer.
    """
    row = np.asarray(row)
    keep = _apply_plan(row.astype(np.float64), plan, tol, dup_handling,
                       candidate_mask)
    if inplace:
        row[~keep] = NEG_INF
        masked = row
    else:
        masked = np.where(keep, row, NEG_INF).astype(row.dtype, copy=False)
    return TruncationOutput(masked_row=masked, kept_count=int(keep.sum()),
                            metrics=metrics if metrics is not None else RowMetrics())


def _passthrough(row: np.ndarray, metrics: RowMetrics,
                 inplace: bool) -> TruncationOutput:
    masked = row if inplace else np.array(row, copy=True)
    return TruncationOutput(masked_row=masked, kept_count=int(row.shape[0]),
                            metrics=metrics)


def _topk_plan(row: np.ndarray, row64: np.ndarray, k: int, tol: Tolerances,
               metrics: RowMetrics, *, search: str, use_sigma_trunc: bool,
               force_fallback: bool, sample_size: int) -> MaskPlan:
    """Sigma-truncate, route hit/fallback, and search for the k-th threshold."""
    search_fn = _TOPK_SEARCH[search]
    hit = False
    outliers = None
    thr = None
    if use_sigma_trunc:
        stats = row_stats(row, sample_size)
        delta = lookup_delta_topk(k, row.shape[0])
        thr = threshold_from(stats, delta)
        outliers = gather_outliers(row, stats, delta, mode="topk")
        metrics.outlier_count = outliers.count
        hit = is_hit(outliers, k=k, mode="topk") and not force_fallback
    metrics.trunc_hit = hit

    if hit:
        res = search_fn(outliers.values, k, tol, lo=thr.t, hi=outliers.row_max)
    else:
        metrics.fallback_used = True
        res = search_fn(row64, k, tol)
    metrics.k_search_iters = res.iters

    if res.ties_only:
        # Candidates are all one value: keep the first k of them.
        tau = res.tau if hit else -math.inf
        return MaskPlan(tau_or_pi=tau, z_dup=res.z_dup, n_dup=res.n_dup,
                        n_keep=k)
    n_keep = _clamp_keep(res.n_dup - (res.n_above - k), res.n_dup)
    return MaskPlan(tau_or_pi=res.tau, z_dup=res.z_dup, n_dup=res.n_dup,
                    n_keep=n_keep)


def _logit_of_prob(prob: float, denom: float, row_max: float) -> float:
    if prob <= 0.0:
        return -math.inf
    return math.log(prob * denom) + row_max


def _topp_plan(cand_probs: np.ndarray, p: float, denom: float, row_max: float,
               lo: Optional[float], tol: Tolerances, metrics: RowMetrics,
               *, search: str) -> MaskPlan:
    """Search candidate probabilities and map the result back to logit space."""
    res = _TOPP_SEARCH[search](cand_probs, p, tol, lo=lo)
    metrics.p_search_iters = res.iters
    return MaskPlan(tau_or_pi=_logit_of_prob(res.pi, denom, row_max),
                    z_dup=_logit_of_prob(res.p_mn, denom, row_max),
                    n_dup=res.n_dup,
                    n_keep=_clamp_keep(res.n_keep, res.n_dup))


def truncate_topk(row: np.ndarray, k: int, tol: Tolerances = DEFAULT_TOL, *,
                  search: str = "quaternary", use_sigma_trunc: bool = True,
                  force_fallback: bool = False, dup_handling: bool = True,
                  sample_size: int = DEFAULT_SAMPLE_SIZE,
                  inplace: bool = False) -> TruncationOutput:
    """Keep exactly the k largest entries (ties to earlier indices)."""
    row = np.asarray(row)
    v = row.shape[0]
    if not 1 <= k <= v:
        raise ValueError(f"k must be in [1, V], got k={k}, V={v}")
    metrics = RowMetrics()
    if k == v:
        return _passthrough(row, metrics, inplace)
    row64 = row.astype(np.float64)
    plan = _topk_plan(row, row64, k, tol, metrics, search=search,
                      use_sigma_trunc=use_sigma_trunc,
                      force_fallback=force_fallback, sample_size=sample_size)
    return finalize_mask(row, plan, tol, dup_handling=dup_handling,
                         metrics=metrics, inplace=inplace)


def truncate_topp(row: np.ndarray, p: float, tol: Tolerances = DEFAULT_TOL, *,
                  search: str = "quaternary", use_sigma_trunc: bool = True,
                  force_fallback: bool = False, dup_handling: bool = True,
                  sample_size: int = DEFAULT_SAMPLE_SIZE,
                  inplace: bool = False) -> TruncationOutput:
    """Keep the minimal set of highest-probability entries with mass >= p."""
    row = np.asarray(row)
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    metrics = RowMetrics()
    if p == 1.0:
        return _passthrough(row, metrics, inplace)
    probs, denom, row_max = stable_softmax(row)

    hit = False
    outliers = None
    if use_sigma_trunc:
        stats = row_stats(row, sample_size)
        delta = lookup_delta_topp(p)
        outliers = gather_outliers(row, stats, delta, mode="topp", probs=probs)
        metrics.outlier_count = outliers.count
        metrics.outlier_prob_sum = outliers.prob_sum
        hit = is_hit(outliers, p=p, mode="topp") and not force_fallback
    metrics.trunc_hit = hit

    if hit:
        thr = threshold_from(stats, delta)
        cand = np.exp(outliers.values - row_max) / denom
        lo = math.exp(thr.t - row_max) / denom
    else:
        metrics.fallback_used = True
        cand = probs
        lo = None
    plan = _topp_plan(cand, p, denom, row_max, lo, tol, metrics, search=search)
    return finalize_mask(row, plan, tol, dup_handling=dup_handling,
                         metrics=metrics, inplace=inplace)


def truncate_topk_topp(row: np.ndarray, k: int, p: float,
                       tol: Tolerances = DEFAULT_TOL, *,
                       search: str = "quaternary", use_sigma_trunc: bool = True,
                       force_fallback: bool = False, dup_handling: bool = True,
                       sample_size: int = DEFAULT_SAMPLE_SIZE,
                       inplace: bool = False) -> TruncationOutput:
    """Top-k first, then top-p over softmax renormalized on the survivors."""
    row = np.asarray(row)
    v = row.shape[0]
    if not 1 <= k <= v:
        raise ValueError(f"k must be in [1, V], got k={k}, V={v}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    kwargs = dict(search=search, use_sigma_trunc=use_sigma_trunc,
                  force_fallback=force_fallback, dup_handling=dup_handling,
                  sample_size=sample_size, inplace=inplace)
    if k == v:
        return truncate_topp(row, p, tol, **kwargs)
    if p == 1.0:
        return truncate_topk(row, k, tol, **kwargs)

    metrics = RowMetrics()
    row64 = row.astype(np.float64)
    k_plan = _topk_plan(row, row64, k, tol, metrics, search=search,
                        use_sigma_trunc=use_sigma_trunc,
                        force_fallback=force_fallback, sample_size=sample_size)
    k_keep = _apply_plan(row64, k_plan, tol, dup_handling)

    # Softmax renormalized over the top-k survivors only.
    row_max = float(row64.max())
    exps = np.exp(row64[k_keep] - row_max)
    denom = float(exps.sum())
    cand = exps / denom
    lo = None
    if math.isfinite(k_plan.tau_or_pi):
        lo = math.exp(k_plan.tau_or_pi - row_max) / denom
    p_plan = _topp_plan(cand, p, denom, row_max, lo, tol, metrics,
                        search=search)
    return finalize_mask(row, p_plan, tol, dup_handling=dup_handling,
                         candidate_mask=k_keep, metrics=metrics,
                         inplace=inplace)
