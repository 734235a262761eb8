"""Batch execution: row parallelism, metric aggregation, differential
verification sweeps, and timing."""
from __future__ import annotations

import csv
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core import (LogitBatch, RowMetrics, Tolerances, TruncTargets,
                   TruncationOutput, validate_batch)
from .oracle import oracle_topk_topp
from .pipeline import truncate_topk_topp
from .sigma_trunc import (DEFAULT_SAMPLE_SIZE, gather_outliers, is_hit,
                          lookup_delta_topk, row_stats, threshold_from)

REPORT_COLUMNS = ["run_id", "B", "V", "k", "p", "search_kind", "trunc_enabled",
                  "dup_enabled", "hit_rate", "mean_outliers", "mean_prob_sum",
                  "mean_iters_k", "mean_iters_p", "wall_ms", "rows_per_s"]


@dataclass(frozen=True)
class EngineConfig:
    threads: int = 1
    search_kind: str = "quaternary"
    sigma_trunc_enabled: bool = True
    duplication_handling_enabled: bool = True
    force_fallback: bool = False
    sample_size: int = DEFAULT_SAMPLE_SIZE
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.search_kind not in ("quaternary", "binary"):
            raise ValueError("search_kind must be 'quaternary' or 'binary'")


@dataclass
class BatchReport:
    per_row: List[RowMetrics]
    hit_rate: float
    mean_outliers: float
    mean_prob_sum: float
    mean_iters_k: float
    mean_iters_p: float
    wall_time_ns: int
    rows_per_second: float


@dataclass
class Divergence:
    """First mismatching entry of a row, plus the total mismatch count."""

    row: int
    index: int
    got: float
    expected: float
    n_mismatch: int


def _row_output(row, k, p, config: EngineConfig) -> TruncationOutput:
    return truncate_topk_topp(
        row, int(k), float(p), config.tolerances,
        search=config.search_kind,
        use_sigma_trunc=config.sigma_trunc_enabled,
        force_fallback=config.force_fallback,
        dup_handling=config.duplication_handling_enabled,
        sample_size=config.sample_size)


def _check_inputs(batch: LogitBatch, targets: TruncTargets):
    report = validate_batch(batch, targets)
    if report:
        raise ValueError("invalid batch: " + "; ".join(report[:5]))


def run_batch(batch: LogitBatch, targets: TruncTargets, config: EngineConfig):
    """Process every row; outputs are ordered by row index and invariant to
    the thread count. Returns (outputs matrix, BatchReport)."""
    _check_inputs(batch, targets)
    b, v = batch.batch_size, batch.vocab_size
    outputs = np.empty((b, v), dtype=np.float32)
    metrics: List[Optional[RowMetrics]] = [None] * b

    def work(i: int):
        out = _row_output(batch.values[i], targets.k[i], targets.p[i], config)
        outputs[i] = out.masked_row
        metrics[i] = out.metrics

    start = time.perf_counter_ns()
    if config.threads == 1:
        for i in range(b):
            work(i)
    else:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            list(pool.map(work, range(b)))
    wall = time.perf_counter_ns() - start

    report = BatchReport(
        per_row=metrics,
        hit_rate=sum(m.trunc_hit for m in metrics) / b,
        mean_outliers=sum(m.outlier_count for m in metrics) / b,
        mean_prob_sum=sum(m.outlier_prob_sum for m in metrics) / b,
        mean_iters_k=sum(m.k_search_iters for m in metrics) / b,
        mean_iters_p=sum(m.p_search_iters for m in metrics) / b,
        wall_time_ns=wall,
        rows_per_second=b / (wall / 1e9) if wall > 0 else float("inf"))
    return outputs, report


def verify_batch(batch: LogitBatch, targets: TruncTargets,
                 config: EngineConfig) -> List[Divergence]:
    """Differential check of the pipeline against the sort oracle.

    Empty list means every row matched bit-for-bit.
    """
    _check_inputs(batch, targets)
    divergences = []
    for i in range(batch.batch_size):
        row = batch.values[i]
        got = _row_output(row, targets.k[i], targets.p[i], config).masked_row
        want = oracle_topk_topp(row, int(targets.k[i]),
                                float(targets.p[i])).masked_row
        same = (got == want) | (np.isneginf(got) & np.isneginf(want))
        if not same.all():
            bad = np.nonzero(~same)[0]
            j = int(bad[0])
            divergences.append(Divergence(row=i, index=j, got=float(got[j]),
                                          expected=float(want[j]),
                                          n_mismatch=int(bad.shape[0])))
    return divergences


def synth_batch(kind: str, batch_size: int, vocab_size: int, seed: int,
                **params) -> LogitBatch:
    """Deterministic synthetic logit batches for testing and benchmarks.

    Kinds: gaussian (N(mu0, sigma0)), gaussian_outliers (gaussian plus m
    planted large values per row), quantized (gaussian snapped to a g-level
    grid, duplicate stress), uniform (U(low, high), pathological flatness).
    """
    if batch_size < 1 or vocab_size < 1:
        raise ValueError("batch_size and vocab_size must be >= 1")
    rng = np.random.default_rng(seed)
    if kind == "gaussian":
        mu0 = params.pop("mu0", 0.0)
        sigma0 = params.pop("sigma0", 1.0)
        vals = rng.normal(mu0, sigma0, size=(batch_size, vocab_size))
    elif kind == "gaussian_outliers":
        m = int(params.pop("m", 50))
        magnitude = params.pop("magnitude", 12.0)
        if not 0 <= m <= vocab_size:
            raise ValueError("m must be in [0, V]")
        vals = rng.normal(0.0, 1.0, size=(batch_size, vocab_size))
        for r in range(batch_size):
            idx = rng.choice(vocab_size, size=m, replace=False)
            vals[r, idx] = magnitude + rng.random(m)
    elif kind == "quantized":
        g = int(params.pop("g", 16))
        if g < 1:
            raise ValueError("g must be >= 1")
        grid = np.linspace(-3.0, 3.0, g)
        z = np.clip(rng.normal(0.0, 1.0, size=(batch_size, vocab_size)), -3, 3)
        vals = grid[np.argmin(np.abs(z[..., None] - grid), axis=-1)] \
            if vocab_size * batch_size <= 1 << 20 else \
            grid[np.clip(np.round((z + 3.0) / 6.0 * (g - 1)).astype(np.int64), 0, g - 1)]
    elif kind == "uniform":
        low = params.pop("low", 0.0)
        high = params.pop("high", 1.0)
        vals = rng.uniform(low, high, size=(batch_size, vocab_size))
    else:
        raise ValueError(f"unknown batch kind {kind!r}")
    if params:
        raise ValueError(f"unused params for kind {kind!r}: {sorted(params)}")
    return LogitBatch(vals.astype(np.float32))


def sort_select(batch: LogitBatch, targets: TruncTargets,
                use_sigma_trunc: bool = False,
                sample_size: int = DEFAULT_SAMPLE_SIZE) -> np.ndarray:
    """Sort-based baseline for benchmarks; optionally sorts only the
    sigma-truncated outlier set on a hit."""
    outputs = np.empty_like(batch.values)
    for i in range(batch.batch_size):
        row = batch.values[i]
        k, p = int(targets.k[i]), float(targets.p[i])
        if use_sigma_trunc and k != batch.vocab_size:
            stats = row_stats(row, sample_size)
            delta = lookup_delta_topk(k, batch.vocab_size)
            out = gather_outliers(row, stats, delta, mode="topk")
            if is_hit(out, k=k, mode="topk"):
                thr = threshold_from(stats, delta)
                idx = np.nonzero(row.astype(np.float64) > thr.t)[0]
                sub = oracle_topk_topp(row[idx], k, p).masked_row
                full = np.full_like(row, -np.inf)
                full[idx] = sub
                outputs[i] = full
                continue
        outputs[i] = oracle_topk_topp(row, k, p).masked_row
    return outputs


def bench(batch: LogitBatch, targets: TruncTargets, config: EngineConfig,
          repeats: int = 5):
    """Median/min wall time for the pipeline and the sort baseline.

    One warm-up run per method is excluded. Returns a dict of timing rows.
    """
    if repeats < 3:
        raise ValueError("repeats must be >= 3")
    _check_inputs(batch, targets)

    def time_fn(fn):
        fn()  # warm-up
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter_ns()
            fn()
            times.append(time.perf_counter_ns() - t0)
        return times

    pipe_times = time_fn(lambda: run_batch(batch, targets, config))
    oracle_times = time_fn(lambda: sort_select(batch, targets))

    def row(name, times):
        med = statistics.median(times)
        return {"method": name,
                "median_ms": med / 1e6,
                "min_ms": min(times) / 1e6,
                "rows_per_s": batch.batch_size / (med / 1e9)}

    return [row("pipeline", pipe_times), row("sort_oracle", oracle_times)]


def report_row(run_id: str, batch: LogitBatch, targets: TruncTargets,
               config: EngineConfig, report: BatchReport) -> dict:
    """One aggregate CSV row in the fixed report schema."""
    ks = np.unique(targets.k)
    ps = np.unique(targets.p)
    return {
        "run_id": run_id,
        "B": batch.batch_size,
        "V": batch.vocab_size,
        "k": int(ks[0]) if ks.shape[0] == 1 else "rand",
        "p": float(ps[0]) if ps.shape[0] == 1 else "rand",
        "search_kind": config.search_kind,
        "trunc_enabled": config.sigma_trunc_enabled and not config.force_fallback,
        "dup_enabled": config.duplication_handling_enabled,
        "hit_rate": report.hit_rate,
        "mean_outliers": report.mean_outliers,
        "mean_prob_sum": report.mean_prob_sum,
        "mean_iters_k": report.mean_iters_k,
        "mean_iters_p": report.mean_iters_p,
        "wall_ms": report.wall_time_ns / 1e6,
        "rows_per_s": report.rows_per_second,
    }


def write_report_csv(rows: List[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({c: r.get(c, "") for c in REPORT_COLUMNS})
