"""Command-line front end: run / verify / bench / gen-tables.

Exit codes: 0 success, 1 verification divergence, 2 invalid flags,
3 I/O failure, 4 input validation failure.
"""
from __future__ import annotations

import argparse
import itertools
import statistics
import sys
import time

import numpy as np

from .core import LogitBatch, TruncTargets, validate_batch
from .engine import (EngineConfig, report_row, run_batch, sort_select,
                     synth_batch, verify_batch, write_report_csv)
from .logit_io import read_logits, read_targets_csv, write_logits
from .sigma_trunc import (TOPK_TABLE, TOPP_TABLE, generate_table_entries,
                          write_table_csv)

EXIT_OK = 0
EXIT_DIVERGENCE = 1
EXIT_BAD_FLAGS = 2
EXIT_IO = 3
EXIT_VALIDATION = 4

_SYNTH_KINDS = ("gaussian", "gaussian_outliers", "quantized", "uniform")
_SEARCH_NAMES = {"quat": "quaternary", "bin": "binary"}


def _parse_targets(k_arg, p_arg, batch_size, vocab_size, seed):
    """Resolve --k/--p flags ('rand', a literal, or absent) into per-row arrays."""
    rng = np.random.default_rng(seed)
    if k_arg == "rand":
        k = rng.integers(1, vocab_size + 1, size=batch_size)
    else:
        k = np.full(batch_size, vocab_size if k_arg is None else int(k_arg))
    if p_arg == "rand":
        p = np.clip(rng.random(batch_size), 1e-12, 1.0 - 1e-12)
    else:
        p = np.full(batch_size, 1.0 if p_arg is None else float(p_arg))
    return TruncTargets(k, p)


def _config_from(args, force_fallback: bool = False) -> EngineConfig:
    return EngineConfig(
        threads=getattr(args, "threads", 1),
        search_kind=_SEARCH_NAMES[args.search],
        sigma_trunc_enabled=not getattr(args, "no_sigma_trunc", False),
        duplication_handling_enabled=not getattr(args, "no_dup", False),
        force_fallback=force_fallback)


def _load_batch(args) -> LogitBatch:
    if args.input is not None:
        return read_logits(args.input)
    return synth_batch(args.synth, args.batch, args.vocab, args.seed)


def cmd_run(args) -> int:
    try:
        batch = _load_batch(args)
        if args.targets is not None:
            targets = read_targets_csv(args.targets)
        else:
            targets = _parse_targets(args.k, args.p, batch.batch_size,
                                     batch.vocab_size, args.seed)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    problems = validate_batch(batch, targets)
    if problems:
        for line in problems[:10]:
            print(f"validation: {line}", file=sys.stderr)
        return EXIT_VALIDATION
    config = _config_from(args)
    outputs, report = run_batch(batch, targets, config)
    try:
        if args.out is not None:
            write_logits(LogitBatch(outputs), args.out)
        if args.report is not None:
            write_report_csv([report_row("run", batch, targets, config,
                                         report)], args.report)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"rows={batch.batch_size} hit_rate={report.hit_rate:.4f} "
          f"mean_outliers={report.mean_outliers:.1f} "
          f"rows_per_s={report.rows_per_second:.1f}")
    return EXIT_OK


def _report_divergence(label: str, div) -> None:
    print(f"DIVERGENCE [{label}] row {div.row} index {div.index}: "
          f"got {div.got!r}, expected {div.expected!r} "
          f"({div.n_mismatch} mismatching entries)")


def _verify_exhaustive(args) -> int:
    """Every row over a 3-symbol alphabet of length --vocab, for every k."""
    v = args.vocab
    if v > 8:
        print("error: exhaustive mode requires --vocab <= 8", file=sys.stderr)
        return EXIT_BAD_FLAGS
    rows = np.array(list(itertools.product((0.0, 1.0, 2.0), repeat=v)),
                    dtype=np.float32)
    batch = LogitBatch(rows)
    for k in range(1, v + 1):
        targets = TruncTargets.uniform(batch.batch_size, k, 1.0)
        for fallback in (False, True):
            config = _config_from(args, force_fallback=fallback)
            divs = verify_batch(batch, targets, config)
            if divs:
                _report_divergence(f"exhaustive k={k} fallback={fallback}",
                                   divs[0])
                return EXIT_DIVERGENCE
    print(f"verify: exhaustive alphabet V={v} "
          f"({batch.batch_size} rows x {v} k values x 2 paths) OK")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.exhaustive:
        return _verify_exhaustive(args)
    v = args.vocab
    k = min(50, v)
    modes = [("k-only", k, 1.0), ("p-only", v, 0.9), ("combined", k, 0.9)]
    checked = 0
    for kind in ("gaussian", "quantized"):
        batch = synth_batch(kind, args.batch, v, args.seed)
        for mode_name, mk, mp in modes:
            targets = TruncTargets.uniform(args.batch, mk, mp)
            for fallback in (False, True):
                config = _config_from(args, force_fallback=fallback)
                divs = verify_batch(batch, targets, config)
                checked += args.batch
                if divs:
                    _report_divergence(
                        f"{kind}/{mode_name}/fallback={fallback}", divs[0])
                    return EXIT_DIVERGENCE
    print(f"verify: {checked} row checks, zero divergences")
    return EXIT_OK


def _timed(fn, repeats: int):
    fn()  # warm-up
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        fn()
        times.append(time.perf_counter_ns() - t0)
    return statistics.median(times)


def cmd_bench(args) -> int:
    if args.repeats < 3:
        print("error: --repeats must be >= 3", file=sys.stderr)
        return EXIT_BAD_FLAGS
    batch = synth_batch("gaussian", args.batch, args.vocab, args.seed)
    targets = TruncTargets.uniform(args.batch, min(args.k, args.vocab), args.p)
    # Run B (kernel autotune toggle) has no CPU analog and is omitted.
    print("note: autotune ablation row omitted (no analog here); "
          "9 rows emitted")
    grid = [
        ("A", dict(search_kind="quaternary")),
        ("C", dict(search_kind="quaternary", duplication_handling_enabled=False)),
        ("D", dict(search_kind="binary")),
        ("E", dict(search_kind="binary", duplication_handling_enabled=False)),
        ("F", dict(search_kind="quaternary", force_fallback=True)),
        ("G", dict(search_kind="binary", force_fallback=True)),
        ("H", dict(search_kind="quaternary", sigma_trunc_enabled=False)),
    ]
    rows = []
    for run_id, overrides in grid:
        config = EngineConfig(threads=args.threads, **overrides)
        _, report = run_batch(batch, targets, config)
        wall = _timed(lambda: run_batch(batch, targets, config), args.repeats)
        rec = report_row(run_id, batch, targets, config, report)
        rec["wall_ms"] = wall / 1e6
        rec["rows_per_s"] = batch.batch_size / (wall / 1e9)
        rows.append(rec)
    for run_id, trunc in (("I", True), ("J", False)):
        wall = _timed(lambda: sort_select(batch, targets, use_sigma_trunc=trunc),
                      args.repeats)
        rows.append({"run_id": run_id, "B": batch.batch_size,
                     "V": batch.vocab_size, "k": int(targets.k[0]),
                     "p": float(targets.p[0]), "search_kind": "sort",
                     "trunc_enabled": trunc, "dup_enabled": True,
                     "wall_ms": wall / 1e6,
                     "rows_per_s": batch.batch_size / (wall / 1e9)})
    if args.sweep_batch:
        config = EngineConfig(threads=args.threads)
        for b in args.sweep_batch:
            sb = synth_batch("gaussian", b, args.vocab, args.seed)
            st = TruncTargets.uniform(b, min(args.k, args.vocab), args.p)
            _, report = run_batch(sb, st, config)
            wall = _timed(lambda: run_batch(sb, st, config), args.repeats)
            rec = report_row(f"sweep_B{b}", sb, st, config, report)
            rec["wall_ms"] = wall / 1e6
            rec["rows_per_s"] = b / (wall / 1e9)
            rows.append(rec)
    try:
        write_report_csv(rows, args.report)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for r in rows:
        print(f"{r['run_id']}: wall_ms={r['wall_ms']:.3f} "
              f"rows_per_s={r['rows_per_s']:.1f}")
    return EXIT_OK


def cmd_gen_tables(args) -> int:
    embedded = {"topk": TOPK_TABLE.entries, "topp": TOPP_TABLE.entries}
    try:
        for kind in ("topk", "topp"):
            entries = generate_table_entries(kind, args.samples, args.seed,
                                             entries=args.entries)
            path = f"{args.out_dir}/{kind}_table.csv"
            write_table_csv(entries, path)
            if args.entries == embedded[kind].shape[0]:
                dev = float(np.max(np.abs(entries[:191] -
                                          embedded[kind][:191])))
                print(f"{kind}: wrote {path}, "
                      f"max |regen - embedded| over [0,190] = {dev:.4f}")
            else:
                print(f"{kind}: wrote {path} ({args.entries} entries)")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _add_common(p, with_threads=True):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--search", choices=("quat", "bin"), default="quat")
    p.add_argument("--no-sigma-trunc", action="store_true",
                   help="disable the Gaussian pre-filter (always fall back)")
    p.add_argument("--no-dup", action="store_true",
                   help="disable boundary duplicate trimming")
    if with_threads:
        p.add_argument("--threads", type=int, default=1)


def _k_or_rand(s):
    if s == "rand":
        return s
    k = int(s)
    if k < 1:
        raise argparse.ArgumentTypeError("k must be >= 1 or 'rand'")
    return k


def _p_or_rand(s):
    if s == "rand":
        return s
    p = float(s)
    if not 0.0 < p <= 1.0:
        raise argparse.ArgumentTypeError("p must be in (0, 1] or 'rand'")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigmatop",
        description="Exact top-k / top-p logit truncation without sorting.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="truncate a batch and emit reports")
    src = run.add_mutually_exclusive_group()
    src.add_argument("--input", help="QRTL logit file")
    src.add_argument("--synth", choices=_SYNTH_KINDS, default="gaussian")
    run.add_argument("--batch", type=int, default=64)
    run.add_argument("--vocab", type=int, default=32768)
    run.add_argument("--k", type=_k_or_rand, default=None)
    run.add_argument("--p", type=_p_or_rand, default=None)
    run.add_argument("--targets", help="per-row k/p CSV (overrides --k/--p)")
    run.add_argument("--out", help="write masked outputs (QRTL format)")
    run.add_argument("--report", help="write aggregate report CSV")
    _add_common(run)
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="differential check against the "
                                        "sort oracle")
    ver.add_argument("--batch", type=int, default=64)
    ver.add_argument("--vocab", type=int, default=1024)
    ver.add_argument("--exhaustive", action="store_true",
                     help="all 3-symbol rows of length --vocab (<= 8), all k")
    _add_common(ver, with_threads=False)
    ver.set_defaults(func=cmd_verify, threads=1)

    ben = sub.add_parser("bench", help="ablation grid and throughput sweeps")
    ben.add_argument("--batch", type=int, default=256)
    ben.add_argument("--vocab", type=int, default=131072)
    ben.add_argument("--k", type=int, default=50)
    ben.add_argument("--p", type=float, default=0.9)
    ben.add_argument("--repeats", type=int, default=5)
    ben.add_argument("--report", default="bench.csv")
    ben.add_argument("--sweep-batch", type=lambda s: [int(x) for x in s.split(",")],
                     default=None, metavar="B1,B2,...")
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--threads", type=int, default=1)
    ben.set_defaults(func=cmd_bench)

    gen = sub.add_parser("gen-tables", help="regenerate quantile tables")
    gen.add_argument("--samples", type=int, default=10_000_000)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--entries", type=int, default=200)
    gen.add_argument("--out-dir", default=".")
    gen.set_defaults(func=cmd_gen_tables)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"validation: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
