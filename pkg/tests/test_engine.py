import numpy as np
import pytest

from sigmatop.core import LogitBatch, TruncTargets
from sigmatop.engine import (EngineConfig, REPORT_COLUMNS, bench, report_row,
                             run_batch, sort_select, synth_batch,
                             verify_batch, write_report_csv)


def test_engine_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(threads=0)
    with pytest.raises(ValueError):
        EngineConfig(search_kind="ternary")


def test_run_batch_thread_invariance():
    batch = synth_batch("gaussian", 16, 2048, seed=0)
    targets = TruncTargets.uniform(16, 25, 0.9)
    base, base_rep = run_batch(batch, targets, EngineConfig(threads=1))
    for threads in (2, 8):
        out, rep = run_batch(batch, targets, EngineConfig(threads=threads))
        assert out.tobytes() == base.tobytes()
        assert rep.hit_rate == base_rep.hit_rate
        assert [m.k_search_iters for m in rep.per_row] == \
               [m.k_search_iters for m in base_rep.per_row]


def test_report_aggregates_match_per_row():
    batch = synth_batch("gaussian", 32, 1024, seed=1)
    targets = TruncTargets.uniform(32, 10, 0.8)
    _, rep = run_batch(batch, targets, EngineConfig())
    n = len(rep.per_row)
    assert rep.hit_rate == sum(m.trunc_hit for m in rep.per_row) / n
    assert rep.mean_outliers == sum(m.outlier_count for m in rep.per_row) / n
    assert rep.mean_iters_k == sum(m.k_search_iters for m in rep.per_row) / n


def test_run_batch_rejects_invalid_input():
    vals = np.zeros((2, 8), dtype=np.float32)
    vals[0, 0] = np.inf
    with pytest.raises(ValueError, match="non-finite"):
        run_batch(LogitBatch(vals), TruncTargets.uniform(2, 4, 1.0),
                  EngineConfig())


def test_search_kind_changes_iters_not_output():
    batch = synth_batch("gaussian", 8, 4096, seed=2)
    targets = TruncTargets.uniform(8, 50, 1.0)
    q_out, q_rep = run_batch(batch, targets,
                             EngineConfig(search_kind="quaternary"))
    b_out, b_rep = run_batch(batch, targets,
                             EngineConfig(search_kind="binary"))
    assert q_out.tobytes() == b_out.tobytes()
    assert q_rep.mean_iters_k != b_rep.mean_iters_k


def test_verify_batch_clean_and_dirty():
    batch = synth_batch("quantized", 16, 512, seed=3, g=8)
    targets = TruncTargets.uniform(16, 20, 1.0)
    assert verify_batch(batch, targets, EngineConfig()) == []
    # Disabling duplicate trimming must over-keep on tie-crossing rows.
    divs = verify_batch(batch, targets,
                        EngineConfig(duplication_handling_enabled=False))
    assert divs
    assert divs[0].expected == -np.inf  # the extra kept duplicate


def test_synth_determinism_and_kinds():
    a = synth_batch("gaussian", 4, 128, seed=9)
    b = synth_batch("gaussian", 4, 128, seed=9)
    assert a.values.tobytes() == b.values.tobytes()

    q = synth_batch("quantized", 6, 64, seed=9, g=4)
    for row in q.values:
        assert np.unique(row).shape[0] <= 4

    g = synth_batch("gaussian_outliers", 5, 256, seed=9, m=50)
    for row in g.values:
        # Planted values dwarf the noise: the top 50 are all >= magnitude.
        assert np.sort(row)[-50:].min() >= 12.0

    u = synth_batch("uniform", 3, 32, seed=9, low=2.0, high=3.0)
    assert (u.values >= 2.0).all() and (u.values <= 3.0).all()

    with pytest.raises(ValueError):
        synth_batch("cauchy", 1, 8, seed=0)
    with pytest.raises(ValueError):
        synth_batch("gaussian", 1, 8, seed=0, bogus=1)


def test_sort_select_trunc_matches_plain():
    batch = synth_batch("gaussian", 8, 8192, seed=4)
    targets = TruncTargets.uniform(8, 50, 0.9)
    plain = sort_select(batch, targets, use_sigma_trunc=False)
    trunc = sort_select(batch, targets, use_sigma_trunc=True)
    assert plain.tobytes() == trunc.tobytes()


def test_bench_minimal():
    batch = synth_batch("gaussian", 4, 512, seed=5)
    targets = TruncTargets.uniform(4, 10, 1.0)
    rows = bench(batch, targets, EngineConfig(), repeats=3)
    assert [r["method"] for r in rows] == ["pipeline", "sort_oracle"]
    assert all(r["median_ms"] > 0 for r in rows)
    with pytest.raises(ValueError):
        bench(batch, targets, EngineConfig(), repeats=2)


def test_report_csv_schema(tmp_path):
    batch = synth_batch("gaussian", 4, 256, seed=6)
    targets = TruncTargets.uniform(4, 10, 0.9)
    config = EngineConfig()
    _, rep = run_batch(batch, targets, config)
    row = report_row("t1", batch, targets, config, rep)
    path = tmp_path / "r.csv"
    write_report_csv([row], path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(REPORT_COLUMNS)
    assert len(lines) == 2
    assert lines[1].startswith("t1,4,256,10,0.9,quaternary,True,True,")


def test_report_row_rand_targets():
    batch = synth_batch("gaussian", 4, 256, seed=7)
    targets = TruncTargets(np.array([1, 2, 3, 4]),
                           np.array([0.1, 0.2, 0.3, 0.4]))
    config = EngineConfig()
    _, rep = run_batch(batch, targets, config)
    row = report_row("t2", batch, targets, config, rep)
    assert row["k"] == "rand" and row["p"] == "rand"
