import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st_

from sigmatop.core import DEFAULT_TOL, Tolerances, stable_softmax
from sigmatop.pivot_search import (binary_topk, binary_topp, quaternary_topk,
                                   quaternary_topp)


def kept_topk(values, res):
    """Materialize the kept multiset a PivotResult implies."""
    v = np.asarray(values, dtype=np.float64)
    if res.ties_only:
        return v
    return v[v > res.tau]


def test_topk_distinct_values():
    res = quaternary_topk(np.array([3.0, 2.0, 1.0, 0.0]), 2)
    assert res.n_above == 2
    assert sorted(kept_topk([3, 2, 1, 0], res)) == [2.0, 3.0]


def test_topk_duplicate_boundary():
    # [DERIVED] row [5,5,3,5,1], k=2: boundary value 5 occurs 3 times.
    res = quaternary_topk(np.array([5.0, 5.0, 3.0, 5.0, 1.0]), 2)
    assert res.n_above == 3
    assert res.z_dup == 5.0
    assert res.n_dup == 3


def test_topk_all_ties_degenerate():
    res = quaternary_topk(np.array([1.0, 1.0, 1.0, 1.0]), 2)
    assert res.ties_only
    assert res.n_dup == 4


def test_topk_boundary_at_range_minimum():
    # k-th value equals the search-range minimum: no in-range pivot can
    # terminate, the guard must keep everything and report the duplicates.
    res = quaternary_topk(np.array([3.0, 2.0, 1.0, 1.0]), 3)
    assert res.tau == -math.inf
    assert res.n_above == 4
    assert res.z_dup == 1.0 and res.n_dup == 2


def test_topk_termination_invariant_random():
    rng = np.random.default_rng(4)
    for _ in range(50):
        vals = rng.normal(size=257)
        k = int(rng.integers(1, 257))
        for fn in (quaternary_topk, binary_topk):
            res = fn(vals, k)
            assert res.iters <= DEFAULT_TOL.max_iters
            if not res.ties_only:
                assert res.n_above >= k
                assert res.n_above - res.n_dup < k


def test_topk_iteration_cap_respected():
    tol = Tolerances(max_iters=3)
    rng = np.random.default_rng(5)
    res = quaternary_topk(rng.normal(size=4096), 100, tol)
    assert res.iters <= 3


def test_quaternary_fewer_iterations_than_binary():
    rng = np.random.default_rng(6)
    q_total = b_total = 0
    for _ in range(50):
        vals = rng.normal(size=2048)
        q_total += quaternary_topk(vals, 50).iters
        b_total += binary_topk(vals, 50).iters
    assert q_total < b_total


def test_topk_validates_inputs():
    with pytest.raises(ValueError):
        quaternary_topk(np.array([]), 1)
    with pytest.raises(ValueError):
        quaternary_topk(np.array([1.0, 2.0]), 3)


def test_topp_simple_nucleus():
    probs, _, _ = stable_softmax(np.array([2.0, 1.0, 0.0], dtype=np.float32))
    res = quaternary_topp(probs, 0.7)
    kept = probs[probs > res.pi]
    # [DERIVED] probs ~= [0.6652, 0.2447, 0.0900]; nucleus = top two.
    assert kept.shape[0] - res.n_dup + res.n_keep == 2


def test_topp_uniform_ties():
    probs = np.full(4, 0.25)
    res = quaternary_topp(probs, 0.5)
    assert res.n_dup == 4
    assert res.n_keep == 2


def test_topp_single_dominant():
    probs, _, _ = stable_softmax(np.array([10.0, 0.0, 0.0], dtype=np.float32))
    res = quaternary_topp(probs, 0.5)
    kept = probs[probs > res.pi]
    assert kept.shape[0] - res.n_dup + res.n_keep == 1


def test_topp_minimality_exact_sums():
    rng = np.random.default_rng(7)
    for _ in range(30):
        probs, _, _ = stable_softmax(rng.normal(size=511).astype(np.float32))
        p = float(rng.uniform(0.05, 0.99))
        for fn in (quaternary_topp, binary_topp):
            res = fn(probs, p)
            kept = np.sort(probs[probs > res.pi])[::-1]
            n = kept.shape[0] - res.n_dup + res.n_keep
            nucleus = kept[:n].tolist()
            assert math.fsum(nucleus) >= p
            assert math.fsum(nucleus[:-1]) < p


def test_topp_mass_below_p_keeps_all():
    # Candidate set carries less mass than requested: everything stays.
    probs = np.array([0.2, 0.1, 0.05])
    res = quaternary_topp(probs, 0.8)
    assert res.pi == 0.0


def test_topp_validates_p():
    with pytest.raises(ValueError):
        quaternary_topp(np.array([0.5, 0.5]), 0.0)
    with pytest.raises(ValueError):
        quaternary_topp(np.array([0.5, 0.5]), 1.0)


@settings(max_examples=60, deadline=None)
@given(st_.lists(st_.integers(-50, 50), min_size=1, max_size=40),
       st_.data())
def test_topk_count_matches_sort_oracle(ints, data):
    vals = np.array(ints, dtype=np.float64)
    k = data.draw(st_.integers(1, len(ints)))
    res = quaternary_topk(vals, k)
    if res.ties_only:
        assert res.n_dup == len(ints)
        return
    # Trimming n_above down by (n_above - k) boundary copies leaves k.
    n_keep = res.n_dup - (res.n_above - k)
    assert 0 <= n_keep <= res.n_dup
    assert res.n_above - res.n_dup + n_keep == k
    # kept multiset must be the k largest (sort oracle on values).
    kept = np.sort(vals[vals > res.tau])[::-1]
    trimmed = np.concatenate([kept[:res.n_above - res.n_dup],
                              np.full(n_keep, res.z_dup)])
    oracle = np.sort(vals)[::-1][:k]
    assert np.array_equal(np.sort(trimmed), np.sort(oracle))
