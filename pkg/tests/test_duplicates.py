"""Duplicate-key cascade attack, the clustering baseline, and the cliff."""

from __future__ import annotations

import math

from lindex.core import IndexConfig, IndexTree, check_invariants
from lindex.duplicates import (
    DupAttackConfig,
    SzegpConfig,
    default_target_key,
    estimate_range,
    run_duplicate_attack,
    run_szegp,
    trigger_distance,
)
from lindex.metrics import TRAJECTORY_HEADER, trajectory_csv

from conftest import lognormal_keys

import numpy as np


def small_victim(cap_mb=48, **overrides):
    cfg = IndexConfig(max_data_node_slots=2048,
                      memory_cap_bytes=cap_mb * 2**20, **overrides)
    return IndexTree.bulk_load(lognormal_keys(40_000, seed=1), cfg)


def test_attack_reaches_the_cap_and_records_it():
    tree = small_victim()
    record = run_duplicate_attack(tree, DupAttackConfig(max_insertions=2000))
    assert record.cap_exceeded
    assert record.insertions_to_cap is not None
    assert record.insertions_to_cap <= 1500
    assert record.after_bytes <= tree.config.memory_cap_bytes
    assert record.doublings >= 10
    check_invariants(tree)


def test_attack_trajectory_rows_are_monotone_and_well_formed():
    tree = small_victim()
    record = run_duplicate_attack(tree, DupAttackConfig(max_insertions=2000))
    assert record.trajectory
    text = trajectory_csv(record.trajectory)
    assert text.splitlines()[0] == TRAJECTORY_HEADER
    last_n = 0
    for n, current, peak, splits, doublings in record.trajectory:
        assert n >= last_n
        assert peak >= current
        assert splits >= 0 and doublings >= 0
        last_n = n


def test_doubling_log_contains_long_exact_doubling_chains():
    tree = small_victim()
    run_duplicate_attack(tree, DupAttackConfig(max_insertions=2000))
    log = tree.counters.doubling_log
    best = run = 1
    for a, b in zip(log, log[1:]):
        run = run + 1 if b == 2 * a else 1
        best = max(best, run)
    assert best >= 10


def test_non_duplicate_keys_survive_the_attack():
    tree = small_victim()
    target = default_target_key(tree)
    before = sorted(k for n in tree.iter_data_nodes()
                    for k, _ in n.array.iter_records())
    run_duplicate_attack(tree, DupAttackConfig(max_insertions=2000))
    after = sorted(k for n in tree.iter_data_nodes()
                   for k, _ in n.array.iter_records() if k != target)
    assert after == [k for k in before if k != target]


def test_attack_succeeds_across_cap_sizes_with_flat_budget():
    budgets = {}
    for cap_mb in (16, 64, 256):
        tree = small_victim(cap_mb=cap_mb)
        record = run_duplicate_attack(tree, DupAttackConfig(max_insertions=3000))
        assert record.cap_exceeded, f"no cap at {cap_mb}MB"
        budgets[cap_mb] = record.insertions_to_cap
    # insertions-to-cap barely moves while the cap grows 16x
    assert budgets[256] <= budgets[16] + 64


def test_interleaved_attack_still_works():
    tree = small_victim()
    legit = iter([("lookup", k) for k in lognormal_keys(5000, seed=2).tolist()])
    record = run_duplicate_attack(
        tree, DupAttackConfig(max_insertions=2000, interleave=10), legit)
    assert record.cap_exceeded


def test_trigger_distance_on_fresh_tree_is_past_the_ops_gate():
    tree = small_victim()
    d = trigger_distance(tree)
    assert d is not None and d is not math.inf
    assert d > 1
    assert d >= tree.config.catastrophic_min_ops


def test_trigger_distance_is_one_when_primed_one_short():
    tree = small_victim()
    d = trigger_distance(tree)
    target = default_target_key(tree)
    for i in range(d - 1):
        tree.insert(target, i)
    assert trigger_distance(tree) == 1


def test_trigger_distance_infinite_without_duplicates():
    cfg = IndexConfig(max_data_node_slots=2048, allow_duplicates=False)
    tree = IndexTree.bulk_load(lognormal_keys(1000, seed=3), cfg)
    assert trigger_distance(tree, max_probe=10) == math.inf


def test_estimate_range_spans_sampled_keys():
    keys = lognormal_keys(10_000, seed=5)
    lo, hi = estimate_range(keys, 1000, np.random.default_rng(0))
    assert keys[0] <= lo <= hi <= keys[-1]


def test_szegp_uses_integer_increment_for_integer_keys():
    tree = small_victim()
    keys = lognormal_keys(40_000, seed=1)
    record = run_szegp(tree, keys,
                       SzegpConfig(n_probes=100, cluster=50, budget=200),
                       seed=3)
    assert record.ops == 200
    inserted = sorted(k for n in tree.iter_data_nodes()
                      for k, _ in n.array.iter_records()
                      if isinstance(k, int))
    # consecutive runs step by exactly one
    assert any(b - a == 1 for a, b in zip(inserted, inserted[1:]))


def test_szegp_zero_budget_leaves_tree_untouched():
    tree = small_victim()
    before = tree.memory_report().current_bytes
    record = run_szegp(tree, lognormal_keys(40_000, seed=1),
                       SzegpConfig(budget=0), seed=0)
    assert record.ops == 0
    assert tree.memory_report().current_bytes == before


def test_szegp_needs_more_budget_than_the_duplicate_attack():
    results = []
    for seed in (0, 1, 2):
        dup_tree = small_victim(cap_mb=32)
        dup = run_duplicate_attack(dup_tree, DupAttackConfig(max_insertions=3000))
        sz_tree = small_victim(cap_mb=32)
        sz = run_szegp(sz_tree, lognormal_keys(40_000, seed=1),
                       SzegpConfig(budget=100_000), seed=seed)
        dup_budget = dup.insertions_to_cap if dup.cap_exceeded else math.inf
        sz_budget = sz.insertions_to_cap if sz.cap_exceeded else math.inf
        results.append((dup_budget, sz_budget))
    med_dup = sorted(r[0] for r in results)[1]
    med_sz = sorted(r[1] for r in results)[1]
    assert med_dup < med_sz


def test_expansion_only_policy_defeats_the_cascade():
    """The patched repair path absorbs duplicate floods without the table
    doubling spiral: memory stays within a small multiple of the baseline."""
    tree = small_victim(cap_mb=48, split_policy="expansion-only")
    base = tree.memory_report().current_bytes
    record = run_duplicate_attack(tree, DupAttackConfig(max_insertions=2000))
    assert not record.cap_exceeded
    assert record.doublings == 0
    assert record.sideways_splits == 0
    assert record.after_bytes < 4 * base
