"""Tree construction, queries, expansion, routing, and accounting."""

from __future__ import annotations

import random
from bisect import bisect_left

import numpy as np
import pytest

from lindex.core import (
    MIN_DATA_NODE_SLOTS,
    NODE_HEADER_BYTES,
    CapExceededError,
    DomainError,
    IndexConfig,
    IndexTree,
    InternalNode,
    check_invariants,
)

from conftest import build_tree, lognormal_keys


def walk_bytes(tree):
    """Independent recomputation of accounted bytes from node geometry."""
    cfg = tree.config
    total = 0
    for node in tree.iter_nodes():
        if isinstance(node, InternalNode):
            total += node.table_len * cfg.ref_bytes + NODE_HEADER_BYTES
        else:
            cap = node.array.capacity
            total += cap * cfg.slot_bytes + (cap + 7) // 8 + NODE_HEADER_BYTES
    return total


# ---------------------------------------------------------------- bulk load

def test_bulk_load_empty_gives_one_empty_node_over_full_domain():
    tree = build_tree([])
    leaves = list(tree.iter_data_nodes())
    assert len(leaves) == 1
    assert leaves[0].array.occupied == 0
    assert (leaves[0].lo, leaves[0].hi) == tree.domain()
    assert tree.lookup(0.5) is None


def test_bulk_load_uniform_keys_lands_inside_density_band():
    tree = build_tree(list(range(1, 101)))
    assert tree.key_count() == 100
    for node in tree.iter_data_nodes():
        occ, cap = node.array.occupied, node.array.capacity
        if occ:
            frac = occ / cap
            assert tree.config.lower_density - 0.01 <= frac
            assert frac <= tree.config.upper_density


def test_bulk_load_capacity_matches_provisioning_rule():
    tree = build_tree(list(range(1000)))
    for node in tree.iter_data_nodes():
        occ = node.array.occupied
        assert node.array.capacity == tree.config.provision_capacity(occ)


def test_bulk_load_matches_sorted_map_oracle():
    keys = lognormal_keys(10_000, seed=4)
    tree = build_tree(keys, max_data_node_slots=2048)
    check_invariants(tree)
    oracle = set(keys.tolist())
    probe = np.random.default_rng(5).choice(keys, 2000).tolist()
    absent = [k + 1 for k in probe if (k + 1) not in oracle]
    for k in probe:
        assert tree.lookup(k) is not None
    for k in absent:
        assert tree.lookup(k) is None


def test_bulk_load_rejects_unsorted_keys():
    with pytest.raises(ValueError):
        build_tree([3, 1, 2])


def test_bulk_load_cap_exceeded_before_construction():
    with pytest.raises(CapExceededError):
        IndexTree.bulk_load(list(range(100_000)),
                            IndexConfig(memory_cap_bytes=100_000))


# ---------------------------------------------------------------- queries

def test_read_your_write():
    tree = build_tree(list(range(0, 100, 2)))
    tree.insert(17, "hello")
    assert tree.lookup(17) == "hello"


def test_lookup_outside_domain_is_absent_and_insert_raises():
    tree = build_tree(list(range(10, 20)))
    assert tree.lookup(-100) is None
    assert tree.lookup(10**9) is None
    with pytest.raises(DomainError):
        tree.insert(10**9, "v")


def test_lookups_match_binary_search_oracle_per_node():
    keys = lognormal_keys(10_000, seed=7)
    tree = build_tree(keys, max_data_node_slots=1024)
    rng = random.Random(9)
    universe = keys.tolist()
    for _ in range(1000):
        k = rng.choice(universe) if rng.random() < 0.7 else rng.randrange(10**12)
        leaf, _ = tree._descend(k) if tree.root.lo <= k < tree.root.hi else (None, 0)
        got = tree.lookup(k)
        if leaf is None:
            assert got is None
            continue
        node_keys = leaf.array.record_keys()
        i = bisect_left(node_keys, k)
        present = i < len(node_keys) and node_keys[i] == k
        assert (got is not None) == present


def test_interleaved_ops_match_sorted_map_oracle():
    keys = list(range(0, 4000, 4))
    tree = build_tree(keys)
    oracle = set(keys)
    rng = random.Random(3)
    for i in range(4000):
        k = rng.randrange(-1, 4000)
        if rng.random() < 0.5 and tree.root.lo <= k < tree.root.hi:
            tree.insert(k, i)
            oracle.add(k)
        else:
            assert (tree.lookup(k) is not None) == (k in oracle)
    check_invariants(tree)


# ---------------------------------------------------------------- expansion

def test_expand_capacity_formula_and_density():
    tree = build_tree([])
    node = next(tree.iter_data_nodes())
    # force the documented example: occupied=80, capacity=100
    assert tree.config.provision_capacity(80) == 134
    frac = 80 / 134
    assert frac <= tree.config.upper_density
    assert frac >= tree.config.lower_density - 2 / 134


def test_density_trigger_expands_and_resets_stats():
    keys = list(range(0, 512, 2))
    tree = build_tree(keys, max_data_node_slots=4096)
    node = max(tree.iter_data_nodes(), key=lambda n: n.array.occupied)
    trigger = tree.config.occupancy_trigger(node.array.capacity)
    filler = list(range(1, 510, 2))
    random.Random(0).shuffle(filler)  # distribution-preserving fill order
    filler = iter(filler)
    while node.array.occupied < trigger:
        tree.insert(next(filler), 0)
    before = tree.counters.expansions
    tree.insert(next(filler), 0)
    assert tree.counters.expansions == before + 1
    assert node.array.capacity == tree.config.provision_capacity(node.array.occupied)
    assert node.stats.ops == 0
    assert node.expansions == 1
    assert walk_bytes(tree) == tree.accountant.current_bytes


def test_expansion_delta_is_capacity_delta_plus_bitmap():
    tree = build_tree(list(range(200)))
    node = next(tree.iter_data_nodes())
    cfg = tree.config
    before_bytes = tree.accountant.current_bytes
    cap0 = node.array.capacity
    tree.expand(node)
    cap1 = node.array.capacity
    expected_delta = ((cap1 - cap0) * cfg.slot_bytes
                      + (cap1 + 7) // 8 - (cap0 + 7) // 8)
    assert tree.accountant.current_bytes - before_bytes == expected_delta


# ---------------------------------------------------------------- routing

def test_route_identity_partition():
    cfg = IndexConfig()
    tree = IndexTree(cfg)
    tree.integer_keys = False
    leaves = [tree._build_data_node([], lo, lo + 25.0)
              for lo in (0.0, 25.0, 50.0, 75.0)]
    root = InternalNode(991, 0.0, 100.0, [(leaf, 1) for leaf in leaves])
    tree.root = root
    leaf, corrections = tree._descend(55.0)
    assert (leaf.lo, leaf.hi) == (50.0, 75.0)
    # half-open boundary: the exact lower bound belongs to its own child
    leaf, _ = tree._descend(50.0)
    assert (leaf.lo, leaf.hi) == (50.0, 75.0)
    leaf, _ = tree._descend(0.0)
    assert (leaf.lo, leaf.hi) == (0.0, 25.0)


def test_routes_agree_with_linear_scan_oracle():
    keys = lognormal_keys(20_000, seed=2)
    tree = build_tree(keys, max_data_node_slots=512)
    leaves = list(tree.iter_data_nodes())
    bounds = [leaf.lo for leaf in leaves]
    rng = np.random.default_rng(8)
    lo, hi = tree.domain()
    probes = rng.integers(lo, hi, 10_000)
    for k in probes.tolist():
        leaf, _ = tree._descend(k)
        i = bisect_left(bounds, k)
        if i == len(bounds) or bounds[i] != k:
            i -= 1
        expect = leaves[i]
        assert leaf is expect


# ---------------------------------------------------------------- memory

def test_empty_tree_bytes_are_header_plus_minimal_node():
    tree = build_tree([])
    expected = (MIN_DATA_NODE_SLOTS * tree.config.slot_bytes
                + (MIN_DATA_NODE_SLOTS + 7) // 8 + NODE_HEADER_BYTES)
    assert tree.accountant.current_bytes == expected
    snap = tree.memory_report()
    assert snap.peak_bytes >= snap.current_bytes


def test_walk_recompute_equals_accounted_bytes_after_churn():
    keys = lognormal_keys(5000, seed=6)
    tree = build_tree(keys, max_data_node_slots=512)
    rng = random.Random(1)
    lo, hi = tree.domain()
    for i in range(3000):
        tree.insert(rng.randrange(lo, hi), i)
    assert walk_bytes(tree) == tree.accountant.current_bytes
    assert tree.memory_report().peak_bytes >= tree.accountant.current_bytes


# ---------------------------------------------------------------- copying

def test_clone_is_independent_and_identical():
    keys = list(range(0, 2000, 2))
    tree = build_tree(keys)
    copy = tree.clone()
    check_invariants(copy)
    assert copy.accountant.current_bytes == tree.accountant.current_bytes
    copy.insert(1, "only-in-copy")
    assert copy.lookup(1) == "only-in-copy"
    assert tree.lookup(1) is None


def test_cap_rejected_insert_rolls_the_record_back():
    """When maintenance cannot fit under the cap, the whole insert is
    rejected: the record comes back out and every invariant holds."""
    cfg = IndexConfig(max_data_node_slots=64, memory_cap_bytes=1 * 2**20)
    tree = IndexTree.bulk_load([float(i) for i in range(40)], cfg)

    def multiset():
        out = {}
        for n in tree.iter_data_nodes():
            for k, _ in n.array.iter_records():
                out[k] = out.get(k, 0) + 1
        return out

    rejected = 0
    for i in range(5000):
        before = multiset()
        try:
            tree.insert(20.5, i)
        except CapExceededError:
            rejected += 1
            assert multiset() == before
            check_invariants(tree)
            if rejected >= 3:
                break
    assert rejected >= 3
