"""Space attack on internal nodes: duplicate-key split cascades.

Repeatedly inserting one key concentrates identical records in a single
data node, blowing its shift cost past the repair threshold. Under the
sideways-split policy the repair halves the key space, which cannot separate
identical keys: every copy lands in one child, the child rebuilds with the
same degenerate layout, and the split cascade doubles a routing table at
each step until the memory cap ends the run. Reaching the cap is the
attack's success condition, so it is recorded rather than raised.

``run_szegp`` is the consecutive-key clustering baseline: estimate the key
range from dataset samples, then repeatedly insert fixed-size clusters of
consecutive keys at random positions. Distinct keys can be separated by a
split, so the cascade usually dies out and the budget required is orders of
magnitude larger.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import (
    CapExceededError,
    DomainError,
    DuplicateKeyError,
    IndexTree,
)
from .metrics import MetricsRecord, fill_counters

FLOAT_INCREMENT = 1e-13
INT_INCREMENT = 1


@dataclass(frozen=True)
class DupAttackConfig:
    target_key: object = None  # defaults to the midpoint of the key domain
    max_insertions: int = 2000
    interleave: int = 0

    def __post_init__(self):
        if self.max_insertions < 1:
            raise ValueError("max_insertions must be at least 1")
        if self.interleave < 0:
            raise ValueError("interleave must be non-negative")


@dataclass(frozen=True)
class SzegpConfig:
    n_probes: int = 1000
    cluster: int = 10000
    increment: object = None  # inferred from the key type when None
    budget: int = 10**6

    def __post_init__(self):
        if self.n_probes < 1 or self.cluster < 1:
            raise ValueError("n_probes and cluster must be at least 1")


def default_target_key(tree: IndexTree):
    """Midpoint of the root domain; maximises halvings before the range
    stops being divisible."""
    lo, hi = tree.domain()
    if tree.integer_keys:
        return lo + (hi - lo) // 2
    return lo + (hi - lo) / 2.0


def run_duplicate_attack(tree: IndexTree, config: DupAttackConfig,
                         legit_ops=None) -> MetricsRecord:
    """Insert the target key until the cap is exhausted or the budget ends.

    ``legit_ops`` is an optional iterator of (kind, key) pairs; ``interleave``
    of them run between consecutive adversarial insertions to blend the
    attack into normal traffic. The byte trajectory is recorded per
    insertion.
    """
    target = config.target_key
    if target is None:
        target = default_target_key(tree)
    record = MetricsRecord(attack="dup", setting="black",
                           policy=tree.config.split_policy)
    counters_before = tree.counters.clone()
    splits0 = counters_before.splits
    doublings0 = counters_before.doublings
    record.before_bytes = tree.memory_report().current_bytes
    legit_counter = 0

    start = time.perf_counter()
    inserted = 0
    for i in range(config.max_insertions):
        try:
            tree.insert(target, -(i + 1))
            inserted += 1
        except CapExceededError:
            inserted += 1
            record.cap_exceeded = True
            record.insertions_to_cap = inserted
        snap = tree.memory_report()
        record.trajectory.append(
            (inserted, snap.current_bytes, snap.peak_bytes,
             tree.counters.splits - splits0,
             tree.counters.doublings - doublings0))
        if record.cap_exceeded:
            break
        if legit_ops is not None and config.interleave:
            for _ in range(config.interleave):
                op = next(legit_ops, None)
                if op is None:
                    break
                kind, key = op
                if kind == "insert":
                    legit_counter += 1
                    try:
                        tree.insert(key, legit_counter)
                    except CapExceededError:
                        record.cap_exceeded = True
                        record.insertions_to_cap = inserted
                        break
                else:
                    tree.lookup(key)
            if record.cap_exceeded:
                break

    record.seconds = time.perf_counter() - start
    record.ops = inserted
    record.throughput = inserted / record.seconds if record.seconds else 0.0
    snap = tree.memory_report()
    record.after_bytes = snap.current_bytes
    record.peak_bytes = snap.peak_bytes
    fill_counters(record, counters_before, tree.counters)
    return record


def estimate_range(keys, n_probes: int, rng) -> tuple:
    """Black-box range estimate: the span of ``n_probes`` sampled keys."""
    keys = np.asarray(keys)
    picks = rng.integers(0, len(keys), n_probes)
    sampled = keys[picks]
    return sampled.min().item(), sampled.max().item()


def run_szegp(tree: IndexTree, dataset_keys, config: SzegpConfig,
              seed: int = 0) -> MetricsRecord:
    """Consecutive-key clustering baseline against the same tree."""
    rng = np.random.default_rng(seed)
    increment = config.increment
    if increment is None:
        increment = INT_INCREMENT if tree.integer_keys else FLOAT_INCREMENT
    est_lo, est_hi = estimate_range(dataset_keys, config.n_probes, rng)

    record = MetricsRecord(attack="szegp", setting="black",
                           policy=tree.config.split_policy,
                           budget_keys=config.budget, batch=config.cluster)
    counters_before = tree.counters.clone()
    splits0 = counters_before.splits
    doublings0 = counters_before.doublings
    record.before_bytes = tree.memory_report().current_bytes

    start = time.perf_counter()
    spent = 0
    while spent < config.budget and not record.cap_exceeded:
        k = min(config.cluster, config.budget - spent)
        if tree.integer_keys:
            position = int(rng.integers(est_lo, est_hi + 1))
        else:
            position = float(rng.uniform(est_lo, est_hi))
        first = position - (k - 1) * increment
        for j in range(k):
            key = first + j * increment
            spent += 1
            try:
                tree.insert(key, -spent)
            except DomainError:
                continue
            except CapExceededError:
                record.cap_exceeded = True
                record.insertions_to_cap = spent
                break
        snap = tree.memory_report()
        record.trajectory.append(
            (spent, snap.current_bytes, snap.peak_bytes,
             tree.counters.splits - splits0,
             tree.counters.doublings - doublings0))

    record.seconds = time.perf_counter() - start
    record.ops = spent
    record.throughput = spent / record.seconds if record.seconds else 0.0
    snap = tree.memory_report()
    record.after_bytes = snap.current_bytes
    record.peak_bytes = snap.peak_bytes
    fill_counters(record, counters_before, tree.counters)
    return record


def trigger_distance(tree: IndexTree, target_key=None,
                     max_probe: int = 100000):
    """Duplicate insertions (on a clone) until the first repair event fires.

    Demonstrates the one-insertion cliff: on a tree primed just short of
    the cascade this returns 1. Returns ``math.inf`` when the tree rejects
    duplicate keys, and None if no event fires within ``max_probe``.
    """
    probe = tree.clone()
    if target_key is None:
        target_key = default_target_key(probe)
    baseline = probe.counters.catastrophic_events
    for i in range(1, max_probe + 1):
        try:
            probe.insert(target_key, -i)
        except DuplicateKeyError:
            return math.inf
        except CapExceededError:
            return i
        if probe.counters.catastrophic_events > baseline:
            return i
    return None
