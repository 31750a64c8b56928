"""Time attack: batched consecutive-key insertions that force retrains.

Dense clusters of consecutive keys wreck a data node's linear fit, driving
its empirical cost over the repair threshold again and again. Against the
expansion-only (patched) index every repair is an expansion plus a model
retrain over the whole node, so throughput collapses while memory stays
bounded; against the stock sideways-split policy the same batches trigger
splits and can run the tree into its memory cap.

Planning per batch:

* white: middle key of the longest occupied run inside the biggest data
  node of the live tree;
* gray: the same rule evaluated on a substitute tree built from the key
  distribution, with adversarial batches mirrored into the substitute so
  its state tracks the attack;
* black: a uniformly random key inside a sampled estimate of the key range.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import CapExceededError, DomainError, IndexTree
from .duplicates import FLOAT_INCREMENT, INT_INCREMENT
from .metrics import MetricsRecord, fill_counters
from .workloads import OP_INSERT

SETTINGS = ("white", "gray", "black")


@dataclass(frozen=True)
class TimeAttackConfig:
    setting: str = "white"
    budget: int = 0
    batch: int = 200
    increment: object = None  # inferred from the key type when None
    seed: int = 0

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ValueError(f"unknown setting {self.setting!r}")
        if self.batch < 1:
            raise ValueError("batch must be at least 1")
        if self.budget < 0:
            raise ValueError("budget must be non-negative")


def plan_white_batch(tree: IndexTree):
    """Middle key of the longest occupied run in the biggest data node."""
    best = None
    best_occ = -1
    for node in tree.iter_data_nodes():
        if node.array.occupied > best_occ:
            best, best_occ = node, node.array.occupied
    if best is None or best_occ <= 0:
        raise ValueError("cannot plan against an empty tree")
    start, length = best.array.longest_run()
    return best.array.slot_keys[start + length // 2]


def plan_gray_batch(substitute: IndexTree):
    """White-box rule evaluated on the attacker's substitute tree."""
    return plan_white_batch(substitute)


def plan_black_batch(key_range, rng, integer_keys: bool):
    """Uniform key in the estimated range; deterministic per rng state."""
    lo, hi = key_range
    if lo == hi:
        return lo
    if integer_keys:
        return int(rng.integers(lo, hi + 1))
    return float(rng.uniform(lo, hi))


def gen_batch_keys(start, count: int, increment, integer_keys: bool):
    """``count`` strictly increasing keys stepping by ``increment``.

    Float steps smaller than the local grid are widened to the next
    representable value so the batch never degenerates into duplicates.
    """
    if integer_keys:
        return [start + j * increment for j in range(count)]
    keys = []
    value = float(start)
    for j in range(count):
        if j:
            nxt = value + increment
            if nxt <= value:
                nxt = np.nextafter(value, np.inf)
            value = nxt
        keys.append(value)
    return keys


def batch_offsets(total_ops: int, n_batches: int):
    """Evenly spaced positions in the operation stream, one per batch."""
    if n_batches <= 0:
        return []
    return [(i * total_ops) // n_batches for i in range(n_batches)]


def run_time_attack(tree: IndexTree, kinds, op_keys,
                    config: TimeAttackConfig, substitute: IndexTree = None,
                    key_range=None) -> MetricsRecord:
    """Drive the workload with adversarial batches interleaved evenly.

    Wall-clock covers executed operations only; per-batch planning runs
    off the clock. A memory-cap hit ends the run early and is recorded.
    """
    if config.setting == "gray" and config.budget and substitute is None:
        raise ValueError("gray setting needs a substitute tree")
    if config.setting == "black" and config.budget and key_range is None:
        raise ValueError("black setting needs an estimated key range")
    increment = config.increment
    if increment is None:
        increment = INT_INCREMENT if tree.integer_keys else FLOAT_INCREMENT
    rng = np.random.default_rng(config.seed)

    n_batches = config.budget // config.batch
    offsets = batch_offsets(len(kinds), n_batches)
    next_batch = 0

    record = MetricsRecord(attack="time", setting=config.setting,
                           policy=tree.config.split_policy,
                           budget_keys=n_batches * config.batch,
                           batch=config.batch, seed=config.seed)
    counters_before = tree.counters.clone()
    record.before_bytes = tree.memory_report().current_bytes

    lo, hi = tree.domain()
    elapsed = 0.0
    executed = 0
    adversarial = 0
    payload = 0
    capped = False

    for i in range(len(kinds)):
        while (next_batch < len(offsets) and offsets[next_batch] == i
               and not capped):
            # planning happens off the measured clock
            if config.setting == "white":
                start_key = plan_white_batch(tree)
            elif config.setting == "gray":
                start_key = plan_gray_batch(substitute)
            else:
                start_key = plan_black_batch(key_range, rng,
                                             tree.integer_keys)
            keys = gen_batch_keys(start_key, config.batch, increment,
                                  tree.integer_keys)
            next_batch += 1
            t0 = time.perf_counter()
            for key in keys:
                adversarial += 1
                try:
                    tree.insert(key, -adversarial)
                except DomainError:
                    continue
                except CapExceededError:
                    capped = True
                    break
                executed += 1
            elapsed += time.perf_counter() - t0
            if config.setting == "gray" and not capped:
                # keep the attacker's local model in step with its attack
                for key in keys:
                    try:
                        substitute.insert(key, -adversarial)
                    except (DomainError, CapExceededError):
                        break
        if capped:
            break
        kind = kinds[i]
        key = op_keys[i].item()
        t0 = time.perf_counter()
        if kind == OP_INSERT:
            payload += 1
            if lo <= key < hi:
                try:
                    tree.insert(key, payload)
                except CapExceededError:
                    capped = True
        else:
            tree.lookup(key)
        elapsed += time.perf_counter() - t0
        if capped:
            break
        executed += 1

    record.seconds = elapsed
    record.ops = executed
    record.throughput = executed / elapsed if elapsed > 0 else 0.0
    record.cap_exceeded = capped
    legit_total = len(kinds)
    legit_inserts = int(np.count_nonzero(kinds == OP_INSERT))
    a = record.budget_keys
    if a + legit_total:
        record.budget_pct = 100.0 * a / (a + legit_total)
    if a + legit_inserts:
        record.budget_pct_inserts = 100.0 * a / (a + legit_inserts)
    snap = tree.memory_report()
    record.after_bytes = snap.current_bytes
    record.peak_bytes = snap.peak_bytes
    fill_counters(record, counters_before, tree.counters)
    return record
