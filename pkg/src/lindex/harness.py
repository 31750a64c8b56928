"""Experiment drivers: build pipelines, paired attack/control runs, seeds.

Every run takes one top-level seed; dataset generation, tree construction,
workload shuffling, and attack randomness each derive a named sub-seed from
it, so a metrics row can be reproduced from its own parameter echo.

Desk-scale defaults: data nodes cap out at 16384 slots (so a million-key
tree spreads over enough nodes for the planners to work with), and the
memory cap defaults to 2 GB of accounted bytes. Space-attack trees are
seeded by bulk-loading 30% of the keys and inserting the rest: several
fill-and-expand cycles plus occasional splits leave node densities spread
across the allowed band, the state a long-lived insert-driven instance sits
in. Time-attack trees are bulk-loaded whole, matching how that workload is
normally staged.
"""

from __future__ import annotations

import math

import numpy as np

from .core import (
    EXPANSION_ONLY,
    SIDEWAYS_FIRST,
    IndexConfig,
    IndexTree,
)
from .duplicates import (
    DupAttackConfig,
    SzegpConfig,
    estimate_range,
    run_duplicate_attack,
    run_szegp,
)
from .kde import fit_kde, sample
from .metrics import MetricsRecord
from .mck import execute_graybox, execute_whitebox
from .timing import TimeAttackConfig, run_time_attack
from .workloads import (
    MIX_FRACTIONS,
    DatasetSpec,
    WorkloadSpec,
    gen_dataset,
    gen_workload,
)

DEFAULT_MAX_NODE_SLOTS = 16384
DEFAULT_CAP_BYTES = 2 * 2**30
DEFAULT_BULK_FRACTION = 0.3

_SEED_TAGS = {"dataset": 1, "build": 2, "workload": 3, "attack": 4, "kde": 5}


def sub_seed(seed: int, tag: str) -> int:
    """Stable named sub-seed derived from the run seed."""
    ss = np.random.SeedSequence((seed, _SEED_TAGS[tag]))
    return int(ss.generate_state(1)[0])


def make_config(policy: str = SIDEWAYS_FIRST,
                cap_bytes: int = DEFAULT_CAP_BYTES,
                max_node_slots: int = DEFAULT_MAX_NODE_SLOTS,
                **overrides) -> IndexConfig:
    return IndexConfig(split_policy=policy, memory_cap_bytes=cap_bytes,
                       max_data_node_slots=max_node_slots, **overrides)


def space_budget_keys(pct: float, legit: int) -> int:
    """Adversarial key count a with 100 * a / (a + legit) == pct."""
    if pct <= 0:
        return 0
    return round(pct * legit / (100.0 - pct))


def time_budget_keys(pct: float, legit_ops: int) -> int:
    """Adversarial key count a with 100 * a / (a + legit_ops) == pct."""
    if pct <= 0:
        return 0
    return round(pct * legit_ops / (100.0 - pct))


def build_tree(keys, config: IndexConfig, bulk_fraction: float,
               seed: int) -> IndexTree:
    """Bulk-load a fraction of the keys, insert the rest in random order.

    The extreme keys always ride in the bulk sample so the root domain
    spans the whole dataset and no later insert lands outside it.
    """
    keys = np.asarray(keys)
    n = len(keys)
    rng = np.random.default_rng(sub_seed(seed, "build"))
    perm = rng.permutation(n)
    n_bulk = min(n, max(2, math.ceil(bulk_fraction * n)))
    pos = {int(p): i for i, p in enumerate(perm)}
    for extreme in (int(np.argmin(keys)), int(np.argmax(keys))):
        at = pos[extreme]
        if at >= n_bulk:
            swap_slot = at % n_bulk
            displaced = perm[swap_slot]
            perm[swap_slot], perm[at] = perm[at], displaced
            pos[int(displaced)] = at
            pos[extreme] = swap_slot
    bulk_keys = np.sort(keys[perm[:n_bulk]])
    tree = IndexTree.bulk_load(bulk_keys, config)
    payload = n_bulk
    for idx in perm[n_bulk:]:
        tree.insert(keys[idx].item(), payload)
        payload += 1
    return tree


def dataset_for(family: str, count: int, seed: int,
                params=None) -> np.ndarray:
    spec = DatasetSpec(family, count, seed=sub_seed(seed, "dataset"),
                       params=params or {})
    return gen_dataset(spec)


def _base_record(record: MetricsRecord, *, run_id, dataset, seed,
                 budget_pct=None) -> MetricsRecord:
    record.run_id = run_id
    record.dataset = dataset
    record.seed = seed
    if budget_pct is not None and record.budget_pct is None:
        record.budget_pct = budget_pct
    return record


def control_snapshot_record(tree: IndexTree, *, run_id, dataset, seed,
                            policy) -> MetricsRecord:
    snap = tree.memory_report()
    record = MetricsRecord(attack="control", setting="none", policy=policy,
                           before_bytes=snap.current_bytes,
                           after_bytes=snap.current_bytes,
                           peak_bytes=snap.peak_bytes)
    return _base_record(record, run_id=run_id, dataset=dataset, seed=seed,
                        budget_pct=0.0)


# --------------------------------------------------------------------- #
# experiment drivers
# --------------------------------------------------------------------- #

def run_mck_experiment(*, family: str, count: int, budget_pct: float,
                       e_max: int = 2, setting: str = "white",
                       bandwidth: float = 1.0, seed: int = 0,
                       policy: str = SIDEWAYS_FIRST,
                       cap_bytes: int = DEFAULT_CAP_BYTES,
                       max_node_slots: int = DEFAULT_MAX_NODE_SLOTS,
                       bulk_fraction: float = DEFAULT_BULK_FRACTION,
                       time_limit: float = 100.0, plan=None):
    """Paired data-node space attack and control; returns (attack, control).

    The control row is the same built tree left alone, so the
    before/after byte gap in the attack row is attributable to the
    adversarial insertions only.
    """
    keys = dataset_for(family, count, seed)
    config = make_config(policy, cap_bytes, max_node_slots)
    tree = build_tree(keys, config, bulk_fraction, seed)
    control = control_snapshot_record(
        tree, run_id=f"mck-{setting}-control", dataset=family, seed=seed,
        policy=policy)

    budget = space_budget_keys(budget_pct, count)
    attack_seed = sub_seed(seed, "attack")
    if setting == "white":
        record, plan = execute_whitebox(tree, budget, e_max, time_limit,
                                        attack_seed, plan=plan)
    elif setting == "gray":
        def mirrored_builder(model, l, cfg, builder_seed):
            return build_tree(sample(model, l, builder_seed), cfg,
                              bulk_fraction, builder_seed)

        record, plan, _ = execute_graybox(
            tree, keys, budget, e_max, bandwidth, time_limit, attack_seed,
            substitute_builder=mirrored_builder)
    else:
        raise ValueError(f"unsupported setting {setting!r} for the mck attack")
    _base_record(record, run_id=f"mck-{setting}", dataset=family, seed=seed,
                 budget_pct=budget_pct)
    return record, control, plan


def run_dup_experiment(*, family: str, count: int, seed: int = 0,
                       cap_bytes: int = 1 * 2**30,
                       max_insertions: int = 2000, interleave: int = 0,
                       policy: str = SIDEWAYS_FIRST,
                       max_node_slots: int = DEFAULT_MAX_NODE_SLOTS,
                       bulk_fraction: float = DEFAULT_BULK_FRACTION,
                       target_key=None) -> MetricsRecord:
    keys = dataset_for(family, count, seed)
    config = make_config(policy, cap_bytes, max_node_slots)
    tree = build_tree(keys, config, bulk_fraction, seed)
    record = run_duplicate_attack(
        tree, DupAttackConfig(target_key=target_key,
                              max_insertions=max_insertions,
                              interleave=interleave))
    return _base_record(record, run_id="dup", dataset=family, seed=seed)


def run_szegp_experiment(*, family: str, count: int, seed: int = 0,
                         cap_bytes: int = 1 * 2**30,
                         budget: int = 10**6, n_probes: int = 1000,
                         cluster: int = 10000,
                         policy: str = SIDEWAYS_FIRST,
                         max_node_slots: int = DEFAULT_MAX_NODE_SLOTS,
                         bulk_fraction: float = DEFAULT_BULK_FRACTION
                         ) -> MetricsRecord:
    keys = dataset_for(family, count, seed)
    config = make_config(policy, cap_bytes, max_node_slots)
    tree = build_tree(keys, config, bulk_fraction, seed)
    record = run_szegp(tree, keys,
                       SzegpConfig(n_probes=n_probes, cluster=cluster,
                                   budget=budget),
                       seed=sub_seed(seed, "attack"))
    return _base_record(record, run_id="szegp", dataset=family, seed=seed)


def run_time_experiment(*, family: str, count: int, mix: str = "write-heavy",
                        total_ops: int = 100000, budget_pct: float = 10.0,
                        batch: int = 200, setting: str = "white",
                        policy: str = EXPANSION_ONLY, seed: int = 0,
                        cap_bytes: int = DEFAULT_CAP_BYTES,
                        max_node_slots: int = DEFAULT_MAX_NODE_SLOTS,
                        bandwidth: float = 1.0, n_probes: int = 1000,
                        with_control: bool = True):
    """Paired time attack and control on bulk-loaded trees.

    Both runs share the dataset, the initial tree, and the legitimate
    operation stream; only the adversarial batches differ. Returns
    (attack_record, control_record or None).
    """
    insert_fraction = MIX_FRACTIONS[mix]
    n_inserts = round(insert_fraction * total_ops)
    keys = dataset_for(family, count + n_inserts, seed)
    rng = np.random.default_rng(sub_seed(seed, "build"))
    perm = rng.permutation(len(keys))
    initial = np.sort(keys[perm[:count]])
    fresh_pool = keys[perm[count:]]

    config = make_config(policy, cap_bytes, max_node_slots)
    base_tree = IndexTree.bulk_load(initial, config)
    workload = WorkloadSpec(total_ops, insert_fraction,
                            seed=sub_seed(seed, "workload"))
    kinds, op_keys = gen_workload(workload, initial, fresh_pool)

    budget = time_budget_keys(budget_pct, total_ops)
    budget = (budget // batch) * batch
    if budget_pct > 0 and budget == 0:
        budget = batch

    control = None
    if with_control:
        control_tree = base_tree.clone()
        control = run_time_attack(
            control_tree, kinds, op_keys,
            TimeAttackConfig(setting=setting, budget=0, batch=batch,
                             seed=sub_seed(seed, "attack")))
        _base_record(control, run_id=f"time-{setting}-control",
                     dataset=family, seed=seed)
        control.attack = "control"

    substitute = None
    key_range = None
    if setting == "gray":
        model = fit_kde(initial, bandwidth)
        substitute = IndexTree.bulk_load(
            sample(model, len(initial), sub_seed(seed, "kde")), config)
    elif setting == "black":
        key_range = estimate_range(
            initial, n_probes, np.random.default_rng(sub_seed(seed, "kde")))

    attack = run_time_attack(
        base_tree, kinds, op_keys,
        TimeAttackConfig(setting=setting, budget=budget, batch=batch,
                         seed=sub_seed(seed, "attack")),
        substitute=substitute, key_range=key_range)
    _base_record(attack, run_id=f"time-{setting}", dataset=family, seed=seed)
    if setting == "gray":
        attack.bandwidth = bandwidth
    return attack, control


def run_control_experiment(*, family: str, count: int,
                           mix: str = "write-heavy", total_ops: int = 100000,
                           policy: str = SIDEWAYS_FIRST, seed: int = 0,
                           cap_bytes: int = DEFAULT_CAP_BYTES,
                           max_node_slots: int = DEFAULT_MAX_NODE_SLOTS
                           ) -> MetricsRecord:
    """Zero-budget pipeline: the normalisation denominator for attack rows."""
    record, _ = run_time_experiment(
        family=family, count=count, mix=mix, total_ops=total_ops,
        budget_pct=0.0, setting="white", policy=policy, seed=seed,
        cap_bytes=cap_bytes, max_node_slots=max_node_slots,
        with_control=False)
    record.run_id = "control"
    record.attack = "control"
    return record
