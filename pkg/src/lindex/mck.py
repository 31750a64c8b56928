"""Space attack on data nodes: knapsack-planned expansion triggering.

Every data node over-provisions: crossing the upper density limit re-sizes
it to occupied / lower_density, so pushing a node over the edge converts a
few insertions into a large block of freshly allocated empty slots. Given a
key budget, choosing which nodes to push (and how many consecutive
expansions to force on each) is a Multiple-Choice Knapsack: one scenario per
node must be picked, scenario (E, k, f) meaning E forced expansions costing
k keys and freeing f bytes, maximising total f subject to total k within
budget.

The exact solver is a dynamic program over the key budget, one class per
node, with a best-incumbent fallback when the time limit runs out. The
greedy baseline processes nodes in descending value order and stalls as soon
as the next node is unaffordable, which is exactly the failure mode the
knapsack formulation avoids.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import CapExceededError, DomainError, IndexConfig, IndexTree
from .metrics import MetricsRecord, fill_counters

DEFAULT_E_VALUES = (1, 2, 4)
DEFAULT_TIME_LIMIT = 100.0


class NodeSnapshot(NamedTuple):
    node_id: int
    occupied: int
    capacity: int
    lo: float
    hi: float


class Scenario(NamedTuple):
    node_id: int
    expansions: int
    keys_needed: int
    bytes_freed: int


@dataclass
class ScenarioTable:
    """Per-node scenario lists; the first entry of each list is always the
    do-nothing scenario (E=0, zero keys, zero freed bytes)."""

    scenarios: list
    snapshots: list

    def node_ids(self):
        return [snap.node_id for snap in self.snapshots]


@dataclass
class AttackPlan:
    """One chosen scenario per node; ``chosen`` filters the active ones."""

    scenarios: list
    total_keys: int
    predicted_freed_bytes: int
    proven_optimal: bool = True
    solve_seconds: float = 0.0

    def chosen(self):
        return [s for s in self.scenarios if s.expansions > 0]


def snapshot_nodes(tree: IndexTree) -> list:
    return [NodeSnapshot(n.node_id, n.array.occupied, n.array.capacity,
                         n.lo, n.hi)
            for n in tree.iter_data_nodes()]


def scenario_cost(occupied: int, capacity: int, expansions: int,
                  config: IndexConfig):
    """(keys required, bytes freed) to force ``expansions`` consecutive
    expansions on a node in the given state.

    Each trigger needs enough keys to pass the upper density limit by one;
    the node then re-provisions at the lower limit and the simulation
    continues from there. Freed bytes are the empty slots left at the end.
    """
    if expansions == 0:
        return 0, 0
    occ, cap = occupied, capacity
    keys_total = 0
    for _ in range(expansions):
        need = config.occupancy_trigger(cap) - occ + 1
        if need < 1:
            need = 1
        keys_total += need
        occ += need
        cap = config.provision_capacity(occ)
    return keys_total, (cap - occ) * config.slot_bytes


def build_scenario_table(snapshots, config: IndexConfig,
                         e_values=DEFAULT_E_VALUES) -> ScenarioTable:
    scenarios = []
    for snap in snapshots:
        row = [Scenario(snap.node_id, 0, 0, 0)]
        for e in e_values:
            k, f = scenario_cost(snap.occupied, snap.capacity, e, config)
            row.append(Scenario(snap.node_id, e, k, f))
        scenarios.append(row)
    return ScenarioTable(scenarios=scenarios, snapshots=list(snapshots))


def solve_mck(table: ScenarioTable, budget: int,
              time_limit_secs: float = DEFAULT_TIME_LIMIT) -> AttackPlan:
    """Exact budget-indexed dynamic program over the scenario classes.

    Optimal whenever it completes inside the time limit; otherwise the
    classes processed so far keep their DP assignment and the rest fall back
    to the do-nothing scenario, and the plan is flagged not proven optimal.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    start = time.perf_counter()
    n_classes = len(table.scenarios)
    dp = np.zeros(budget + 1, dtype=np.int64)
    choice = np.zeros((n_classes, budget + 1), dtype=np.uint8)
    proven = True
    processed = n_classes
    for ci, row in enumerate(table.scenarios):
        if time.perf_counter() - start > time_limit_secs:
            proven = False
            processed = ci
            break
        new_dp = dp.copy()
        for si, scenario in enumerate(row):
            k, f = scenario.keys_needed, scenario.bytes_freed
            if si == 0 or k > budget or f == 0:
                continue
            candidate = dp[: budget + 1 - k] + f
            segment = new_dp[k:]
            better = candidate > segment
            if better.any():
                segment[better] = candidate[better]
                choice[ci, k:][better] = si
        dp = new_dp

    best_budget = int(np.flatnonzero(dp == dp.max())[0])
    picks = []
    b = best_budget
    for ci in range(processed - 1, -1, -1):
        si = int(choice[ci, b])
        scenario = table.scenarios[ci][si]
        picks.append(scenario)
        b -= scenario.keys_needed
    picks.reverse()
    for ci in range(processed, n_classes):
        picks.append(table.scenarios[ci][0])

    total_keys = sum(s.keys_needed for s in picks)
    freed = sum(s.bytes_freed for s in picks)
    return AttackPlan(scenarios=picks, total_keys=total_keys,
                      predicted_freed_bytes=freed, proven_optimal=proven,
                      solve_seconds=time.perf_counter() - start)


def greedy_plan(table: ScenarioTable, budget: int) -> AttackPlan:
    """Descending-value single-expansion strawman.

    Processes nodes by the value of their one-expansion scenario and stops
    at the first node the remaining budget cannot cover, so a budget below
    the most valuable node's cost frees nothing at all.
    """
    rows = {row[0].node_id: row for row in table.scenarios}
    order = sorted(table.scenarios,
                   key=lambda row: (-row[1].bytes_freed, row[0].node_id))
    picks = {}
    remaining = budget
    for row in order:
        one = row[1]
        if one.keys_needed > remaining:
            break
        picks[one.node_id] = one
        remaining -= one.keys_needed
    scenarios = [picks.get(row[0].node_id, row[0]) for row in table.scenarios]
    total_keys = sum(s.keys_needed for s in scenarios)
    freed = sum(s.bytes_freed for s in scenarios)
    return AttackPlan(scenarios=scenarios, total_keys=total_keys,
                      predicted_freed_bytes=freed, proven_optimal=False)


def generate_keys(plan: AttackPlan, snapshots, seed: int,
                  integer_keys: bool) -> np.ndarray:
    """Adversarial key sequence: for each chosen node, its key count drawn
    uniformly over that node's range, concatenated node by node."""
    rng = np.random.default_rng(seed)
    ranges = {s.node_id: (s.lo, s.hi) for s in snapshots}
    parts = []
    for scenario in plan.chosen():
        lo, hi = ranges[scenario.node_id]
        if integer_keys:
            parts.append(rng.integers(lo, hi, scenario.keys_needed,
                                      dtype=np.int64))
        else:
            parts.append(rng.uniform(lo, hi, scenario.keys_needed))
    if not parts:
        dtype = np.int64 if integer_keys else np.float64
        return np.empty(0, dtype=dtype)
    return np.concatenate(parts)


def serialize_plan(plan: AttackPlan) -> str:
    """One line per chosen node: ``node_id,E,k,f``."""
    lines = [f"{s.node_id},{s.expansions},{s.keys_needed},{s.bytes_freed}"
             for s in plan.chosen()]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_plan(text: str) -> AttackPlan:
    """Rebuild an executable plan from serialized ``node_id,E,k,f`` lines."""
    scenarios = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        node_id, e, k, f = (int(cell) for cell in line.split(","))
        scenarios.append(Scenario(node_id, e, k, f))
    return AttackPlan(scenarios=scenarios,
                      total_keys=sum(s.keys_needed for s in scenarios),
                      predicted_freed_bytes=sum(s.bytes_freed
                                                for s in scenarios),
                      proven_optimal=False)


def e_values_up_to(e_max: int):
    """The expansion-count ladder: powers of two up to ``e_max``."""
    values = []
    e = 1
    while e <= e_max:
        values.append(e)
        e <<= 1
    return tuple(values)


def run_plan(tree: IndexTree, keys) -> tuple:
    """Insert adversarial keys; returns (inserted, cap_exceeded)."""
    inserted = 0
    for i, key in enumerate(keys):
        key = key.item() if hasattr(key, "item") else key
        try:
            tree.insert(key, -(i + 1))
        except DomainError:
            continue
        except CapExceededError:
            return inserted + 1, True
        inserted += 1
    return inserted, False


def execute_whitebox(tree: IndexTree, budget: int, e_max: int = 4,
                     time_limit: float = DEFAULT_TIME_LIMIT,
                     seed: int = 0, plan: AttackPlan = None) -> tuple:
    """Plan against the live tree's own node table, then run the insertions.

    A pre-computed ``plan`` (for instance parsed from a plan file) skips the
    solve and is executed as-is against the tree's current node ranges.
    Returns (MetricsRecord, AttackPlan).
    """
    snaps = snapshot_nodes(tree)
    if plan is None:
        table = build_scenario_table(snaps, tree.config,
                                     e_values_up_to(e_max))
        plan = solve_mck(table, budget, time_limit)
    keys = generate_keys(plan, snaps, seed, tree.integer_keys)

    record = MetricsRecord(attack="mck", setting="white", seed=seed,
                           budget_keys=budget, emax=e_max,
                           policy=tree.config.split_policy)
    counters_before = tree.counters.clone()
    record.before_bytes = tree.memory_report().current_bytes
    start = time.perf_counter()
    inserted, capped = run_plan(tree, keys)
    record.seconds = time.perf_counter() - start
    record.ops = inserted
    record.throughput = inserted / record.seconds if record.seconds else 0.0
    record.after_bytes = tree.memory_report().current_bytes
    record.peak_bytes = tree.memory_report().peak_bytes
    record.cap_exceeded = capped
    record.predicted_freed_bytes = plan.predicted_freed_bytes
    fill_counters(record, counters_before, tree.counters)
    return record, plan


def execute_graybox(tree: IndexTree, dataset_keys, budget: int,
                    e_max: int = 4, bandwidth: float = 1.0,
                    time_limit: float = DEFAULT_TIME_LIMIT, seed: int = 0,
                    substitute_builder=None) -> tuple:
    """Plan against a substitute built from the key distribution only.

    The substitute is constructed from kernel-density samples of the
    legitimate key set (never from the target's internals); the resulting
    key sequence is then replayed against the real tree. Returns
    (MetricsRecord, AttackPlan, substitute).
    """
    from .kde import build_substitute, fit_kde

    model = fit_kde(dataset_keys, bandwidth)
    if substitute_builder is None:
        substitute = build_substitute(model, len(dataset_keys), tree.config,
                                      seed)
    else:
        substitute = substitute_builder(model, len(dataset_keys),
                                        tree.config, seed)
    snaps = snapshot_nodes(substitute)
    table = build_scenario_table(snaps, substitute.config,
                                 e_values_up_to(e_max))
    plan = solve_mck(table, budget, time_limit)
    keys = generate_keys(plan, snaps, seed, substitute.integer_keys)

    record = MetricsRecord(attack="mck", setting="gray", seed=seed,
                           budget_keys=budget, emax=e_max,
                           bandwidth=bandwidth,
                           policy=tree.config.split_policy)
    counters_before = tree.counters.clone()
    record.before_bytes = tree.memory_report().current_bytes
    start = time.perf_counter()
    inserted, capped = run_plan(tree, keys)
    record.seconds = time.perf_counter() - start
    record.ops = inserted
    record.throughput = inserted / record.seconds if record.seconds else 0.0
    record.after_bytes = tree.memory_report().current_bytes
    record.peak_bytes = tree.memory_report().peak_bytes
    record.cap_exceeded = capped
    record.predicted_freed_bytes = plan.predicted_freed_bytes
    fill_counters(record, counters_before, tree.counters)
    return record, plan, substitute
