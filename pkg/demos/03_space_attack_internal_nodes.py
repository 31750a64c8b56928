"""Duplicate-key split cascade: a few hundred insertions to the memory cap.

Splits halve the key space, so identical keys can never be separated: a
node stuffed with copies of one key fails its cost check, splits, rebuilds
just as badly in one child, and splits again. Every round doubles a routing
table. This demo runs the attack against a capped index and prints the
byte trajectory, then shows the one-insertion cliff.

Run from the repository root:  python demos/03_space_attack_internal_nodes.py
"""

from lindex import IndexTree, IndexConfig
from lindex.duplicates import (
    DupAttackConfig,
    default_target_key,
    run_duplicate_attack,
    trigger_distance,
)
from lindex.workloads import DatasetSpec, gen_dataset

CAP = 256 * 2**20

keys = gen_dataset(DatasetSpec("lognormal", 200_000, seed=4))
config = IndexConfig(max_data_node_slots=16384, memory_cap_bytes=CAP)
tree = IndexTree.bulk_load(keys, config)
base = tree.memory_report().current_bytes
print(f"victim: {tree.key_count():,} keys, {base / 1e6:.1f} MB accounted, "
      f"cap {CAP / 1e6:.0f} MB")

print("\n== the attack ==")
record = run_duplicate_attack(tree, DupAttackConfig(max_insertions=2000))
print(f"cap exceeded after {record.insertions_to_cap} duplicate insertions")
print(f"{record.doublings} routing-table doublings, "
      f"{record.sideways_splits} sideways / {record.downwards_splits} "
      f"downwards splits")
print("trajectory (insertions -> accounted MB):")
for n, current, _, _, doublings in record.trajectory[:: max(1, len(record.trajectory) // 8)]:
    print(f"  {n:5d}  {current / 1e6:9.1f} MB   ({doublings} doublings)")
n, current, _, _, doublings = record.trajectory[-1]
print(f"  {n:5d}  {current / 1e6:9.1f} MB   ({doublings} doublings)  <- cap")

print("\n== the cliff ==")
fresh = IndexTree.bulk_load(keys, config)
d = trigger_distance(fresh)
print(f"a fresh tree is {d} duplicate insertions from the cascade")
target = default_target_key(fresh)
for i in range(d - 1):
    fresh.insert(target, i)
print(f"after priming with {d - 1}, trigger_distance is now "
      f"{trigger_distance(fresh)}: one more insertion exhausts the cap, "
      f"whatever the cap is")
