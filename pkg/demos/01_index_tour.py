"""A guided tour of the index: build it, query it, watch it adapt.

Run from the repository root:  python demos/01_index_tour.py
"""

import numpy as np

from lindex import IndexConfig, IndexTree, check_invariants
from lindex.workloads import DatasetSpec, gen_dataset

print("== building ==")
keys = gen_dataset(DatasetSpec("lognormal", 200_000, seed=1))
config = IndexConfig(max_data_node_slots=16384, memory_cap_bytes=2 * 2**30)
tree = IndexTree.bulk_load(keys, config)
leaves = list(tree.iter_data_nodes())
snap = tree.memory_report()
print(f"loaded {tree.key_count():,} keys into {len(leaves)} data nodes "
      f"({snap.current_bytes / 1e6:.1f} MB accounted)")

sizes = sorted(n.array.occupied for n in leaves)
print(f"node occupancy: min {sizes[0]}, median {sizes[len(sizes) // 2]}, "
      f"max {sizes[-1]}")

print("\n== lookups ==")
probe = keys[::20_000]
for k in probe.tolist():
    assert tree.lookup(k) is not None
print(f"found all {len(probe)} probed keys")
missing = tree.lookup(int(keys[-1]) - 1)
print(f"a key that was never inserted comes back: {missing}")

print("\n== inserts drive expansions ==")
rng = np.random.default_rng(2)
lo, hi = tree.domain()
fresh = rng.integers(lo, hi, 120_000)
for i, k in enumerate(fresh.tolist()):
    tree.insert(k, i)
c = tree.counters
print(f"after 120k inserts: {c.expansions} expansions, {c.splits} splits, "
      f"{c.retrains} model retrains")
print(f"memory grew to {tree.memory_report().current_bytes / 1e6:.1f} MB")

check_invariants(tree)
print("\nstructural invariants verified; tour complete")
