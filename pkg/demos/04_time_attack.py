"""Retrain-forcing time attack against the expansion-only (patched) index.

Patching the catastrophic path to expand instead of split closes the memory
cascade but opens a time hole: batches of consecutive keys wreck one node's
linear model, each repair retrains over the whole node, and throughput
collapses while memory stays flat. Against the stock policy the same
batches set off split cascades instead and can run into the memory cap.

Run from the repository root:  python demos/04_time_attack.py
"""

from lindex.harness import run_time_experiment

COMMON = dict(family="ycsb", count=200_000, mix="write-heavy",
              total_ops=100_000, budget_pct=10.0, batch=200,
              setting="white", seed=5, cap_bytes=32 * 2**20)

print("== patched index (expansion-only catastrophic repairs) ==")
attack, control = run_time_experiment(policy="expansion-only", **COMMON)
print(f"control: {control.throughput:,.0f} ops/s, {control.retrains} retrains")
print(f"attack : {attack.throughput:,.0f} ops/s, {attack.retrains} retrains")
print(f"-> throughput divided by {control.throughput / attack.throughput:.1f}, "
      f"memory still flat at {attack.peak_bytes / 1e6:.1f} MB peak")

print("\n== stock index (sideways-split catastrophic repairs) ==")
vanilla, vctl = run_time_experiment(policy="sideways-first", **COMMON)
if vanilla.cap_exceeded:
    print(f"the split cascade ran the index into its "
          f"{32} MB cap after {vanilla.ops:,} operations")
else:
    print(f"throughput divided by {vctl.throughput / vanilla.throughput:.1f} "
          f"({vanilla.sideways_splits + vanilla.downwards_splits} splits)")
print("\nsame batches, opposite failure mode: the patch trades the memory "
      "cascade for retrain churn")
