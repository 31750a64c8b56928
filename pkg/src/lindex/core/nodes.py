"""Data and internal node types.

Internal nodes keep their child table run-length encoded: ``runs`` is a list
of ``[child, count]`` pairs whose counts sum to ``table_len``. Every count is
a power of two and every run starts at a virtual offset divisible by its
count, which is exactly the redundant-reference layout a flat table would
have. The accountant charges for the flat table (``table_len * ref_bytes``)
regardless of the compact representation.
"""

from __future__ import annotations

from bisect import bisect_right

from .gapped import GappedArray
from .model import LinearModel, fit_routing_model


class CostStats:
    """Empirical work counters for one data node.

    Counters start at zero when the node object is created and accumulate
    from then on, including the work done while the node's own records are
    first placed. A retrain (expansion) zeroes them again.
    """

    __slots__ = ("ops", "search_iters", "shifts")

    def __init__(self):
        self.ops = 0
        self.search_iters = 0
        self.shifts = 0

    def add(self, iters: int, shifts: int):
        self.ops += 1
        self.search_iters += iters
        self.shifts += shifts

    def reset(self):
        self.ops = 0
        self.search_iters = 0
        self.shifts = 0

    def clone(self) -> "CostStats":
        s = CostStats.__new__(CostStats)
        s.ops = self.ops
        s.search_iters = self.search_iters
        s.shifts = self.shifts
        return s


class DataNode:
    __slots__ = ("node_id", "lo", "hi", "model", "array", "stats",
                 "expected_cost", "expansions", "parent")

    def __init__(self, node_id: int, lo, hi, model: LinearModel,
                 array: GappedArray):
        self.node_id = node_id
        self.lo = lo
        self.hi = hi
        self.model = model
        self.array = array
        self.stats = CostStats()
        self.expected_cost = 0.0
        self.expansions = 0
        self.parent = None

    @property
    def occupied(self) -> int:
        return self.array.occupied

    @property
    def capacity(self) -> int:
        return self.array.capacity

    def __repr__(self):
        return (f"DataNode(id={self.node_id}, range=[{self.lo}, {self.hi}), "
                f"occ={self.occupied}/{self.capacity})")


class InternalNode:
    __slots__ = ("node_id", "lo", "hi", "model", "runs", "starts",
                 "table_len", "parent")

    def __init__(self, node_id: int, lo, hi, runs):
        """``runs`` is a list of (child, count) pairs in key order; counts
        must be powers of two summing to a power of two, with each run
        starting at an offset divisible by its count."""
        self.node_id = node_id
        self.lo = lo
        self.hi = hi
        self.runs = [[child, count] for child, count in runs]
        self.table_len = sum(count for _, count in runs)
        self.parent = None
        self.model = fit_routing_model(lo, hi, self.table_len)
        self._rebuild_starts()
        for child, _ in runs:
            child.parent = self

    def _rebuild_starts(self):
        starts = []
        off = 0
        for _, count in self.runs:
            starts.append(off)
            off += count
        self.starts = starts

    def child_at_slot(self, slot: int):
        """Child whose run covers virtual table slot ``slot``."""
        i = bisect_right(self.starts, slot) - 1
        return self.runs[i][0], i

    def route(self, key):
        """Child responsible for ``key``, plus local-scan correction steps.

        The model's raw prediction picks a table slot; when the slot's child
        does not cover the key (model round-off near boundaries), a scan
        over neighbouring runs corrects it, each step counted as search
        work.
        """
        slot = self.model.predict_slot(key, self.table_len)
        child, ri = self.child_at_slot(slot)
        corrections = 0
        while not (child.lo <= key < child.hi):
            ri = ri - 1 if key < child.lo else ri + 1
            child = self.runs[ri][0]
            corrections += 1
        return child, corrections

    def run_index_of(self, child) -> int:
        for i, (c, _) in enumerate(self.runs):
            if c is child:
                return i
        raise KeyError(f"node {child!r} is not a child of {self!r}")

    def double_table(self):
        """Double the virtual table: every reference occupies twice the slots."""
        for run in self.runs:
            run[1] *= 2
        self.table_len *= 2
        self.model = LinearModel(self.model.slope * 2, self.model.intercept * 2)
        self._rebuild_starts()

    def replace_run(self, index: int, replacements):
        """Swap one run for one or more runs covering the same slot span."""
        self.runs[index : index + 1] = [list(r) for r in replacements]
        self._rebuild_starts()
        for child, _ in replacements:
            child.parent = self

    def children(self):
        return [c for c, _ in self.runs]

    def __repr__(self):
        return (f"InternalNode(id={self.node_id}, range=[{self.lo}, {self.hi}), "
                f"table_len={self.table_len}, children={len(self.runs)})")
