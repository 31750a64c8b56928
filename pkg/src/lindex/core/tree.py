"""The index tree: routing, model-based insertion, and structure adaptation.

Structure maintenance has two triggers:

* Density: a data node whose occupancy would pass the upper density limit is
  re-provisioned at the lower limit (expansion) or, if that would exceed the
  per-node slot bound, split.
* Cost: each data node freezes an expected cost when its records are placed
  (the mean exponential-search work of that placement). When the running
  empirical cost (search iterations plus record shifts per operation) exceeds
  a configured multiple of it, the node is repaired: under the
  ``sideways-first`` policy by splitting its key range in half, under
  ``expansion-only`` by an expansion plus model retrain.

Sideways splits consume the parent's redundant references; a child holding a
single reference forces the parent's table to double first, and when the
table may not double any further the node splits downwards instead, adding a
fresh two-entry internal node below. Splitting halves the *key space*, not
the record count, so a block of identical keys always lands whole in one
child; the child rebuilds with the same degenerate layout, exceeds its cost
threshold again, and the split cascade continues until the memory cap stops
it. That cascade is deliberate: it reproduces the worst-case behaviour the
attack modules measure.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .config import (
    EXPANSION_ONLY,
    CapExceededError,
    DomainError,
    DuplicateKeyError,
    IndexConfig,
    UndefinedCostError,
)
from .gapped import GappedArray
from .model import fit_data_model, mean_rank_error
from .nodes import CostStats, DataNode, InternalNode


class InvariantViolation(AssertionError):
    """Raised by check_invariants when the tree breaks a structural law."""


# --------------------------------------------------------------------- #
# cost model
# --------------------------------------------------------------------- #

def node_cost(stats: CostStats, config: IndexConfig) -> float:
    """Empirical per-operation cost of a data node."""
    if stats.ops <= 0:
        raise UndefinedCostError("node has served no operations")
    return (config.search_weight * stats.search_iters
            + config.shift_weight * stats.shifts) / stats.ops


def is_catastrophic(node: DataNode, config: IndexConfig) -> bool:
    """True when empirical cost exceeds the node's modelled cost threshold.

    Requires a minimum operation count so young nodes are not judged on a
    handful of samples; the comparison is strict.
    """
    stats = node.stats
    if stats.ops < config.catastrophic_min_ops:
        return False
    threshold = config.catastrophic_factor * max(
        node.expected_cost, config.catastrophic_eps)
    return node_cost(stats, config) > threshold


# --------------------------------------------------------------------- #
# accounting
# --------------------------------------------------------------------- #

@dataclass
class MemorySnapshot:
    current_bytes: int
    peak_bytes: int


class MemoryAccountant:
    """Exact running total of accounted index bytes, checked against the cap.

    ``charge`` applies the allocation check *before* mutating the total, so a
    rejected structural change leaves the books (and the tree) untouched.
    """

    __slots__ = ("current_bytes", "peak_bytes", "cap_bytes")

    def __init__(self, cap_bytes: int):
        self.current_bytes = 0
        self.peak_bytes = 0
        self.cap_bytes = cap_bytes

    def charge(self, delta: int):
        if delta > 0 and self.current_bytes + delta > self.cap_bytes:
            raise CapExceededError(
                f"allocation of {delta} bytes would push accounted memory to "
                f"{self.current_bytes + delta} bytes, past the cap of "
                f"{self.cap_bytes} bytes")
        self.current_bytes += delta
        if self.current_bytes > self.peak_bytes:
            self.peak_bytes = self.current_bytes

    def snapshot(self) -> MemorySnapshot:
        return MemorySnapshot(self.current_bytes, self.peak_bytes)

    def clone(self) -> "MemoryAccountant":
        a = MemoryAccountant(self.cap_bytes)
        a.current_bytes = self.current_bytes
        a.peak_bytes = self.peak_bytes
        return a


@dataclass
class Counters:
    """Global event counts.

    ``retrains`` counts data-node model fits after the initial load: one per
    expansion, two per split (each new child trains a model).
    ``doubling_log`` records each routing table's byte size right after it
    doubled, in event order.
    """

    expansions: int = 0
    sideways_splits: int = 0
    downwards_splits: int = 0
    doublings: int = 0
    retrains: int = 0
    catastrophic_events: int = 0
    resolution_floor: bool = False
    doubling_log: list = field(default_factory=list)

    @property
    def splits(self) -> int:
        return self.sideways_splits + self.downwards_splits

    def clone(self) -> "Counters":
        c = Counters(self.expansions, self.sideways_splits,
                     self.downwards_splits, self.doublings, self.retrains,
                     self.catastrophic_events, self.resolution_floor,
                     list(self.doubling_log))
        return c


# --------------------------------------------------------------------- #
# the tree
# --------------------------------------------------------------------- #

class IndexTree:
    def __init__(self, config: IndexConfig):
        self.config = config
        self.accountant = MemoryAccountant(config.memory_cap_bytes)
        self.counters = Counters()
        self.root = None
        self._next_node_id = 0
        self.integer_keys = False

    # -- construction ---------------------------------------------------- #

    @classmethod
    def bulk_load(cls, keys, config: IndexConfig = None,
                  payloads=None) -> "IndexTree":
        """Build a tree from sorted keys.

        The key domain is halved recursively, adding a two-way internal node
        per cut, until each leaf holds at most ``upper_density *
        max_data_node_slots`` records; leaves are provisioned at the lower
        density limit. Duplicates are permitted. An empty key set yields a
        single empty data node over the domain [0.0, 1.0).
        """
        config = config or IndexConfig()
        if hasattr(keys, "tolist"):
            keys = keys.tolist()
        else:
            keys = list(keys)
        n = len(keys)
        if payloads is None:
            payloads = list(range(n))
        elif hasattr(payloads, "tolist"):
            payloads = payloads.tolist()
        if len(payloads) != n:
            raise ValueError("payloads must match keys in length")
        if any(keys[i] > keys[i + 1] for i in range(n - 1)):
            raise ValueError("bulk_load requires keys sorted ascending")

        tree = cls(config)
        # cheapest possible footprint check before building anything
        floor_bytes = n * config.slot_bytes + n // 8
        if floor_bytes > config.memory_cap_bytes:
            raise CapExceededError(
                f"{n} records need at least {floor_bytes} bytes, past the "
                f"cap of {config.memory_cap_bytes} bytes")

        if n == 0:
            tree.integer_keys = False
            tree.root = tree._build_data_node([], 0.0, 1.0, fresh_stats=True)
        else:
            tree.integer_keys = isinstance(keys[0], int)
            one = 1 if tree.integer_keys else 1.0
            lo, hi = keys[0] - one, keys[-1] + one
            leaf_max = int(config.upper_density * config.max_data_node_slots)
            np_keys = np.asarray(keys,
                                 dtype=np.int64 if tree.integer_keys
                                 else np.float64)
            tree.root = tree._bulk(keys, payloads, np_keys, 0, n, lo, hi,
                                   leaf_max)
        tree.accountant.charge(tree._walk_bytes())
        return tree

    # an internal node built by bulk loading gathers up to this many halving
    # levels into one table; leaves cut at shallower levels hold redundant
    # aligned references, exactly as post-split tables do
    _BULK_FANOUT_BITS = 8

    def _leaf_ready(self, keys, np_keys, i0, i1) -> bool:
        n = i1 - i0
        if n == 0:
            return True
        if keys[i0] == keys[i1 - 1]:
            return True
        leaf_max = int(self.config.upper_density
                       * self.config.max_data_node_slots)
        return (n <= leaf_max
                and (n <= 64
                     or mean_rank_error(np_keys[i0:i1])
                     <= self.config.bulk_fit_tolerance))

    def _bulk_leaf(self, keys, payloads, i0, i1, lo, hi) -> DataNode:
        records = list(zip(keys[i0:i1], payloads[i0:i1]))
        return self._build_data_node(records, lo, hi, fresh_stats=True)

    def _bulk(self, keys, payloads, np_keys, i0, i1, lo, hi, leaf_max):
        if self._leaf_ready(keys, np_keys, i0, i1):
            return self._bulk_leaf(keys, payloads, i0, i1, lo, hi)
        parts = []

        def gather(a, b, plo, phi, depth):
            if self._leaf_ready(keys, np_keys, a, b):
                parts.append((self._bulk_leaf(keys, payloads, a, b, plo, phi),
                              depth))
                return
            mid = self._midpoint(plo, phi)
            if mid is None:
                parts.append((self._bulk_leaf(keys, payloads, a, b, plo, phi),
                              depth))
                return
            if depth == self._BULK_FANOUT_BITS:
                parts.append((self._bulk(keys, payloads, np_keys, a, b,
                                         plo, phi, leaf_max), depth))
                return
            cut = bisect_left(keys, mid, a, b)
            gather(a, cut, plo, mid, depth + 1)
            gather(cut, b, mid, phi, depth + 1)

        gather(i0, i1, lo, hi, 0)
        dmax = max(depth for _, depth in parts)
        runs = [(child, 1 << (dmax - depth)) for child, depth in parts]
        return InternalNode(self._alloc_id(), lo, hi, runs)

    def _alloc_id(self) -> int:
        nid = self._next_node_id
        self._next_node_id += 1
        return nid

    def _midpoint(self, lo, hi):
        """Interior halving point, or None when the range cannot split."""
        if self.integer_keys:
            mid = lo + (hi - lo) // 2
        else:
            mid = lo + (hi - lo) / 2.0
        if mid <= lo or mid >= hi:
            return None
        return mid

    def _build_data_node(self, records, lo, hi, capacity=None,
                         fresh_stats=False) -> DataNode:
        """Create a data node by model-based placement of sorted records.

        The placement pass doubles as the node's cost simulation: its mean
        search work becomes the frozen expected cost. Deliberate training
        points (bulk loading, like expansion) pass ``fresh_stats`` to zero
        the counters afterwards; split repairs leave them in place, since
        that placement work was forced by live traffic and keeps counting
        against the node.
        """
        n = len(records)
        cap = capacity if capacity is not None else self.config.provision_capacity(n)
        model = fit_data_model([k for k, _ in records], cap)
        node = DataNode(self._alloc_id(), lo, hi, model, GappedArray(cap))
        array = node.array
        stats = node.stats
        for key, val in records:
            _, shifts, iters = array.insert(key, val, model.predict_slot(key, cap))
            stats.add(iters, shifts)
        if n:
            node.expected_cost = (self.config.search_weight
                                  * stats.search_iters / n)
        if fresh_stats:
            stats.reset()
        return node

    # -- queries ----------------------------------------------------------- #

    def lookup(self, key):
        """Payload of some record with this key, or None."""
        root = self.root
        if not (root.lo <= key < root.hi):
            return None
        leaf, corrections = self._descend(key)
        found, payload, iters = leaf.array.find(
            key, leaf.model.predict_slot(key, leaf.array.capacity))
        leaf.stats.add(iters + corrections, 0)
        if iters + corrections >= 1:
            try:
                self._maybe_catastrophic(leaf)
            except CapExceededError:
                pass  # repairs are best-effort on reads; lookups never fail
        return payload if found else None

    def insert(self, key, payload):
        """Insert a record, running maintenance when limits are crossed.

        Raises DomainError for keys outside the root's domain and
        CapExceededError when a triggered expansion or split cannot fit
        under the memory cap (the offending structural change is rejected
        before mutation, so the tree stays valid; the record itself stays
        inserted).
        """
        root = self.root
        if not (root.lo <= key < root.hi):
            raise DomainError(
                f"key {key!r} outside the domain [{root.lo}, {root.hi})")
        leaf, corrections = self._descend(key)
        cap = leaf.array.capacity
        if not self.config.allow_duplicates:
            found, _, _ = leaf.array.find(key, leaf.model.predict_slot(key, cap))
            if found:
                raise DuplicateKeyError(f"key {key!r} already present")
        _, shifts, iters = leaf.array.insert(
            key, payload, leaf.model.predict_slot(key, cap))
        leaf.stats.add(iters + corrections, shifts)

        try:
            if leaf.array.occupied > self.config.occupancy_trigger(cap):
                self._on_density_trigger(leaf)
            else:
                self._maybe_catastrophic(leaf)
        except CapExceededError:
            # reject the whole insert: maintenance steps that completed
            # stand, but the record comes back out so every density and
            # conservation law holds at the pre-insert multiset
            holder, _ = self._descend(key)
            removed = holder.array.remove_one(
                key, holder.model.predict_slot(key, holder.array.capacity))
            assert removed, "rollback lost track of the rejected record"
            raise

    def _descend(self, key):
        node = self.root
        corrections = 0
        while isinstance(node, InternalNode):
            node, steps = node.route(key)
            corrections += steps
        return node, corrections

    # -- maintenance --------------------------------------------------- #

    def _on_density_trigger(self, node: DataNode):
        cfg = self.config
        if cfg.split_policy == EXPANSION_ONLY:
            self._expand(node)
            return
        if is_catastrophic(node, cfg):
            self.counters.catastrophic_events += 1
            self._split_cascade(node)
        elif cfg.provision_capacity(node.array.occupied) > cfg.max_data_node_slots:
            self._split_cascade(node)
        else:
            self._expand(node)

    def _maybe_catastrophic(self, node: DataNode):
        if not is_catastrophic(node, self.config):
            return
        self.counters.catastrophic_events += 1
        if self.config.split_policy == EXPANSION_ONLY:
            self._expand(node)
        else:
            self._split_cascade(node)

    def expand(self, node: DataNode):
        """Public expansion entry point; see _expand."""
        self._expand(node)

    def _expand(self, node: DataNode):
        """Re-provision a node at the lower density limit and retrain it.

        Records are re-placed by model-based insertion in key order; the
        placement pass refreshes the expected cost, after which the work
        counters reset.
        """
        cfg = self.config
        occ = node.array.occupied
        new_cap = cfg.provision_capacity(occ)
        delta = cfg.data_node_bytes(new_cap) - cfg.data_node_bytes(node.array.capacity)
        self.accountant.charge(delta)

        records = list(node.array.iter_records())
        model = fit_data_model([k for k, _ in records], new_cap)
        array = GappedArray(new_cap)
        constr = CostStats()
        for key, val in records:
            _, shifts, iters = array.insert(key, val,
                                            model.predict_slot(key, new_cap))
            constr.add(iters, shifts)
        node.model = model
        node.array = array
        node.expected_cost = (cfg.search_weight * constr.search_iters / occ
                              if occ else 0.0)
        node.stats.reset()
        node.expansions += 1
        self.counters.expansions += 1
        self.counters.retrains += 1

    def _split_cascade(self, node: DataNode):
        """Split a node, then keep splitting any child that is still over
        its cost threshold. Runs iteratively; depth is bounded only by the
        memory cap."""
        stack = [node]
        cfg = self.config
        while stack:
            children = self._split_once(stack.pop())
            for child in children:
                if child.array.occupied and is_catastrophic(child, cfg):
                    self.counters.catastrophic_events += 1
                    if cfg.split_policy == EXPANSION_ONLY:
                        self._expand(child)
                    else:
                        stack.append(child)

    def split_sideways(self, node: DataNode):
        """Public split entry point used by tests; dispatches exactly like
        the cost-triggered path (sideways, with table doubling or a
        downwards split when the parent cannot accommodate it)."""
        return self._split_once(node)

    def _split_once(self, node: DataNode):
        parent = node.parent
        if parent is None:
            return self._split_downwards(node)
        ri = parent.run_index_of(node)
        refs = parent.runs[ri][1]
        if refs == 1:
            new_table_bytes = parent.table_len * 2 * self.config.ref_bytes
            if new_table_bytes > self.config.max_routing_bytes:
                return self._split_downwards(node)
            self.accountant.charge(parent.table_len * self.config.ref_bytes)
            parent.double_table()
            self.counters.doublings += 1
            self.counters.doubling_log.append(new_table_bytes)
            ri = parent.run_index_of(node)
            refs = 2
        left, right = self._make_halves(node)
        parent.replace_run(ri, [(left, refs // 2), (right, refs // 2)])
        self.counters.sideways_splits += 1
        self.counters.retrains += 2
        return left, right

    def _split_downwards(self, node: DataNode):
        """Replace a data node with a fresh internal node over its halves.

        Used when the parent's table cannot double (or the node is the
        root); the new internal node starts with a two-entry table.
        """
        left, right = self._make_halves(node, extra_bytes=self.config.internal_node_bytes(2))
        inner = InternalNode(self._alloc_id(), node.lo, node.hi,
                             [(left, 1), (right, 1)])
        parent = node.parent
        if parent is None:
            self.root = inner
        else:
            ri = parent.run_index_of(node)
            parent.replace_run(ri, [(inner, parent.runs[ri][1])])
        self.counters.downwards_splits += 1
        self.counters.retrains += 2
        return left, right

    def _make_halves(self, node: DataNode, extra_bytes: int = 0):
        """Build the two replacement children for a split, charging the
        accountant (and checking the cap) before any mutation."""
        cfg = self.config
        records = list(node.array.iter_records())
        mid = self._midpoint(node.lo, node.hi)
        if mid is None:
            # the range has no representable interior point; keep halving
            # formally with an empty left child so the split machinery (and
            # its table growth) behaves identically
            mid = node.lo
            cut = 0
            self.counters.resolution_floor = True
        else:
            rec_keys = [k for k, _ in records]
            cut = bisect_left(rec_keys, mid)
        cap_left = cfg.provision_capacity(cut)
        cap_right = cfg.provision_capacity(len(records) - cut)
        delta = (cfg.data_node_bytes(cap_left) + cfg.data_node_bytes(cap_right)
                 + extra_bytes - cfg.data_node_bytes(node.array.capacity))
        self.accountant.charge(delta)
        left = self._build_data_node(records[:cut], node.lo, mid, cap_left)
        right = self._build_data_node(records[cut:], mid, node.hi, cap_right)
        return left, right

    # -- reporting ------------------------------------------------------- #

    def memory_report(self) -> MemorySnapshot:
        return self.accountant.snapshot()

    def iter_data_nodes(self):
        """All data nodes, leftmost first."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, DataNode):
                yield node
            else:
                stack.extend(c for c, _ in reversed(node.runs))

    def iter_nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, InternalNode):
                stack.extend(c for c, _ in reversed(node.runs))

    def key_count(self) -> int:
        return sum(n.array.occupied for n in self.iter_data_nodes())

    def _walk_bytes(self) -> int:
        cfg = self.config
        total = 0
        for node in self.iter_nodes():
            if isinstance(node, DataNode):
                total += cfg.data_node_bytes(node.array.capacity)
            else:
                total += cfg.internal_node_bytes(node.table_len)
        return total

    def domain(self):
        return self.root.lo, self.root.hi

    # -- copying --------------------------------------------------------- #

    def clone(self) -> "IndexTree":
        """Deep structural copy sharing only the (frozen) config."""
        tree = IndexTree(self.config)
        tree.accountant = self.accountant.clone()
        tree.counters = self.counters.clone()
        tree._next_node_id = self._next_node_id
        tree.integer_keys = self.integer_keys
        tree.root = self._clone_node(self.root)
        return tree

    def _clone_node(self, node):
        if isinstance(node, DataNode):
            copy = DataNode.__new__(DataNode)
            copy.node_id = node.node_id
            copy.lo, copy.hi = node.lo, node.hi
            copy.model = type(node.model)(node.model.slope, node.model.intercept)
            copy.array = node.array.clone()
            copy.stats = node.stats.clone()
            copy.expected_cost = node.expected_cost
            copy.expansions = node.expansions
            copy.parent = None
            return copy
        copy = InternalNode.__new__(InternalNode)
        copy.node_id = node.node_id
        copy.lo, copy.hi = node.lo, node.hi
        copy.model = type(node.model)(node.model.slope, node.model.intercept)
        copy.table_len = node.table_len
        copy.runs = []
        for child, count in node.runs:
            child_copy = self._clone_node(child)
            child_copy.parent = copy
            copy.runs.append([child_copy, count])
        copy.starts = list(node.starts)
        copy.parent = None
        return copy


# --------------------------------------------------------------------- #
# invariant checking
# --------------------------------------------------------------------- #

def _check_data_node(node: DataNode, cfg: IndexConfig):
    arr = node.array
    if sum(arr.occ) != arr.occupied:
        raise InvariantViolation(f"{node}: occupancy counter != bitmap popcount")
    if arr.occupied > cfg.occupancy_trigger(arr.capacity):
        raise InvariantViolation(f"{node}: occupancy above the upper density limit")
    last_key = None
    last_slot = None
    seen = set()
    for slot in range(arr.capacity):
        if not arr.occ[slot]:
            continue
        key = arr.slot_keys[slot]
        if not (node.lo <= key < node.hi):
            raise InvariantViolation(f"{node}: key {key!r} outside node range")
        if last_key is not None and key < last_key:
            raise InvariantViolation(f"{node}: keys not sorted at slot {slot}")
        if key == last_key and slot != last_slot + 1:
            raise InvariantViolation(
                f"{node}: duplicate copies of {key!r} are not slot-contiguous")
        if key != last_key:
            if key in seen:
                raise InvariantViolation(
                    f"{node}: copies of {key!r} are separated by other keys")
            seen.add(key)
        last_key, last_slot = key, slot


def _check_internal_node(node: InternalNode, cfg: IndexConfig):
    if node.table_len & (node.table_len - 1):
        raise InvariantViolation(f"{node}: table length not a power of two")
    if node.table_len * cfg.ref_bytes > cfg.max_routing_bytes:
        raise InvariantViolation(f"{node}: table exceeds the routing budget")
    offset = 0
    prev_hi = node.lo
    for child, count in node.runs:
        if count < 1 or count & (count - 1):
            raise InvariantViolation(f"{node}: run of {count} refs not a power of two")
        if offset % count:
            raise InvariantViolation(f"{node}: run at offset {offset} misaligned")
        if child.lo != prev_hi:
            raise InvariantViolation(
                f"{node}: child ranges do not tile (gap before {child.lo!r})")
        if child.parent is not node:
            raise InvariantViolation(f"{node}: child has a stale parent pointer")
        prev_hi = child.hi
        offset += count
    if offset != node.table_len:
        raise InvariantViolation(f"{node}: run counts do not sum to the table length")
    if prev_hi != node.hi:
        raise InvariantViolation(f"{node}: children stop short of the node range")


def check_invariants(tree: IndexTree):
    """Validate every structural law; raises InvariantViolation on failure."""
    cfg = tree.config
    seen = set()
    for node in tree.iter_nodes():
        if id(node) in seen:
            raise InvariantViolation(f"{node}: reachable twice (cycle or shared child)")
        seen.add(id(node))
        if isinstance(node, DataNode):
            _check_data_node(node, cfg)
        else:
            _check_internal_node(node, cfg)
    lo, hi = tree.domain()
    leaves = list(tree.iter_data_nodes())
    if leaves[0].lo != lo or leaves[-1].hi != hi:
        raise InvariantViolation("leaf ranges do not cover the root domain")
    for a, b in zip(leaves, leaves[1:]):
        if a.hi != b.lo:
            raise InvariantViolation(f"leaf ranges not contiguous at {a.hi!r}")
    walked = tree._walk_bytes()
    if walked != tree.accountant.current_bytes:
        raise InvariantViolation(
            f"accounted bytes {tree.accountant.current_bytes} != "
            f"walk-recomputed {walked}")
    if tree.accountant.peak_bytes < tree.accountant.current_bytes:
        raise InvariantViolation("peak bytes below current bytes")
