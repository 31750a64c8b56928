"""Index configuration, shared constants, and error types."""

from __future__ import annotations

import math
from dataclasses import dataclass

# Smallest gapped array we ever allocate; keeps tiny nodes from thrashing.
MIN_DATA_NODE_SLOTS = 16

# Flat per-node bookkeeping charge used by the memory accountant for both
# node kinds (model parameters, range bounds, counters).
NODE_HEADER_BYTES = 64

SIDEWAYS_FIRST = "sideways-first"
EXPANSION_ONLY = "expansion-only"
SPLIT_POLICIES = (SIDEWAYS_FIRST, EXPANSION_ONLY)

# Slack for float round-off when density arithmetic sits exactly on an
# integer boundary (e.g. 81 / 0.6 must come out as 135, not 136). Safe for
# occupancies up to ~1e8 slots, far beyond any cap this harness allows.
_CEIL_SLACK = 1e-6
_FLOOR_SLACK = 1e-9


class CapExceededError(RuntimeError):
    """Raised when a structural change would push accounted memory past the cap.

    The check runs before any mutation is committed, so the tree is always
    left in a valid state when this propagates.
    """


class DomainError(ValueError):
    """Raised for keys outside the root's key domain."""


class DuplicateKeyError(ValueError):
    """Raised on duplicate insertion when the tree was built to reject them."""


class UndefinedCostError(ValueError):
    """Raised when a cost query is made against a node with zero operations."""


@dataclass(frozen=True)
class IndexConfig:
    """Tuning knobs shared by the whole tree.

    ``lower_density`` / ``upper_density`` bound each gapped array's
    occupied/capacity ratio: crossing the upper limit triggers maintenance,
    and freshly provisioned arrays are sized at the lower limit.
    ``split_policy`` selects how a catastrophic cost deviation is repaired:
    ``sideways-first`` splits the key space in half (the stock behaviour),
    ``expansion-only`` re-provisions and retrains in place (the patched
    variant that trades the split cascade for retrain churn).
    """

    lower_density: float = 0.6
    upper_density: float = 0.8
    max_routing_bytes: int = 16 * 2**20
    max_data_node_slots: int = 2**24
    catastrophic_factor: float = 4.0
    catastrophic_min_ops: int = 64
    catastrophic_eps: float = 2.0
    search_weight: float = 1.0
    shift_weight: float = 1.0
    slot_bytes: int = 16
    ref_bytes: int = 8
    memory_cap_bytes: int = 2 * 2**30
    split_policy: str = SIDEWAYS_FIRST
    allow_duplicates: bool = True
    # bulk loading keeps halving a segment while the best linear fit's mean
    # absolute rank error exceeds this, so every fresh leaf is close enough
    # to linear for model-based placement to spread its records
    bulk_fit_tolerance: float = 8.0

    def __post_init__(self):
        if not (0.0 < self.lower_density < self.upper_density < 1.0):
            raise ValueError(
                f"need 0 < lower_density < upper_density < 1, got "
                f"{self.lower_density}, {self.upper_density}"
            )
        if self.memory_cap_bytes <= 0:
            raise ValueError("memory_cap_bytes must be positive")
        if self.split_policy not in SPLIT_POLICIES:
            raise ValueError(f"unknown split_policy {self.split_policy!r}")
        if self.max_routing_bytes < 2 * self.ref_bytes:
            raise ValueError("max_routing_bytes cannot hold a 2-entry table")

    # -- density arithmetic shared by the tree and the attack planners -----

    def occupancy_trigger(self, capacity: int) -> int:
        """Highest occupancy a node of this capacity may hold at rest.

        One more record than this forces an expansion or split.
        """
        return int(math.floor(self.upper_density * capacity + _FLOOR_SLACK))

    def provision_capacity(self, occupied: int) -> int:
        """Capacity of a freshly provisioned array holding ``occupied`` records."""
        raw = math.ceil(occupied / self.lower_density - _CEIL_SLACK)
        return max(MIN_DATA_NODE_SLOTS, raw)

    # -- accounted byte costs ----------------------------------------------

    def data_node_bytes(self, capacity: int) -> int:
        """Accounted footprint of a data node: slots, bitmap, header."""
        return capacity * self.slot_bytes + (capacity + 7) // 8 + NODE_HEADER_BYTES

    def internal_node_bytes(self, table_len: int) -> int:
        """Accounted footprint of an internal node: child table, header."""
        return table_len * self.ref_bytes + NODE_HEADER_BYTES

    def max_table_len(self) -> int:
        """Largest child-table length the routing budget allows."""
        return self.max_routing_bytes // self.ref_bytes
