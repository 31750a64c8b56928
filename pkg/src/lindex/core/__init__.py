"""Core index: configuration, gapped arrays, nodes, and the tree."""

from .config import (
    EXPANSION_ONLY,
    MIN_DATA_NODE_SLOTS,
    NODE_HEADER_BYTES,
    SIDEWAYS_FIRST,
    CapExceededError,
    DomainError,
    DuplicateKeyError,
    IndexConfig,
    UndefinedCostError,
)
from .gapped import GappedArray
from .model import LinearModel, fit_data_model, fit_routing_model
from .nodes import CostStats, DataNode, InternalNode
from .tree import (
    Counters,
    IndexTree,
    InvariantViolation,
    MemoryAccountant,
    MemorySnapshot,
    check_invariants,
    is_catastrophic,
    node_cost,
)

__all__ = [
    "EXPANSION_ONLY",
    "MIN_DATA_NODE_SLOTS",
    "NODE_HEADER_BYTES",
    "SIDEWAYS_FIRST",
    "CapExceededError",
    "CostStats",
    "Counters",
    "DataNode",
    "DomainError",
    "DuplicateKeyError",
    "GappedArray",
    "IndexConfig",
    "IndexTree",
    "InternalNode",
    "InvariantViolation",
    "LinearModel",
    "MemoryAccountant",
    "MemorySnapshot",
    "UndefinedCostError",
    "check_invariants",
    "fit_data_model",
    "fit_routing_model",
    "is_catastrophic",
    "node_cost",
]
