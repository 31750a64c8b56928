"""Tophat kernel density estimation over a key set, and substitute trees.

This is the distributional-knowledge toolkit for the gray-box attack
settings: fit a density to the legitimate keys, sample a synthetic key set
from it, and build a substitute index that approximates the target's shape
without ever touching the target's internals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import IndexConfig, IndexTree

# Bandwidths are given in raw key units, which suits degree-scaled float
# keys. Integer families span enormous domains, so the bandwidth scales by
# domain_width / 360 to keep the smoothing proportionate.
_REFERENCE_WIDTH = 360.0


@dataclass(frozen=True)
class KdeModel:
    """Tophat mixture: uniform mass on [p - bandwidth, p + bandwidth] per
    support point."""

    support: np.ndarray
    bandwidth: float
    integer_keys: bool = False
    kernel: str = "tophat"

    @property
    def low(self) -> float:
        return float(self.support[0]) - self.bandwidth

    @property
    def high(self) -> float:
        return float(self.support[-1]) + self.bandwidth


def effective_bandwidth(bandwidth: float, keys) -> float:
    """Scale a degree-unit bandwidth onto an integer key domain."""
    width = float(keys[-1]) - float(keys[0])
    if width <= 0.0:
        return bandwidth
    return bandwidth * width / _REFERENCE_WIDTH


def fit_kde(keys, bandwidth: float) -> KdeModel:
    """Fit a tophat density over ``keys`` (sorted ascending)."""
    if len(keys) == 0:
        raise ValueError("cannot fit a density to an empty key set")
    if bandwidth <= 0.0:
        raise ValueError("bandwidth must be positive")
    arr = np.asarray(keys)
    integer = arr.dtype.kind in "iu"
    support = np.sort(arr.astype(np.float64))
    bw = effective_bandwidth(bandwidth, support) if integer else bandwidth
    return KdeModel(support=support, bandwidth=bw, integer_keys=integer)


def density(model: KdeModel, xs) -> np.ndarray:
    """Density values at ``xs``; integrates to one over the support."""
    xs = np.asarray(xs, dtype=np.float64)
    bw = model.bandwidth
    lo_counts = np.searchsorted(model.support, xs - bw, side="left")
    hi_counts = np.searchsorted(model.support, xs + bw, side="right")
    return (hi_counts - lo_counts) / (len(model.support) * 2.0 * bw)


def interval_mass(model: KdeModel, a: float, b: float) -> float:
    """Exact probability mass of [a, b] under the tophat mixture."""
    support = model.support
    bw = model.bandwidth
    lows = support - bw
    highs = support + bw
    overlap = np.minimum(highs, b) - np.maximum(lows, a)
    np.clip(overlap, 0.0, None, out=overlap)
    return float(overlap.sum() / (len(support) * 2.0 * bw))


def sample(model: KdeModel, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` keys: a uniform support point plus a uniform offset within
    the bandwidth. Sorted ascending; deterministic per seed.

    Integer-keyed models round samples and de-conflict exact duplicates by
    stepping each collision up by one.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(seed)
    if n == 0:
        dtype = np.int64 if model.integer_keys else np.float64
        return np.empty(0, dtype=dtype)
    picks = rng.integers(0, len(model.support), n)
    offsets = rng.uniform(-model.bandwidth, model.bandwidth, n)
    values = np.sort(model.support[picks] + offsets)
    if not model.integer_keys:
        return values
    ints = np.rint(values).astype(np.int64)
    for i in range(1, n):
        if ints[i] <= ints[i - 1]:
            ints[i] = ints[i - 1] + 1
    return ints


def build_substitute(model: KdeModel, l: int, config: IndexConfig,
                     seed: int) -> IndexTree:
    """Bulk-load a fresh tree from ``l`` keys sampled off the density."""
    if l < 1:
        raise ValueError("substitute needs at least one sampled key")
    return IndexTree.bulk_load(sample(model, l, seed), config)
