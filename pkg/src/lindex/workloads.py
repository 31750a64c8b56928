"""Synthetic dataset families, file loading, and operation-mix generation.

Four families of 8-byte keys: two real-valued (``longitude``, ``longlat``,
float64) and two integer-valued (``ycsb``, ``lognormal``, int64). The
real-valued families are synthetic stand-ins shaped like coordinate dumps
(bimodal longitudes, and the combined 180*floor(lon)+lat transform); the
``file`` family loads headerless little-endian 8-byte records so real
extracts can be dropped in.

Note on lognormal parameters: sigma defaults to 2.0. A sigma of zero would
collapse every key to the same value, which is useless as a benchmark, and
2.0 is the long-standing choice for this benchmark family.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("longitude", "longlat", "ycsb", "lognormal", "file")
INTEGER_FAMILIES = ("ycsb", "lognormal")

# keep ycsb keys clear of the signed-64 extremes so the domain margins
# [min-1, max+1) never overflow
_YCSB_HIGH = 2**63 - 1024
_LOGNORMAL_SCALE = 1e9

OP_LOOKUP = 0
OP_INSERT = 1


@dataclass(frozen=True)
class DatasetSpec:
    family: str
    count: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown dataset family {self.family!r}")
        if self.count < 1:
            raise ValueError("count must be at least 1")

    @property
    def integer_keys(self) -> bool:
        if self.family == "file":
            return self.params.get("integer", False)
        return self.family in INTEGER_FAMILIES


def _wrap(values, lo, hi):
    width = hi - lo
    return ((values - lo) % width) + lo


def _gen_longitudes(rng, count):
    modes = rng.random(count) < 0.55
    left = rng.normal(-95.0, 25.0, count)
    right = rng.normal(80.0, 30.0, count)
    return _wrap(np.where(modes, left, right), -180.0, 180.0)


def gen_dataset(spec: DatasetSpec) -> np.ndarray:
    """Sorted keys for the requested family; deterministic per (family,
    count, seed)."""
    rng = np.random.default_rng(spec.seed)
    count = spec.count
    if spec.family == "longitude":
        keys = _gen_longitudes(rng, count)
    elif spec.family == "longlat":
        lon = _gen_longitudes(rng, count)
        lat = _wrap(rng.normal(20.0, 30.0, count), -90.0, 90.0)
        keys = combine_longlat(lon, lat)
    elif spec.family == "ycsb":
        keys = rng.integers(0, _YCSB_HIGH, count, dtype=np.int64)
    elif spec.family == "lognormal":
        mu = spec.params.get("mu", 0.0)
        sigma = spec.params.get("sigma", 2.0)
        keys = (np.exp(rng.normal(mu, sigma, count))
                * _LOGNORMAL_SCALE).astype(np.int64)
    elif spec.family == "file":
        path = spec.params["path"]
        dtype = "<i8" if spec.params.get("integer", False) else "<f8"
        keys = np.fromfile(path, dtype=dtype)[:count]
        if len(keys) < count:
            raise ValueError(
                f"{path} holds {len(keys)} keys, fewer than requested {count}")
    keys.sort()
    return keys


def combine_longlat(longitude, latitude):
    """Fold a (longitude, latitude) pair into one key: 180*floor(lon) + lat."""
    return 180.0 * np.floor(longitude) + latitude


def write_dataset(path, keys):
    """Headerless little-endian 8-byte records, the ``file`` family format."""
    arr = np.asarray(keys)
    dtype = "<i8" if arr.dtype.kind == "i" else "<f8"
    arr.astype(dtype).tofile(path)


# --------------------------------------------------------------------- #
# operation mixes
# --------------------------------------------------------------------- #

@dataclass(frozen=True)
class WorkloadSpec:
    """Operation mix: ``insert_fraction`` of inserts (fresh keys), the rest
    lookups of existing keys drawn Zipfian by rank."""

    total_ops: int
    insert_fraction: float = 0.5
    zipf_theta: float = 0.99
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.insert_fraction <= 1.0):
            raise ValueError("insert_fraction must lie in [0, 1]")
        if self.total_ops < 0:
            raise ValueError("total_ops must be non-negative")


WRITE_HEAVY = 0.5
READ_HEAVY = 0.1

MIX_FRACTIONS = {"write-heavy": WRITE_HEAVY, "read-heavy": READ_HEAVY}


class ZipfSampler:
    """Rank-based Zipf draws: P(rank r) proportional to 1 / r**theta."""

    def __init__(self, n: int, theta: float):
        if n < 1:
            raise ValueError("need at least one item")
        ranks = np.arange(1, n + 1, dtype=np.float64)
        if theta == 0.0:
            weights = np.ones(n)
        else:
            weights = ranks ** (-theta)
        self._cum = np.cumsum(weights)
        self._total = self._cum[-1]

    def draw(self, rng, size: int) -> np.ndarray:
        """0-based item indices; rank 1 maps to index 0."""
        u = rng.random(size) * self._total
        return np.searchsorted(self._cum, u, side="left")


def gen_workload(spec: WorkloadSpec, existing_keys, fresh_keys):
    """Tagged operation stream as (kinds, keys) arrays.

    ``kinds`` holds OP_INSERT / OP_LOOKUP with exact counts (the op multiset
    is fixed, then shuffled); insert keys consume ``fresh_keys`` in order,
    lookup keys are drawn from ``existing_keys`` Zipfian by rank.
    """
    rng = np.random.default_rng(spec.seed)
    total = spec.total_ops
    n_insert = round(spec.insert_fraction * total)
    n_lookup = total - n_insert
    existing = np.asarray(existing_keys)
    fresh = np.asarray(fresh_keys)
    if n_insert > len(fresh):
        raise ValueError(
            f"workload needs {n_insert} fresh keys, only {len(fresh)} available")
    if n_lookup > 0 and len(existing) == 0:
        raise ValueError("lookups requested against an empty key set")

    kinds = np.zeros(total, dtype=np.uint8)
    kinds[:n_insert] = OP_INSERT
    rng.shuffle(kinds)

    keys = np.empty(total, dtype=existing.dtype if n_lookup else fresh.dtype)
    insert_pos = np.flatnonzero(kinds == OP_INSERT)
    lookup_pos = np.flatnonzero(kinds == OP_LOOKUP)
    keys[insert_pos] = fresh[:n_insert]
    if n_lookup:
        sampler = ZipfSampler(len(existing), spec.zipf_theta)
        keys[lookup_pos] = existing[sampler.draw(rng, n_lookup)]
    return kinds, keys
