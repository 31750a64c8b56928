from __future__ import annotations

import numpy as np
import pytest

from lindex.core import IndexConfig, IndexTree


@pytest.fixture
def small_config():
    return IndexConfig(max_data_node_slots=256, memory_cap_bytes=512 * 2**20)


def build_tree(keys, **overrides):
    defaults = dict(max_data_node_slots=256, memory_cap_bytes=512 * 2**20)
    defaults.update(overrides)
    return IndexTree.bulk_load(keys, IndexConfig(**defaults))


def lognormal_keys(n, seed=0, scale=1e9):
    rng = np.random.default_rng(seed)
    return np.sort((np.exp(rng.normal(0, 2, n)) * scale).astype(np.int64))
