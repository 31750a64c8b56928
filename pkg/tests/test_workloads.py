"""Dataset families, the Zipf sampler, and operation-mix generation."""

from __future__ import annotations

import numpy as np
import pytest

from lindex.workloads import (
    OP_INSERT,
    OP_LOOKUP,
    DatasetSpec,
    WorkloadSpec,
    ZipfSampler,
    combine_longlat,
    gen_dataset,
    gen_workload,
    write_dataset,
)


def test_longlat_transform_example():
    assert combine_longlat(np.array([10.5]), np.array([20.25]))[0] == \
        pytest.approx(180 * 10 + 20.25)


def test_families_produce_sorted_keys_of_the_declared_type():
    for family, kind in (("longitude", "f"), ("longlat", "f"),
                         ("ycsb", "i"), ("lognormal", "i")):
        keys = gen_dataset(DatasetSpec(family, 5000, seed=1))
        assert keys.dtype.kind == kind
        assert keys.dtype.itemsize == 8
        assert (np.diff(keys) >= 0).all()


def test_longitude_keys_stay_in_degree_range():
    keys = gen_dataset(DatasetSpec("longitude", 20_000, seed=2))
    assert keys.min() >= -180.0 and keys.max() < 180.0


def test_ycsb_decile_counts_are_uniform():
    n = 100_000
    keys = gen_dataset(DatasetSpec("ycsb", n, seed=3)).astype(np.float64)
    hi = float(2**63)
    counts, _ = np.histogram(keys, bins=10, range=(0.0, hi))
    sigma = (n * 0.1 * 0.9) ** 0.5
    assert (np.abs(counts - n / 10) <= 3 * sigma).all()


def test_generation_is_deterministic_per_seed():
    for family in ("longitude", "longlat", "ycsb", "lognormal"):
        a = gen_dataset(DatasetSpec(family, 2000, seed=9))
        b = gen_dataset(DatasetSpec(family, 2000, seed=9))
        c = gen_dataset(DatasetSpec(family, 2000, seed=10))
        assert (a == b).all()
        assert not (a == c).all()


def test_file_family_round_trips(tmp_path):
    keys = gen_dataset(DatasetSpec("lognormal", 1000, seed=4))
    path = tmp_path / "keys.bin"
    write_dataset(path, keys)
    loaded = gen_dataset(DatasetSpec("file", 1000, seed=0,
                                     params={"path": str(path),
                                             "integer": True}))
    assert (loaded == keys).all()
    with pytest.raises(ValueError):
        gen_dataset(DatasetSpec("file", 2000, seed=0,
                                params={"path": str(path), "integer": True}))


def test_zipf_rank_one_dominates_with_the_expected_ratio():
    theta = 0.99
    sampler = ZipfSampler(10_000, theta)
    draws = sampler.draw(np.random.default_rng(5), 1_000_000)
    counts = np.bincount(draws, minlength=3)
    assert counts[0] == counts.max()
    ratio = counts[0] / counts[1]
    assert abs(ratio - 2**theta) / 2**theta <= 0.10


def test_zipf_theta_zero_is_uniform_over_deciles():
    n_items = 1000
    sampler = ZipfSampler(n_items, 0.0)
    draws = sampler.draw(np.random.default_rng(6), 100_000)
    counts, _ = np.histogram(draws, bins=10, range=(0, n_items))
    sigma = (100_000 * 0.1 * 0.9) ** 0.5
    assert (np.abs(counts - 10_000) <= 3 * sigma).all()


def test_write_heavy_mix_has_exact_insert_count():
    existing = np.arange(1000, dtype=np.int64)
    fresh = np.arange(10_000, 30_000, dtype=np.int64)
    kinds, keys = gen_workload(WorkloadSpec(10_000, 0.5, seed=7),
                               existing, fresh)
    assert int((kinds == OP_INSERT).sum()) == 5000
    assert int((kinds == OP_LOOKUP).sum()) == 5000
    assert len(keys) == 10_000
    inserted = keys[kinds == OP_INSERT]
    assert (np.sort(inserted) == np.sort(fresh[:5000])).all()
    looked = keys[kinds == OP_LOOKUP]
    assert np.isin(looked, existing).all()


def test_pure_insert_stream():
    fresh = np.arange(100, dtype=np.int64)
    kinds, keys = gen_workload(WorkloadSpec(100, 1.0, seed=8),
                               np.arange(10), fresh)
    assert (kinds == OP_INSERT).all()
    assert (np.sort(keys) == fresh).all()


def test_workload_errors_without_enough_fresh_keys():
    with pytest.raises(ValueError):
        gen_workload(WorkloadSpec(100, 1.0, seed=0), np.arange(10),
                     np.arange(5))


def test_workload_is_deterministic():
    existing = np.arange(500, dtype=np.int64)
    fresh = np.arange(1000, 2000, dtype=np.int64)
    a = gen_workload(WorkloadSpec(1000, 0.1, seed=11), existing, fresh)
    b = gen_workload(WorkloadSpec(1000, 0.1, seed=11), existing, fresh)
    assert (a[0] == b[0]).all() and (a[1] == b[1]).all()
