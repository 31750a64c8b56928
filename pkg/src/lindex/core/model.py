"""Linear key-to-position models for data and internal nodes."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass
class LinearModel:
    """Maps a key to a slot position via ``slope * key + intercept``."""

    slope: float = 0.0
    intercept: float = 0.0

    def predict(self, key) -> float:
        return self.slope * float(key) + self.intercept

    def predict_slot(self, key, capacity: int) -> int:
        """Predicted slot clamped into [0, capacity - 1]."""
        p = int(math.floor(self.slope * float(key) + self.intercept))
        if p < 0:
            return 0
        if p >= capacity:
            return capacity - 1
        return p


def fit_data_model(keys, capacity: int) -> LinearModel:
    """Least-squares fit of sorted keys onto slots spread across ``capacity``.

    Rank r targets slot r * (capacity - 1) / (n - 1), so the trained model
    spaces records (and therefore gaps) evenly over the whole array. A
    degenerate key set (all values equal, or a single key) collapses to a
    flat model pointing at the array centre.
    """
    n = len(keys)
    if n == 0:
        return LinearModel(0.0, 0.0)
    centre = (capacity - 1) / 2.0
    if n == 1:
        return LinearModel(0.0, centre)
    kmean = math.fsum(float(k) for k in keys) / n
    var = math.fsum((float(k) - kmean) ** 2 for k in keys)
    if var <= 0.0:
        return LinearModel(0.0, centre)
    step = (capacity - 1) / (n - 1)
    # cov(key, target) with target_i = i * step
    cov = math.fsum((float(k) - kmean) * (i * step) for i, k in enumerate(keys))
    slope = cov / var
    if slope < 0.0:  # only possible through float noise on near-flat data
        slope = 0.0
    target_mean = step * (n - 1) / 2.0
    return LinearModel(slope, target_mean - slope * kmean)


def fit_routing_model(lo, hi, table_len: int) -> LinearModel:
    """Exact linear map from [lo, hi) onto a routing table of ``table_len``.

    The width is computed before any float conversion so huge integer
    bounds keep their exact difference. Ranges too narrow for finite slope
    fall back to a flat model; the router's correction scan handles those.
    """
    width = hi - lo
    if not width > 0:
        return LinearModel(0.0, 0.0)
    slope = table_len / width
    if not math.isfinite(slope):
        return LinearModel(0.0, 0.0)
    intercept = -float(lo) * slope
    if not math.isfinite(intercept):
        return LinearModel(0.0, 0.0)
    return LinearModel(slope, intercept)


def mean_rank_error(keys) -> float:
    """Mean absolute rank error of the best linear fit over sorted keys.

    This is the curvature measure the bulk loader uses to decide whether a
    key segment is linear enough to live in one data node: large values mean
    model-based placement would clump records and searches would pay for it.
    """
    import numpy as np

    x = np.asarray(keys, dtype=np.float64)
    n = len(x)
    if n < 3:
        return 0.0
    ranks = np.arange(n, dtype=np.float64)
    xm = x.mean()
    var = ((x - xm) ** 2).mean()
    if var <= 0.0:
        return 0.0
    slope = ((x - xm) * ranks).mean() / var
    intercept = ranks.mean() - slope * xm
    return float(np.abs(slope * x + intercept - ranks).mean())
