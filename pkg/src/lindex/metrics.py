"""Per-run measurement rows and their CSV encoding.

One canonical row schema serves every run kind; fields that do not apply
stay empty. ``seconds`` and ``throughput`` are the only wall-clock-derived
columns, so determinism comparisons exclude exactly those.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field


CSV_FIELDS = (
    "run_id", "dataset", "policy", "attack", "setting", "seed",
    "budget_keys", "budget_pct", "budget_pct_inserts", "batch", "emax",
    "bandwidth", "before_bytes", "after_bytes", "peak_bytes", "ops",
    "seconds", "throughput", "retrains", "expansions", "sideways_splits",
    "downwards_splits", "splits", "doublings", "catastrophic_events",
    "cap_exceeded", "insertions_to_cap", "predicted_freed_bytes",
    "resolution_floor",
)

WALL_CLOCK_FIELDS = ("seconds", "throughput")


@dataclass
class MetricsRecord:
    run_id: str = ""
    dataset: str = ""
    policy: str = ""
    attack: str = ""
    setting: str = ""
    seed: int = 0
    budget_keys: int = 0
    budget_pct: float | None = None
    budget_pct_inserts: float | None = None
    batch: int | None = None
    emax: int | None = None
    bandwidth: float | None = None
    before_bytes: int = 0
    after_bytes: int = 0
    peak_bytes: int = 0
    ops: int = 0
    seconds: float = 0.0
    throughput: float = 0.0
    retrains: int = 0
    expansions: int = 0
    sideways_splits: int = 0
    downwards_splits: int = 0
    doublings: int = 0
    catastrophic_events: int = 0
    cap_exceeded: bool = False
    insertions_to_cap: int | None = None
    predicted_freed_bytes: int | None = None
    resolution_floor: bool = False
    trajectory: list = field(default_factory=list, repr=False)

    @property
    def splits(self) -> int:
        return self.sideways_splits + self.downwards_splits

    def to_row(self) -> str:
        cells = []
        for name in CSV_FIELDS:
            value = getattr(self, name)
            if value is None:
                cells.append("")
            elif isinstance(value, bool):
                cells.append("true" if value else "false")
            elif isinstance(value, float):
                cells.append(repr(value))
            else:
                cells.append(str(value))
        return ",".join(cells)

    @staticmethod
    def header() -> str:
        return ",".join(CSV_FIELDS)


def fill_counters(record: MetricsRecord, before, after) -> MetricsRecord:
    """Populate counter deltas between two Counters snapshots."""
    record.retrains = after.retrains - before.retrains
    record.expansions = after.expansions - before.expansions
    record.sideways_splits = after.sideways_splits - before.sideways_splits
    record.downwards_splits = after.downwards_splits - before.downwards_splits
    record.doublings = after.doublings - before.doublings
    record.catastrophic_events = (after.catastrophic_events
                                  - before.catastrophic_events)
    record.resolution_floor = after.resolution_floor
    return record


def rows_equal_ignoring_clock(row_a: str, row_b: str) -> bool:
    """Compare CSV rows cell by cell, skipping wall-clock columns."""
    skip = {CSV_FIELDS.index(name) for name in WALL_CLOCK_FIELDS}
    cells_a = row_a.split(",")
    cells_b = row_b.split(",")
    if len(cells_a) != len(cells_b):
        return False
    return all(a == b for i, (a, b) in enumerate(zip(cells_a, cells_b))
               if i not in skip)


TRAJECTORY_HEADER = "insertions,current_bytes,peak_bytes,splits,doublings"


def trajectory_csv(points) -> str:
    """Render (insertions, current, peak, splits, doublings) tuples."""
    out = io.StringIO()
    out.write(TRAJECTORY_HEADER + "\n")
    for point in points:
        out.write(",".join(str(v) for v in point) + "\n")
    return out.getvalue()
