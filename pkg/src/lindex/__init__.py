"""A dynamic learned index plus the adversarial workloads that break it.

The core package implements a gapped-array learned index (linear models
route keys to slots, density limits drive expansion, a cost model drives
splits). The attack modules generate worst-case workloads against it: a
knapsack-planned insertion campaign that maximises over-provisioned memory,
a duplicate-key flood that sets off an unbounded split cascade, and batched
consecutive-key insertions that force continual model retraining.
"""

from .core import (
    EXPANSION_ONLY,
    SIDEWAYS_FIRST,
    CapExceededError,
    DomainError,
    DuplicateKeyError,
    IndexConfig,
    IndexTree,
    InvariantViolation,
    UndefinedCostError,
    check_invariants,
    is_catastrophic,
    node_cost,
)
from .duplicates import (
    DupAttackConfig,
    SzegpConfig,
    run_duplicate_attack,
    run_szegp,
    trigger_distance,
)
from .kde import KdeModel, build_substitute, fit_kde
from .kde import sample as kde_sample
from .metrics import MetricsRecord
from .mck import (
    AttackPlan,
    Scenario,
    ScenarioTable,
    build_scenario_table,
    execute_graybox,
    execute_whitebox,
    generate_keys,
    greedy_plan,
    scenario_cost,
    snapshot_nodes,
    solve_mck,
)
from .timing import (
    TimeAttackConfig,
    plan_black_batch,
    plan_gray_batch,
    plan_white_batch,
    run_time_attack,
)
from .workloads import DatasetSpec, WorkloadSpec, gen_dataset, gen_workload

__version__ = "0.1.0"
