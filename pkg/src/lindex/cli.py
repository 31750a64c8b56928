"""Command-line harness.

Subcommands: ``build`` (construct an index and print a summary line),
``control`` (zero-budget pipeline, the baseline row), ``attack`` (run one of
the attack kinds and emit metrics CSV), and ``dump-plan`` (print the
knapsack plan for a space attack without executing it).

Metrics rows go to standard output, diagnostics to standard error. The
memory cap can be overridden with the ``LINDEX_CAP_BYTES`` environment
variable. All randomness flows from ``--seed``; ``--repeat n`` runs n
sequential trials with seeds seed, seed+1, ...
"""

from __future__ import annotations

import argparse
import os
import sys

from .core import EXPANSION_ONLY, SIDEWAYS_FIRST, CapExceededError
from .harness import (
    DEFAULT_BULK_FRACTION,
    DEFAULT_CAP_BYTES,
    DEFAULT_MAX_NODE_SLOTS,
    build_tree,
    dataset_for,
    make_config,
    run_control_experiment,
    run_dup_experiment,
    run_mck_experiment,
    run_szegp_experiment,
    run_time_experiment,
    space_budget_keys,
)
from .metrics import MetricsRecord, trajectory_csv
from .mck import (build_scenario_table, e_values_up_to, parse_plan,
                  serialize_plan, snapshot_nodes, solve_mck)

ATTACK_KINDS = ("mck-white", "mck-gray", "dup", "szegp", "time-white",
                "time-gray", "time-black")

POLICIES = {"vanilla": SIDEWAYS_FIRST, "modified": EXPANSION_ONLY}

ENV_CAP = "LINDEX_CAP_BYTES"


def _cap_bytes(args) -> int:
    env = os.environ.get(ENV_CAP)
    if env:
        return int(env)
    return int(args.cap_gb * 2**30)


def _add_common(parser):
    parser.add_argument("--family", default="lognormal",
                        choices=("longitude", "longlat", "ycsb", "lognormal",
                                 "file"))
    parser.add_argument("--count", type=int, default=1000000,
                        help="legitimate key count")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--cap-gb", type=float, default=DEFAULT_CAP_BYTES / 2**30,
                        help=f"memory cap in GiB (env {ENV_CAP} overrides)")
    parser.add_argument("--max-node-slots", type=int,
                        default=DEFAULT_MAX_NODE_SLOTS)
    parser.add_argument("--bulk-fraction", type=float,
                        default=DEFAULT_BULK_FRACTION)
    parser.add_argument("--policy", default="vanilla",
                        choices=tuple(POLICIES))
    parser.add_argument("--repeat", type=int, default=1,
                        help="sequential trials with seeds seed..seed+n-1")


def _add_attack_params(parser):
    parser.add_argument("--budget-pct", type=float, default=5.0)
    parser.add_argument("--emax", type=int, default=2)
    parser.add_argument("--bandwidth", type=float, default=1.0)
    parser.add_argument("--time-limit", type=float, default=100.0)
    parser.add_argument("--mix", default="write-heavy",
                        choices=("write-heavy", "read-heavy"))
    parser.add_argument("--ops", type=int, default=100000,
                        help="legitimate operations for time attacks")
    parser.add_argument("--batch", type=int, default=200)
    parser.add_argument("--budget-keys", type=int, default=None,
                        help="absolute SZEGP key budget")
    parser.add_argument("--max-insertions", type=int, default=2000)
    parser.add_argument("--interleave", type=int, default=0)
    parser.add_argument("--trajectory", default=None,
                        help="write the byte trajectory CSV to this path")
    parser.add_argument("--plan-file", default=None,
                        help="execute a previously dumped plan instead of "
                             "solving (mck-white only)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lindex", description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="construct an index, print a summary")
    _add_common(p_build)

    p_control = sub.add_parser("control", help="zero-budget baseline run")
    _add_common(p_control)
    p_control.add_argument("--mix", default="write-heavy",
                           choices=("write-heavy", "read-heavy"))
    p_control.add_argument("--ops", type=int, default=100000)

    p_attack = sub.add_parser("attack", help="run an attack, emit metrics CSV")
    p_attack.add_argument("kind", choices=ATTACK_KINDS)
    _add_common(p_attack)
    _add_attack_params(p_attack)

    p_plan = sub.add_parser("dump-plan",
                            help="print the knapsack plan without executing")
    _add_common(p_plan)
    p_plan.add_argument("--budget-pct", type=float, default=5.0)
    p_plan.add_argument("--emax", type=int, default=2)
    p_plan.add_argument("--time-limit", type=float, default=100.0)
    return parser


def _emit(records, wrote_header: bool) -> bool:
    for record in records:
        if record is None:
            continue
        if not wrote_header:
            print(MetricsRecord.header())
            wrote_header = True
        print(record.to_row())
    return wrote_header


def cmd_build(args) -> int:
    config = make_config(POLICIES[args.policy], _cap_bytes(args),
                         args.max_node_slots)
    keys = dataset_for(args.family, args.count, args.seed)
    try:
        tree = build_tree(keys, config, args.bulk_fraction, args.seed)
    except CapExceededError as exc:
        print(f"build failed: {exc}", file=sys.stderr)
        return 1
    data_nodes = sum(1 for _ in tree.iter_data_nodes())
    internal = sum(1 for _ in tree.iter_nodes()) - data_nodes
    snap = tree.memory_report()
    print(f"family={args.family} count={args.count} seed={args.seed} "
          f"data_nodes={data_nodes} internal_nodes={internal} "
          f"keys={tree.key_count()} current_bytes={snap.current_bytes} "
          f"peak_bytes={snap.peak_bytes}")
    return 0


def cmd_control(args) -> int:
    wrote_header = False
    for trial in range(args.repeat):
        record = run_control_experiment(
            family=args.family, count=args.count, mix=args.mix,
            total_ops=args.ops, policy=POLICIES[args.policy],
            seed=args.seed + trial, cap_bytes=_cap_bytes(args),
            max_node_slots=args.max_node_slots)
        wrote_header = _emit([record], wrote_header)
    return 0


def cmd_attack(args) -> int:
    wrote_header = False
    cap = _cap_bytes(args)
    policy = POLICIES[args.policy]
    for trial in range(args.repeat):
        seed = args.seed + trial
        trajectory = None
        if args.kind in ("mck-white", "mck-gray"):
            setting = args.kind.split("-")[1]
            plan = None
            if args.plan_file:
                if args.kind != "mck-white":
                    print("--plan-file applies to mck-white only",
                          file=sys.stderr)
                    return 2
                with open(args.plan_file) as fh:
                    plan = parse_plan(fh.read())
            attack, control, _ = run_mck_experiment(
                family=args.family, count=args.count,
                budget_pct=args.budget_pct, e_max=args.emax, setting=setting,
                bandwidth=args.bandwidth, seed=seed, policy=policy,
                cap_bytes=cap, max_node_slots=args.max_node_slots,
                bulk_fraction=args.bulk_fraction,
                time_limit=args.time_limit, plan=plan)
            wrote_header = _emit([attack, control], wrote_header)
        elif args.kind == "dup":
            attack = run_dup_experiment(
                family=args.family, count=args.count, seed=seed,
                cap_bytes=cap, max_insertions=args.max_insertions,
                interleave=args.interleave, policy=policy,
                max_node_slots=args.max_node_slots,
                bulk_fraction=args.bulk_fraction)
            trajectory = attack.trajectory
            wrote_header = _emit([attack], wrote_header)
        elif args.kind == "szegp":
            budget = args.budget_keys
            if budget is None:
                budget = space_budget_keys(args.budget_pct, args.count)
            attack = run_szegp_experiment(
                family=args.family, count=args.count, seed=seed,
                cap_bytes=cap, budget=budget, policy=policy,
                max_node_slots=args.max_node_slots,
                bulk_fraction=args.bulk_fraction)
            trajectory = attack.trajectory
            wrote_header = _emit([attack], wrote_header)
        else:
            setting = args.kind.split("-")[1]
            attack, control = run_time_experiment(
                family=args.family, count=args.count, mix=args.mix,
                total_ops=args.ops, budget_pct=args.budget_pct,
                batch=args.batch, setting=setting, policy=policy, seed=seed,
                cap_bytes=cap, max_node_slots=args.max_node_slots,
                bandwidth=args.bandwidth)
            wrote_header = _emit([attack, control], wrote_header)
        if args.trajectory and trajectory is not None:
            path = args.trajectory
            if args.repeat > 1:
                path = f"{path}.{trial}"
            with open(path, "w") as fh:
                fh.write(trajectory_csv(trajectory))
            print(f"trajectory written to {path}", file=sys.stderr)
    return 0


def cmd_dump_plan(args) -> int:
    config = make_config(POLICIES[args.policy], _cap_bytes(args),
                         args.max_node_slots)
    keys = dataset_for(args.family, args.count, args.seed)
    tree = build_tree(keys, config, args.bulk_fraction, args.seed)
    snaps = snapshot_nodes(tree)
    table = build_scenario_table(snaps, config, e_values_up_to(args.emax))
    budget = space_budget_keys(args.budget_pct, args.count)
    plan = solve_mck(table, budget, args.time_limit)
    sys.stdout.write(serialize_plan(plan))
    print(f"total_keys={plan.total_keys} "
          f"predicted_freed_bytes={plan.predicted_freed_bytes} "
          f"proven_optimal={plan.proven_optimal}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "build":
        return cmd_build(args)
    if args.command == "control":
        return cmd_control(args)
    if args.command == "attack":
        return cmd_attack(args)
    return cmd_dump_plan(args)


if __name__ == "__main__":
    sys.exit(main())
