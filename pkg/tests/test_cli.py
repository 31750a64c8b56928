"""The command-line harness: subcommands, CSV output, determinism, caps."""

from __future__ import annotations

import os
import subprocess
import sys

from lindex.metrics import CSV_FIELDS, rows_equal_ignoring_clock


def run_cli(*args, env_cap=None):
    env = dict(os.environ)
    env.pop("LINDEX_CAP_BYTES", None)
    if env_cap is not None:
        env["LINDEX_CAP_BYTES"] = str(env_cap)
    return subprocess.run(
        [sys.executable, "-m", "lindex", *args],
        capture_output=True, text=True, env=env, timeout=600)


SMALL = ["--count", "30000", "--seed", "7"]


def test_build_prints_structure_summary():
    out = run_cli("build", "--family", "ycsb", *SMALL)
    assert out.returncode == 0
    line = out.stdout.strip()
    assert "data_nodes=" in line and "current_bytes=" in line
    fields = dict(kv.split("=") for kv in line.split())
    assert int(fields["data_nodes"]) > 0
    assert int(fields["keys"]) == 30000


def test_build_is_deterministic():
    a = run_cli("build", "--family", "lognormal", *SMALL)
    b = run_cli("build", "--family", "lognormal", *SMALL)
    assert a.stdout == b.stdout


def test_build_past_the_cap_fails_and_names_it():
    out = run_cli("build", "--family", "ycsb", *SMALL, env_cap="100000")
    assert out.returncode != 0
    assert "cap" in out.stderr.lower()
    assert "100000" in out.stderr


def test_attack_rejects_unknown_kind():
    out = run_cli("attack", "definitely-not-an-attack", *SMALL)
    assert out.returncode == 2


def test_attack_dup_emits_cap_exceeded_row(tmp_path):
    traj = tmp_path / "dup.csv"
    out = run_cli("attack", "dup", "--family", "lognormal", *SMALL,
                  "--cap-gb", "0.05", "--trajectory", str(traj))
    assert out.returncode == 0
    header, row = out.stdout.strip().splitlines()
    assert header == ",".join(CSV_FIELDS)
    cells = dict(zip(CSV_FIELDS, row.split(",")))
    assert cells["attack"] == "dup"
    assert cells["cap_exceeded"] == "true"
    assert int(cells["insertions_to_cap"]) <= 1500
    assert traj.exists()
    assert traj.read_text().startswith("insertions,")


def test_attack_mck_white_beats_its_control_row():
    out = run_cli("attack", "mck-white", "--family", "lognormal", *SMALL,
                  "--budget-pct", "5", "--emax", "2")
    assert out.returncode == 0
    header, attack, control = out.stdout.strip().splitlines()
    a = dict(zip(CSV_FIELDS, attack.split(",")))
    c = dict(zip(CSV_FIELDS, control.split(",")))
    assert a["attack"] == "mck" and c["attack"] == "control"
    assert int(a["after_bytes"]) > int(c["after_bytes"])


def test_control_rows_are_deterministic_ignoring_clock():
    args = ["control", "--family", "ycsb", *SMALL, "--ops", "5000"]
    a = run_cli(*args)
    b = run_cli(*args)
    assert a.returncode == b.returncode == 0
    row_a = a.stdout.strip().splitlines()[1]
    row_b = b.stdout.strip().splitlines()[1]
    assert rows_equal_ignoring_clock(row_a, row_b)
    cells = dict(zip(CSV_FIELDS, row_a.split(",")))
    assert float(cells["throughput"]) > 0


def test_control_memory_is_bounded_by_the_density_band():
    out = run_cli("control", "--family", "lognormal", *SMALL, "--ops", "2000")
    row = out.stdout.strip().splitlines()[1]
    cells = dict(zip(CSV_FIELDS, row.split(",")))
    after = int(cells["after_bytes"])
    keys = 30000 + 1000  # initial plus workload inserts
    low = keys * 16 / 0.8
    high = keys * 16 / 0.6 * 1.20  # routing and headers stay under 20%
    assert low <= after <= high


def test_dump_plan_lines_parse():
    out = run_cli("dump-plan", "--family", "lognormal", *SMALL,
                  "--budget-pct", "5", "--emax", "2")
    assert out.returncode == 0
    lines = out.stdout.strip().splitlines()
    assert lines
    for line in lines:
        node_id, e, k, f = (int(x) for x in line.split(","))
        assert e in (1, 2) and k > 0 and f >= 0
    assert "total_keys=" in out.stderr


def test_repeat_runs_emit_one_row_per_trial():
    out = run_cli("attack", "dup", "--family", "lognormal", *SMALL,
                  "--cap-gb", "0.05", "--repeat", "2")
    rows = out.stdout.strip().splitlines()
    assert len(rows) == 3  # header + two trials
    seeds = [row.split(",")[5] for row in rows[1:]]
    assert seeds == ["7", "8"]


def test_attack_time_white_modified_multiplies_retrains():
    out = run_cli("attack", "time-white", "--family", "ycsb",
                  "--count", "50000", "--seed", "11", "--policy", "modified",
                  "--mix", "write-heavy", "--ops", "20000",
                  "--budget-pct", "10", "--batch", "200")
    assert out.returncode == 0
    header, attack, control = out.stdout.strip().splitlines()
    a = dict(zip(CSV_FIELDS, attack.split(",")))
    c = dict(zip(CSV_FIELDS, control.split(",")))
    assert int(a["retrains"]) >= 5 * max(int(c["retrains"]), 1)
    assert float(a["throughput"]) < float(c["throughput"])


def test_dump_plan_round_trips_through_attack_execution(tmp_path):
    plan_path = tmp_path / "plan.txt"
    common = ["--family", "lognormal", "--count", "30000", "--seed", "7",
              "--budget-pct", "5", "--emax", "2"]
    dumped = run_cli("dump-plan", *common)
    assert dumped.returncode == 0
    plan_path.write_text(dumped.stdout)
    replayed = run_cli("attack", "mck-white", *common,
                       "--plan-file", str(plan_path))
    assert replayed.returncode == 0
    attack = dict(zip(CSV_FIELDS,
                      replayed.stdout.strip().splitlines()[1].split(",")))
    assert int(attack["after_bytes"]) > int(attack["before_bytes"])
    assert int(attack["expansions"]) > 0
