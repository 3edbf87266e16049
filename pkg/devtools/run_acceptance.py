#!/usr/bin/env python3
# Copyright 2024
# Directory: fedgw-sim/devtools/run_acceptance.py

"""
Acceptance Run.

Runs the federation scenarios end to end and prints the outcome the
simulator is expected to reproduce:
- light10 settles with about 3 gateways on, every station associated
- heavy-double recovers with about 5 gateways on and none Heavy
- bss-tcp-udp keeps spare bandwidth until the third UDP flow starts

Usage:
    python devtools/run_acceptance.py
"""

import sys
from pathlib import Path
from typing import List, Tuple

from rich.console import Console
from rich.table import Table

sys.path.insert(0, str(Path(__file__).parent.parent))

from app.config.scenario_loader import validate_and_load  # noqa: E402
from app.simulation.engine import run_scenario  # noqa: E402

console = Console()

Check = Tuple[str, str, bool]


def check_light10() -> List[Check]:
    result = run_scenario(validate_and_load("light10"))
    m = result.manifest
    on = m.final_on_count
    return [
        ("light10", f"{on} gateways on (3 ± 1)", 2 <= on <= 4),
        ("light10", f"{sum(m.final_stations.values())} of 30 stations associated", sum(m.final_stations.values()) == 30),
        ("light10", f"{m.delivered_inelastic / 1e6:.1f} Mbit/s delivered (30 ± 5%)",
         abs(m.delivered_inelastic - 30e6) <= 1.5e6),
        ("light10", f"steady state at {m.steady_state_time}", m.steady_state_time is not None),
        ("light10", f"{len(m.invariant_violations)} invariant violations", not m.invariant_violations),
    ]


def check_heavy_double() -> List[Check]:
    m = run_scenario(validate_and_load("heavy-double")).manifest
    on = [n for gid, n in m.final_stations.items() if m.final_status[gid] != "off"]
    heavy = [gid for gid, status in m.final_status.items() if status == "heavy"]
    return [
        ("heavy-double", f"{m.final_on_count} gateways on (5 ± 1)", 4 <= m.final_on_count <= 6),
        ("heavy-double", f"station counts {sorted(on, reverse=True)}", bool(on) and max(on) - min(on) <= 5),
        ("heavy-double", f"{len(heavy)} Heavy gateways", not heavy),
        ("heavy-double", f"{len(m.invariant_violations)} invariant violations", not m.invariant_violations),
    ]


def check_bss_tcp_udp() -> List[Check]:
    config = validate_and_load("bss-tcp-udp")
    cycles = run_scenario(config).recorder.frame("cycles.csv")
    before = cycles[(cycles["time"] > 7.0) & (cycles["time"] < 11.5)]
    after = cycles[cycles["time"] > 13.0]
    spare = (before["B"] > 0).mean()
    heavy = (after["b_over_S"] < config.thresholds.T_R).mean()
    return [
        ("bss-tcp-udp", f"B > 0 in {spare:.0%} of cycles before t=12 s", spare >= 0.9),
        ("bss-tcp-udp", f"B/S < T_R in {heavy:.0%} of cycles after t=13 s", heavy >= 0.9),
    ]


def main():
    checks: List[Check] = []
    for run in (check_light10, check_heavy_double, check_bss_tcp_udp):
        with console.status(f"Running {run.__name__[len('check_'):]}..."):
            checks.extend(run())

    table = Table(title="Acceptance")
    table.add_column("Scenario", style="cyan")
    table.add_column("Outcome")
    table.add_column("", justify="center")
    for scenario, outcome, ok in checks:
        table.add_row(scenario, outcome, "✅" if ok else "❌")
    console.print(table)
    sys.exit(0 if all(ok for _, _, ok in checks) else 1)


if __name__ == "__main__":
    main()
