#!/usr/bin/env python3
# Copyright 2024
# Directory: fedgw-sim/devtools/verify_model.py

"""
Saturation Model Verification Script.

Compares the analytical saturation throughput with a slot-level Monte Carlo
DCF for a grid of node counts and error probabilities, and prints the
relative error of both collision-duration variants.

Usage:
    python devtools/verify_model.py [slots]
"""

import sys
from pathlib import Path

from rich.console import Console
from rich.table import Table

sys.path.insert(0, str(Path(__file__).parent.parent))

from app.schemas.entities import CycleStats, MacParams  # noqa: E402
from app.services.dcf_montecarlo import simulate_dcf  # noqa: E402
from app.services.mac_model import saturation_throughput  # noqa: E402

console = Console()

PAYLOAD = 12000.0
RATE = 54e6


def main():
    slots = int(sys.argv[1]) if len(sys.argv) > 1 else 1_000_000
    mac = MacParams()

    table = Table(title=f"Model vs Monte Carlo ({slots:,} slots, 1500 B at 54 Mbit/s)")
    for column in ("N", "p_e", "MC (Mbit/s)", "worst-case T_c", "exact T_c", "error"):
        table.add_column(column, justify="right")

    worst_error = 0.0
    for n in (2, 5, 10):
        for p_e in (0.0, 0.1):
            stats = CycleStats(
                n_active=n, cycle_duration=0.1, avg_payload=PAYLOAD,
                max_payload=PAYLOAD, avg_rate=RATE, filtered_per=p_e,
            )
            worst = saturation_throughput(stats, mac).aggregate_S
            exact = saturation_throughput(stats, mac, exact_collisions=True).aggregate_S
            mc = simulate_dcf(n, PAYLOAD, RATE, p_e, mac, slots=slots, seed=n).throughput
            error = abs(exact - mc) / mc
            worst_error = max(worst_error, error)
            style = "green" if error < 0.05 else "red"
            table.add_row(
                str(n), f"{p_e:g}", f"{mc / 1e6:.3f}", f"{worst / 1e6:.3f}", f"{exact / 1e6:.3f}",
                f"[{style}]{error:.2%}[/{style}]",
            )

    console.print(table)
    if worst_error >= 0.05:
        console.print(f"[red]❌ Largest error {worst_error:.2%} exceeds 5%[/red]")
        sys.exit(1)
    console.print(f"[green]✅ Largest error {worst_error:.2%}[/green]")


if __name__ == "__main__":
    main()
