# Copyright 2024
# Directory: fedgw-sim/app/main.py

"""
Command-line front end for the federated gateway simulator.

Subcommands:
- validate: load a scenario and print its summary
- run: simulate one scenario and write its bundle
- sweep: run a parameter sweep and write runs.csv / summary.csv
- verify: re-check a run bundle or a sweep directory
- scenarios: list the bundled scenarios and sweeps

Exit codes: 0 ok, 1 configuration error, 2 invariant violation (or failed
verification), 3 I/O error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from . import __version__
from .config.scenario_loader import ScenarioError, load_sweep_spec, validate_and_load
from .config.settings import get_settings
from .data import BUNDLED_SCENARIOS, BUNDLED_SWEEPS
from .schemas.scenario import ScenarioConfig
from .services.sweep import RUNS_FILE, run_sweep, verify_sweep
from .simulation.engine import run_scenario
from .simulation.invariants import InvariantViolation
from .simulation.metrics import verify_bundle
from .simulation.topology import Topology

logger = logging.getLogger(__name__)

settings = get_settings()
console = Console()

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2
EXIT_IO = 3


def configure_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=(level or settings.log_level).upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )


# =============================================================================
# Helpers
# =============================================================================

def _overrides(args: argparse.Namespace) -> dict:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "duration", None) is not None:
        overrides["duration"] = args.duration
    return overrides


def _strict(args: argparse.Namespace) -> Optional[bool]:
    flag = getattr(args, "check_invariants", None)
    return None if flag is None else flag == "on"


def _out_dir(args: argparse.Namespace, name: str) -> Path:
    return Path(args.out) if args.out else settings.output_dir / name


def _scenario_table(config: ScenarioConfig) -> Table:
    topology = Topology(config)
    th = config.thresholds
    table = Table(title=f"Scenario '{config.name}'", show_header=False)
    table.add_column("Field", style="cyan")
    table.add_column("Value")
    table.add_row("Seed / duration", f"{config.seed} / {config.duration:g} s")
    table.add_row("Houses / gateways", f"{len(config.topology.houses)} / {len(config.topology.gateways)}")
    table.add_row("Stations / flows", f"{len(config.all_stations())} / {len(config.all_flows())}")
    table.add_row("1 Mbit/s visibility", f"{topology.visibility():.2f}")
    table.add_row("Thresholds", f"T_R={th.T_R} T_L={th.T_L} T_A={th.T_A} N_L={th.N_L}")
    table.add_row("Cycle", f"T_max={config.monitor.T_max} s alpha={config.monitor.ewma_alpha}")
    table.add_row(
        "Protocol",
        "disabled" if not config.protocol.enabled else
        f"tau_r={config.protocol.response_timeout} s tau_p={config.protocol.probe_window} s "
        f"p_wake={config.protocol.p_wake}",
    )
    return table


def _print_problems(title: str, problems: List[str]) -> None:
    console.print(Panel("\n".join(problems), title=title, border_style="red"))


# =============================================================================
# Subcommands
# =============================================================================

def cmd_validate(args: argparse.Namespace) -> int:
    config = validate_and_load(args.config, overrides=_overrides(args))
    console.print(_scenario_table(config))
    console.print(f"[green]✓[/green] {args.config} is valid")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    config = validate_and_load(args.config, overrides=_overrides(args))
    out_dir = _out_dir(args, config.name)
    result = run_scenario(config, out_dir=out_dir, check_invariants=_strict(args))
    manifest = result.manifest

    table = Table(title=f"Run '{manifest.scenario}' (seed {manifest.seed})")
    table.add_column("Gateway", style="cyan")
    table.add_column("Status")
    table.add_column("Stations", justify="right")
    for gateway, status in manifest.final_status.items():
        table.add_row(gateway, status, str(manifest.final_stations.get(gateway, 0)))
    console.print(table)
    steady = "not reached" if manifest.steady_state_time is None else f"{manifest.steady_state_time:.2f} s"
    console.print(
        f"On gateways: {manifest.final_on_count}/{manifest.n_gateways}, steady state {steady}, "
        f"{sum(manifest.message_counts.values())} messages, {result.wall_clock_s:.2f} s wall clock"
    )
    console.print(f"Bundle written to {out_dir}")
    if manifest.invariant_violations:
        _print_problems("Invariant violations", manifest.invariant_violations)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = load_sweep_spec(args.config)
    out_dir = _out_dir(args, spec.name)
    result = run_sweep(spec, out_dir, workers=args.workers)
    violations = sum(r.invariant_violations for r in result.runs)
    console.print(f"[green]✓[/green] {len(result.runs)} runs written to {out_dir}")
    if violations:
        console.print(f"[red]{violations} invariant violation(s) recorded across the sweep[/red]")
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    target = Path(args.path)
    if (target / RUNS_FILE).is_file():
        problems = verify_sweep(target)
        kind = "sweep"
    else:
        problems = verify_bundle(target)
        kind = "run bundle"
    if problems:
        _print_problems(f"{target} failed verification", problems)
        return EXIT_INVARIANT
    console.print(f"[green]✓[/green] {kind} {target} verified")
    return EXIT_OK


def cmd_scenarios(args: argparse.Namespace) -> int:
    table = Table(title="Bundled scenarios")
    table.add_column("Name", style="cyan", no_wrap=True)
    table.add_column("Kind")
    table.add_column("Description")
    for name, description in BUNDLED_SCENARIOS.items():
        table.add_row(name, "scenario", description)
    for name, description in BUNDLED_SWEEPS.items():
        table.add_row(name, "sweep", description)
    console.print(table)
    return EXIT_OK


# =============================================================================
# Entry point
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedgw-sim",
        description="Deterministic simulator of federated residential 802.11 gateways",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="Overrides FEDGW_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="Scenario file or bundled scenario name")
        p.add_argument("--seed", type=int, default=None, help="Override the scenario seed")
        p.add_argument("--duration", type=float, default=None, help="Override the simulated time (s)")

    p = sub.add_parser("validate", help="Load and check a scenario")
    scenario_args(p)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("run", help="Run one scenario")
    scenario_args(p)
    p.add_argument("--out", default=None, help="Bundle directory (default: <output_dir>/<name>)")
    p.add_argument("--check-invariants", choices=["on", "off"], default=None,
                   help="Abort on the first invariant violation (default from FEDGW_CHECK_INVARIANTS)")
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("sweep", help="Run a parameter sweep")
    p.add_argument("--config", required=True, help="Sweep file or bundled sweep name")
    p.add_argument("--out", default=None, help="Sweep directory (default: <output_dir>/<name>)")
    p.add_argument("--workers", type=int, default=None, help="Worker processes (default from FEDGW_SWEEP_WORKERS)")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("verify", help="Re-check a run bundle or a sweep directory")
    p.add_argument("path", help="Run or sweep directory")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("scenarios", help="List bundled scenarios")
    p.set_defaults(handler=cmd_scenarios)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except ScenarioError as e:
        logger.error(f"Invalid configuration: {e}")
        _print_problems(f"Invalid configuration: {e.source}", [f"{loc}: {msg}" for loc, msg in e.diagnostics])
        return EXIT_CONFIG
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        _print_problems("Invalid configuration", [str(e)])
        return EXIT_CONFIG
    except InvariantViolation as e:
        logger.error(f"Run aborted: {e}")
        _print_problems(f"Invariant violated: {e.rule}", [str(e)])
        return EXIT_INVARIANT
    except OSError as e:
        logger.error(f"I/O error: {e}", exc_info=True)
        _print_problems("I/O error", [str(e)])
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
