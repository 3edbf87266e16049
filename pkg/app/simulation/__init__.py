# Directory: fedgw-sim/app/simulation/__init__.py

"""
Simulation Module - Deterministic Discrete-Event Runs.

This module contains:
- engine.py: the event loop, cycles, bus and associations
- allocation.py: fluid per-cycle throughput grants
- traffic.py: flow schedule and frame streams
- topology.py: geometry and per-link SNR
- invariants.py: global invariant checker
- metrics.py: run bundle recording and export
- events.py / rng.py: event queue and seeded substreams
"""

from .engine import RunResult, SimulationEngine, run_scenario
from .invariants import InvariantViolation
from .metrics import BUNDLE_FILES, MANIFEST_FILE, SCENARIO_FILE, canonical_dump, config_hash, read_manifest, verify_bundle
from .topology import Topology

__all__ = [
    'RunResult',
    'SimulationEngine',
    'run_scenario',
    'InvariantViolation',
    'BUNDLE_FILES',
    'MANIFEST_FILE',
    'SCENARIO_FILE',
    'canonical_dump',
    'config_hash',
    'read_manifest',
    'verify_bundle',
    'Topology',
]
