#!/usr/bin/env python3
# Copyright 2024
# Directory: fedgw-sim/devtools/check_determinism.py

"""
Determinism Check.

Runs a scenario twice with the same seed and compares the SHA-256 digest of
every file of the two bundles.

Usage:
    python devtools/check_determinism.py [scenario] [duration]
"""

import hashlib
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from app.config.scenario_loader import validate_and_load  # noqa: E402
from app.simulation.engine import run_scenario  # noqa: E402


def digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def main():
    name = sys.argv[1] if len(sys.argv) > 1 else "light10"
    duration = float(sys.argv[2]) if len(sys.argv) > 2 else 10.0
    config = validate_and_load(name, overrides={"duration": duration})

    print(f"🔁 Running '{name}' twice for {duration:g}s (seed {config.seed})")
    with tempfile.TemporaryDirectory() as tmp:
        first = run_scenario(config, out_dir=Path(tmp) / "a")
        second = run_scenario(config, out_dir=Path(tmp) / "b")

        differing = [
            path.name for path in first.files
            if digest(path) != digest(Path(tmp) / "b" / path.name)
        ]

    print(f"   ⏱️  {first.wall_clock_s:.2f}s and {second.wall_clock_s:.2f}s wall clock")
    if differing:
        print(f"❌ Bundles differ in: {', '.join(differing)}")
        sys.exit(1)
    print(f"✅ {len(first.files)} files identical")


if __name__ == "__main__":
    main()
