#!/usr/bin/env python3
# Copyright 2024
# Directory: fedgw-sim/devtools/test_setup.py

"""
Setup Verification Script.

Checks the simulator installation without running a full scenario.
Run this after installing the requirements.

Usage:
    python devtools/test_setup.py

Tests:
    1. Module imports
    2. Settings
    3. Bundled scenarios load and validate
    4. The saturation model solves
    5. A two-second run writes a consistent bundle
"""

import sys
import tempfile
from pathlib import Path

# Add the project root to Python path
sys.path.insert(0, str(Path(__file__).parent.parent))


def test_setup() -> bool:
    """Test the complete simulator setup."""
    print("🧪 Testing fedgw-sim setup...")
    print("=" * 50)

    try:
        print("1️⃣  Testing imports...")
        from app.config.scenario_loader import load_sweep_spec, validate_and_load
        from app.config.settings import get_settings
        from app.data import BUNDLED_SCENARIOS, BUNDLED_SWEEPS
        from app.schemas.entities import CycleStats, MacParams
        from app.services.mac_model import saturation_throughput
        from app.simulation.engine import run_scenario
        from app.simulation.metrics import verify_bundle
        print("   ✅ All modules imported successfully")

        print("\n2️⃣  Testing settings...")
        settings = get_settings()
        print(f"   📂 Scenario directory: {settings.scenario_dir}")
        print(f"   📂 Output directory: {settings.output_dir}")
        print(f"   🔒 Invariant checking: {'on' if settings.check_invariants else 'off'}")
        if not Path(settings.scenario_dir).is_dir():
            print("   ❌ Scenario directory does not exist")
            return False
        print("   ✅ Settings loaded")

        print("\n3️⃣  Testing bundled scenarios...")
        for name in BUNDLED_SCENARIOS:
            config = validate_and_load(name)
            print(f"   📄 {name}: {len(config.topology.gateways)} gateways, {len(config.all_stations())} stations")
        for name in BUNDLED_SWEEPS:
            spec = load_sweep_spec(name)
            print(f"   📈 {name}: sweep of {spec.parameter}")
        print("   ✅ Every bundled file is valid")

        print("\n4️⃣  Testing the saturation model...")
        stats = CycleStats(
            n_active=10, cycle_duration=0.1, avg_payload=12000.0,
            max_payload=12000.0, avg_rate=54e6, filtered_per=0.0,
        )
        result = saturation_throughput(stats, MacParams())
        print(f"   📊 S(10 nodes, 1500 B, 54 Mbit/s) = {result.aggregate_S / 1e6:.2f} Mbit/s")
        print("   ✅ Fixed point solved")

        print("\n5️⃣  Testing a short run...")
        config = validate_and_load("light10", overrides={"duration": 2.0})
        with tempfile.TemporaryDirectory() as tmp:
            run = run_scenario(config, out_dir=Path(tmp) / "run")
            problems = verify_bundle(Path(tmp) / "run")
        if problems:
            print(f"   ❌ Bundle failed verification: {problems}")
            return False
        print(f"   ✅ Run finished in {run.wall_clock_s:.2f}s wall clock")

        print("\n🎉 ALL TESTS PASSED!")
        print("=" * 50)
        return True

    except ImportError as e:
        print(f"   ❌ Import error: {e}")
        print("   💡 Make sure you've installed dependencies: pip install -r requirements.txt")
        return False

    except Exception as e:
        print(f"   ❌ Setup test failed: {e}")
        return False


def main():
    print("🔧 fedgw-sim Setup Verification\n")
    if test_setup():
        print("\n🎯 Next Steps:")
        print("1. List scenarios: python main.py scenarios")
        print("2. Run one: python main.py run --config light10 --out runs/light10")
        print("3. Check it: python main.py verify runs/light10")
        sys.exit(0)
    print("\n❌ Setup incomplete. Please fix the issues above and try again.")
    sys.exit(1)


if __name__ == "__main__":
    main()
