# Directory: fedgw-sim/app/data/__init__.py

"""
Bundled scenario and sweep files (app/data/scenarios).
"""

from pathlib import Path
from typing import Dict

SCENARIO_DIR = Path(__file__).resolve().parent / "scenarios"

BUNDLED_SCENARIOS: Dict[str, str] = {
    "chicago10": "Ten-house block, topology only (radio calibration)",
    "light10": "10 gateways x 3 stations at 1 Mbit/s UDP; consolidates and switches gateways off",
    "heavy-double": "light10 with every load doubled between 60 s and 68 s",
    "bss-tcp-udp": "One BSS: greedy TCP, then three 8 Mbit/s UDP uploads",
    "bss-all-mixed": "One BSS: three stations with UDP and greedy TCP each",
    "bss-downlink-tcp": "One BSS: UDP uploads with greedy TCP downloads",
}

BUNDLED_SWEEPS: Dict[str, str] = {
    "sweep-load": "Off-gateway share vs offered load for 2, 4 and 6 stations per gateway",
}
