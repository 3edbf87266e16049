# Directory: fedgw-sim/tests/conftest.py

"""Shared fixtures and hypothesis profiles."""

import os
from pathlib import Path

import hypothesis
import pytest

from app.config.scenario_loader import load_scenario_text, validate_and_load
from app.config.settings import Settings
from app.schemas.entities import CycleStats, MacParams, Thresholds

hypothesis.settings.register_profile("fast", max_examples=25, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture
def mac() -> MacParams:
    return MacParams.ofdm_80211g()


@pytest.fixture
def thresholds() -> Thresholds:
    return Thresholds()


@pytest.fixture
def stats_54() -> CycleStats:
    """Three nodes, 1500 B frames at 54 Mbit/s, no errors."""
    return CycleStats(
        n_active=3, cycle_duration=0.1, avg_payload=12000.0,
        max_payload=12000.0, avg_rate=54e6, filtered_per=0.0,
    )


@pytest.fixture
def settings(tmp_path: Path) -> Settings:
    return Settings(output_dir=tmp_path / "runs", check_invariants=True, sweep_workers=1)


@pytest.fixture
def bundled():
    """Load a bundled scenario with optional top-level overrides."""
    def load(name: str, **overrides):
        return validate_and_load(name, overrides=overrides or None)
    return load


SMALL_FEDERATION = """
name: small
seed: 3
duration: 2.0
topology:
  houses:
    - {id: a, x: 0.0, y: 0.0}
    - {id: b, x: 20.0, y: 0.0}
  gateways:
    - {id: ga, house: a}
    - {id: gb, house: b}
population:
  stations_per_gateway: 2
flow_templates:
  - {protocol: udp, offered_load: 5.0e+5}
"""


@pytest.fixture
def small_federation():
    return load_scenario_text(SMALL_FEDERATION, source="small")


@pytest.fixture
def small_variant():
    """The small federation with top-level keys replaced."""
    def load(**overrides):
        return load_scenario_text(SMALL_FEDERATION, source="small", overrides=overrides)
    return load


@pytest.fixture
def small_federation_file(tmp_path: Path) -> Path:
    path = tmp_path / "small.yaml"
    path.write_text(SMALL_FEDERATION, encoding="utf-8")
    return path
