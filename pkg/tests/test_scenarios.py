# Directory: fedgw-sim/tests/test_scenarios.py

"""Bundled scenarios run end to end. Minutes of simulated time each, hence slow."""

import pytest

from app.data import BUNDLED_SCENARIOS
from app.simulation.engine import run_scenario

pytestmark = pytest.mark.slow


def test_light10_consolidates(bundled, settings):
    result = run_scenario(bundled("light10"), settings=settings)
    manifest = result.manifest

    assert manifest.invariant_violations == []
    # ideally 3 gateways of 10 stations; 2 of 15 is also reachable at 1 Mbit/s
    assert 2 <= manifest.final_on_count <= 4
    assert sum(manifest.final_stations.values()) == 30
    assert "heavy" not in manifest.final_status.values()
    assert manifest.delivered_inelastic == pytest.approx(30e6, rel=0.1)

    gateways = result.recorder.frame("gateways.csv")
    assert (gateways.loc[gateways["state"] == "off", "n_stations"] == 0).all()


def test_light10_on_count_is_seed_stable(bundled, settings):
    counts = [run_scenario(bundled("light10", seed=seed), settings=settings).manifest.final_on_count
              for seed in (2, 3)]
    assert all(2 <= c <= 4 for c in counts)


def test_heavy_double_recovers(bundled, settings):
    manifest = run_scenario(bundled("heavy-double"), settings=settings).manifest

    assert manifest.invariant_violations == []
    assert 4 <= manifest.final_on_count <= 6
    assert manifest.final_on_count > manifest.min_on_count
    assert "heavy" not in manifest.final_status.values()
    on = [n for gid, n in manifest.final_stations.items() if manifest.final_status[gid] != "off"]
    assert max(on) - min(on) <= 5


def test_inelastic_flows_push_out_greedy_tcp(bundled, settings):
    config = bundled("bss-tcp-udp")
    cycles = run_scenario(config, settings=settings).recorder.frame("cycles.csv")

    before = cycles[(cycles["time"] > 7.0) & (cycles["time"] < 11.5)]
    after = cycles[cycles["time"] > 13.0]
    assert (before["B"] > 0).mean() >= 0.9
    assert (after["b_over_S"] < config.thresholds.T_R).mean() >= 0.9


@pytest.mark.parametrize("name", sorted(BUNDLED_SCENARIOS))
def test_bundled_scenario_has_no_violations(bundled, settings, name):
    manifest = run_scenario(bundled(name, duration=15.0), settings=settings).manifest
    assert manifest.invariant_violations == []
