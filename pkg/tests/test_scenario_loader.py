# Directory: fedgw-sim/tests/test_scenario_loader.py

"""Scenario and sweep loading: bundled files, diagnostics and semantic checks."""

import pytest

from app.config.scenario_loader import (
    ScenarioError,
    dump_scenario,
    is_sweep_file,
    load_scenario_text,
    load_sweep_spec,
    resolve_scenario_path,
    validate_and_load,
)
from app.data import BUNDLED_SCENARIOS, BUNDLED_SWEEPS, SCENARIO_DIR
from app.schemas.entities import Thresholds


def scenario(*lines: str) -> str:
    return "\n".join(lines) + "\n"


BASE = (
    "name: tiny",
    "topology:",
    "  houses:",
    "    - {id: a, x: 0.0, y: 0.0}",
    "  gateways:",
    "    - {id: ga, house: a}",
)


@pytest.mark.parametrize("name", sorted(BUNDLED_SCENARIOS))
def test_bundled_scenarios_load(name):
    config = validate_and_load(name)
    assert config.name == name


@pytest.mark.parametrize("name", sorted(BUNDLED_SWEEPS))
def test_bundled_sweeps_load(name):
    spec = load_sweep_spec(name)
    assert spec.name == name
    assert is_sweep_file(resolve_scenario_path(name))
    validate_and_load(spec.base)


def test_light10_uses_default_thresholds():
    config = validate_and_load("light10")
    assert len(config.topology.gateways) == 10
    assert len(config.all_stations()) == 30
    assert len(config.all_flows()) == 30
    assert config.thresholds == Thresholds()
    assert config.protocol.enabled
    assert not is_sweep_file(SCENARIO_DIR / "light10.yaml")


def test_sweep_spec_grid():
    spec = load_sweep_spec("sweep-load")
    assert spec.parameter == "flow_templates.0.offered_load"
    assert len(spec.values) == 5
    assert spec.stations_per_gateway == [2, 4, 6]
    assert len(spec.seeds) == 10


def test_overrides_replace_top_level_keys():
    config = validate_and_load("light10", overrides={"seed": 7, "duration": 2.5})
    assert config.seed == 7
    assert config.duration == 2.5


def test_misordered_thresholds_rejected():
    with pytest.raises(ScenarioError) as info:
        validate_and_load("light10", overrides={"thresholds": {"T_R": 0.6}})
    locations = [location for location, _ in info.value.diagnostics]
    assert any(location.startswith("thresholds") for location in locations)
    assert "T_R" in str(info.value)


def test_unknown_name_rejected():
    with pytest.raises(ScenarioError) as info:
        validate_and_load("no-such-scenario")
    assert info.value.diagnostics == [("file", "no such file or bundled scenario")]


def test_yaml_syntax_error_has_line_and_column():
    text = scenario("name: broken", "topology:", "  houses: [")
    with pytest.raises(ScenarioError) as info:
        load_scenario_text(text, source="broken.yaml")
    (location, _), = info.value.diagnostics
    assert location.startswith("line ")
    assert "column" in location
    assert info.value.source == "broken.yaml"


def test_schema_error_points_at_the_line():
    text = scenario(*BASE[:-1], "    - {id: ga, house: a, channel: -1}")
    with pytest.raises(ScenarioError) as info:
        load_scenario_text(text)
    (location, message), = info.value.diagnostics
    assert location == "topology.gateways.0.channel (line 6)"
    assert "greater than or equal" in message


def test_unknown_key_rejected():
    text = scenario(*BASE, "colour: blue")
    with pytest.raises(ScenarioError) as info:
        load_scenario_text(text)
    assert info.value.diagnostics[0][0] == "colour (line 7)"


def test_top_level_must_be_a_mapping():
    with pytest.raises(ScenarioError) as info:
        load_scenario_text("- just\n- a list\n")
    assert info.value.diagnostics == [("document", "top level must be a mapping")]


def test_unreachable_station_rejected():
    text = scenario(*BASE, "stations:", '  - {mac: "02:00:00:00:00:09", home: ga, x: 5000.0, y: 0.0}')
    with pytest.raises(ScenarioError) as info:
        load_scenario_text(text)
    assert info.value.diagnostics == [
        ("station 02:00:00:00:00:09", "no gateway in range at the lowest rate"),
    ]


def test_station_homed_on_an_off_gateway_rejected():
    text = scenario(
        *BASE[:-1],
        "    - {id: ga, house: a}",
        "    - {id: gb, house: a, x: 2.0, y: 0.0, initially_on: false}",
        "stations:",
        '  - {mac: "02:00:00:00:00:01", home: gb, x: 1.0, y: 1.0}',
    )
    with pytest.raises(ScenarioError) as info:
        load_scenario_text(text)
    assert ("station 02:00:00:00:00:01", "home gateway gb starts off") in info.value.diagnostics


def test_inelastic_flow_needs_a_load():
    text = scenario(
        *BASE,
        "stations:",
        '  - {mac: "02:00:00:00:00:01", home: ga, x: 1.0, y: 0.0}',
        "flows:",
        '  - {station: "02:00:00:00:00:01", protocol: udp}',
    )
    with pytest.raises(ScenarioError, match="offered_load"):
        load_scenario_text(text)


@pytest.mark.parametrize("name", ["light10", "bss-tcp-udp"])
def test_dump_loads_back_equal(name):
    config = validate_and_load(name)
    assert load_scenario_text(dump_scenario(config)) == config
