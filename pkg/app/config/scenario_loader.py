# Directory: fedgw-sim/app/config/scenario_loader.py

"""
Scenario Loader - YAML Scenario and Sweep Files with Diagnostics.

Loads a scenario from a path or a bundled name and reports every problem as a
(location, message) pair:
- YAML syntax errors carry the line and column of the fault
- schema errors carry the field path and, when it can be found, the line of
  the offending key
- semantic errors (stations out of radio range, stations homed on a gateway
  that starts off) are found after the schema is valid

Usage:
    from app.config.scenario_loader import validate_and_load

    config = validate_and_load("light10")
"""

import logging
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple, Union

import yaml
from pydantic import ValidationError

from ..schemas.scenario import ScenarioConfig, SweepSpec
from .settings import get_settings

logger = logging.getLogger(__name__)

SCENARIO_SUFFIXES = (".yaml", ".yml")

Diagnostic = Tuple[str, str]


class ScenarioError(ValueError):
    """A scenario or sweep file that cannot be used, with its diagnostics."""

    def __init__(self, source: str, diagnostics: Sequence[Diagnostic]):
        self.source = source
        self.diagnostics: List[Diagnostic] = list(diagnostics)
        lines = [f"{location}: {message}" for location, message in self.diagnostics]
        super().__init__(f"{source}: " + "; ".join(lines))


# =============================================================================
# Locating files
# =============================================================================

def resolve_scenario_path(name_or_path: Union[str, Path], scenario_dir: Optional[Path] = None) -> Path:
    """
    Map a bundled scenario name to its file; paths are returned as given.

    Raises:
        ScenarioError: If neither a file nor a bundled scenario matches
    """
    path = Path(name_or_path)
    if path.is_file():
        return path
    directory = Path(scenario_dir or get_settings().scenario_dir)
    for suffix in SCENARIO_SUFFIXES:
        candidate = directory / f"{name_or_path}{suffix}"
        if candidate.is_file():
            return candidate
    raise ScenarioError(str(name_or_path), [("file", "no such file or bundled scenario")])


# =============================================================================
# Parsing
# =============================================================================

def _parse(text: str, source: str) -> Tuple[Any, Optional[yaml.Node]]:
    try:
        data = yaml.safe_load(text)
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        location = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "yaml"
        raise ScenarioError(source, [(location, e.problem or str(e))]) from e
    except yaml.YAMLError as e:
        raise ScenarioError(source, [("yaml", str(e))]) from e
    if not isinstance(data, dict):
        raise ScenarioError(source, [("document", "top level must be a mapping")])
    return data, node


def _line_of(node: Optional[yaml.Node], loc: Sequence[Any]) -> Optional[int]:
    """1-based line of the deepest YAML node on a pydantic error path."""
    line = None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            match = next((v for k, v in node.value if k.value == str(key)), None)
            if match is None:
                return line
            node = match
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            break
        line = node.start_mark.line + 1
    return line


def _validation_diagnostics(error: ValidationError, node: Optional[yaml.Node]) -> List[Diagnostic]:
    diagnostics = []
    for item in error.errors():
        loc = [part for part in item["loc"] if not (isinstance(part, str) and part.startswith("function-"))]
        field = ".".join(str(part) for part in loc) or "scenario"
        line = _line_of(node, loc)
        location = f"{field} (line {line})" if line else field
        diagnostics.append((location, item["msg"]))
    return diagnostics


def semantic_diagnostics(config: ScenarioConfig) -> List[Diagnostic]:
    """Problems the schema cannot see: radio reachability and homes that start off."""
    from ..simulation.topology import Topology

    diagnostics: List[Diagnostic] = []
    initially_off = {g.id for g in config.topology.gateways if not g.initially_on}
    for station in config.all_stations():
        if station.home in initially_off:
            diagnostics.append((f"station {station.mac}", f"home gateway {station.home} starts off"))
    for mac in Topology(config).unreachable_stations():
        diagnostics.append((f"station {mac}", "no gateway in range at the lowest rate"))
    return diagnostics


def check_scenario(config: ScenarioConfig, source: str = "<scenario>") -> None:
    """
    Raises:
        ScenarioError: If a semantic check fails
    """
    diagnostics = semantic_diagnostics(config)
    if diagnostics:
        raise ScenarioError(source, diagnostics)


def load_scenario_text(text: str, source: str = "<string>", overrides: Optional[dict] = None) -> ScenarioConfig:
    """
    Validate scenario YAML text.

    Args:
        text: YAML document
        source: Name used in diagnostics
        overrides: Top-level keys replacing those of the document (e.g. seed)

    Raises:
        ScenarioError: On syntax, schema or semantic errors
    """
    data, node = _parse(text, source)
    if overrides:
        data.update(overrides)
    try:
        config = ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise ScenarioError(source, _validation_diagnostics(e, node)) from e

    check_scenario(config, source)
    return config


def validate_and_load(name_or_path: Union[str, Path], overrides: Optional[dict] = None) -> ScenarioConfig:
    """
    Load and fully validate a scenario file or bundled scenario.

    Raises:
        ScenarioError: If the file is missing or invalid
        OSError: If the file exists but cannot be read
    """
    path = resolve_scenario_path(name_or_path)
    config = load_scenario_text(path.read_text(encoding="utf-8"), source=str(path), overrides=overrides)
    logger.info(
        f"Loaded scenario '{config.name}' from {path}: {len(config.topology.gateways)} gateways, "
        f"{len(config.all_stations())} stations, {len(config.all_flows())} flows"
    )
    return config


def dump_scenario(config: ScenarioConfig) -> str:
    """YAML text that loads back into an equal ScenarioConfig."""
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False, default_flow_style=False)


# =============================================================================
# Sweeps
# =============================================================================

def load_sweep_spec(name_or_path: Union[str, Path]) -> SweepSpec:
    """
    Load a sweep file or bundled sweep.

    Raises:
        ScenarioError: If the file is missing or invalid
    """
    path = resolve_scenario_path(name_or_path)
    source = str(path)
    data, node = _parse(path.read_text(encoding="utf-8"), source)
    try:
        spec = SweepSpec.model_validate(data)
    except ValidationError as e:
        raise ScenarioError(source, _validation_diagnostics(e, node)) from e
    logger.info(
        f"Loaded sweep '{spec.name}': {len(spec.values)} values x "
        f"{max(1, len(spec.stations_per_gateway))} variants x {len(spec.seeds)} seeds"
    )
    return spec


def is_sweep_file(path: Path) -> bool:
    """Whether a bundled file holds a sweep spec rather than a scenario."""
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError:
        return False
    return isinstance(data, dict) and "parameter" in data and "base" in data
