# Directory: fedgw-sim/app/simulation/metrics.py

"""
Metrics Recorder - Run Output Buffering and Export.

Buffers the rows of a run and writes the bundle on completion:
- cycles.csv, protocol.csv, gateways.csv, assoc.csv
- manifest.json, plus scenario.yaml (the canonical scenario the manifest hash covers)

Column order follows the result schemas in app/schemas/results.py, so empty
runs still produce files with valid headers.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Type

import pandas as pd
import yaml
from pydantic import BaseModel

from ..schemas.results import AssociationRecord, CycleRecord, GatewayRecord, ProtocolRecord, RunManifest
from ..schemas.scenario import ScenarioConfig

logger = logging.getLogger(__name__)

BUNDLE_FILES: Dict[str, Type[BaseModel]] = {
    "cycles.csv": CycleRecord,
    "protocol.csv": ProtocolRecord,
    "gateways.csv": GatewayRecord,
    "assoc.csv": AssociationRecord,
}
MANIFEST_FILE = "manifest.json"
SCENARIO_FILE = "scenario.yaml"

# Digits kept when writing floats
FLOAT_FORMAT = "%.10g"


def canonical_dump(config: ScenarioConfig) -> str:
    """Stable YAML text of a scenario (sorted keys, defaults included)."""
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=True, default_flow_style=False)


def config_hash(config: ScenarioConfig) -> str:
    return hashlib.sha256(canonical_dump(config).encode("utf-8")).hexdigest()


def columns(model: Type[BaseModel]) -> List[str]:
    return list(model.model_fields)


class MetricsRecorder:
    """Collects the records of one run."""

    def __init__(self, record_cycles: bool = True):
        self.record_cycles = record_cycles
        self.cycles: List[CycleRecord] = []
        self.protocol: List[ProtocolRecord] = []
        self.gateways: List[GatewayRecord] = []
        self.associations: List[AssociationRecord] = []

    def add_cycle(self, record: CycleRecord) -> None:
        if self.record_cycles:
            self.cycles.append(record)

    def add_message(self, record: ProtocolRecord) -> None:
        self.protocol.append(record)

    def add_gateway(self, record: GatewayRecord) -> None:
        self.gateways.append(record)

    def add_association(self, record: AssociationRecord) -> None:
        self.associations.append(record)

    def frame(self, name: str) -> pd.DataFrame:
        """One output table as a DataFrame with the schema's columns."""
        model = BUNDLE_FILES[name]
        rows = {
            "cycles.csv": self.cycles,
            "protocol.csv": self.protocol,
            "gateways.csv": self.gateways,
            "assoc.csv": self.associations,
        }[name]
        return pd.DataFrame([r.model_dump() for r in rows], columns=columns(model))

    def write(self, out_dir: Path, manifest: RunManifest, scenario_text: Optional[str] = None) -> List[Path]:
        """
        Write the four CSV files, the scenario and the manifest.

        Raises:
            OSError: If the directory or a file cannot be written
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for name in BUNDLE_FILES:
            path = out_dir / name
            self.frame(name).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
            written.append(path)
        if scenario_text is not None:
            path = out_dir / SCENARIO_FILE
            path.write_text(scenario_text, encoding="utf-8")
            written.append(path)
        path = out_dir / MANIFEST_FILE
        path.write_text(json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n")
        written.append(path)
        logger.info(f"Wrote run bundle to {out_dir}")
        return written


def read_manifest(run_dir: Path) -> RunManifest:
    return RunManifest.model_validate_json((Path(run_dir) / MANIFEST_FILE).read_text())


def verify_bundle(run_dir: Path) -> List[str]:
    """
    Re-check a run bundle on disk.

    Checks that every listed file exists, that the CSV headers match the
    record schemas and that scenario.yaml hashes to the manifest's config hash.

    Returns:
        Mismatch descriptions; empty when the bundle is consistent

    Raises:
        OSError: If the manifest cannot be read
    """
    run_dir = Path(run_dir)
    manifest = read_manifest(run_dir)
    problems: List[str] = []
    for name in manifest.files:
        if not (run_dir / name).is_file():
            problems.append(f"{name}: listed in the manifest but missing")
    for name, model in BUNDLE_FILES.items():
        path = run_dir / name
        if not path.is_file():
            continue
        header = list(pd.read_csv(path, nrows=0).columns)
        if header != columns(model):
            problems.append(f"{name}: header {header} != {columns(model)}")
    scenario = run_dir / SCENARIO_FILE
    if scenario.is_file():
        digest = hashlib.sha256(scenario.read_text(encoding="utf-8").encode("utf-8")).hexdigest()
        if digest != manifest.config_hash:
            problems.append(f"{SCENARIO_FILE}: hash {digest[:12]} != manifest {manifest.config_hash[:12]}")
    else:
        problems.append(f"{SCENARIO_FILE}: missing, config hash not checked")
    return problems
