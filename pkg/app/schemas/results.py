# Copyright 2024
# Directory: fedgw-sim/app/schemas/results.py

"""
Result Schemas - Output Records Written by Runs and Sweeps.

Pydantic models that define the rows of every output file:
- CycleRecord: one row of cycles.csv per gateway cycle
- ProtocolRecord: one row of protocol.csv per sent message
- GatewayRecord: one row of gateways.csv per gateway state change
- AssociationRecord: one row of assoc.csv per (re)association
- RunManifest: manifest.json written next to the CSV files
- SweepRow: one row of runs.csv per sweep point
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field


# ============================================================================
# Run Records
# ============================================================================

class CycleRecord(BaseModel):
    """Per-gateway, per-cycle monitoring and assessment output."""
    time: float = Field(..., description="Cycle end time (s)")
    gateway: str
    cycle: int = Field(..., ge=0)
    n_active: int = Field(..., ge=0)
    cycle_duration: float
    avg_payload: float
    max_payload: float
    avg_rate: float
    p_e: float
    S: float
    S_n: float
    B: float
    b_over_S: float
    status: str


class ProtocolRecord(BaseModel):
    """A federation message as sent."""
    time: float = Field(..., description="Send time (s)")
    type: str
    procedure: str
    origin: str
    destination: str = Field("*", description="'*' for multicast messages")
    summary: str = ""


class GatewayRecord(BaseModel):
    """A gateway power state change, or the initial state at t=0."""
    time: float
    gateway: str
    state: str = Field(..., description="'on' or 'off'")
    n_stations: int = Field(..., ge=0)
    on_count: int = Field(..., ge=0, description="Gateways on after this change")


class AssociationRecord(BaseModel):
    """A station (re)association."""
    time: float
    station: str
    from_gateway: str = Field("", description="Empty for the initial association")
    to_gateway: str
    reason: str = Field(..., description="initial, light, heavy or fallback")


# ============================================================================
# Manifest
# ============================================================================

class RunManifest(BaseModel):
    """Summary of one run, written as manifest.json."""
    scenario: str
    seed: int
    duration: float = Field(..., description="Simulated time actually covered (s)")
    config_hash: str = Field(..., description="SHA-256 of the canonical scenario dump")
    n_gateways: int
    n_stations: int
    final_on_count: int
    min_on_count: int
    steady_state_time: Optional[float] = Field(None, description="Time steady state was reached")
    message_counts: Dict[str, int] = Field(default_factory=dict)
    invariant_violations: List[str] = Field(default_factory=list)
    delivered_inelastic: float = Field(0.0, description="Inelastic throughput over the final window (bit/s)")
    delivered_elastic: float = Field(0.0, description="Elastic throughput over the final window (bit/s)")
    final_status: Dict[str, str] = Field(default_factory=dict, description="Gateway -> last status")
    final_stations: Dict[str, int] = Field(default_factory=dict, description="Gateway -> associated WSs")
    files: List[str] = Field(default_factory=list)
    package_version: str = ""


# ============================================================================
# Sweep Records
# ============================================================================

class SweepRow(BaseModel):
    """One sweep point (parameter value, population variant, seed)."""
    value: float
    stations_per_gateway: Optional[int] = None
    seed: int
    n_gateways: int
    final_on_count: int
    min_on_count: int
    off_fraction: float = Field(..., ge=0, le=1, description="Gateways off at steady state")
    mean_stations_per_on: float = Field(..., ge=0, description="WSs per on gateway at steady state")
    steady_state_time: Optional[float] = None
    messages: int
    invariant_violations: int = 0
