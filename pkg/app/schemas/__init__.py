# Directory: fedgw-sim/app/schemas/__init__.py

"""
Schemas Module - Typed Data Definitions.

This module contains Pydantic models for:
- entities.py: MAC, channel, monitor and assessment value types
- messages.py: Federation protocol messages
- scenario.py: Scenario and sweep input validation
- results.py: Output record formats
"""

from .entities import (
    ALL_RATES,
    LEGACY_RATES,
    OFDM_RATES,
    CandidateStation,
    ChannelParams,
    CycleStats,
    Direction,
    FrameMeta,
    GatewayProfile,
    GatewayStatus,
    LinkState,
    MacParams,
    ProbeObservation,
    SaturationResult,
    StationProfile,
    StatusReport,
    Thresholds,
    TrafficClass,
    TrafficProfile,
)
from .messages import (
    Abort,
    AdvertisedStation,
    AllocationRequest,
    AllocationResponse,
    HandoverCommand,
    MessageType,
    OfferedCombo,
    OffloadRequest,
    OffloadResponse,
    ProtocolMessage,
)
from .results import (
    AssociationRecord,
    CycleRecord,
    GatewayRecord,
    ProtocolRecord,
    RunManifest,
    SweepRow,
)
from .scenario import (
    FlowSpec,
    FlowTemplate,
    GatewaySpec,
    HouseSpec,
    MonitorConfig,
    PopulationSpec,
    ProtocolConfig,
    ScenarioConfig,
    StationSpec,
    SweepSpec,
    TopologySpec,
)

__all__ = [
    'ALL_RATES',
    'LEGACY_RATES',
    'OFDM_RATES',
    'CandidateStation',
    'ChannelParams',
    'CycleStats',
    'Direction',
    'FrameMeta',
    'GatewayProfile',
    'GatewayStatus',
    'LinkState',
    'MacParams',
    'ProbeObservation',
    'SaturationResult',
    'StationProfile',
    'StatusReport',
    'Thresholds',
    'TrafficClass',
    'TrafficProfile',
    'Abort',
    'AdvertisedStation',
    'AllocationRequest',
    'AllocationResponse',
    'HandoverCommand',
    'MessageType',
    'OfferedCombo',
    'OffloadRequest',
    'OffloadResponse',
    'ProtocolMessage',
    'AssociationRecord',
    'CycleRecord',
    'GatewayRecord',
    'ProtocolRecord',
    'RunManifest',
    'SweepRow',
    'FlowSpec',
    'FlowTemplate',
    'GatewaySpec',
    'HouseSpec',
    'MonitorConfig',
    'PopulationSpec',
    'ProtocolConfig',
    'ScenarioConfig',
    'StationSpec',
    'SweepSpec',
    'TopologySpec',
]
