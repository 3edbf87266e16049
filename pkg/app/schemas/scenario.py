# Copyright 2024
# Directory: fedgw-sim/app/schemas/scenario.py

"""
Scenario Schemas - Input Validation for Simulation Runs and Sweeps.

Pydantic models that define and validate scenario files:
- TopologySpec: houses, wall counts and gateway placements
- StationSpec / PopulationSpec: explicit or generated stations
- FlowSpec / FlowTemplate: explicit or per-station traffic flows
- ProtocolConfig / MonitorConfig: offload protocol and monitoring knobs
- ScenarioConfig: a complete, validated scenario
- SweepSpec: a parameter sweep over a base scenario

Unknown keys are rejected everywhere. Cross-entity checks that need the
channel model (radio connectivity) are done by the scenario loader.
"""

import math
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .entities import ChannelParams, Direction, MacParams, Thresholds, TrafficClass, classify_frame


# IP protocol numbers understood by the traffic classifier
IP_PROTOCOLS: Dict[str, int] = {"icmp": 1, "tcp": 6, "udp": 17, "gre": 47, "esp": 50, "sctp": 132}


class StrictModel(BaseModel):
    """Base for scenario models: unknown keys are errors."""
    model_config = ConfigDict(extra="forbid")


# =============================================================================
# Topology
# =============================================================================

class HouseSpec(StrictModel):
    """A house, identified by id, with its centre position (m)."""
    id: str
    x: float
    y: float


class GatewaySpec(StrictModel):
    """A gateway placed in a house."""
    id: str
    house: str
    x: Optional[float] = Field(None, description="Defaults to the house centre")
    y: Optional[float] = Field(None, description="Defaults to the house centre")
    mac: Optional[str] = Field(None, description="Defaults to a MAC derived from the index")
    channel: int = Field(1, ge=0, description="Frequency channel of the BSS")
    initially_on: bool = True


class TopologySpec(StrictModel):
    """Houses, the wall matrix between them and the gateways."""
    houses: List[HouseSpec] = Field(..., min_length=1)
    walls: Optional[List[List[int]]] = Field(
        None,
        description="walls[i][j]: walls crossed from house i to house j, in house order",
    )
    same_house_walls: int = Field(1, ge=0, description="Default walls inside one house")
    between_house_walls: int = Field(2, ge=0, description="Default walls between two houses")
    gateways: List[GatewaySpec] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _check_topology(self):
        house_ids = [h.id for h in self.houses]
        if len(set(house_ids)) != len(house_ids):
            raise ValueError("duplicate house id")
        for i, a in enumerate(self.houses):
            for b in self.houses[i + 1:]:
                if math.hypot(a.x - b.x, a.y - b.y) < 1.0:
                    raise ValueError(f"houses {a.id} and {b.id} overlap")
        gateway_ids = [g.id for g in self.gateways]
        if len(set(gateway_ids)) != len(gateway_ids):
            raise ValueError("duplicate gateway id")
        for g in self.gateways:
            if g.house not in house_ids:
                raise ValueError(f"gateway {g.id} references unknown house {g.house}")
        if self.walls is not None:
            n = len(self.houses)
            if len(self.walls) != n or any(len(row) != n for row in self.walls):
                raise ValueError(f"walls must be a {n}x{n} matrix")
            if any(w < 0 for row in self.walls for w in row):
                raise ValueError("wall counts must be non-negative")
        return self

    def house_index(self, house_id: str) -> int:
        return [h.id for h in self.houses].index(house_id)

    def walls_between(self, house_a: str, house_b: str) -> int:
        """Walls crossed between two houses (matrix entry or defaults)."""
        if self.walls is not None:
            return self.walls[self.house_index(house_a)][self.house_index(house_b)]
        if house_a == house_b:
            return self.same_house_walls
        return self.between_house_walls

    def gateway_position(self, gateway: GatewaySpec) -> Tuple[float, float]:
        house = self.houses[self.house_index(gateway.house)]
        x = house.x if gateway.x is None else gateway.x
        y = house.y if gateway.y is None else gateway.y
        return x, y

    def gateway_mac(self, gateway: GatewaySpec) -> str:
        if gateway.mac:
            return gateway.mac
        index = [g.id for g in self.gateways].index(gateway.id)
        return f"02:ff:00:00:00:{index:02x}"


# =============================================================================
# Stations and flows
# =============================================================================

class StationSpec(StrictModel):
    """A wireless station with its home gateway and position (m)."""
    mac: str
    home: str = Field(..., description="Gateway the station is associated with at t=0")
    x: float
    y: float
    house: Optional[str] = Field(None, description="Defaults to the home gateway's house")


class PopulationSpec(StrictModel):
    """Generates stations on a ring around every gateway."""
    stations_per_gateway: int = Field(..., ge=0)
    radius_m: float = Field(3.5, gt=0)
    angle_offset: float = Field(math.pi / 4, description="Angle of the first station (rad)")


class _FlowFields(StrictModel):
    direction: Direction = Direction.UPLINK
    protocol: Union[int, str] = Field("udp", description="IP protocol name or number")
    offered_load: Optional[float] = Field(
        None, gt=0, description="Offered load (bit/s); None makes an elastic flow greedy"
    )
    payload_bytes: int = Field(1500, gt=0)
    start: float = Field(0.0, ge=0)
    stop: Optional[float] = Field(None, gt=0)

    @field_validator("protocol")
    @classmethod
    def _known_protocol(cls, value):
        if isinstance(value, int):
            return value
        name = str(value).lower()
        if name not in IP_PROTOCOLS:
            raise ValueError(f"unknown IP protocol '{value}', use a number or one of {sorted(IP_PROTOCOLS)}")
        return name

    @property
    def ip_protocol(self) -> int:
        if isinstance(self.protocol, int):
            return self.protocol
        return IP_PROTOCOLS[self.protocol]

    @property
    def traffic_class(self) -> TrafficClass:
        return classify_frame(self.ip_protocol)

    @property
    def greedy(self) -> bool:
        return self.offered_load is None

    @property
    def payload_bits(self) -> float:
        return 8.0 * self.payload_bytes

    @model_validator(mode="after")
    def _check_flow(self):
        if self.stop is not None and not self.start < self.stop:
            raise ValueError(f"flow start {self.start} must precede stop {self.stop}")
        if self.traffic_class == TrafficClass.INELASTIC and self.offered_load is None:
            raise ValueError("inelastic flows need a positive offered_load")
        return self


class FlowSpec(_FlowFields):
    """One traffic flow between a station and its current gateway."""
    station: str = Field(..., description="Station MAC")

    def active_at(self, t: float) -> bool:
        return self.start <= t and (self.stop is None or t < self.stop)


class FlowTemplate(_FlowFields):
    """A flow instantiated once per station."""
    stagger: Optional[Tuple[float, float]] = Field(
        None, description="Spread start times evenly over [a, b] across stations (MAC order)"
    )

    @field_validator("stagger")
    @classmethod
    def _stagger_order(cls, value):
        if value is not None and value[1] < value[0]:
            raise ValueError("stagger must be an increasing interval")
        return value


# =============================================================================
# Protocol and monitor knobs
# =============================================================================

class ProtocolConfig(StrictModel):
    """Offload protocol timers and policies."""
    enabled: bool = True
    response_timeout: float = Field(0.3, gt=0, description="tau_r (s)")
    probe_window: float = Field(0.1, gt=0, description="tau_p (s)")
    light_dwell: int = Field(30, ge=1, description="Consecutive Light cycles before requesting")
    heavy_dwell: int = Field(20, ge=1, description="Consecutive Heavy cycles before requesting")
    p_wake: float = Field(0.5, ge=0, le=1, description="Wake probability on a flagged request")
    backoff_min: float = Field(1.0, ge=0)
    backoff_max: float = Field(3.0, ge=0)
    bus_latency: float = Field(0.005, ge=0, description="Out-of-band bus delivery latency (s)")
    bus_loss: float = Field(0.0, ge=0, lt=1, description="Per-message loss probability")
    max_light_failures: int = Field(3, ge=1)
    subset_cap: int = Field(12, ge=1, le=16, description="Largest station set enumerated")
    heavy_guard: bool = Field(True, description="Light responders refuse combos that leave b/S < T_R")

    @model_validator(mode="after")
    def _backoff_order(self):
        if self.backoff_max < self.backoff_min:
            raise ValueError("backoff_max must not be below backoff_min")
        return self


class MonitorConfig(StrictModel):
    """Cycle bookkeeping knobs."""
    T_max: float = Field(0.1, gt=0, description="Maximum cycle duration (s)")
    ewma_alpha: float = Field(0.3, gt=0, le=1, description="Running-average weight")
    elastic_damping: float = Field(0.5, gt=0, le=1, description="Per-cycle elastic grant ramp")


# =============================================================================
# Scenario
# =============================================================================

class ScenarioConfig(StrictModel):
    """A complete scenario: topology, stations, traffic and every parameter."""
    name: str = "scenario"
    description: str = ""
    seed: int = Field(1, ge=0)
    duration: float = Field(30.0, ge=0, description="Simulated time (s)")
    topology: TopologySpec
    stations: List[StationSpec] = Field(default_factory=list)
    population: Optional[PopulationSpec] = None
    flows: List[FlowSpec] = Field(default_factory=list)
    flow_templates: List[FlowTemplate] = Field(default_factory=list)
    thresholds: Thresholds = Field(default_factory=Thresholds)
    protocol: ProtocolConfig = Field(default_factory=ProtocolConfig)
    monitor: MonitorConfig = Field(default_factory=MonitorConfig)
    mac: MacParams = Field(default_factory=MacParams)
    channel: ChannelParams = Field(default_factory=ChannelParams)

    @model_validator(mode="after")
    def _check_references(self):
        gateway_ids = {g.id for g in self.topology.gateways}
        house_ids = {h.id for h in self.topology.houses}
        macs = [s.mac for s in self.all_stations()]
        if len(set(macs)) != len(macs):
            raise ValueError("duplicate station MAC")
        for s in self.stations:
            if s.home not in gateway_ids:
                raise ValueError(f"station {s.mac} references unknown gateway {s.home}")
            if s.house is not None and s.house not in house_ids:
                raise ValueError(f"station {s.mac} references unknown house {s.house}")
        known = set(macs)
        for f in self.flows:
            if f.station not in known:
                raise ValueError(f"flow references unknown station {f.station}")
        return self

    def all_stations(self) -> List[StationSpec]:
        """Explicit stations followed by the generated population."""
        stations = list(self.stations)
        if self.population is None or self.population.stations_per_gateway == 0:
            return stations
        n = self.population.stations_per_gateway
        for gi, gateway in enumerate(self.topology.gateways):
            gx, gy = self.topology.gateway_position(gateway)
            for si in range(n):
                angle = self.population.angle_offset + 2 * math.pi * si / n
                stations.append(StationSpec(
                    mac=f"02:00:00:00:{gi:02x}:{si:02x}",
                    home=gateway.id,
                    x=round(gx + self.population.radius_m * math.cos(angle), 6),
                    y=round(gy + self.population.radius_m * math.sin(angle), 6),
                    house=gateway.house,
                ))
        return stations

    def all_flows(self) -> List[FlowSpec]:
        """Explicit flows followed by one instance of every template per station."""
        flows = list(self.flows)
        if not self.flow_templates:
            return flows
        macs = sorted(s.mac for s in self.all_stations())
        for template in self.flow_templates:
            fields = template.model_dump(exclude={"stagger"})
            for i, mac in enumerate(macs):
                if template.stagger is not None:
                    lo, hi = template.stagger
                    fields["start"] = lo + (hi - lo) * i / max(1, len(macs) - 1)
                flows.append(FlowSpec(station=mac, **fields))
        return flows


class SweepSpec(StrictModel):
    """A parameter sweep over a base scenario."""
    name: str = "sweep"
    base: str = Field(..., description="Bundled scenario name or path to a scenario file")
    parameter: str = Field(..., description="Dotted path into the scenario, e.g. flow_templates.0.offered_load")
    values: List[float] = Field(..., min_length=1)
    stations_per_gateway: List[int] = Field(default_factory=list, description="Population variants")
    seeds: List[int] = Field(default_factory=lambda: [1], min_length=1)
    duration: Optional[float] = Field(None, ge=0)
    stop_at_steady_state: bool = True
    export_cycles: bool = False
