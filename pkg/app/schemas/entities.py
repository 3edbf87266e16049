# Copyright 2024
# Directory: fedgw-sim/app/schemas/entities.py

"""
Domain Entity Schemas - Value Types Shared by the Simulator.

Pydantic models describing the quantities the gateways measure and reason on:
- MacParams / CycleStats / SaturationResult: saturation model inputs and outputs
- ChannelParams / LinkState: propagation and rate adaptation state
- StationProfile / GatewayProfile: per-node running averages
- Thresholds / StatusReport / CandidateStation: assessment inputs and outputs
- ProbeObservation / FrameMeta: what a gateway hears on the air

Units are SI throughout: seconds, bits, bit/s, metres, dB/dBm.
"""

from enum import Enum
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


# 802.11g ERP-OFDM and 802.11b DSSS/CCK rate sets (bit/s)
OFDM_RATES: Tuple[float, ...] = (6e6, 9e6, 12e6, 18e6, 24e6, 36e6, 48e6, 54e6)
LEGACY_RATES: Tuple[float, ...] = (1e6, 2e6, 5.5e6, 11e6)
ALL_RATES: Tuple[float, ...] = tuple(sorted(LEGACY_RATES + OFDM_RATES))


class TrafficClass(str, Enum):
    """Traffic classes distinguished by the passive monitor."""
    ELASTIC = "elastic"
    INELASTIC = "inelastic"


IPPROTO_TCP = 6


def classify_frame(ip_protocol: int) -> TrafficClass:
    """Map the IP protocol field to a traffic class."""
    if ip_protocol == IPPROTO_TCP:
        return TrafficClass.ELASTIC
    return TrafficClass.INELASTIC


class Direction(str, Enum):
    """Frame direction relative to the gateway."""
    UPLINK = "uplink"
    DOWNLINK = "downlink"


class GatewayStatus(str, Enum):
    """Gateway status as produced by the status assessment (plus Off)."""
    LIGHT = "light"
    HEAVY = "heavy"
    REGULAR = "regular"
    OFF = "off"


# =============================================================================
# Saturation model
# =============================================================================

class MacParams(BaseModel):
    """
    802.11 DCF timing and contention parameters.

    Defaults are 802.11g ERP-OFDM. The PHY header is a fixed 20 µs preamble,
    carried as its bit-equivalent at the basic rate so that h_phy / R_b keeps
    the published form; `phy_header_time` may be given instead of
    `phy_header_bits` in scenario files.
    """
    model_config = ConfigDict(extra="forbid")

    slot_time: float = Field(9e-6, gt=0, description="Slot time sigma (s)")
    sifs: float = Field(10e-6, gt=0, description="SIFS (s)")
    difs: float = Field(28e-6, gt=0, description="DIFS (s)")
    phy_header_bits: float = Field(120.0, gt=0, description="PHY header h_phy (bits at R_b)")
    mac_header_bits: float = Field(272.0, gt=0, description="MAC header h_mac (bits)")
    ack_bits: float = Field(112.0, gt=0, description="ACK MAC fields (bits)")
    basic_rate: float = Field(6e6, gt=0, description="Basic rate R_b (bit/s)")
    cw_min: int = Field(15, ge=1, description="Minimum contention window W (slots)")
    backoff_stages: int = Field(6, ge=0, description="Backoff stages m")

    @model_validator(mode="before")
    @classmethod
    def _phy_header_from_time(cls, data):
        if isinstance(data, dict) and "phy_header_time" in data:
            data = dict(data)
            seconds = data.pop("phy_header_time")
            rate = data.get("basic_rate", 6e6)
            data["phy_header_bits"] = seconds * rate
        return data

    @property
    def ack_duration(self) -> float:
        """ACK frame airtime at the basic rate (PHY header plus ACK fields)."""
        return (self.phy_header_bits + self.ack_bits) / self.basic_rate

    @property
    def retransmission_timeout(self) -> float:
        """T_o: SIFS plus the ACK duration."""
        return self.sifs + self.ack_duration

    @classmethod
    def ofdm_80211g(cls) -> "MacParams":
        """802.11g ERP-OFDM defaults."""
        return cls()


class CycleStats(BaseModel):
    """Aggregates observed by a gateway over one monitoring cycle."""
    n_active: int = Field(..., ge=0, description="Active nodes N(j), gateway included when active")
    cycle_duration: float = Field(..., gt=0, description="Cycle duration C(j) (s)")
    avg_payload: float = Field(..., gt=0, description="Average payload P(j) (bits)")
    max_payload: float = Field(..., gt=0, description="Maximum payload P_max(j) (bits)")
    avg_rate: float = Field(..., gt=0, description="Average data rate R(j) (bit/s)")
    filtered_per: float = Field(0.0, ge=0, lt=1, description="Filtered error probability p_e(j)")

    @model_validator(mode="after")
    def _payload_order(self):
        if self.avg_payload > self.max_payload * (1 + 1e-12):
            raise ValueError(
                f"avg_payload {self.avg_payload} exceeds max_payload {self.max_payload}"
            )
        return self


class SaturationResult(BaseModel):
    """Fixed point and saturation throughput for one cycle."""
    tau: float = Field(..., ge=0, le=1, description="Per-slot transmission probability")
    p_cond: float = Field(..., ge=0, le=1, description="Conditional failure probability")
    expected_event_time: float = Field(..., gt=0, description="E[T] (s)")
    aggregate_S: float = Field(..., ge=0, description="Aggregate saturation throughput S (bit/s)")
    per_node_S: float = Field(..., ge=0, description="Per-node share S_n = S / N (bit/s)")


# =============================================================================
# Channel
# =============================================================================

class ChannelParams(BaseModel):
    """Indoor propagation parameters (ITU-R P.1238 form)."""
    model_config = ConfigDict(extra="forbid")

    carrier_freq_mhz: float = Field(2400.0, gt=0, description="Carrier frequency (MHz)")
    distance_coefficient: float = Field(30.0, gt=0, description="Distance power loss coefficient N")
    wall_loss_db: float = Field(7.0, ge=0, description="Attenuation per wall (dB)")
    tx_power_dbm: float = Field(20.0, description="Transmit power (dBm)")
    noise_floor_dbm: float = Field(-95.0, description="Noise floor (dBm)")
    shadowing_std_db: float = Field(0.0, ge=0, description="Log-normal shadowing std-dev (dB)")
    per_target: float = Field(0.1, gt=0, lt=1, description="PER a usable rate must not exceed")
    rng_seed: Optional[int] = Field(None, description="Shadowing seed; defaults to the scenario seed")

    @model_validator(mode="after")
    def _noise_below_power(self):
        if self.noise_floor_dbm >= self.tx_power_dbm:
            raise ValueError("noise_floor_dbm must be below tx_power_dbm")
        return self


class LinkState(BaseModel):
    """One transmitter's view of a link: geometry, SNR and AARF state."""
    distance: float = Field(..., gt=0, description="Distance (m)")
    wall_count: int = Field(0, ge=0, description="Walls crossed")
    snr: float = Field(..., description="Frozen SNR (dB)")
    current_rate: float = Field(..., gt=0, description="Current data rate (bit/s)")
    rate_set: Tuple[float, ...] = Field(ALL_RATES, description="Rates AARF may use, ascending")
    success_count: int = Field(0, ge=0)
    failure_count: int = Field(0, ge=0)
    success_threshold: int = Field(10, ge=1)
    probe_pending: bool = Field(False, description="Current rate is an unconfirmed probe")
    probe_fallback_rate: Optional[float] = Field(None, description="Rate to revert to if the probe fails")

    @model_validator(mode="after")
    def _rate_in_set(self):
        if self.current_rate not in self.rate_set:
            raise ValueError(f"rate {self.current_rate} not in rate set")
        return self


# =============================================================================
# Monitor
# =============================================================================

class TrafficProfile(BaseModel):
    """Running averages describing one node's traffic (bit/s, bits)."""
    node_id: str = Field(..., description="MAC address of the node")
    elastic: float = Field(0.0, ge=0, description="Elastic throughput eta (bit/s)")
    inelastic: float = Field(0.0, ge=0, description="Inelastic throughput nu (bit/s)")
    avg_elastic_payload: Optional[float] = Field(None, gt=0, description="P^(e) (bits)")
    avg_inelastic_payload: Optional[float] = Field(None, gt=0, description="P^(i) (bits)")
    avg_rate: Optional[float] = Field(None, gt=0, description="R_k (bit/s)")

    @property
    def load(self) -> float:
        return self.elastic + self.inelastic


class StationProfile(TrafficProfile):
    """Uplink traffic profile of a WS (eta_k, nu_k, P_k, R_k)."""
    association_id: int = Field(0, ge=0, description="802.11 AID")


class GatewayProfile(TrafficProfile):
    """Downlink traffic profile of the gateway itself (eta_G, nu_G)."""


class FrameMeta(BaseModel):
    """One data frame as seen by the gateway's monitor."""
    node: str = Field(..., description="Transmitting node MAC")
    peer: Optional[str] = Field(None, description="Destination station MAC for downlink frames")
    direction: Direction
    traffic_class: TrafficClass
    payload_bits: float = Field(..., gt=0)
    rate: float = Field(..., gt=0)
    success: bool
    timestamp: float = Field(..., ge=0)
    per: float = Field(0.0, ge=0, le=1, description="Predicted PER of this frame")


# =============================================================================
# Assessment
# =============================================================================

class Thresholds(BaseModel):
    """Status and admission thresholds."""
    model_config = ConfigDict(extra="forbid")

    T_L: float = Field(0.5, ge=0, le=1, description="Light threshold on B/S")
    T_R: float = Field(0.05, ge=0, le=1, description="Heavy threshold on B/S")
    T_A: float = Field(0.2, ge=0, le=1, description="Admission threshold on b/S")
    N_L: int = Field(10, ge=1, description="Station bound for Light status")

    @model_validator(mode="after")
    def _ordering(self):
        if not self.T_R < self.T_L:
            raise ValueError(f"T_R ({self.T_R}) must be below T_L ({self.T_L})")
        return self


class StatusReport(BaseModel):
    """Outcome of the gateway status assessment for one cycle."""
    status: GatewayStatus
    available_bandwidth: float = Field(..., description="B(j) (bit/s)")
    saturation: float = Field(..., ge=0, description="S(j) (bit/s)")
    per_node: float = Field(0.0, ge=0, description="S_n(j) (bit/s)")
    n_stations: int = Field(..., ge=0, description="N(j)")

    @property
    def b_over_s(self) -> float:
        if self.saturation <= 0:
            return 1.0
        return self.available_bandwidth / self.saturation


class CandidateStation(BaseModel):
    """A station a gateway considers admitting, as advertised and probed."""
    mac: str
    uplink_inelastic: Optional[float] = Field(None, ge=0, description="None when unknown")
    uplink_elastic: Optional[float] = Field(None, ge=0, description="None when unknown")
    downlink_inelastic: Optional[float] = Field(None, ge=0)
    downlink_elastic: Optional[float] = Field(None, ge=0)
    avg_inelastic_payload: Optional[float] = Field(None, gt=0)
    avg_elastic_payload: Optional[float] = Field(None, gt=0)
    estimated_rate: float = Field(..., gt=0, description="Rate inferred by probing (bit/s)")

    @property
    def demand_known(self) -> bool:
        return self.uplink_inelastic is not None or self.uplink_elastic is not None


# =============================================================================
# Protocol observations
# =============================================================================

class ProbeObservation(BaseModel):
    """A probe CTS overheard by a tuned gateway."""
    hashed_aid: int = Field(..., ge=0, description="AID hash decoded from the CTS duration")
    snr: float = Field(..., description="Measured SNR (dB)")
    inferred_rate: Optional[float] = Field(None, description="Usable rate, None if unusable")
