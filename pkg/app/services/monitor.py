# Copyright 2024
# Directory: fedgw-sim/app/services/monitor.py

"""
Passive Monitor - Cycle Bookkeeping and Station Traffic Profiles.

A gateway measures its BSS over cycles. A cycle lasts until every active WS
has delivered an inelastic frame and the gateway has delivered an inelastic
frame to every WS it holds data for, or T_max, whichever comes first. At the
end of a cycle the per-node throughputs become running averages.

Provides:
- CycleAccumulator with observe_frame / cycle_complete / close_cycle
- CycleMonitor: one gateway's accumulator, profiles and running aggregates
"""

import logging
from typing import Dict, Optional, Set, Tuple

from pydantic import BaseModel, Field

from ..schemas.entities import (
    CycleStats,
    Direction,
    FrameMeta,
    GatewayProfile,
    StationProfile,
    TrafficClass,
    TrafficProfile,
)

logger = logging.getLogger(__name__)

# Used before any frame has been seen (1500 B at 54 Mbit/s)
DEFAULT_PAYLOAD = 12000.0
DEFAULT_RATE = 54e6

# p_e is kept strictly below one
MAX_FILTERED_PER = 0.999999


def ewma(previous: Optional[float], sample: float, alpha: float) -> float:
    """x <- (1 - alpha) x + alpha sample; the first sample initialises x."""
    if previous is None:
        return sample
    return (1.0 - alpha) * previous + alpha * sample


# =============================================================================
# Accumulator
# =============================================================================

class NodeTally(BaseModel):
    """Frames and bits of one node (or one downlink peer) within a cycle."""
    elastic_bits: float = 0.0
    inelastic_bits: float = 0.0
    elastic_frames: int = 0
    inelastic_frames: int = 0
    attempts: int = 0
    failures: int = 0
    rate_sum: float = 0.0

    def add(self, frame: FrameMeta) -> None:
        self.attempts += 1
        self.rate_sum += frame.rate
        if not frame.success:
            self.failures += 1
            return
        if frame.traffic_class == TrafficClass.ELASTIC:
            self.elastic_bits += frame.payload_bits
            self.elastic_frames += 1
        else:
            self.inelastic_bits += frame.payload_bits
            self.inelastic_frames += 1


class CycleAccumulator(BaseModel):
    """Everything a gateway tallies during one cycle."""
    cycle_start: float = Field(0.0, ge=0)
    expected: Set[str] = Field(default_factory=set, description="Stations active in the previous cycle")
    uplink: Dict[str, NodeTally] = Field(default_factory=dict)
    downlink: Dict[str, NodeTally] = Field(default_factory=dict, description="Per destination station")
    active: Set[str] = Field(default_factory=set, description="Stations with a successful uplink frame")
    inelastic_served: Set[str] = Field(default_factory=set)
    pending_downlink: Set[str] = Field(default_factory=set)
    gateway_sent: int = 0
    max_payload: float = 0.0
    payload_sum: float = 0.0
    rate_sum: float = 0.0
    delivered_frames: int = 0
    per_sum: float = 0.0
    attempts: int = 0


def observe_frame(acc: CycleAccumulator, frame: FrameMeta) -> CycleAccumulator:
    """
    Add one frame to the cycle tallies.

    Args:
        acc: Accumulator of the running cycle (updated in place)
        frame: The frame as heard by the gateway

    Returns:
        The same accumulator
    """
    if frame.timestamp < acc.cycle_start:
        raise ValueError(f"frame at {frame.timestamp} precedes cycle start {acc.cycle_start}")

    acc.attempts += 1
    acc.per_sum += frame.per

    if frame.direction == Direction.UPLINK:
        acc.uplink.setdefault(frame.node, NodeTally()).add(frame)
        if frame.success:
            acc.active.add(frame.node)
            if frame.traffic_class == TrafficClass.INELASTIC:
                acc.inelastic_served.add(frame.node)
    else:
        acc.gateway_sent += 1
        if frame.peer is not None:
            acc.downlink.setdefault(frame.peer, NodeTally()).add(frame)
            if frame.success and frame.traffic_class == TrafficClass.INELASTIC:
                acc.pending_downlink.discard(frame.peer)

    if frame.success:
        acc.delivered_frames += 1
        acc.payload_sum += frame.payload_bits
        acc.rate_sum += frame.rate
        acc.max_payload = max(acc.max_payload, frame.payload_bits)
    return acc


def cycle_complete(acc: CycleAccumulator, now: float, T_max: float) -> bool:
    """
    Whether the running cycle ends at `now`.

    True once T_max has elapsed, or when every required station (active now
    or in the previous cycle) has delivered an inelastic frame and no
    inelastic downlink is pending. A cycle with no required station only
    ends at T_max.
    """
    elapsed = now - acc.cycle_start
    if elapsed >= T_max - 1e-12:
        return True
    if elapsed <= 0:
        return False
    required = acc.expected | acc.active
    if not required:
        return False
    return required <= acc.inelastic_served and not acc.pending_downlink


class RunningAggregates(BaseModel):
    """BSS-wide running averages feeding CycleStats."""
    avg_payload: Optional[float] = None
    avg_rate: Optional[float] = None
    filtered_per: Optional[float] = None


def _update_profile(profile: TrafficProfile, tally: Optional[NodeTally], duration: float, alpha: float) -> None:
    elastic_bits = tally.elastic_bits if tally else 0.0
    inelastic_bits = tally.inelastic_bits if tally else 0.0
    profile.elastic = ewma(profile.elastic, elastic_bits / duration, alpha)
    profile.inelastic = ewma(profile.inelastic, inelastic_bits / duration, alpha)
    if tally is None:
        return
    if tally.elastic_frames:
        profile.avg_elastic_payload = ewma(
            profile.avg_elastic_payload, tally.elastic_bits / tally.elastic_frames, alpha
        )
    if tally.inelastic_frames:
        profile.avg_inelastic_payload = ewma(
            profile.avg_inelastic_payload, tally.inelastic_bits / tally.inelastic_frames, alpha
        )
    if tally.attempts:
        profile.avg_rate = ewma(profile.avg_rate, tally.rate_sum / tally.attempts, alpha)


def close_cycle(
    acc: CycleAccumulator,
    profiles: Dict[str, TrafficProfile],
    alpha: float,
    now: float,
    aggregates: Optional[RunningAggregates] = None,
    gateway_id: Optional[str] = None,
) -> Tuple[CycleStats, Dict[str, TrafficProfile]]:
    """
    Turn a finished cycle into CycleStats and refreshed running averages.

    Args:
        acc: Accumulator of the finished cycle
        profiles: Station profiles by MAC, plus the gateway profile under
            `gateway_id` when given (updated in place)
        alpha: EWMA weight
        now: Cycle end time
        aggregates: BSS running averages of P, R and p_e (updated in place)
        gateway_id: Key of the gateway profile in `profiles`

    Returns:
        (CycleStats, profiles)

    Raises:
        ValueError: On a zero-duration cycle
    """
    duration = now - acc.cycle_start
    if duration <= 0:
        raise ValueError(f"cycle of non-positive duration {duration} at t={now}")
    aggregates = aggregates if aggregates is not None else RunningAggregates()

    gateway_tally = None
    if acc.downlink:
        gateway_tally = NodeTally()
        for tally in acc.downlink.values():
            for field in NodeTally.model_fields:
                setattr(gateway_tally, field, getattr(gateway_tally, field) + getattr(tally, field))

    for node, profile in profiles.items():
        tally = gateway_tally if node == gateway_id else acc.uplink.get(node)
        _update_profile(profile, tally, duration, alpha)

    if acc.delivered_frames:
        aggregates.avg_payload = ewma(aggregates.avg_payload, acc.payload_sum / acc.delivered_frames, alpha)
        aggregates.avg_rate = ewma(aggregates.avg_rate, acc.rate_sum / acc.delivered_frames, alpha)
    if acc.attempts:
        sample = min(acc.per_sum / acc.attempts, MAX_FILTERED_PER)
        aggregates.filtered_per = min(ewma(aggregates.filtered_per, sample, alpha), MAX_FILTERED_PER)

    avg_payload = aggregates.avg_payload or DEFAULT_PAYLOAD
    n_active = len(acc.active) + (1 if acc.gateway_sent > 0 else 0)
    stats = CycleStats(
        n_active=n_active,
        cycle_duration=duration,
        avg_payload=avg_payload,
        max_payload=max(acc.max_payload, avg_payload),
        avg_rate=aggregates.avg_rate or DEFAULT_RATE,
        filtered_per=aggregates.filtered_per or 0.0,
    )
    return stats, profiles


# =============================================================================
# Per-gateway monitor
# =============================================================================

class CycleMonitor:
    """
    Passive monitor of one gateway.

    Owns the running cycle, the uplink profile of every associated WS, the
    gateway's own downlink profile, per-WS downlink profiles and the BSS
    running averages.
    """

    def __init__(self, gateway_id: str, alpha: float = 0.3, T_max: float = 0.1):
        self.gateway_id = gateway_id
        self.alpha = alpha
        self.T_max = T_max
        self.accumulator = CycleAccumulator()
        self.stations: Dict[str, StationProfile] = {}
        self.gateway = GatewayProfile(node_id=gateway_id)
        self.downlink: Dict[str, TrafficProfile] = {}
        self.aggregates = RunningAggregates()
        self.cycle_index = 0
        self.last_stats: Optional[CycleStats] = None

    def add_station(self, mac: str, association_id: int = 0) -> None:
        self.stations.setdefault(mac, StationProfile(node_id=mac, association_id=association_id))
        self.downlink.setdefault(mac, TrafficProfile(node_id=mac))

    def forget_station(self, mac: str) -> None:
        """Drop every trace of a WS that left the BSS."""
        self.stations.pop(mac, None)
        self.downlink.pop(mac, None)
        self.accumulator.expected.discard(mac)
        self.accumulator.active.discard(mac)
        self.accumulator.inelastic_served.discard(mac)
        self.accumulator.pending_downlink.discard(mac)

    def start_cycle(self, now: float) -> None:
        expected = {mac for mac in self.accumulator.active if mac in self.stations}
        self.accumulator = CycleAccumulator(cycle_start=now, expected=expected)

    def mark_pending_downlink(self, station: str) -> None:
        self.accumulator.pending_downlink.add(station)

    def observe(self, frame: FrameMeta) -> None:
        observe_frame(self.accumulator, frame)

    def is_complete(self, now: float) -> bool:
        return cycle_complete(self.accumulator, now, self.T_max)

    def close(self, now: float) -> CycleStats:
        """Close the running cycle; the next one must be started explicitly."""
        profiles: Dict[str, TrafficProfile] = dict(self.stations)
        profiles[self.gateway_id] = self.gateway
        stats, _ = close_cycle(
            self.accumulator, profiles, self.alpha, now,
            aggregates=self.aggregates, gateway_id=self.gateway_id,
        )
        for mac, profile in self.downlink.items():
            _update_profile(profile, self.accumulator.downlink.get(mac), stats.cycle_duration, self.alpha)
        self.cycle_index += 1
        self.last_stats = stats
        logger.debug(
            f"{self.gateway_id} cycle {self.cycle_index}: N={stats.n_active} "
            f"C={stats.cycle_duration:.4f}s R={stats.avg_rate / 1e6:.1f}Mbit/s p_e={stats.filtered_per:.4f}"
        )
        return stats

    def active_profiles(self) -> Dict[str, TrafficProfile]:
        """Profiles of the nodes counted in the last cycle's N(j)."""
        active: Dict[str, TrafficProfile] = {
            mac: self.stations[mac] for mac in sorted(self.accumulator.active) if mac in self.stations
        }
        if self.accumulator.gateway_sent > 0:
            active[self.gateway_id] = self.gateway
        return active
