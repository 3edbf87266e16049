# Directory: fedgw-sim/app/simulation/topology.py

"""
Topology - Positions, Walls and Per-Link SNR.

Resolves the scenario's houses, gateways and stations into distances, wall
counts and frozen SNR values, and answers the radio questions the engine
asks: which gateways a station reaches at the lowest rate, which gateway is
best, and whether a listener hears a probe CTS.
"""

import logging
import math
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from ..schemas.entities import ChannelParams, LinkState
from ..schemas.scenario import ScenarioConfig, StationSpec
from ..services.channel import (
    REFERENCE_LENGTH,
    draw_shadowing,
    in_range,
    new_link,
    rate_for_snr,
    snr_db,
    visibility_fraction,
)
from .rng import RngStreams

logger = logging.getLogger(__name__)

# Links shorter than this are evaluated at this distance (m)
MIN_DISTANCE = 1.0


class Topology:
    """
    Static geometry of a scenario.

    Attributes:
        gateway_positions: Gateway id -> (x, y)
        station_positions: Station MAC -> (x, y)
        gateway_house / station_house: Entity -> house id
    """

    def __init__(self, config: ScenarioConfig, rng: Optional[RngStreams] = None):
        self.config = config
        self.params: ChannelParams = config.channel
        if config.channel.rng_seed is not None:
            self.rng = RngStreams(config.channel.rng_seed)
        else:
            self.rng = rng or RngStreams(config.seed)
        spec = config.topology

        self.gateway_ids: List[str] = [g.id for g in spec.gateways]
        self.gateway_positions: Dict[str, Tuple[float, float]] = {}
        self.gateway_house: Dict[str, str] = {}
        self.gateway_macs: Dict[str, str] = {}
        for g in spec.gateways:
            self.gateway_positions[g.id] = spec.gateway_position(g)
            self.gateway_house[g.id] = g.house
            self.gateway_macs[g.id] = spec.gateway_mac(g)

        self.stations: Dict[str, StationSpec] = {}
        self.station_positions: Dict[str, Tuple[float, float]] = {}
        self.station_house: Dict[str, str] = {}
        for s in config.all_stations():
            self.stations[s.mac] = s
            self.station_positions[s.mac] = (s.x, s.y)
            self.station_house[s.mac] = s.house or self.gateway_house[s.home]

        self._snr: Dict[Tuple[str, str], float] = {}

    # =========================================================================
    # Geometry
    # =========================================================================

    def distance(self, station: str, gateway: str) -> float:
        sx, sy = self.station_positions[station]
        gx, gy = self.gateway_positions[gateway]
        return max(MIN_DISTANCE, math.hypot(sx - gx, sy - gy))

    def walls(self, station: str, gateway: str) -> int:
        return self.config.topology.walls_between(self.station_house[station], self.gateway_house[gateway])

    def snr(self, station: str, gateway: str) -> float:
        """Frozen SNR (dB) of the station-gateway link."""
        key = (station, gateway)
        value = self._snr.get(key)
        if value is None:
            shadowing = 0.0
            if self.params.shadowing_std_db > 0:
                shadowing = draw_shadowing(self.params, self.rng.stream(f"link:{station}:{gateway}"))
            value = snr_db(self.distance(station, gateway), self.walls(station, gateway), self.params, shadowing)
            self._snr[key] = value
        return value

    def link(self, station: str, gateway: str) -> LinkState:
        """Fresh AARF state for the link, starting at its best usable rate."""
        return new_link(
            self.distance(station, gateway),
            self.walls(station, gateway),
            self.snr(station, gateway),
            per_target=self.params.per_target,
        )

    # =========================================================================
    # Radio queries
    # =========================================================================

    def reachable(self, station: str, gateways: Optional[Iterable[str]] = None) -> List[str]:
        """Gateways the station reaches at the lowest rate, best SNR first."""
        candidates = self.gateway_ids if gateways is None else list(gateways)
        usable = [g for g in candidates if in_range(self.snr(station, g), per_target=self.params.per_target)]
        return sorted(usable, key=lambda g: (-self.snr(station, g), g))

    def best_gateway(self, station: str, gateways: Iterable[str]) -> Optional[str]:
        ranked = self.reachable(station, gateways)
        return ranked[0] if ranked else None

    def hears_cts(self, station: str, listener: str, cts_bits: float) -> bool:
        """Whether a listener decodes a CTS sent by the station at the lowest rate."""
        return in_range(self.snr(station, listener), length=cts_bits, per_target=self.params.per_target)

    def usable_rate(self, station: str, gateway: str, length: float = REFERENCE_LENGTH) -> Optional[float]:
        return rate_for_snr(self.snr(station, gateway), length=length, per_target=self.params.per_target)

    def unreachable_stations(self) -> List[str]:
        """Stations with no gateway in range at the lowest rate."""
        return [mac for mac in sorted(self.stations) if not self.reachable(mac)]

    def snr_matrix(self) -> np.ndarray:
        """Stations (MAC order) by gateways (scenario order)."""
        macs = sorted(self.stations)
        return np.array([[self.snr(m, g) for g in self.gateway_ids] for m in macs], dtype=float)

    def visibility(self) -> float:
        """Average fraction of gateways a station reaches at the lowest rate."""
        return visibility_fraction(self.snr_matrix(), per_target=self.params.per_target)
