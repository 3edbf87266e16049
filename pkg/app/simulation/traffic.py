# Directory: fedgw-sim/app/simulation/traffic.py

"""
Traffic - Flow Schedule and Frame Streams.

TrafficSchedule answers "what does this station offer right now" from the
scenario's flows. FrameStream turns a granted throughput into frame send
times, carrying the fractional frame from one cycle to the next.
"""

import math
from collections import defaultdict
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from ..schemas.entities import Direction, TrafficClass
from ..schemas.scenario import FlowSpec
from ..services.monitor import DEFAULT_PAYLOAD


class ClassDemand(BaseModel):
    """Demand of one station in one direction, split by traffic class."""
    inelastic: float = 0.0
    elastic: float = 0.0
    inelastic_payload: float = DEFAULT_PAYLOAD
    elastic_payload: float = DEFAULT_PAYLOAD

    @property
    def total(self) -> float:
        return self.inelastic + self.elastic


class TrafficSchedule:
    """Flows indexed by station."""

    def __init__(self, flows: List[FlowSpec]):
        self.flows = list(flows)
        self._by_station: Dict[str, List[FlowSpec]] = defaultdict(list)
        for flow in self.flows:
            self._by_station[flow.station].append(flow)

    def change_times(self) -> List[float]:
        """Every instant a flow starts or stops, ascending."""
        times = set()
        for flow in self.flows:
            times.add(flow.start)
            if flow.stop is not None:
                times.add(flow.stop)
        return sorted(times)

    def demand(self, station: str, direction: Direction, t: float) -> ClassDemand:
        """
        Aggregate offered load of a station's active flows at time t.

        Greedy elastic flows contribute an infinite target. Payloads are
        load-weighted means over the flows of each class.
        """
        demand = ClassDemand()
        weights: Dict[TrafficClass, List[Tuple[float, float]]] = defaultdict(list)
        for flow in self._by_station.get(station, []):
            if flow.direction != direction or not flow.active_at(t):
                continue
            load = math.inf if flow.greedy else flow.offered_load
            if flow.traffic_class == TrafficClass.INELASTIC:
                demand.inelastic += load
            else:
                demand.elastic += load
            weights[flow.traffic_class].append((1.0 if math.isinf(load) else load, flow.payload_bits))
        for cls, entries in weights.items():
            total = sum(w for w, _ in entries)
            payload = sum(w * p for w, p in entries) / total
            if cls == TrafficClass.INELASTIC:
                demand.inelastic_payload = payload
            else:
                demand.elastic_payload = payload
        return demand


class FrameStream(BaseModel):
    """Send times of one (node, class, peer) stream."""
    payload_bits: float = Field(..., gt=0)
    next_time: Optional[float] = None

    def schedule(self, start: float, horizon: float, throughput: float) -> List[float]:
        """
        Frame times in [start, horizon) for the given throughput.

        A pending frame from the previous cycle keeps its time unless the new
        throughput brings it closer.
        """
        if throughput <= 0:
            self.next_time = None
            return []
        interval = self.payload_bits / throughput
        first = start + interval if self.next_time is None else min(max(self.next_time, start), start + interval)
        times: List[float] = []
        t = first
        while t < horizon:
            times.append(t)
            t += interval
        self.next_time = t
        return times

    def consume(self, times: List[float], sent: int) -> None:
        """Keep the first unsent frame time for the next cycle."""
        if sent < len(times):
            self.next_time = times[sent]
