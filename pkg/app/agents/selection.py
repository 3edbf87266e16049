# Copyright 2024
# Directory: fedgw-sim/app/agents/selection.py

"""
Offload Selection - Station Ordering, Allocation Choice and AID Hashing.

Provides:
- heavy_ws_order: which WS a Heavy gateway tries to hand over first
- select_allocation: best complete placement of stations over responder combos
- probe_hash_bound / aid_hash: AID hash carried in a probe CTS duration field
- assign_aid: smallest AID whose hash is unused within a BSS
"""

import logging
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from pydantic import BaseModel, Field

from ..schemas.entities import MacParams, TrafficProfile
from ..schemas.messages import OffloadResponse

logger = logging.getLogger(__name__)

MAX_AID = 2007


class Allocation(BaseModel):
    """Chosen placement of stations over responders."""
    assignments: Dict[str, str] = Field(default_factory=dict, description="MAC -> gateway id")
    groups: Dict[str, List[str]] = Field(default_factory=dict, description="gateway id -> MACs")
    avg_rate: float = 0.0
    avg_b: float = 0.0


def heavy_ws_order(profiles: Iterable[TrafficProfile]) -> List[str]:
    """
    Stations by offered load weighted by the inverse of their rate.

    Sorted by (nu + eta) / R_k descending, ties by MAC ascending. A station
    without a measured rate sorts as if its rate were 1 bit/s.
    """
    def weight(p: TrafficProfile) -> float:
        return p.load / (p.avg_rate or 1.0)

    return [p.node_id for p in sorted(profiles, key=lambda p: (-weight(p), p.node_id))]


def select_allocation(
    responses: Sequence[OffloadResponse],
    stations: Sequence[str],
) -> Optional[Allocation]:
    """
    Place every station using at most one offered combo per responder.

    Among complete placements the one with the highest average station rate
    wins; ties go to the lowest average b over the chosen combos. Dynamic
    programming over station bitmasks, one responder at a time.

    Args:
        responses: OffloadResponses collected before the deadline
        stations: Stations that must all be placed

    Returns:
        The Allocation, or None when no complete placement exists
    """
    order = sorted(stations)
    if not order:
        return Allocation()
    index = {mac: i for i, mac in enumerate(order)}
    full = (1 << len(order)) - 1

    # per responder: combo mask -> (sum rate, b, macs)
    offers: List[Tuple[str, Dict[int, Tuple[float, float, List[str]]]]] = []
    for response in sorted(responses, key=lambda r: r.origin):
        best: Dict[int, Tuple[float, float, List[str]]] = {}
        for combo in response.combos:
            if any(mac not in index for mac in combo.stations) or combo.b_value <= 0:
                continue
            mask = 0
            for mac in combo.stations:
                mask |= 1 << index[mac]
            rate = sum(combo.rates.get(mac, 0.0) for mac in combo.stations)
            current = best.get(mask)
            if current is None or combo.b_value < current[1]:
                best[mask] = (rate, combo.b_value, sorted(combo.stations))
        if best:
            offers.append((response.origin, best))

    # state: (mask, k) -> (sum rate, sum b, [(gateway, macs)])
    states: Dict[Tuple[int, int], Tuple[float, float, List[Tuple[str, List[str]]]]] = {(0, 0): (0.0, 0.0, [])}
    for gateway, best in offers:
        offered = 0
        for mask in best:
            offered |= mask
        updates: Dict[Tuple[int, int], Tuple[float, float, List[Tuple[str, List[str]]]]] = {}
        for (mask, k), (rate, b_sum, groups) in states.items():
            free = full & ~mask & offered
            sub = free
            while sub:
                offer = best.get(sub)
                if offer is not None:
                    key = (mask | sub, k + 1)
                    candidate = (rate + offer[0], b_sum + offer[1], groups + [(gateway, offer[2])])
                    current = updates.get(key) or states.get(key)
                    if current is None or _better(candidate, current):
                        updates[key] = candidate
                sub = (sub - 1) & free
        for key, value in updates.items():
            current = states.get(key)
            if current is None or _better(value, current):
                states[key] = value

    complete = [(k, value) for (mask, k), value in states.items() if mask == full and k > 0]
    if not complete:
        return None
    n = len(order)
    k, (rate, b_sum, groups) = max(complete, key=lambda item: (item[1][0] / n, -item[1][1] / item[0]))
    allocation = Allocation(avg_rate=rate / n, avg_b=b_sum / k)
    for gateway, macs in groups:
        allocation.groups[gateway] = macs
        for mac in macs:
            allocation.assignments[mac] = gateway
    return allocation


def _better(a: Tuple[float, float, list], b: Tuple[float, float, list]) -> bool:
    if abs(a[0] - b[0]) > 1e-9 * max(1.0, abs(b[0])):
        return a[0] > b[0]
    return a[1] < b[1]


# =============================================================================
# AID hashing
# =============================================================================

def probe_hash_bound(mac: MacParams) -> int:
    """Number of distinct AID hashes: 2 SIFS + ACK duration, in whole microseconds."""
    return max(1, int((2 * mac.sifs + mac.ack_duration) * 1e6))


def aid_hash(aid: int, bound: int) -> int:
    return aid % bound


def assign_aid(used: Mapping[str, int], bound: int) -> int:
    """
    Smallest free AID whose hash differs from every AID already in the BSS.

    Falls back to the smallest free AID (with a warning) once every hash is
    taken.
    """
    taken = set(used.values())
    hashes = {aid_hash(a, bound) for a in taken}
    for aid in range(1, MAX_AID + 1):
        if aid not in taken and aid_hash(aid, bound) not in hashes:
            return aid
    logger.warning(f"All {bound} AID hashes in use; probe identification may be ambiguous")
    for aid in range(1, MAX_AID + 1):
        if aid not in taken:
            return aid
    raise ValueError("no free association ID")
