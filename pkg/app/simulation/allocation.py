# Directory: fedgw-sim/app/simulation/allocation.py

"""
Fluid BSS Allocation - Per-Cycle Throughput Grants.

Realizes DCF per-packet fairness at cycle granularity: each node first gets
its demand up to the per-node share S_n, then nodes above S_n take turns,
slowest first, each turn granting one average packet per cycle. A turn
consumes capacity weighted by R/R_k, inelastic traffic before elastic. This
is the order the b-metric assumes, so what the monitor measures and what the
assessment predicts agree.
"""

import logging
import math
from typing import Dict, Optional, Sequence

from pydantic import BaseModel, Field

from ..schemas.entities import CycleStats, MacParams, SaturationResult
from ..services.assessment import CAPACITY_EPSILON
from ..services.mac_model import saturation_throughput
from ..services.monitor import DEFAULT_PAYLOAD

logger = logging.getLogger(__name__)


class NodeDemand(BaseModel):
    """What one node would send during the cycle."""
    node: str
    inelastic: float = Field(0.0, ge=0, description="Offered inelastic load (bit/s)")
    elastic: float = Field(0.0, ge=0, description="Elastic target (bit/s); inf for greedy flows")
    inelastic_payload: float = Field(DEFAULT_PAYLOAD, gt=0)
    elastic_payload: float = Field(DEFAULT_PAYLOAD, gt=0)
    rate: float = Field(..., gt=0, description="Current data rate (bit/s)")

    @property
    def total(self) -> float:
        return self.inelastic + self.elastic

    @property
    def payload(self) -> float:
        return self.inelastic_payload if self.inelastic > 0 else self.elastic_payload


class NodeGrant(BaseModel):
    """Throughput granted to one node for the cycle."""
    node: str
    inelastic: float = 0.0
    elastic: float = 0.0
    consumed: float = Field(0.0, description="Capacity used, R/R_k-weighted above S_n (bit/s)")

    @property
    def total(self) -> float:
        return self.inelastic + self.elastic


class BssAllocation(BaseModel):
    """Grants for one cycle of one BSS."""
    grants: Dict[str, NodeGrant] = Field(default_factory=dict)
    stats: Optional[CycleStats] = None
    sat: Optional[SaturationResult] = None
    residual: float = Field(0.0, description="Capacity left unused (bit/s)")

    @property
    def capacity(self) -> float:
        return self.sat.aggregate_S if self.sat else 0.0

    @property
    def consumed(self) -> float:
        return sum(g.consumed for g in self.grants.values())


def allocation_stats(demands: Sequence[NodeDemand], cycle_duration: float, p_e: float = 0.0) -> CycleStats:
    """Cycle aggregates of the contending nodes, node-weighted."""
    payloads = [d.payload for d in demands]
    return CycleStats(
        n_active=len(demands),
        cycle_duration=cycle_duration,
        avg_payload=sum(payloads) / len(payloads),
        max_payload=max(payloads),
        avg_rate=sum(d.rate for d in demands) / len(demands),
        filtered_per=p_e,
    )


def allocate_cycle_throughput(
    demands: Sequence[NodeDemand],
    mac: MacParams,
    cycle_duration: float,
    p_e: float = 0.0,
) -> BssAllocation:
    """
    Progressive filling of the BSS saturation capacity.

    Args:
        demands: Node demands; nodes without demand are ignored
        mac: MAC parameters for the saturation model
        cycle_duration: Cycle length used for the packet quantum (s)
        p_e: Error probability fed to the saturation model

    Returns:
        BssAllocation; empty when no node has demand
    """
    active = sorted((d for d in demands if d.total > 0), key=lambda d: d.node)
    if not active:
        return BssAllocation()

    stats = allocation_stats(active, cycle_duration, p_e)
    sat = saturation_throughput(stats, mac)
    s_n = sat.per_node_S
    beta = sat.aggregate_S

    grants: Dict[str, NodeGrant] = {}
    for d in active:
        nu = min(d.inelastic, s_n)
        eta = min(d.elastic, s_n - nu)
        grants[d.node] = NodeGrant(node=d.node, inelastic=nu, elastic=eta, consumed=nu + eta)
        beta -= nu + eta

    overflow = sorted((d for d in active if d.total > s_n), key=lambda d: (d.rate, d.node))
    while beta > CAPACITY_EPSILON and overflow:
        for d in list(overflow):
            if beta <= CAPACITY_EPSILON:
                break
            g = grants[d.node]
            weight = stats.avg_rate / d.rate
            if g.inelastic < d.inelastic:
                amount = min(d.inelastic_payload / cycle_duration, d.inelastic - g.inelastic, beta / weight)
                g.inelastic += amount
            elif g.elastic < d.elastic:
                remaining = d.elastic - g.elastic
                amount = min(d.elastic_payload / cycle_duration, remaining, beta / weight)
                g.elastic += amount
            else:
                overflow.remove(d)
                continue
            g.consumed += amount * weight
            beta -= amount * weight

    return BssAllocation(grants=grants, stats=stats, sat=sat, residual=max(0.0, beta))


def damp_elastic(previous: float, target: float, damping: float) -> float:
    """Elastic grants rise at most `damping` of the way per cycle and drop at once."""
    if target <= previous or math.isinf(previous):
        return target
    return previous + damping * (target - previous)
