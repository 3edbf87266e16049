# Copyright 2024
# Directory: fedgw-sim/app/services/assessment.py

"""
Load Assessment - Gateway Status and b-metric.

Both computations rest on DCF per-packet fairness: a node whose total
throughput stays below the per-node share S_n is served in full, the others
reach S_n and then compete for what is left, weighted by R/R_k.

Provides:
- assess_status: available inelastic bandwidth B and Light/Heavy/Regular status
- merge_candidates: the BSS as if candidate stations were associated
- b_metric / b_metric_trace: residual inelastic bandwidth after admission
- admission_decision / evaluate_candidates: accept or reject candidates
"""

import logging
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from pydantic import BaseModel, Field

from ..schemas.entities import (
    CandidateStation,
    CycleStats,
    GatewayStatus,
    MacParams,
    SaturationResult,
    StatusReport,
    Thresholds,
    TrafficClass,
    TrafficProfile,
)
from .mac_model import saturation_throughput

logger = logging.getLogger(__name__)

# Residual capacity below this is treated as exhausted (bit/s)
CAPACITY_EPSILON = 1e-6


class AdmissionMode(str, Enum):
    """Which acceptance rule applies to a candidate set."""
    FRESH_JOIN = "fresh-join"
    LIGHT_COMBO = "light-combo"
    HEAVY_SINGLE = "heavy-single"


class Grant(BaseModel):
    """One packet-quantum handed to an overflow node."""
    node: str
    traffic_class: TrafficClass
    served: float = Field(..., ge=0, description="Throughput added to the node (bit/s)")
    consumed: float = Field(..., ge=0, description="Capacity used, weighted by R/R_k (bit/s)")


class BMetricTrace(BaseModel):
    """b-metric with the allocation that produced it."""
    b: float
    beta_initial: float
    grants: List[Grant] = Field(default_factory=list)
    nu_hat: Dict[str, float] = Field(default_factory=dict, description="Inelastic throughput per node")
    eta_hat: Dict[str, float] = Field(default_factory=dict, description="Elastic throughput per node")

    @property
    def inelastic_granted(self) -> float:
        """Inelastic throughput handed out above S_n."""
        return sum(g.served for g in self.grants if g.traffic_class == TrafficClass.INELASTIC)

    @property
    def inelastic_consumed(self) -> float:
        return sum(g.consumed for g in self.grants if g.traffic_class == TrafficClass.INELASTIC)


def _rate_of(profile: TrafficProfile, stats: CycleStats) -> float:
    return profile.avg_rate or stats.avg_rate


# =============================================================================
# Status assessment
# =============================================================================

def available_bandwidth(
    stats: CycleStats,
    profiles: Mapping[str, TrafficProfile],
    sat: SaturationResult,
) -> float:
    """B = S - sum min(nu+eta, S_n) - sum max(0, (nu - S_n) R/R_k)."""
    s, s_n = sat.aggregate_S, sat.per_node_S
    b = s
    for profile in profiles.values():
        b -= min(profile.inelastic + profile.elastic, s_n)
        b -= max(0.0, (profile.inelastic - s_n) * stats.avg_rate / _rate_of(profile, stats))
    return b


def assess_status(
    stats: CycleStats,
    profiles: Mapping[str, TrafficProfile],
    sat: SaturationResult,
    th: Thresholds,
) -> StatusReport:
    """
    Classify the gateway from its last cycle.

    Args:
        stats: Cycle aggregates; N counts the gateway when it was active
        profiles: Profiles of exactly the active nodes
        sat: Saturation result for `stats` (for N = 0, a lone node's)
        th: Thresholds

    Returns:
        StatusReport with B, S and the status
    """
    n = stats.n_active
    if n == 0:
        return StatusReport(
            status=GatewayStatus.LIGHT,
            available_bandwidth=sat.aggregate_S,
            saturation=sat.aggregate_S,
            per_node=sat.aggregate_S,
            n_stations=0,
        )

    b = available_bandwidth(stats, profiles, sat)
    s = sat.aggregate_S
    ratio = b / s if s > 0 else 0.0
    if ratio > th.T_L and (n - 1) < th.N_L:
        status = GatewayStatus.LIGHT
    elif ratio < th.T_R:
        status = GatewayStatus.HEAVY
    else:
        status = GatewayStatus.REGULAR
    return StatusReport(
        status=status,
        available_bandwidth=b,
        saturation=s,
        per_node=sat.per_node_S,
        n_stations=n,
    )


# =============================================================================
# b-metric
# =============================================================================

def b_metric_trace(
    stats: CycleStats,
    profiles: Mapping[str, TrafficProfile],
    sat: SaturationResult,
) -> BMetricTrace:
    """
    Residual inelastic bandwidth, keeping every grant made along the way.

    Overflow nodes (total above S_n) take turns in ascending R_k order (ties
    by node id). A turn serves one average packet per cycle, capped by the
    node's remaining demand, inelastic first, and consumes that throughput
    weighted by R/R_k. Only inelastic turns reduce b. The cycle allocator
    makes the same turns, so nu_hat here equals its inelastic grants.
    """
    s, s_n = sat.aggregate_S, sat.per_node_S
    beta = s
    nu_hat: Dict[str, float] = {}
    eta_hat: Dict[str, float] = {}
    for node, p in profiles.items():
        beta -= min(p.inelastic + p.elastic, s_n)
        nu_hat[node] = min(p.inelastic, s_n)
        eta_hat[node] = min(p.elastic, s_n - nu_hat[node])

    overflow = sorted(
        (node for node, p in profiles.items() if p.inelastic + p.elastic > s_n),
        key=lambda node: (_rate_of(profiles[node], stats), node),
    )
    trace = BMetricTrace(b=beta, beta_initial=beta)
    b = beta

    while beta > CAPACITY_EPSILON and overflow:
        for node in list(overflow):
            if beta <= CAPACITY_EPSILON:
                break
            p = profiles[node]
            weight = stats.avg_rate / _rate_of(p, stats)
            if nu_hat[node] < p.inelastic:
                payload = p.avg_inelastic_payload or stats.avg_payload
                served = min(payload / stats.cycle_duration, p.inelastic - nu_hat[node], beta / weight)
                nu_hat[node] += served
                cls = TrafficClass.INELASTIC
            elif eta_hat[node] < p.elastic:
                payload = p.avg_elastic_payload or stats.avg_payload
                served = min(payload / stats.cycle_duration, p.elastic - eta_hat[node], beta / weight)
                eta_hat[node] += served
                cls = TrafficClass.ELASTIC
            else:
                overflow.remove(node)
                continue
            consumed = served * weight
            beta -= consumed
            if cls == TrafficClass.INELASTIC:
                b -= consumed
            trace.grants.append(Grant(node=node, traffic_class=cls, served=served, consumed=consumed))

    trace.b = b
    trace.nu_hat = nu_hat
    trace.eta_hat = eta_hat
    return trace


def b_metric(
    stats: CycleStats,
    profiles: Mapping[str, TrafficProfile],
    sat: SaturationResult,
) -> float:
    """
    b-metric of a BSS whose node set already includes the candidates.

    Args:
        stats: Cycle aggregates (recomputed for the merged node set)
        profiles: Node profiles including candidates
        sat: Saturation result for the merged node set

    Returns:
        b (bit/s)
    """
    return b_metric_trace(stats, profiles, sat).b


# =============================================================================
# Candidate evaluation
# =============================================================================

def _candidate_profile(candidate: CandidateStation, s_n: float) -> TrafficProfile:
    if candidate.demand_known:
        inelastic = candidate.uplink_inelastic or 0.0
        elastic = candidate.uplink_elastic or 0.0
    else:
        inelastic, elastic = s_n, 0.0
    return TrafficProfile(
        node_id=candidate.mac,
        inelastic=inelastic,
        elastic=elastic,
        avg_inelastic_payload=candidate.avg_inelastic_payload,
        avg_elastic_payload=candidate.avg_elastic_payload,
        avg_rate=candidate.estimated_rate,
    )


def _representative_payload(profile: TrafficProfile, default: float) -> float:
    return profile.avg_inelastic_payload or profile.avg_elastic_payload or default


def merge_candidates(
    stats: CycleStats,
    profiles: Mapping[str, TrafficProfile],
    candidates: Sequence[CandidateStation],
    mac: MacParams,
    sat: SaturationResult,
    gateway_id: Optional[str] = None,
) -> Tuple[CycleStats, Dict[str, TrafficProfile], SaturationResult]:
    """
    The BSS as it would look with the candidates associated.

    Candidates with unknown demand get S_n uplink and S_n downlink. Downlink
    demand is added to the gateway node, which joins the node set if it was
    idle. N, P and R are recomputed as node-weighted means and S, S_n follow.

    Args:
        stats: Last cycle aggregates of the evaluating gateway
        profiles: Profiles of its active nodes
        candidates: Stations to add
        mac: MAC parameters
        sat: Saturation result of the last cycle (its S_n feeds unknown demands)
        gateway_id: Key of the gateway's own node in `profiles`

    Returns:
        (merged stats, merged profiles, merged saturation result)
    """
    s_n = sat.per_node_S
    merged: Dict[str, TrafficProfile] = {k: v.model_copy() for k, v in profiles.items()}
    n_old = stats.n_active
    payload_total = stats.avg_payload * n_old
    rate_total = stats.avg_rate * n_old
    max_payload = stats.max_payload
    added = 0

    downlink_inelastic = 0.0
    downlink_elastic = 0.0
    for candidate in candidates:
        profile = _candidate_profile(candidate, s_n)
        merged[candidate.mac] = profile
        added += 1
        payload = _representative_payload(profile, stats.avg_payload)
        payload_total += payload
        rate_total += candidate.estimated_rate
        max_payload = max(max_payload, payload)
        if candidate.demand_known:
            downlink_inelastic += candidate.downlink_inelastic or 0.0
            downlink_elastic += candidate.downlink_elastic or 0.0
        else:
            downlink_inelastic += s_n

    if gateway_id is not None and (downlink_inelastic > 0 or downlink_elastic > 0):
        if gateway_id in merged:
            node = merged[gateway_id]
            node.inelastic += downlink_inelastic
            node.elastic += downlink_elastic
        else:
            rates = [c.estimated_rate for c in candidates]
            merged[gateway_id] = TrafficProfile(
                node_id=gateway_id,
                inelastic=downlink_inelastic,
                elastic=downlink_elastic,
                avg_rate=sum(rates) / len(rates),
            )
            added += 1
            payload_total += stats.avg_payload
            rate_total += merged[gateway_id].avg_rate

    n_new = n_old + added
    if n_new == 0:
        return stats, merged, sat
    merged_stats = stats.model_copy(update={
        "n_active": n_new,
        "avg_payload": payload_total / n_new,
        "max_payload": max(max_payload, payload_total / n_new),
        "avg_rate": rate_total / n_new,
    })
    return merged_stats, merged, saturation_throughput(merged_stats, mac)


def admission_decision(b: float, S: float, mode: AdmissionMode, th: Thresholds) -> bool:
    """
    Acceptance rule for a candidate set.

    Fresh joins are always accepted, Light-procedure combos need b > 0 and
    Heavy-procedure hand-overs need b/S > T_A.
    """
    if mode == AdmissionMode.FRESH_JOIN:
        return True
    if mode == AdmissionMode.LIGHT_COMBO:
        return b > 0
    if S <= 0:
        return False
    return b / S > th.T_A


def evaluate_candidates(
    stats: CycleStats,
    profiles: Mapping[str, TrafficProfile],
    candidates: Sequence[CandidateStation],
    mac: MacParams,
    sat: SaturationResult,
    th: Thresholds,
    mode: AdmissionMode,
    gateway_id: Optional[str] = None,
) -> Tuple[bool, float, float]:
    """
    Merge candidates, compute b and apply the admission rule.

    Returns:
        (accepted, b, S) with S recomputed for the merged node set
    """
    merged_stats, merged, merged_sat = merge_candidates(
        stats, profiles, candidates, mac, sat, gateway_id=gateway_id
    )
    b = b_metric(merged_stats, merged, merged_sat)
    accepted = admission_decision(b, merged_sat.aggregate_S, mode, th)
    logger.debug(
        f"Candidates {[c.mac for c in candidates]} ({mode.value}): "
        f"b={b / 1e6:.3f} Mbit/s S={merged_sat.aggregate_S / 1e6:.3f} accepted={accepted}"
    )
    return accepted, b, merged_sat.aggregate_S
