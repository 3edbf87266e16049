# Directory: fedgw-sim/tests/test_assessment.py

from collections import deque

import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.schemas.entities import CandidateStation, CycleStats, GatewayStatus, MacParams, Thresholds, TrafficProfile
from app.services.assessment import (
    AdmissionMode,
    admission_decision,
    assess_status,
    available_bandwidth,
    b_metric,
    b_metric_trace,
    evaluate_candidates,
    merge_candidates,
)
from app.services.mac_model import saturation_throughput
from app.simulation.allocation import NodeDemand, allocate_cycle_throughput

MAC = MacParams()
RATES = [6e6, 12e6, 24e6, 54e6]


def bss(loads, cycle=0.1, rate=54e6):
    """(stats, profiles, sat) for nodes given as (inelastic, elastic, R_k) tuples."""
    profiles = {
        f"n{i}": TrafficProfile(node_id=f"n{i}", inelastic=nu, elastic=eta, avg_rate=r,
                                avg_inelastic_payload=12000.0, avg_elastic_payload=12000.0)
        for i, (nu, eta, r) in enumerate(loads)
    }
    stats = CycleStats(n_active=len(loads), cycle_duration=cycle, avg_payload=12000.0,
                       max_payload=12000.0, avg_rate=rate)
    return stats, profiles, saturation_throughput(stats, MAC)


def oracle_available(stats, profiles, sat):
    s_n = sat.per_node_S
    served = sum(min(p.inelastic + p.elastic, s_n) for p in profiles.values())
    overflow = sum(max(0.0, p.inelastic - s_n) * stats.avg_rate / p.avg_rate for p in profiles.values())
    return sat.aggregate_S - served - overflow


def oracle_b(stats, profiles, sat):
    """Packet-by-packet round robin over overflow nodes, slowest first."""
    s_n = sat.per_node_S
    beta = sat.aggregate_S - sum(min(p.inelastic + p.elastic, s_n) for p in profiles.values())
    b = beta
    got_i = {k: min(p.inelastic, s_n) for k, p in profiles.items()}
    got_e = {k: min(p.elastic, s_n - got_i[k]) for k, p in profiles.items()}
    queue = deque(sorted((k for k, p in profiles.items() if p.inelastic + p.elastic > s_n),
                         key=lambda k: (profiles[k].avg_rate, k)))
    while beta > 1e-6 and queue:
        rounds = len(queue)
        for _ in range(rounds):
            if beta <= 1e-6:
                break
            k = queue.popleft()
            p = profiles[k]
            weight = stats.avg_rate / p.avg_rate
            if got_i[k] < p.inelastic:
                served = min(p.avg_inelastic_payload / stats.cycle_duration, p.inelastic - got_i[k], beta / weight)
                got_i[k] += served
                beta -= served * weight
                b -= served * weight
                queue.append(k)
            elif got_e[k] < p.elastic:
                served = min(p.avg_elastic_payload / stats.cycle_duration, p.elastic - got_e[k], beta / weight)
                got_e[k] += served
                beta -= served * weight
                queue.append(k)
    return b


loads = st.lists(
    st.tuples(
        st.floats(min_value=0, max_value=25e6),
        st.floats(min_value=0, max_value=25e6),
        st.sampled_from(RATES),
    ),
    min_size=1,
    max_size=8,
)


@given(loads)
def test_available_bandwidth_matches_closed_form(nodes):
    stats, profiles, sat = bss(nodes)
    assert available_bandwidth(stats, profiles, sat) == pytest.approx(oracle_available(stats, profiles, sat), abs=1e-3)


@given(loads)
def test_b_metric_matches_round_robin(nodes):
    stats, profiles, sat = bss(nodes)
    assert b_metric(stats, profiles, sat) == pytest.approx(oracle_b(stats, profiles, sat), rel=1e-9, abs=1e-3)


@given(loads)
def test_b_metric_accounts_for_every_inelastic_grant(nodes):
    stats, profiles, sat = bss(nodes)
    trace = b_metric_trace(stats, profiles, sat)
    assert trace.b + trace.inelastic_consumed == pytest.approx(trace.beta_initial, abs=1e-3)
    assert trace.b <= trace.beta_initial + 1e-9
    for node, p in profiles.items():
        assert trace.nu_hat[node] <= p.inelastic + 1e-6


@given(loads)
def test_b_metric_grants_what_the_cycle_allocator_grants(nodes):
    demands = [
        NodeDemand(node=f"n{i}", inelastic=nu, elastic=eta, inelastic_payload=12000.0,
                   elastic_payload=12000.0, rate=r)
        for i, (nu, eta, r) in enumerate(nodes)
    ]
    allocation = allocate_cycle_throughput(demands, MAC, 0.1)
    profiles = {
        d.node: TrafficProfile(node_id=d.node, inelastic=d.inelastic, elastic=d.elastic, avg_rate=d.rate,
                               avg_inelastic_payload=12000.0, avg_elastic_payload=12000.0)
        for d in demands if d.node in allocation.grants
    }
    if not profiles:
        return
    trace = b_metric_trace(allocation.stats, profiles, allocation.sat)

    for node, grant in allocation.grants.items():
        assert trace.nu_hat[node] == pytest.approx(grant.inelastic, rel=1e-9, abs=1e-6)
        assert trace.eta_hat[node] == pytest.approx(grant.elastic, rel=1e-9, abs=1e-6)
    above_share = sum(max(0.0, g.inelastic - allocation.sat.per_node_S) for g in allocation.grants.values())
    assert trace.inelastic_granted == pytest.approx(above_share, rel=1e-9, abs=1e-6)


def test_b_metric_without_overflow_is_the_residual():
    stats, profiles, sat = bss([(1e6, 0, 54e6), (0.5e6, 0.5e6, 24e6)])
    trace = b_metric_trace(stats, profiles, sat)
    assert not trace.grants
    assert trace.b == pytest.approx(sat.aggregate_S - 2e6)


def test_elastic_overflow_does_not_reduce_b():
    stats, profiles, sat = bss([(0, 40e6, 54e6), (1e6, 0, 54e6)])
    trace = b_metric_trace(stats, profiles, sat)
    assert trace.grants
    assert trace.inelastic_granted == 0
    assert trace.b == pytest.approx(trace.beta_initial)


def test_empty_bss_is_light():
    stats = CycleStats(n_active=0, cycle_duration=0.1, avg_payload=12000, max_payload=12000, avg_rate=54e6)
    lone = saturation_throughput(stats.model_copy(update={"n_active": 1}), MAC)
    report = assess_status(stats, {}, lone, Thresholds())
    assert report.status == GatewayStatus.LIGHT
    assert report.available_bandwidth == report.saturation == lone.aggregate_S


def test_lightly_loaded_bss_is_light():
    report = assess_status(*bss([(1e6, 0, 54e6), (1e6, 0, 54e6)]), Thresholds())
    assert report.status == GatewayStatus.LIGHT
    assert report.b_over_s > 0.5


def test_overloaded_bss_is_heavy():
    report = assess_status(*bss([(20e6, 0, 54e6)] * 3), Thresholds())
    assert report.status == GatewayStatus.HEAVY
    assert report.available_bandwidth < 0


def test_station_bound_blocks_light():
    nodes = [(0.1e6, 0, 54e6)] * 10
    assert assess_status(*bss(nodes), Thresholds(N_L=10)).status == GatewayStatus.LIGHT
    nodes = [(0.1e6, 0, 54e6)] * 11
    assert assess_status(*bss(nodes), Thresholds(N_L=10)).status == GatewayStatus.REGULAR


def test_thresholds_must_be_ordered():
    with pytest.raises(ValueError):
        Thresholds(T_R=0.6, T_L=0.5)


@pytest.mark.parametrize(
    "b, S, mode, accepted",
    [
        (-5e6, 20e6, AdmissionMode.FRESH_JOIN, True),
        (1.0, 20e6, AdmissionMode.LIGHT_COMBO, True),
        (0.0, 20e6, AdmissionMode.LIGHT_COMBO, False),
        (5e6, 20e6, AdmissionMode.HEAVY_SINGLE, True),
        (4e6, 20e6, AdmissionMode.HEAVY_SINGLE, False),
        (5e6, 0.0, AdmissionMode.HEAVY_SINGLE, False),
    ],
)
def test_admission_rules(b, S, mode, accepted):
    assert admission_decision(b, S, mode, Thresholds(T_A=0.2)) is accepted


def test_unknown_candidate_demand_defaults_to_per_node_share():
    stats, profiles, sat = bss([(1e6, 0, 54e6)])
    candidate = CandidateStation(mac="c1", estimated_rate=24e6)
    merged_stats, merged, merged_sat = merge_candidates(stats, profiles, [candidate], MAC, sat, gateway_id="gw")
    assert merged["c1"].inelastic == pytest.approx(sat.per_node_S)
    assert merged["gw"].inelastic == pytest.approx(sat.per_node_S)
    assert merged_stats.n_active == 3
    assert merged_stats.avg_rate == pytest.approx((54e6 + 24e6 + 24e6) / 3)
    assert merged_sat.aggregate_S == pytest.approx(saturation_throughput(merged_stats, MAC).aggregate_S)


def test_known_demand_feeds_the_gateway_node():
    stats, profiles, sat = bss([(1e6, 0, 54e6)])
    profiles["gw"] = TrafficProfile(node_id="gw", inelastic=2e6, avg_rate=54e6)
    stats = stats.model_copy(update={"n_active": 2})
    candidate = CandidateStation(mac="c1", uplink_inelastic=1e6, downlink_elastic=3e6, estimated_rate=54e6)
    merged_stats, merged, _ = merge_candidates(stats, profiles, [candidate], MAC, sat, gateway_id="gw")
    assert merged_stats.n_active == 3
    assert merged["gw"].elastic == pytest.approx(3e6)
    assert profiles["gw"].elastic == 0.0


def test_light_gateway_accepts_a_small_combo():
    stats, profiles, sat = bss([(1e6, 0, 54e6)])
    candidates = [CandidateStation(mac=f"c{i}", uplink_inelastic=1e6, estimated_rate=54e6) for i in range(2)]
    accepted, b, S = evaluate_candidates(
        stats, profiles, candidates, MAC, sat, Thresholds(), AdmissionMode.LIGHT_COMBO, gateway_id="gw"
    )
    assert accepted
    assert 0 < b < S


def test_saturated_gateway_refuses_a_heavy_hand_over():
    stats, profiles, sat = bss([(12e6, 0, 54e6)] * 2)
    candidate = CandidateStation(mac="c1", uplink_inelastic=12e6, estimated_rate=6e6)
    accepted, _, _ = evaluate_candidates(
        stats, profiles, [candidate], MAC, sat, Thresholds(), AdmissionMode.HEAVY_SINGLE, gateway_id="gw"
    )
    assert not accepted
