# Directory: fedgw-sim/tests/test_monitor.py

import pytest

from app.schemas.entities import IPPROTO_TCP, Direction, FrameMeta, TrafficClass, TrafficProfile, classify_frame
from app.schemas.scenario import IP_PROTOCOLS, FlowSpec
from app.services.monitor import (
    CycleAccumulator,
    CycleMonitor,
    close_cycle,
    cycle_complete,
    ewma,
    observe_frame,
)

A, B, GW = "02:00:00:00:00:0a", "02:00:00:00:00:0b", "gw"


def frame(node=A, t=0.01, cls=TrafficClass.INELASTIC, success=True, direction=Direction.UPLINK,
          peer=None, bits=12000.0, rate=54e6, per=0.0) -> FrameMeta:
    return FrameMeta(
        node=node, peer=peer, direction=direction, traffic_class=cls, payload_bits=bits,
        rate=rate, success=success, timestamp=t, per=per,
    )


def test_classify_frame():
    assert classify_frame(IPPROTO_TCP) == TrafficClass.ELASTIC
    assert classify_frame(17) == TrafficClass.INELASTIC
    assert classify_frame(1) == TrafficClass.INELASTIC


@pytest.mark.parametrize("protocol", sorted(IP_PROTOCOLS) + [6, 17, 89])
def test_flow_class_follows_the_frame_classifier(protocol):
    flow = FlowSpec(station=A, protocol=protocol, offered_load=1e5)
    number = protocol if isinstance(protocol, int) else IP_PROTOCOLS[protocol]
    assert flow.traffic_class == classify_frame(number)
    assert (flow.traffic_class == TrafficClass.ELASTIC) == (number == IPPROTO_TCP)


def test_ewma_seeds_with_first_sample():
    assert ewma(None, 4.0, 0.3) == 4.0
    assert ewma(4.0, 14.0, 0.3) == pytest.approx(7.0)


def test_cycle_without_stations_runs_to_t_max():
    acc = CycleAccumulator(cycle_start=1.0)
    assert not cycle_complete(acc, 1.05, 0.1)
    assert cycle_complete(acc, 1.1, 0.1)


def test_cycle_completes_when_every_station_sent_inelastic():
    acc = CycleAccumulator(cycle_start=0.0, expected={A, B})
    observe_frame(acc, frame(A, t=0.01))
    assert not cycle_complete(acc, 0.01, 0.1)
    observe_frame(acc, frame(B, t=0.02, cls=TrafficClass.ELASTIC))
    assert not cycle_complete(acc, 0.02, 0.1)
    observe_frame(acc, frame(B, t=0.03))
    assert cycle_complete(acc, 0.03, 0.1)


def test_pending_downlink_holds_the_cycle_open():
    acc = CycleAccumulator(cycle_start=0.0, pending_downlink={B})
    observe_frame(acc, frame(A, t=0.01))
    assert not cycle_complete(acc, 0.01, 0.1)
    observe_frame(acc, frame(GW, peer=B, direction=Direction.DOWNLINK, t=0.02))
    assert cycle_complete(acc, 0.02, 0.1)


def test_failed_frames_do_not_count():
    acc = CycleAccumulator(cycle_start=0.0)
    observe_frame(acc, frame(A, success=False, per=0.5))
    assert A not in acc.active
    assert acc.attempts == 1
    assert acc.delivered_frames == 0


def test_frame_before_cycle_start_is_rejected():
    with pytest.raises(ValueError):
        observe_frame(CycleAccumulator(cycle_start=1.0), frame(t=0.5))


def test_close_cycle_produces_stats_and_profiles():
    acc = CycleAccumulator(cycle_start=0.0)
    for i in range(5):
        observe_frame(acc, frame(A, t=0.01 * (i + 1)))
    observe_frame(acc, frame(B, t=0.06, cls=TrafficClass.ELASTIC, bits=6000.0, rate=24e6))
    observe_frame(acc, frame(GW, peer=A, direction=Direction.DOWNLINK, t=0.07))
    profiles = {A: TrafficProfile(node_id=A), B: TrafficProfile(node_id=B), GW: TrafficProfile(node_id=GW)}

    stats, profiles = close_cycle(acc, profiles, alpha=0.5, now=0.1, gateway_id=GW)

    assert stats.n_active == 3
    assert stats.cycle_duration == pytest.approx(0.1)
    assert stats.max_payload == 12000.0
    assert stats.avg_payload == pytest.approx((6 * 12000 + 6000) / 7)
    assert profiles[A].inelastic == pytest.approx(5 * 12000 / 0.1)
    assert profiles[B].elastic == pytest.approx(6000 / 0.1)
    assert profiles[B].avg_rate == 24e6
    assert profiles[GW].inelastic == pytest.approx(12000 / 0.1)


def test_close_cycle_rejects_empty_duration():
    with pytest.raises(ValueError):
        close_cycle(CycleAccumulator(cycle_start=1.0), {}, 0.3, now=1.0)


def test_filtered_per_is_smoothed():
    monitor = CycleMonitor(GW, alpha=0.5, T_max=0.1)
    monitor.add_station(A)
    monitor.observe(frame(A, per=0.2))
    first = monitor.close(0.1)
    assert first.filtered_per == pytest.approx(0.2)
    monitor.start_cycle(0.1)
    monitor.observe(frame(A, t=0.15, per=0.0))
    assert monitor.close(0.2).filtered_per == pytest.approx(0.1)


def test_monitor_carries_active_stations_into_next_cycle():
    monitor = CycleMonitor(GW, T_max=0.1)
    monitor.add_station(A)
    monitor.add_station(B)
    monitor.observe(frame(A))
    monitor.close(0.1)
    monitor.start_cycle(0.1)
    assert monitor.accumulator.expected == {A}
    monitor.observe(frame(A, t=0.12))
    assert monitor.is_complete(0.12)


def test_forget_station_releases_the_cycle():
    monitor = CycleMonitor(GW, T_max=0.1)
    for mac in (A, B):
        monitor.add_station(mac)
        monitor.observe(frame(mac, cls=TrafficClass.ELASTIC))
    monitor.close(0.1)
    monitor.start_cycle(0.1)
    monitor.observe(frame(A, t=0.11))
    assert not monitor.is_complete(0.11)
    monitor.forget_station(B)
    assert monitor.is_complete(0.11)
    assert B not in monitor.stations


def test_active_profiles_include_gateway_when_it_sent():
    monitor = CycleMonitor(GW)
    monitor.add_station(A)
    monitor.add_station(B)
    monitor.observe(frame(A))
    monitor.observe(frame(GW, peer=B, direction=Direction.DOWNLINK, t=0.02))
    monitor.close(0.1)
    assert set(monitor.active_profiles()) == {A, GW}
