# Directory: fedgw-sim/tests/test_gateway_protocol.py

"""Gateway state machine and message handlers against a scripted federation."""

from typing import Dict, List, Optional, Tuple

import numpy as np
import pytest

from app.agents import GatewayAgent, Role, handler_registry
from app.agents.handlers.offload import complete_probe
from app.schemas.entities import (
    CycleStats,
    GatewayStatus,
    MacParams,
    ProbeObservation,
    StatusReport,
    Thresholds,
    TrafficProfile,
)
from app.schemas.messages import (
    Abort,
    AdvertisedStation,
    AllocationRequest,
    AllocationResponse,
    HandoverCommand,
    OfferedCombo,
    OffloadRequest,
    OffloadResponse,
)
from app.schemas.scenario import ProtocolConfig
from app.services.assessment import assess_status
from app.services.mac_model import saturation_throughput

S1, S2 = "02:00:00:00:01:01", "02:00:00:00:01:02"


class ScriptedFederation:
    """FederationContext with a settable clock and recorded side effects."""

    def __init__(self, protocol: Optional[ProtocolConfig] = None):
        self.now = 0.0
        self.protocol = protocol or ProtocolConfig(light_dwell=1, heavy_dwell=1)
        self.thresholds = Thresholds()
        self.mac = MacParams()
        self.gateways: Dict[str, GatewayAgent] = {}
        self.timers: List[Tuple[str, float, str, Dict]] = []
        self.observations: Dict[Tuple[str, str], List[ProbeObservation]] = {}
        self.reassociations: List[Tuple[Dict[str, str], str, str]] = []
        self._rngs: Dict[str, np.random.Generator] = {}

    def rng(self, label: str) -> np.random.Generator:
        return self._rngs.setdefault(label, np.random.default_rng(len(label)))

    def schedule_timer(self, gateway_id: str, delay: float, name: str, payload: Dict) -> None:
        self.timers.append((gateway_id, self.now + delay, name, payload))

    def probe(self, listener_id: str, requester_id: str) -> List[ProbeObservation]:
        return self.observations.get((listener_id, requester_id), [])

    def power(self, gateway_id: str, on: bool) -> None:
        gateway = self.gateways[gateway_id]
        if on:
            gateway.power_on(self.now, woken=True)
        else:
            gateway.power_off()

    def reassociate(self, assignments: Dict[str, str], origin: str, reason: str) -> None:
        self.reassociations.append((dict(assignments), origin, reason))


def make_gateway(ctx: ScriptedFederation, gateway_id: str, stations=(), on: bool = True) -> GatewayAgent:
    gateway = GatewayAgent(gateway_id, f"02:00:00:00:00:{len(ctx.gateways):02x}", 1, ctx.mac, on=on)
    for station in stations:
        gateway.associate(station)
    ctx.gateways[gateway_id] = gateway
    return gateway


def report(status: GatewayStatus, b_over_s: float = 0.9, n: int = 2) -> StatusReport:
    return StatusReport(status=status, available_bandwidth=b_over_s * 20e6, saturation=20e6, per_node=10e6, n_stations=n)


def feed(gateway: GatewayAgent, status: GatewayStatus, b_over_s: float = 0.9) -> None:
    stats = CycleStats(n_active=1, cycle_duration=0.1, avg_payload=12000, max_payload=12000, avg_rate=54e6)
    sat = saturation_throughput(stats, gateway.mac)
    gateway.record_cycle(report(status, b_over_s), stats, sat, {})


def load(gateway: GatewayAgent, ctx: ScriptedFederation, inelastic: float) -> StatusReport:
    """Give a responder a measured BSS with one node of the given load."""
    stats = CycleStats(n_active=1, cycle_duration=0.1, avg_payload=12000, max_payload=12000, avg_rate=54e6)
    sat = saturation_throughput(stats, gateway.mac)
    profiles = {"x": TrafficProfile(node_id="x", inelastic=inelastic, avg_rate=54e6, avg_inelastic_payload=12000)}
    status = assess_status(stats, profiles, sat, ctx.thresholds)
    gateway.record_cycle(status, stats, sat, profiles)
    return status


def light_request(origin="g0", sent_at=0.0, b_over_s=0.9, flagged=False, procedure_id=None) -> OffloadRequest:
    return OffloadRequest(
        procedure_id=procedure_id or f"{origin}-1",
        origin=origin,
        sent_at=sent_at,
        status=GatewayStatus.LIGHT,
        channel=1,
        requester_b_over_s=b_over_s,
        flagged=flagged,
        stations=[
            AdvertisedStation(hashed_aid=1, mac=S1, uplink_inelastic=1e6, uplink_elastic=0.0, avg_rate=54e6),
            AdvertisedStation(hashed_aid=2, mac=S2, uplink_inelastic=1e6, uplink_elastic=0.0, avg_rate=54e6),
        ],
    )


@pytest.fixture
def ctx() -> ScriptedFederation:
    return ScriptedFederation()


# =============================================================================
# Requester side
# =============================================================================

def test_registry_knows_every_message_type():
    assert sorted(handler_registry.list_handlers()) == sorted([
        "offload_request", "offload_response", "allocation_request",
        "allocation_response", "handover_command", "abort",
    ])


def test_light_gateway_starts_a_procedure(ctx):
    g0 = make_gateway(ctx, "g0", [S1, S2])
    feed(g0, GatewayStatus.LIGHT)
    request = g0.maybe_start_procedure(ctx)

    assert request is not None
    assert request.status == GatewayStatus.LIGHT
    assert [s.mac for s in request.stations] == [S1, S2]
    assert not request.flagged
    assert g0.procedure.role == Role.AWAITING_RESPONSES
    assert g0.busy.procedure_id == request.procedure_id
    gateway_id, due, name, _ = ctx.timers[-1]
    assert (gateway_id, name) == ("g0", "responses_due")
    assert due == pytest.approx(ctx.protocol.probe_window + ctx.protocol.response_timeout)


def test_regular_gateway_stays_quiet(ctx):
    g0 = make_gateway(ctx, "g0", [S1])
    feed(g0, GatewayStatus.REGULAR)
    assert g0.maybe_start_procedure(ctx) is None


def test_dwell_is_respected():
    ctx = ScriptedFederation(ProtocolConfig(light_dwell=3))
    g0 = make_gateway(ctx, "g0", [S1])
    for _ in range(2):
        feed(g0, GatewayStatus.LIGHT)
        assert g0.maybe_start_procedure(ctx) is None
    feed(g0, GatewayStatus.LIGHT)
    assert g0.maybe_start_procedure(ctx) is not None


def test_disabled_protocol_never_requests():
    ctx = ScriptedFederation(ProtocolConfig(enabled=False, light_dwell=1))
    g0 = make_gateway(ctx, "g0", [S1])
    feed(g0, GatewayStatus.LIGHT)
    assert g0.maybe_start_procedure(ctx) is None


def test_successful_light_procedure_hands_over_and_plans_shutdown(ctx):
    g0 = make_gateway(ctx, "g0", [S1, S2])
    feed(g0, GatewayStatus.LIGHT)
    request = g0.maybe_start_procedure(ctx)

    offer = OffloadResponse(
        procedure_id=request.procedure_id, origin="g1", destination="g0",
        combos=[OfferedCombo(stations=[S1, S2], b_value=5e6, b_over_s=0.3, rates={S1: 54e6, S2: 48e6})],
    )
    assert handler_registry.dispatch(g0, offer, ctx) == []
    ctx.now = 0.4
    sent = g0.on_timer("responses_due", {"procedure_id": request.procedure_id}, ctx)
    assert len(sent) == 1 and isinstance(sent[0], AllocationRequest)
    assert sent[0].destination == "g1" and sent[0].assigned == [S1, S2]
    assert g0.procedure.role == Role.AWAITING_ALLOCATIONS

    ctx.now = 0.45
    reply = AllocationResponse(procedure_id=request.procedure_id, origin="g1", destination="g0", accept=True)
    closing = handler_registry.dispatch(g0, reply, ctx)
    assert len(closing) == 1 and isinstance(closing[0], HandoverCommand)
    assert closing[0].assignments == {S1: "g1", S2: "g1"}
    assert ctx.reassociations == [({S1: "g1", S2: "g1"}, "g0", "light")]
    assert g0.pending_shutdown
    assert g0.procedure.role == Role.IDLE
    assert g0.busy is None
    assert not g0.authorized & {S1, S2}


def test_rejected_allocation_aborts(ctx):
    g0 = make_gateway(ctx, "g0", [S1])
    feed(g0, GatewayStatus.LIGHT)
    request = g0.maybe_start_procedure(ctx)
    handler_registry.dispatch(g0, OffloadResponse(
        procedure_id=request.procedure_id, origin="g1", destination="g0",
        combos=[OfferedCombo(stations=[S1], b_value=5e6, b_over_s=0.3, rates={S1: 54e6})],
    ), ctx)
    g0.on_timer("responses_due", {"procedure_id": request.procedure_id}, ctx)
    sent = handler_registry.dispatch(g0, AllocationResponse(
        procedure_id=request.procedure_id, origin="g1", destination="g0", accept=False,
    ), ctx)
    assert isinstance(sent[0], Abort)
    assert g0.retry.light_failures == 1
    assert not ctx.reassociations


def test_late_response_is_ignored(ctx):
    g0 = make_gateway(ctx, "g0", [S1])
    feed(g0, GatewayStatus.LIGHT)
    request = g0.maybe_start_procedure(ctx)
    g0.on_timer("responses_due", {"procedure_id": request.procedure_id}, ctx)
    late = OffloadResponse(procedure_id=request.procedure_id, origin="g1", destination="g0")
    assert handler_registry.dispatch(g0, late, ctx) == []
    assert g0.procedure.responses == {}


def test_allocation_timeout_aborts(ctx):
    g0 = make_gateway(ctx, "g0", [S1])
    feed(g0, GatewayStatus.LIGHT)
    request = g0.maybe_start_procedure(ctx)
    handler_registry.dispatch(g0, OffloadResponse(
        procedure_id=request.procedure_id, origin="g1", destination="g0",
        combos=[OfferedCombo(stations=[S1], b_value=5e6, b_over_s=0.3, rates={S1: 54e6})],
    ), ctx)
    g0.on_timer("responses_due", {"procedure_id": request.procedure_id}, ctx)
    sent = g0.on_timer("allocations_due", {"procedure_id": request.procedure_id}, ctx)
    assert isinstance(sent[0], Abort) and sent[0].reason == "allocation timeout"


def test_light_procedures_are_suppressed_after_repeated_failures():
    ctx = ScriptedFederation(ProtocolConfig(light_dwell=1, max_light_failures=2))
    g0 = make_gateway(ctx, "g0", [S1])
    for _ in range(2):
        feed(g0, GatewayStatus.LIGHT)
        ctx.now = g0.procedure.backoff_until
        request = g0.maybe_start_procedure(ctx)
        assert request is not None
        sent = g0.on_timer("responses_due", {"procedure_id": request.procedure_id}, ctx)
        assert isinstance(sent[0], Abort) and sent[0].reason == "no allocation"
        assert g0.procedure.backoff_until > ctx.now

    feed(g0, GatewayStatus.LIGHT)
    ctx.now = g0.procedure.backoff_until
    assert g0.maybe_start_procedure(ctx) is None

    feed(g0, GatewayStatus.REGULAR)
    assert g0.retry.light_suppressed is None
    feed(g0, GatewayStatus.LIGHT)
    assert g0.maybe_start_procedure(ctx) is not None


def test_heavy_retry_flags_then_gives_up_on_a_station(ctx):
    g0 = make_gateway(ctx, "g0", [S1, S2])
    g0.monitor.stations[S2].inelastic = 8e6
    g0.monitor.stations[S2].avg_rate = 6e6

    feed(g0, GatewayStatus.HEAVY, b_over_s=0.0)
    first = g0.maybe_start_procedure(ctx)
    assert [s.mac for s in first.stations] == [S2]
    assert not first.flagged
    g0.on_timer("responses_due", {"procedure_id": first.procedure_id}, ctx)
    assert g0.retry.heavy_flag_next

    feed(g0, GatewayStatus.HEAVY, b_over_s=0.0)
    ctx.now = g0.procedure.backoff_until
    second = g0.maybe_start_procedure(ctx)
    assert [s.mac for s in second.stations] == [S2]
    assert second.flagged
    g0.on_timer("responses_due", {"procedure_id": second.procedure_id}, ctx)
    assert S2 in g0.retry.heavy_failed

    feed(g0, GatewayStatus.HEAVY, b_over_s=0.0)
    ctx.now = g0.procedure.backoff_until
    third = g0.maybe_start_procedure(ctx)
    assert [s.mac for s in third.stations] == [S1]


# =============================================================================
# Mutual exclusion
# =============================================================================

def test_busy_federation_defers_then_backs_off(ctx):
    g0 = make_gateway(ctx, "g0", [S1])
    g1 = make_gateway(ctx, "g1", [S2])
    load(g1, ctx, 10e6)
    handler_registry.dispatch(g1, light_request("g0"), ctx)
    assert g1.busy is not None

    feed(g1, GatewayStatus.LIGHT)
    ctx.now = 0.1
    assert g1.maybe_start_procedure(ctx) is None
    assert g1.procedure.role == Role.DEFERRED

    ctx.now = 0.2
    handler_registry.dispatch(g1, Abort(procedure_id="g0-1", origin="g0", sent_at=0.2), ctx)
    assert g1.busy is None
    assert g1.procedure.role == Role.IDLE
    assert ctx.protocol.backoff_min <= g1.procedure.backoff_until - 0.2 <= ctx.protocol.backoff_max


def test_requester_withdraws_for_an_earlier_request(ctx):
    g1 = make_gateway(ctx, "g1", [S2])
    ctx.now = 0.05
    feed(g1, GatewayStatus.LIGHT)
    own = g1.maybe_start_procedure(ctx)
    assert own is not None

    sent = handler_registry.dispatch(g1, light_request("g0", sent_at=0.04), ctx)
    assert len(sent) == 1 and isinstance(sent[0], Abort)
    assert sent[0].procedure_id == own.procedure_id
    assert g1.procedure.role == Role.DEFERRED
    assert g1.busy.procedure_id == "g0-1"


def test_requester_ignores_a_later_request(ctx):
    g1 = make_gateway(ctx, "g1", [S2])
    feed(g1, GatewayStatus.LIGHT)
    own = g1.maybe_start_procedure(ctx)
    assert handler_registry.dispatch(g1, light_request("g0", sent_at=0.01), ctx) == []
    assert g1.procedure.procedure_id == own.procedure_id
    assert g1.busy.procedure_id == own.procedure_id


def test_equal_send_times_break_ties_by_gateway_id(ctx):
    g1 = make_gateway(ctx, "g1", [S2])
    feed(g1, GatewayStatus.LIGHT)
    g1.maybe_start_procedure(ctx)
    sent = handler_registry.dispatch(g1, light_request("g0", sent_at=0.0), ctx)
    assert isinstance(sent[0], Abort)


def test_busy_marker_expires(ctx):
    g1 = make_gateway(ctx, "g1")
    g1.mark_busy(light_request("g0"), ctx)
    p = ctx.protocol
    window = 2 * p.response_timeout + p.probe_window + 4 * p.bus_latency
    assert g1.busy.until == pytest.approx(window)
    ctx.now = g1.busy.until - 1e-6
    assert g1.federation_busy(ctx)
    ctx.now = g1.busy.until
    assert not g1.federation_busy(ctx)
    assert g1.busy is None


def test_earliest_request_owns_the_busy_marker(ctx):
    g1 = make_gateway(ctx, "g1")
    g1.mark_busy(light_request("g5", sent_at=0.02), ctx)
    g1.mark_busy(light_request("g3", sent_at=0.01), ctx)
    g1.mark_busy(light_request("g4", sent_at=0.03), ctx)
    assert g1.busy.origin == "g3"


# =============================================================================
# Responder side
# =============================================================================

def test_off_gateway_ignores_unflagged_requests(ctx):
    g1 = make_gateway(ctx, "g1", on=False)
    assert handler_registry.dispatch(g1, light_request(), ctx) == []
    assert not g1.on


@pytest.mark.parametrize("p_wake, woken", [(1.0, True), (0.0, False)])
def test_flagged_request_wakes_with_probability(p_wake, woken):
    ctx = ScriptedFederation(ProtocolConfig(p_wake=p_wake))
    g1 = make_gateway(ctx, "g1", on=False)
    handler_registry.dispatch(g1, light_request(flagged=True), ctx)
    assert g1.on is woken


def test_lighter_responder_stays_out_of_a_light_procedure(ctx):
    g1 = make_gateway(ctx, "g1")
    load(g1, ctx, 0.5e6)
    assert g1.own_b_over_s() > 0.5
    assert handler_registry.dispatch(g1, light_request(b_over_s=0.5), ctx) == []
    assert not g1.probing
    assert g1.busy is not None


def test_heavy_responder_stays_out(ctx):
    g1 = make_gateway(ctx, "g1")
    feed(g1, GatewayStatus.HEAVY, b_over_s=0.0)
    handler_registry.dispatch(g1, light_request(), ctx)
    assert not g1.probing


def test_responder_probes_and_offers_combos(ctx):
    g1 = make_gateway(ctx, "g1")
    load(g1, ctx, 10e6)
    assert g1.own_b_over_s() < 0.9
    ctx.observations[("g1", "g0")] = [
        ProbeObservation(hashed_aid=1, snr=35.0, inferred_rate=54e6),
        ProbeObservation(hashed_aid=2, snr=20.0, inferred_rate=24e6),
        ProbeObservation(hashed_aid=9, snr=20.0, inferred_rate=24e6),
    ]
    request = light_request()
    assert handler_registry.dispatch(g1, request, ctx) == []
    assert ctx.timers[-1][2] == "probe_done"

    sent = g1.on_timer("probe_done", {"procedure_id": request.procedure_id}, ctx)
    assert len(sent) == 1 and isinstance(sent[0], OffloadResponse)
    offered = sorted(tuple(c.stations) for c in sent[0].combos)
    assert offered == [(S1,), (S1, S2), (S2,)]
    for combo in sent[0].combos:
        assert combo.b_value > 0
        assert combo.b_over_s >= ctx.thresholds.T_R
    assert g1.probed_rates[request.procedure_id] == {S1: 54e6, S2: 24e6}


def test_ambiguous_hashes_are_dropped(ctx):
    g1 = make_gateway(ctx, "g1")
    load(g1, ctx, 10e6)
    request = light_request()
    request.stations[1].hashed_aid = 1
    ctx.observations[("g1", "g0")] = [ProbeObservation(hashed_aid=1, snr=35.0, inferred_rate=54e6)]
    handler_registry.dispatch(g1, request, ctx)
    sent = complete_probe(g1, request.procedure_id, ctx)
    assert sent[0].combos == []


def test_allocation_request_is_rechecked(ctx):
    g1 = make_gateway(ctx, "g1")
    load(g1, ctx, 10e6)
    ctx.observations[("g1", "g0")] = [ProbeObservation(hashed_aid=1, snr=35.0, inferred_rate=54e6)]
    request = light_request()
    handler_registry.dispatch(g1, request, ctx)
    g1.on_timer("probe_done", {"procedure_id": request.procedure_id}, ctx)

    def ask(assigned):
        return handler_registry.dispatch(g1, AllocationRequest(
            procedure_id=request.procedure_id, origin="g0", destination="g1", assigned=assigned,
            requester_b_over_s=0.9, status=GatewayStatus.LIGHT,
        ), ctx)[0]

    assert ask([S2]).accept is False
    granted = ask([S1])
    assert granted.accept is True
    assert g1.reservations[request.procedure_id] == [S1]


def test_handover_command_authorizes_and_clears(ctx):
    g1 = make_gateway(ctx, "g1")
    g1.mark_busy(light_request(), ctx)
    command = HandoverCommand(
        procedure_id="g0-1", origin="g0", assignments={S1: "g1", S2: "g2"},
        requester_status=GatewayStatus.LIGHT,
    )
    handler_registry.dispatch(g1, command, ctx)
    assert S1 in g1.authorized and S2 not in g1.authorized
    assert g1.busy is None
