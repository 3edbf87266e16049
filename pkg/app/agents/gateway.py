# Copyright 2024
# Directory: fedgw-sim/app/agents/gateway.py

"""
Gateway Agent - Per-Gateway Offload State Machine.

A GatewayAgent owns one BSS: its associated stations, its passive monitor,
its latest status assessment and the state of the offload procedures it takes
part in. The engine calls:
- record_cycle() at the end of each monitoring cycle
- maybe_start_procedure() right after, to trigger Light/Heavy procedures
- on_timer() when one of the gateway's timers fires
Message deliveries go through the handler registry (app/agents/handlers).

Procedure flow seen from the requester:
    idle -> awaiting-responses -> awaiting-allocations -> idle
with HandoverCommand or Abort closing the procedure. A gateway that wants to
start while another procedure is in flight becomes deferred and backs off
once that procedure closes.
"""

import logging
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from pydantic import BaseModel, Field

from ..schemas.entities import (
    CandidateStation,
    CycleStats,
    GatewayStatus,
    MacParams,
    SaturationResult,
    StatusReport,
    TrafficProfile,
)
from ..schemas.messages import (
    Abort,
    AdvertisedStation,
    AllocationRequest,
    HandoverCommand,
    OffloadRequest,
    OffloadResponse,
    ProtocolMessage,
)
from ..services.assessment import b_metric
from ..services.mac_model import saturation_throughput
from ..services.monitor import DEFAULT_PAYLOAD, DEFAULT_RATE, CycleMonitor
from .handlers.base import FederationContext
from .selection import Allocation, aid_hash, assign_aid, heavy_ws_order, probe_hash_bound, select_allocation

logger = logging.getLogger(__name__)


class Role(str, Enum):
    """Procedure role of a gateway."""
    IDLE = "idle"
    AWAITING_RESPONSES = "requester-awaiting-responses"
    AWAITING_ALLOCATIONS = "requester-awaiting-allocations"
    DEFERRED = "deferred"


class ProcedureState(BaseModel):
    """State of the procedure this gateway runs as requester."""
    role: Role = Role.IDLE
    procedure_id: Optional[str] = None
    kind: Optional[GatewayStatus] = None
    sent_at: float = 0.0
    stations: List[str] = Field(default_factory=list)
    flagged: bool = False
    requester_b_over_s: float = 0.0
    responses: Dict[str, OffloadResponse] = Field(default_factory=dict)
    allocation: Optional[Allocation] = None
    allocation_replies: Dict[str, bool] = Field(default_factory=dict)
    backoff_until: float = 0.0


class BusyMark(BaseModel):
    """A procedure known to be in flight somewhere in the federation."""
    procedure_id: str
    origin: str
    sent_at: float
    until: float


class RetryState(BaseModel):
    """Failure bookkeeping that keeps failed procedures from repeating forever."""
    light_failures: int = 0
    light_suppressed: Optional[Tuple[FrozenSet[str], GatewayStatus]] = None
    heavy_target: Optional[str] = None
    heavy_flag_next: bool = False
    heavy_failed: Set[str] = Field(default_factory=set)
    heavy_key: Optional[FrozenSet[str]] = None


class GatewayAgent:
    """
    One federated gateway.

    Attributes:
        gateway_id: Federation-wide identifier
        on: Power state
        stations: Associated stations (MAC -> AID)
        authorized: Stations allowed to (re)associate
        monitor: Passive cycle monitor of the BSS
        report: Latest StatusReport (None before the first cycle)
        procedure: Requester-side procedure state
        busy: Federation-wide procedure this gateway knows is in flight
    """

    def __init__(
        self,
        gateway_id: str,
        mac_address: str,
        channel: int,
        mac: MacParams,
        alpha: float = 0.3,
        T_max: float = 0.1,
        on: bool = True,
    ):
        self.gateway_id = gateway_id
        self.mac_address = mac_address
        self.channel = channel
        self.mac = mac
        self.alpha = alpha
        self.T_max = T_max
        self.on = on
        self.stations: Dict[str, int] = {}
        self.authorized: Set[str] = set()
        self.monitor = CycleMonitor(gateway_id, alpha=alpha, T_max=T_max)
        self.hash_bound = probe_hash_bound(mac)

        self.report: Optional[StatusReport] = None
        self.stats: Optional[CycleStats] = None
        self.sat: Optional[SaturationResult] = None
        self.profiles: Dict[str, TrafficProfile] = {}
        self.streak_status: Optional[GatewayStatus] = None
        self.streak = 0

        self.procedure = ProcedureState()
        self.busy: Optional[BusyMark] = None
        self.retry = RetryState()
        self.sequence = 0
        self.pending_shutdown = False
        self.woken = False

        # responder side: requests being probed, and their probed rates
        self.probing: Dict[str, OffloadRequest] = {}
        self.probed_rates: Dict[str, Dict[str, float]] = {}
        self.probed_requests: Dict[str, OffloadRequest] = {}
        self.reservations: Dict[str, List[str]] = {}

    # =========================================================================
    # BSS membership
    # =========================================================================

    @property
    def status(self) -> GatewayStatus:
        if not self.on:
            return GatewayStatus.OFF
        return self.report.status if self.report else GatewayStatus.REGULAR

    @property
    def station_key(self) -> FrozenSet[str]:
        return frozenset(self.stations)

    def associate(self, station: str) -> int:
        """Admit a station; returns its AID."""
        aid = assign_aid(self.stations, self.hash_bound)
        self.stations[station] = aid
        self.authorized.add(station)
        self.monitor.add_station(station, association_id=aid)
        return aid

    def disassociate(self, station: str) -> None:
        self.stations.pop(station, None)
        self.authorized.discard(station)
        self.monitor.forget_station(station)

    def hashed_aid(self, station: str) -> int:
        return aid_hash(self.stations[station], self.hash_bound)

    def power_on(self, now: float, woken: bool = False) -> None:
        self.on = True
        self.woken = woken
        self.monitor = CycleMonitor(self.gateway_id, alpha=self.alpha, T_max=self.T_max)
        for station in self.stations:
            self.monitor.add_station(station, association_id=self.stations[station])
        self.monitor.start_cycle(now)
        self.report = None
        self.stats = None
        self.sat = None
        self.profiles = {}
        self.streak_status = None
        self.streak = 0
        self.retry = RetryState()
        self.pending_shutdown = False

    def power_off(self) -> None:
        self.on = False
        self.woken = False
        self.pending_shutdown = False
        self.procedure = ProcedureState(backoff_until=self.procedure.backoff_until)
        self.probing.clear()
        self.probed_rates.clear()
        self.probed_requests.clear()
        self.reservations.clear()

    # =========================================================================
    # Cycle end
    # =========================================================================

    def record_cycle(
        self,
        report: StatusReport,
        stats: CycleStats,
        sat: SaturationResult,
        profiles: Dict[str, TrafficProfile],
    ) -> None:
        """Store the latest assessment and update dwell and retry bookkeeping."""
        self.report = report
        self.stats = stats
        self.sat = sat
        self.profiles = profiles
        if report.status == self.streak_status:
            self.streak += 1
        else:
            self.streak_status = report.status
            self.streak = 1

        suppressed = self.retry.light_suppressed
        if suppressed is not None and suppressed != (self.station_key, report.status):
            logger.debug(f"{self.gateway_id}: Light suppression lifted")
            self.retry.light_suppressed = None
            self.retry.light_failures = 0
        if report.status != GatewayStatus.HEAVY or self.retry.heavy_key != self.station_key:
            if self.retry.heavy_failed or self.retry.heavy_target:
                self.retry.heavy_failed.clear()
                self.retry.heavy_target = None
                self.retry.heavy_flag_next = False
            self.retry.heavy_key = self.station_key if report.status == GatewayStatus.HEAVY else None

    def baseline(self) -> Tuple[CycleStats, Dict[str, TrafficProfile], SaturationResult]:
        """Last cycle's stats, active profiles and saturation, or an empty BSS."""
        if self.stats is not None and self.sat is not None:
            return self.stats, self.profiles, self.sat
        stats = CycleStats(
            n_active=0, cycle_duration=self.T_max, avg_payload=DEFAULT_PAYLOAD,
            max_payload=DEFAULT_PAYLOAD, avg_rate=DEFAULT_RATE, filtered_per=0.0,
        )
        sat = saturation_throughput(stats.model_copy(update={"n_active": 1}), self.mac)
        return stats, {}, sat

    def own_b_over_s(self) -> float:
        """b/S of the BSS as it is (no candidates)."""
        stats, profiles, sat = self.baseline()
        if stats.n_active == 0 or sat.aggregate_S <= 0:
            return 1.0
        return b_metric(stats, profiles, sat) / sat.aggregate_S

    # =========================================================================
    # Federation busy marker
    # =========================================================================

    def federation_busy(self, ctx: FederationContext) -> bool:
        if self.busy is None:
            return False
        if ctx.now >= self.busy.until:
            logger.warning(f"{self.gateway_id}: busy mark for {self.busy.procedure_id} expired")
            self.clear_busy(self.busy.procedure_id, ctx)
            return False
        return True

    def busy_window(self, ctx: FederationContext) -> float:
        p = ctx.protocol
        return p.response_timeout + p.probe_window + p.response_timeout + 4 * p.bus_latency

    def mark_busy(self, request: OffloadRequest, ctx: FederationContext) -> None:
        incoming = (request.sent_at, request.origin)
        if self.busy is not None and ctx.now < self.busy.until:
            if (self.busy.sent_at, self.busy.origin) <= incoming:
                return
        self.busy = BusyMark(
            procedure_id=request.procedure_id,
            origin=request.origin,
            sent_at=request.sent_at,
            until=request.sent_at + self.busy_window(ctx),
        )

    def clear_busy(self, procedure_id: str, ctx: FederationContext) -> None:
        if self.busy is None or self.busy.procedure_id != procedure_id:
            return
        self.busy = None
        if self.procedure.role == Role.DEFERRED:
            self._start_backoff(ctx)
            self.procedure.role = Role.IDLE

    def _start_backoff(self, ctx: FederationContext) -> None:
        p = ctx.protocol
        delay = float(ctx.rng(f"backoff:{self.gateway_id}").uniform(p.backoff_min, p.backoff_max))
        self.procedure.backoff_until = ctx.now + delay
        self.streak = 0

    # =========================================================================
    # Requester side
    # =========================================================================

    def _advertise(self, station: str) -> AdvertisedStation:
        profile = self.monitor.stations.get(station)
        downlink = self.monitor.downlink.get(station)
        measured = profile is not None and profile.avg_rate is not None
        return AdvertisedStation(
            hashed_aid=self.hashed_aid(station),
            mac=station,
            uplink_inelastic=profile.inelastic if measured else None,
            uplink_elastic=profile.elastic if measured else None,
            downlink_inelastic=downlink.inelastic if downlink else 0.0,
            downlink_elastic=downlink.elastic if downlink else 0.0,
            avg_inelastic_payload=profile.avg_inelastic_payload if profile else None,
            avg_elastic_payload=profile.avg_elastic_payload if profile else None,
            avg_rate=profile.avg_rate if profile else None,
        )

    def _heavy_target(self) -> Optional[Tuple[str, bool]]:
        profiles = [
            self.monitor.stations.get(m) or TrafficProfile(node_id=m) for m in sorted(self.stations)
        ]
        order = [m for m in heavy_ws_order(profiles) if m not in self.retry.heavy_failed]
        if not order:
            return None
        target = self.retry.heavy_target if self.retry.heavy_target in order else order[0]
        flagged = self.retry.heavy_flag_next and target == self.retry.heavy_target
        return target, flagged

    def maybe_start_procedure(self, ctx: FederationContext) -> Optional[OffloadRequest]:
        """
        Emit an OffloadRequest once Light or Heavy status has lasted long enough.

        Returns:
            The multicast OffloadRequest, or None
        """
        if not self.on or self.report is None or not ctx.protocol.enabled:
            return None
        status = self.report.status
        if status == GatewayStatus.LIGHT:
            dwell = ctx.protocol.light_dwell
        elif status == GatewayStatus.HEAVY:
            dwell = ctx.protocol.heavy_dwell
        else:
            return None
        if self.streak < dwell or self.procedure.role != Role.IDLE:
            return None
        if ctx.now < self.procedure.backoff_until:
            return None

        if status == GatewayStatus.LIGHT:
            if self.retry.light_suppressed is not None:
                return None
            stations = sorted(self.stations)
            flagged = False
        else:
            if not self.stations:
                return None
            choice = self._heavy_target()
            if choice is None:
                return None
            target, flagged = choice
            stations = [target]
            self.retry.heavy_target = target

        if self.federation_busy(ctx):
            self.procedure.role = Role.DEFERRED
            logger.debug(f"{self.gateway_id}: deferring {status.value} procedure behind {self.busy.procedure_id}")
            return None

        self.sequence += 1
        procedure_id = f"{self.gateway_id}-{self.sequence}"
        b_over_s = self.report.b_over_s
        request = OffloadRequest(
            procedure_id=procedure_id,
            origin=self.gateway_id,
            sent_at=ctx.now,
            status=status,
            channel=self.channel,
            requester_b_over_s=b_over_s,
            stations=[self._advertise(m) for m in stations],
            flagged=flagged,
        )
        self.procedure = ProcedureState(
            role=Role.AWAITING_RESPONSES,
            procedure_id=procedure_id,
            kind=status,
            sent_at=ctx.now,
            stations=stations,
            flagged=flagged,
            requester_b_over_s=b_over_s,
            backoff_until=self.procedure.backoff_until,
        )
        self.busy = BusyMark(
            procedure_id=procedure_id, origin=self.gateway_id, sent_at=ctx.now,
            until=ctx.now + self.busy_window(ctx),
        )
        p = ctx.protocol
        ctx.schedule_timer(
            self.gateway_id, p.probe_window + p.response_timeout, "responses_due",
            {"procedure_id": procedure_id},
        )
        logger.info(
            f"{self.gateway_id} starts {status.value} procedure {procedure_id} "
            f"for {len(stations)} station(s) (B/S={b_over_s:.3f}, flagged={flagged})"
        )
        return request

    def withdraw(self, competing: OffloadRequest, ctx: FederationContext) -> List[ProtocolMessage]:
        """Give way to an earlier competing request."""
        procedure_id = self.procedure.procedure_id
        logger.info(f"{self.gateway_id} withdraws {procedure_id} in favour of {competing.procedure_id}")
        abort = Abort(procedure_id=procedure_id, origin=self.gateway_id, sent_at=ctx.now, reason="withdrawn")
        self.busy = None
        self.procedure = ProcedureState(role=Role.DEFERRED, backoff_until=self.procedure.backoff_until)
        self.mark_busy(competing, ctx)
        return [abort]

    def finish(self, success: bool, ctx: FederationContext) -> None:
        """Close the running requester procedure and update the retry policy."""
        kind = self.procedure.kind
        procedure_id = self.procedure.procedure_id
        if success:
            if kind == GatewayStatus.LIGHT:
                self.retry.light_failures = 0
                self.pending_shutdown = True
            else:
                self.retry.heavy_failed.clear()
                self.retry.heavy_target = None
                self.retry.heavy_flag_next = False
        else:
            if kind == GatewayStatus.LIGHT:
                self.retry.light_failures += 1
                if self.retry.light_failures >= ctx.protocol.max_light_failures:
                    self.retry.light_suppressed = (self.station_key, GatewayStatus.LIGHT)
                    logger.info(f"{self.gateway_id}: Light procedures suppressed after {self.retry.light_failures} failures")
            elif kind == GatewayStatus.HEAVY:
                target = self.retry.heavy_target
                if self.procedure.flagged:
                    if target is not None:
                        self.retry.heavy_failed.add(target)
                    self.retry.heavy_target = None
                    self.retry.heavy_flag_next = False
                else:
                    self.retry.heavy_flag_next = True
        self.procedure = ProcedureState(backoff_until=self.procedure.backoff_until)
        if not success:
            self._start_backoff(ctx)
        else:
            self.streak = 0
        if self.busy is not None and self.busy.procedure_id == procedure_id:
            self.busy = None
        logger.info(f"{self.gateway_id} procedure {procedure_id} {'completed' if success else 'aborted'}")

    def _close_with_abort(self, reason: str, ctx: FederationContext) -> List[ProtocolMessage]:
        abort = Abort(
            procedure_id=self.procedure.procedure_id, origin=self.gateway_id, sent_at=ctx.now, reason=reason,
        )
        self.finish(False, ctx)
        return [abort]

    def _close_with_handover(self, ctx: FederationContext) -> List[ProtocolMessage]:
        allocation = self.procedure.allocation or Allocation()
        command = HandoverCommand(
            procedure_id=self.procedure.procedure_id,
            origin=self.gateway_id,
            sent_at=ctx.now,
            assignments=dict(allocation.assignments),
            requester_status=self.procedure.kind,
        )
        for station in allocation.assignments:
            self.authorized.discard(station)
        kind = self.procedure.kind
        self.finish(True, ctx)
        ctx.reassociate(command.assignments, self.gateway_id, kind.value)
        return [command]

    def on_responses_due(self, ctx: FederationContext) -> List[ProtocolMessage]:
        allocation = select_allocation(list(self.procedure.responses.values()), self.procedure.stations)
        if allocation is None:
            return self._close_with_abort("no allocation", ctx)
        self.procedure.allocation = allocation
        if not allocation.groups:
            return self._close_with_handover(ctx)

        self.procedure.role = Role.AWAITING_ALLOCATIONS
        self.procedure.allocation_replies = {}
        requests: List[ProtocolMessage] = [
            AllocationRequest(
                procedure_id=self.procedure.procedure_id,
                origin=self.gateway_id,
                destination=gateway,
                sent_at=ctx.now,
                assigned=macs,
                requester_b_over_s=self.procedure.requester_b_over_s,
                status=self.procedure.kind,
            )
            for gateway, macs in sorted(allocation.groups.items())
        ]
        ctx.schedule_timer(
            self.gateway_id, ctx.protocol.response_timeout, "allocations_due",
            {"procedure_id": self.procedure.procedure_id},
        )
        return requests

    def on_allocation_reply(self, responder: str, accept: bool, ctx: FederationContext) -> List[ProtocolMessage]:
        allocation = self.procedure.allocation
        if allocation is None or responder not in allocation.groups:
            return []
        self.procedure.allocation_replies[responder] = accept
        if not accept:
            return self._close_with_abort(f"rejected by {responder}", ctx)
        if set(self.procedure.allocation_replies) == set(allocation.groups):
            return self._close_with_handover(ctx)
        return []

    # =========================================================================
    # Responder side
    # =========================================================================

    def candidates_for(self, request: OffloadRequest, stations: List[str]) -> List[CandidateStation]:
        rates = self.probed_rates.get(request.procedure_id, {})
        advertised = {s.mac: s for s in request.stations}
        candidates = []
        for mac in stations:
            a = advertised[mac]
            candidates.append(CandidateStation(
                mac=mac,
                uplink_inelastic=a.uplink_inelastic,
                uplink_elastic=a.uplink_elastic,
                downlink_inelastic=a.downlink_inelastic,
                downlink_elastic=a.downlink_elastic,
                avg_inelastic_payload=a.avg_inelastic_payload,
                avg_elastic_payload=a.avg_elastic_payload,
                estimated_rate=rates[mac],
            ))
        return candidates

    # =========================================================================
    # Timers
    # =========================================================================

    def on_timer(self, name: str, payload: Dict, ctx: FederationContext) -> List[ProtocolMessage]:
        """Dispatch a fired timer; returns messages to send."""
        procedure_id = payload.get("procedure_id")
        if not self.on:
            return []
        if name == "responses_due":
            if self.procedure.role == Role.AWAITING_RESPONSES and self.procedure.procedure_id == procedure_id:
                return self.on_responses_due(ctx)
            return []
        if name == "allocations_due":
            if self.procedure.role == Role.AWAITING_ALLOCATIONS and self.procedure.procedure_id == procedure_id:
                return self._close_with_abort("allocation timeout", ctx)
            return []
        if name == "probe_done":
            from .handlers.offload import complete_probe

            return complete_probe(self, procedure_id, ctx)
        logger.warning(f"{self.gateway_id}: unknown timer {name}")
        return []
