# Directory: fedgw-sim/app/agents/handlers/offload.py

"""
Offload Handlers - OffloadRequest and OffloadResponse.

A responder that hears an OffloadRequest tunes to the requester's channel for
the probe window, then answers with the station subsets it could admit.
"""

import logging
from itertools import combinations
from typing import TYPE_CHECKING, Dict, List, Optional

from ...schemas.entities import GatewayStatus
from ...schemas.messages import MessageType, OfferedCombo, OffloadRequest, OffloadResponse, ProtocolMessage
from ...services.assessment import AdmissionMode, evaluate_candidates
from .base import BaseHandler, FederationContext

if TYPE_CHECKING:
    from ..gateway import GatewayAgent

logger = logging.getLogger(__name__)


class OffloadRequestHandler(BaseHandler):
    """Decides whether to respond to a request and starts probing."""

    @property
    def message_type(self) -> MessageType:
        return MessageType.OFFLOAD_REQUEST

    @property
    def description(self) -> str:
        return "Marks the federation busy and probes the requester's stations"

    def handle(
        self,
        gateway: "GatewayAgent",
        message: OffloadRequest,
        ctx: FederationContext,
    ) -> List[ProtocolMessage]:
        from ..gateway import Role

        if message.origin == gateway.gateway_id:
            return []

        if not gateway.on:
            if not message.flagged:
                return self._ignore(gateway, message, "gateway off")
            if ctx.rng(f"wake:{gateway.gateway_id}").random() >= ctx.protocol.p_wake:
                return self._ignore(gateway, message, "stayed asleep")
            logger.info(f"{gateway.gateway_id} woken by flagged request {message.procedure_id}")
            ctx.power(gateway.gateway_id, True)

        role = gateway.procedure.role
        if role in (Role.AWAITING_RESPONSES, Role.AWAITING_ALLOCATIONS):
            own = (gateway.procedure.sent_at, gateway.gateway_id)
            if role == Role.AWAITING_RESPONSES and (message.sent_at, message.origin) < own:
                return gateway.withdraw(message, ctx)
            return self._ignore(gateway, message, "running its own procedure")

        gateway.mark_busy(message, ctx)

        if gateway.status == GatewayStatus.HEAVY:
            return self._ignore(gateway, message, "heavy")
        if message.status == GatewayStatus.LIGHT and gateway.own_b_over_s() > message.requester_b_over_s:
            return self._ignore(gateway, message, "lighter than the requester")

        gateway.probing[message.procedure_id] = message
        ctx.schedule_timer(
            gateway.gateway_id, ctx.protocol.probe_window, "probe_done",
            {"procedure_id": message.procedure_id},
        )
        return []


def _resolve(gateway: "GatewayAgent", request: OffloadRequest, ctx: FederationContext) -> Dict[str, float]:
    """Probed rate per advertised MAC heard during the probe window."""
    by_hash: Dict[int, List[str]] = {}
    for station in request.stations:
        by_hash.setdefault(station.hashed_aid, []).append(station.mac)

    rates: Dict[str, float] = {}
    for observation in ctx.probe(gateway.gateway_id, request.origin):
        macs = by_hash.get(observation.hashed_aid, [])
        if len(macs) != 1:
            if macs:
                logger.warning(f"{gateway.gateway_id}: ambiguous AID hash {observation.hashed_aid}")
            continue
        if observation.inferred_rate is not None:
            rates[macs[0]] = observation.inferred_rate
    return rates


def complete_probe(
    gateway: "GatewayAgent",
    procedure_id: Optional[str],
    ctx: FederationContext,
) -> List[ProtocolMessage]:
    """
    End of the probe window: evaluate candidate subsets and respond.

    Light requests get every non-empty subset of the heard stations (capped to
    the fastest `subset_cap`) that keeps b > 0; Heavy requests get the single
    station when b/S > T_A. The response is sent even when empty.
    """
    request = gateway.probing.pop(procedure_id, None)
    if request is None:
        return []
    if gateway.busy is None or gateway.busy.procedure_id != procedure_id:
        return []
    if gateway.status == GatewayStatus.HEAVY:
        return []

    rates = _resolve(gateway, request, ctx)
    gateway.probed_rates[procedure_id] = rates
    gateway.probed_requests[procedure_id] = request
    heard = sorted(rates, key=lambda mac: (-rates[mac], mac))
    stats, profiles, sat = gateway.baseline()
    th = ctx.thresholds

    combos: List[OfferedCombo] = []
    if request.status == GatewayStatus.LIGHT:
        if len(heard) > ctx.protocol.subset_cap:
            logger.info(
                f"{gateway.gateway_id}: {len(heard)} stations heard, keeping the {ctx.protocol.subset_cap} fastest"
            )
            heard = heard[:ctx.protocol.subset_cap]
        heard.sort()
        for size in range(1, len(heard) + 1):
            for subset in combinations(heard, size):
                candidates = gateway.candidates_for(request, list(subset))
                accepted, b, s = evaluate_candidates(
                    stats, profiles, candidates, ctx.mac, sat, th,
                    AdmissionMode.LIGHT_COMBO, gateway_id=gateway.gateway_id,
                )
                ratio = b / s if s > 0 else 0.0
                if accepted and (not ctx.protocol.heavy_guard or ratio >= th.T_R):
                    combos.append(OfferedCombo(
                        stations=list(subset), b_value=b, b_over_s=ratio,
                        rates={mac: rates[mac] for mac in subset},
                    ))
    else:
        for mac in heard:
            candidates = gateway.candidates_for(request, [mac])
            accepted, b, s = evaluate_candidates(
                stats, profiles, candidates, ctx.mac, sat, th,
                AdmissionMode.HEAVY_SINGLE, gateway_id=gateway.gateway_id,
            )
            if accepted:
                combos.append(OfferedCombo(stations=[mac], b_value=b, b_over_s=b / s, rates={mac: rates[mac]}))

    logger.debug(f"{gateway.gateway_id} offers {len(combos)} combo(s) for {procedure_id}")
    return [OffloadResponse(
        procedure_id=procedure_id,
        origin=gateway.gateway_id,
        destination=request.origin,
        sent_at=ctx.now,
        combos=combos,
    )]


class OffloadResponseHandler(BaseHandler):
    """Collects responses at the requester until the response deadline."""

    @property
    def message_type(self) -> MessageType:
        return MessageType.OFFLOAD_RESPONSE

    @property
    def description(self) -> str:
        return "Stores a responder's offered combos"

    def handle(
        self,
        gateway: "GatewayAgent",
        message: OffloadResponse,
        ctx: FederationContext,
    ) -> List[ProtocolMessage]:
        from ..gateway import Role

        procedure = gateway.procedure
        if procedure.role != Role.AWAITING_RESPONSES or procedure.procedure_id != message.procedure_id:
            return self._ignore(gateway, message, "late or unknown procedure")
        procedure.responses[message.origin] = message
        return []


offload_request_handler = OffloadRequestHandler()
offload_response_handler = OffloadResponseHandler()
