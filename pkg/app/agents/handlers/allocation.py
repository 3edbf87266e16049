# Directory: fedgw-sim/app/agents/handlers/allocation.py

"""
Allocation Handlers - AllocationRequest and AllocationResponse.

A selected responder re-checks its admission rule for exactly the stations
assigned to it; the requester closes the procedure once every selected
responder has answered.
"""

import logging
from typing import TYPE_CHECKING, List

from ...schemas.entities import GatewayStatus
from ...schemas.messages import AllocationRequest, AllocationResponse, MessageType, ProtocolMessage
from ...services.assessment import AdmissionMode, evaluate_candidates
from .base import BaseHandler, FederationContext

if TYPE_CHECKING:
    from ..gateway import GatewayAgent

logger = logging.getLogger(__name__)


class AllocationRequestHandler(BaseHandler):

    @property
    def message_type(self) -> MessageType:
        return MessageType.ALLOCATION_REQUEST

    @property
    def description(self) -> str:
        return "Confirms or rejects the stations assigned to this gateway"

    def _reply(self, gateway: "GatewayAgent", message: AllocationRequest, ctx: FederationContext,
               accept: bool, b_value=None) -> List[ProtocolMessage]:
        if accept:
            gateway.reservations[message.procedure_id] = list(message.assigned)
        logger.debug(f"{gateway.gateway_id} {'accepts' if accept else 'rejects'} {message.assigned}")
        return [AllocationResponse(
            procedure_id=message.procedure_id,
            origin=gateway.gateway_id,
            destination=message.origin,
            sent_at=ctx.now,
            accept=accept,
            b_value=b_value,
        )]

    def handle(
        self,
        gateway: "GatewayAgent",
        message: AllocationRequest,
        ctx: FederationContext,
    ) -> List[ProtocolMessage]:
        rates = gateway.probed_rates.get(message.procedure_id, {})
        if not gateway.on or gateway.status == GatewayStatus.HEAVY or any(m not in rates for m in message.assigned):
            return self._reply(gateway, message, ctx, False)

        request = gateway.probed_requests.get(message.procedure_id)
        if request is None:
            return self._reply(gateway, message, ctx, False)

        stats, profiles, sat = gateway.baseline()
        th = ctx.thresholds
        candidates = gateway.candidates_for(request, message.assigned)
        if message.status == GatewayStatus.LIGHT:
            accepted, b, s = evaluate_candidates(
                stats, profiles, candidates, ctx.mac, sat, th,
                AdmissionMode.LIGHT_COMBO, gateway_id=gateway.gateway_id,
            )
            ratio = b / s if s > 0 else 0.0
            accepted = accepted and ratio < message.requester_b_over_s
            if ctx.protocol.heavy_guard:
                accepted = accepted and ratio >= th.T_R
        else:
            accepted, b, s = evaluate_candidates(
                stats, profiles, candidates, ctx.mac, sat, th,
                AdmissionMode.HEAVY_SINGLE, gateway_id=gateway.gateway_id,
            )
        return self._reply(gateway, message, ctx, accepted, b)


class AllocationResponseHandler(BaseHandler):

    @property
    def message_type(self) -> MessageType:
        return MessageType.ALLOCATION_RESPONSE

    @property
    def description(self) -> str:
        return "Records a responder's confirmation; closes the procedure when all are in"

    def handle(
        self,
        gateway: "GatewayAgent",
        message: AllocationResponse,
        ctx: FederationContext,
    ) -> List[ProtocolMessage]:
        from ..gateway import Role

        procedure = gateway.procedure
        if procedure.role != Role.AWAITING_ALLOCATIONS or procedure.procedure_id != message.procedure_id:
            return self._ignore(gateway, message, "late or unknown procedure")
        return gateway.on_allocation_reply(message.origin, message.accept, ctx)


allocation_request_handler = AllocationRequestHandler()
allocation_response_handler = AllocationResponseHandler()
