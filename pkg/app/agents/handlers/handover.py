# Directory: fedgw-sim/app/agents/handlers/handover.py

"""
Closing Handlers - HandoverCommand and Abort.

Both end a procedure for every listener: the busy marker is cleared and any
responder-side state for the procedure is dropped. A HandoverCommand also
authorizes the stations assigned to the receiving gateway.
"""

import logging
from typing import TYPE_CHECKING, List

from ...schemas.messages import Abort, HandoverCommand, MessageType, ProtocolMessage
from .base import BaseHandler, FederationContext

if TYPE_CHECKING:
    from ..gateway import GatewayAgent

logger = logging.getLogger(__name__)


def _forget_procedure(gateway: "GatewayAgent", procedure_id: str, ctx: FederationContext) -> None:
    gateway.probing.pop(procedure_id, None)
    gateway.probed_rates.pop(procedure_id, None)
    gateway.probed_requests.pop(procedure_id, None)
    gateway.reservations.pop(procedure_id, None)
    gateway.clear_busy(procedure_id, ctx)


class HandoverCommandHandler(BaseHandler):

    @property
    def message_type(self) -> MessageType:
        return MessageType.HANDOVER_COMMAND

    @property
    def description(self) -> str:
        return "Authorizes assigned stations and closes the procedure"

    def handle(
        self,
        gateway: "GatewayAgent",
        message: HandoverCommand,
        ctx: FederationContext,
    ) -> List[ProtocolMessage]:
        mine = sorted(mac for mac, target in message.assignments.items() if target == gateway.gateway_id)
        if mine:
            gateway.authorized.update(mine)
            logger.info(f"{gateway.gateway_id} authorizes {mine} from {message.origin}")
        _forget_procedure(gateway, message.procedure_id, ctx)
        return []


class AbortHandler(BaseHandler):

    @property
    def message_type(self) -> MessageType:
        return MessageType.ABORT

    @property
    def description(self) -> str:
        return "Ends a procedure without hand-over"

    def handle(
        self,
        gateway: "GatewayAgent",
        message: Abort,
        ctx: FederationContext,
    ) -> List[ProtocolMessage]:
        _forget_procedure(gateway, message.procedure_id, ctx)
        return []


handover_command_handler = HandoverCommandHandler()
abort_handler = AbortHandler()
