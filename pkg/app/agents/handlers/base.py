# Directory: fedgw-sim/app/agents/handlers/base.py

"""
Base Handler Interface - Template for Federation Message Handlers.

Every handler inherits from BaseHandler to ensure:
- One handler per message type, looked up by the registry
- A uniform call: handle(gateway, message, ctx) -> messages to send
- Consistent logging of ignored messages

Handlers talk to the rest of the simulation only through FederationContext,
which the engine implements.

To create a new handler, inherit from BaseHandler and implement:
- message_type: MessageType property
- description: str property
- handle(gateway, message, ctx): returns the messages the gateway sends in reply
"""

import logging
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Dict, List, Protocol

import numpy as np

from ...schemas.entities import MacParams, ProbeObservation, Thresholds
from ...schemas.messages import MessageType, ProtocolMessage
from ...schemas.scenario import ProtocolConfig

if TYPE_CHECKING:
    from ..gateway import GatewayAgent

logger = logging.getLogger(__name__)


class FederationContext(Protocol):
    """What a gateway can see of, and do to, the simulated world."""

    @property
    def now(self) -> float: ...

    @property
    def protocol(self) -> ProtocolConfig: ...

    @property
    def thresholds(self) -> Thresholds: ...

    @property
    def mac(self) -> MacParams: ...

    def rng(self, label: str) -> np.random.Generator:
        """Seeded substream for a stable label."""
        ...

    def schedule_timer(self, gateway_id: str, delay: float, name: str, payload: Dict) -> None:
        """Fire gateway.on_timer(name, payload) after `delay` seconds."""
        ...

    def probe(self, listener_id: str, requester_id: str) -> List[ProbeObservation]:
        """CTS replies to the requester's RTS probes heard by the listener."""
        ...

    def power(self, gateway_id: str, on: bool) -> None:
        """Switch a gateway on or off."""
        ...

    def reassociate(self, assignments: Dict[str, str], origin: str, reason: str) -> None:
        """Move stations after a HandoverCommand."""
        ...


class BaseHandler(ABC):
    """
    Abstract base class for federation message handlers.

    Example:
        class AbortHandler(BaseHandler):
            @property
            def message_type(self) -> MessageType:
                return MessageType.ABORT

            @property
            def description(self) -> str:
                return "Ends a procedure"

            def handle(self, gateway, message, ctx):
                gateway.clear_busy(message.procedure_id, ctx)
                return []
    """

    @property
    @abstractmethod
    def message_type(self) -> MessageType:
        """Message type this handler processes."""
        pass

    @property
    @abstractmethod
    def description(self) -> str:
        """What the handler does."""
        pass

    @abstractmethod
    def handle(
        self,
        gateway: "GatewayAgent",
        message: ProtocolMessage,
        ctx: FederationContext,
    ) -> List[ProtocolMessage]:
        """
        Process one delivered message.

        Args:
            gateway: Receiving gateway
            message: The delivered message
            ctx: Simulation services

        Returns:
            Messages the gateway sends in response (possibly none)
        """
        pass

    def _ignore(self, gateway: "GatewayAgent", message: ProtocolMessage, reason: str) -> List[ProtocolMessage]:
        logger.debug(
            f"{gateway.gateway_id} ignores {message.message_type.value} "
            f"{message.procedure_id} from {message.origin}: {reason}"
        )
        return []
