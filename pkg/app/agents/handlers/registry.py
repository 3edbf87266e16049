# Directory: fedgw-sim/app/agents/handlers/registry.py

"""
Handler Registry - Dispatch of Federation Messages.

Maps each MessageType to the handler that processes it. The simulation engine
delivers every bus message through the global `handler_registry`.
"""

import logging
from typing import TYPE_CHECKING, Dict, List, Optional

from ...schemas.messages import MessageType, ProtocolMessage
from .base import BaseHandler, FederationContext

if TYPE_CHECKING:
    from ..gateway import GatewayAgent

logger = logging.getLogger(__name__)


class HandlerRegistry:
    """
    Central registry of message handlers.

    Usage:
        from app.agents.handlers import handler_registry

        replies = handler_registry.dispatch(gateway, message, ctx)
        types = handler_registry.list_handlers()
    """

    def __init__(self):
        """Initialize the handler registry."""
        self._handlers: Dict[MessageType, BaseHandler] = {}
        self._initialized = False

    def _ensure_initialized(self) -> None:
        """Register the default handlers on first use."""
        if not self._initialized:
            self._register_default_handlers()
            self._initialized = True

    def _register_default_handlers(self) -> None:
        # Imported here to avoid circular imports with the gateway module
        from .allocation import allocation_request_handler, allocation_response_handler
        from .handover import abort_handler, handover_command_handler
        from .offload import offload_request_handler, offload_response_handler

        for handler in (
            offload_request_handler,
            offload_response_handler,
            allocation_request_handler,
            allocation_response_handler,
            handover_command_handler,
            abort_handler,
        ):
            self.register(handler)

        logger.debug(f"Registered {len(self._handlers)} message handlers")

    def register(self, handler: BaseHandler) -> None:
        """
        Register a handler for its message type.

        Args:
            handler: Handler instance (must inherit from BaseHandler)
        """
        if handler.message_type in self._handlers:
            logger.warning(f"Handler for '{handler.message_type.value}' already registered, overwriting")
        self._handlers[handler.message_type] = handler

    def get_handler(self, message_type: MessageType) -> Optional[BaseHandler]:
        self._ensure_initialized()
        return self._handlers.get(message_type)

    def list_handlers(self) -> List[str]:
        self._ensure_initialized()
        return [t.value for t in self._handlers]

    def dispatch(
        self,
        gateway: "GatewayAgent",
        message: ProtocolMessage,
        ctx: FederationContext,
    ) -> List[ProtocolMessage]:
        """
        Deliver a message to a gateway.

        Args:
            gateway: Receiving gateway
            message: Delivered message
            ctx: Simulation services

        Returns:
            Messages to send in response

        Raises:
            KeyError: If no handler is registered for the message type
        """
        handler = self.get_handler(message.message_type)
        if handler is None:
            raise KeyError(f"No handler for message type {message.message_type}")
        try:
            return handler.handle(gateway, message, ctx)
        except Exception as e:
            logger.error(
                f"Handler {message.message_type.value} failed at {gateway.gateway_id}: {e}",
                exc_info=True,
            )
            raise


# Global registry instance - use this throughout the application
handler_registry = HandlerRegistry()
