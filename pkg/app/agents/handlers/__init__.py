"""
Federation message handlers.

Each handler processes one MessageType at a receiving gateway and returns the
messages that gateway sends in reply.
"""

from .base import BaseHandler, FederationContext
from .registry import HandlerRegistry, handler_registry

__all__ = [
    "BaseHandler",
    "FederationContext",
    "HandlerRegistry",
    "handler_registry",
]
