# Directory: fedgw-sim/app/agents/__init__.py

"""
Agents Module - The Federation Protocol.

This module contains:
- gateway.py: the per-gateway offload state machine
- selection.py: allocation selection, AID hashing and Heavy station order
- handlers/: one handler per protocol message type

A gateway agent never talks to another agent directly: the engine delivers
messages over the simulated bus and dispatches them through the handler
registry.
"""

from .gateway import GatewayAgent, Role
from .handlers import handler_registry

__all__ = ['GatewayAgent', 'Role', 'handler_registry']
