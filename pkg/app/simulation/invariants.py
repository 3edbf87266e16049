# Directory: fedgw-sim/app/simulation/invariants.py

"""
Invariant Checker - Global Properties Observed Across the Federation.

The engine reports every message it sends, every power change and every
closed cycle. The checker asserts:
- causality: no event is scheduled in the past
- conservation: delivered bits per cycle never exceed offered bits
- mutual exclusion: procedures overlap only while a crossing request withdraws
- no orphans: every station is associated to exactly one on gateway
- off-only-after-handover: a gateway turns off only after a Light
  HandoverCommand covering all its stations
- responder eligibility: responses come from on, non-Heavy gateways and
  offer only combos with b > 0

In strict mode the first violation raises InvariantViolation; otherwise
violations are only recorded.
"""

import logging
from typing import Dict, List, Mapping, Optional, Set

from pydantic import BaseModel, Field

from ..schemas.entities import GatewayStatus
from ..schemas.messages import HandoverCommand, MessageType, OffloadRequest, OffloadResponse

logger = logging.getLogger(__name__)

TIME_TOLERANCE = 1e-9


class InvariantViolation(RuntimeError):
    """A global simulation invariant does not hold."""

    def __init__(self, rule: str, time: float, details: str):
        self.rule = rule
        self.time = time
        self.details = details
        super().__init__(f"[{rule}] t={time:.6f}s: {details}")


class ProcedureSpan(BaseModel):
    procedure_id: str
    origin: str
    start: float
    end: Optional[float] = None
    stations: Set[str] = Field(default_factory=set)
    kind: GatewayStatus


class InvariantChecker:
    """Observes the federation and records (or raises) violations."""

    def __init__(self, strict: bool = True, bus_latency: float = 0.0):
        self.strict = strict
        self.bus_latency = bus_latency
        self.violations: List[InvariantViolation] = []
        self.spans: Dict[str, ProcedureSpan] = {}
        self.open: Set[str] = set()
        self.light_handover: Dict[str, float] = {}
        self.powered_on_at: Dict[str, float] = {}

    def _violate(self, rule: str, time: float, details: str) -> None:
        violation = InvariantViolation(rule, time, details)
        self.violations.append(violation)
        logger.error(f"Invariant violation: {violation}")
        if self.strict:
            raise violation

    @property
    def messages(self) -> List[str]:
        return [str(v) for v in self.violations]

    # =========================================================================
    # Engine-level checks
    # =========================================================================

    def on_past_event(self, time: float, now: float, kind: str) -> None:
        self._violate("causality", now, f"{kind} scheduled at {time:.6f}s, before now")

    def on_cycle(
        self,
        time: float,
        gateway: str,
        delivered_inelastic: Mapping[str, float],
        offered_inelastic: Mapping[str, float],
        payload_slack: Mapping[str, float],
    ) -> None:
        """Per node: inelastic bits delivered in the cycle vs offered bits."""
        for node, bits in delivered_inelastic.items():
            limit = offered_inelastic.get(node, 0.0) + payload_slack.get(node, 0.0)
            if bits > limit + 1e-6:
                self._violate(
                    "conservation", time,
                    f"{gateway}: {node} delivered {bits:.0f} inelastic bits, offered {limit:.0f}",
                )

    def check_associations(
        self,
        time: float,
        association: Mapping[str, Optional[str]],
        members: Mapping[str, Set[str]],
        on: Mapping[str, bool],
    ) -> None:
        """No orphans: call only when no station is in transit."""
        for station, gateway in sorted(association.items()):
            holders = [g for g, stations in members.items() if station in stations]
            if gateway is None or holders != [gateway]:
                self._violate("no-orphans", time, f"{station} held by {holders}, mapped to {gateway}")
            elif not on.get(gateway, False):
                self._violate("no-orphans", time, f"{station} associated to off gateway {gateway}")

    # =========================================================================
    # Power
    # =========================================================================

    def on_power_on(self, time: float, gateway: str) -> None:
        self.powered_on_at[gateway] = time

    def on_power_off(self, time: float, gateway: str, stations: Set[str]) -> None:
        if stations:
            self._violate("off-after-handover", time, f"{gateway} turned off with stations {sorted(stations)}")
            return
        handover = self.light_handover.get(gateway)
        since = self.powered_on_at.get(gateway, 0.0)
        if handover is None or handover < since - TIME_TOLERANCE:
            self._violate("off-after-handover", time, f"{gateway} turned off without a Light HandoverCommand")

    # =========================================================================
    # Messages
    # =========================================================================

    def on_send(self, time: float, message, sender_on: bool, sender_status: GatewayStatus) -> None:
        kind = message.message_type
        if kind == MessageType.OFFLOAD_REQUEST:
            self._open(time, message)
        elif kind == MessageType.OFFLOAD_RESPONSE:
            self._check_response(time, message, sender_on, sender_status)
        elif kind == MessageType.ALLOCATION_REQUEST:
            self._check_exclusive(time, message, "AllocationRequest")
        elif kind == MessageType.HANDOVER_COMMAND:
            self._check_exclusive(time, message, "HandoverCommand")
            self._close(time, message)
            if message.requester_status == GatewayStatus.LIGHT:
                self._check_light_cover(time, message)
        elif kind == MessageType.ABORT:
            self._close(time, message)

    def _open(self, time: float, request: OffloadRequest) -> None:
        self.spans[request.procedure_id] = ProcedureSpan(
            procedure_id=request.procedure_id,
            origin=request.origin,
            start=time,
            stations={s.mac for s in request.stations},
            kind=request.status,
        )
        self.open.add(request.procedure_id)

    def _close(self, time: float, message) -> None:
        span = self.spans.get(message.procedure_id)
        if span is None or span.end is not None:
            return
        span.end = time
        self.open.discard(message.procedure_id)
        limit = self.bus_latency + TIME_TOLERANCE
        for other in self.spans.values():
            if other.procedure_id == span.procedure_id:
                continue
            other_end = other.end if other.end is not None else time
            overlap = min(span.end, other_end) - max(span.start, other.start)
            if overlap > limit:
                self._violate(
                    "mutual-exclusion", time,
                    f"{span.procedure_id} and {other.procedure_id} overlapped for {overlap:.6f}s",
                )

    def _check_light_cover(self, time: float, command: HandoverCommand) -> None:
        span = self.spans.get(command.procedure_id)
        requested = span.stations if span else set()
        missing = sorted(requested - set(command.assignments))
        if missing:
            self._violate("off-after-handover", time, f"{command.procedure_id} leaves {missing} unassigned")
        self.light_handover[command.origin] = time

    def _check_exclusive(self, time: float, message, what: str) -> None:
        others = sorted(p for p in self.open if p != message.procedure_id)
        if others:
            self._violate("mutual-exclusion", time, f"{what} of {message.procedure_id} while {others} open")

    def _check_response(self, time: float, response: OffloadResponse, on: bool, status: GatewayStatus) -> None:
        if not on or status == GatewayStatus.HEAVY:
            self._violate(
                "responder-eligibility", time,
                f"{response.origin} responded while {'off' if not on else status.value}",
            )
        for combo in response.combos:
            if combo.b_value <= 0:
                self._violate(
                    "responder-eligibility", time,
                    f"{response.origin} offered {combo.stations} with b={combo.b_value:.1f}",
                )

    def forget_closed(self, before: float) -> None:
        """
        Drop closed spans that ended before `before` and before every open span
        started. Such a span cannot overlap an open or a future procedure.
        """
        horizon = min([before, *(self.spans[p].start for p in self.open)])
        for pid in [p for p, s in self.spans.items() if s.end is not None and s.end < horizon]:
            del self.spans[pid]
