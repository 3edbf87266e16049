# Directory: fedgw-sim/app/simulation/events.py

"""
Event Queue - Time-Ordered Dispatch with FIFO Tie-Break.

Events are kept in a heapq keyed by (time, insertion sequence), so events with
equal timestamps are dispatched in the order they were scheduled.
"""

import heapq
import logging
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

# Scheduling slack before an event counts as being in the past
CAUSALITY_TOLERANCE = 1e-9


class EventKind(str, Enum):
    """What an event does when dispatched."""
    CYCLE_END = "cycle-end"
    TIMER = "timer"
    DELIVERY = "message-delivery"
    TRAFFIC_CHANGE = "traffic-change"
    REASSOCIATION = "reassociation"
    SHUTDOWN_CHECK = "shutdown-check"


class Event(BaseModel):
    """One scheduled event."""
    time: float = Field(..., ge=0)
    kind: EventKind
    target: str = Field("", description="Gateway id, station MAC or empty for global events")
    payload: Dict[str, Any] = Field(default_factory=dict)


class EventQueue:
    """
    Discrete-event queue with a clock.

    `on_past_event` is called (time, now, event) when an event is scheduled
    before the current time; the event is then clamped to now.
    """

    def __init__(self, on_past_event: Optional[Callable[[float, float, Event], None]] = None):
        self._heap: List[Tuple[float, int, Event]] = []
        self._sequence = 0
        self.now = 0.0
        self.dispatched = 0
        self._on_past_event = on_past_event

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, time: float, kind: EventKind, target: str = "", payload: Optional[Dict[str, Any]] = None) -> Event:
        if time < self.now - CAUSALITY_TOLERANCE:
            event = Event(time=max(time, 0.0), kind=kind, target=target, payload=payload or {})
            if self._on_past_event is not None:
                self._on_past_event(time, self.now, event)
            time = self.now
        time = max(time, self.now)
        event = Event(time=time, kind=kind, target=target, payload=payload or {})
        heapq.heappush(self._heap, (time, self._sequence, event))
        self._sequence += 1
        return event

    def peek_time(self) -> Optional[float]:
        return self._heap[0][0] if self._heap else None

    def pop(self) -> Event:
        time, _, event = heapq.heappop(self._heap)
        self.now = time
        self.dispatched += 1
        return event
