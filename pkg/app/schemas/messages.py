# Directory: fedgw-sim/app/schemas/messages.py

"""
Protocol Message Schemas - Federation Offload Messages.

Defines the six messages gateways exchange over the out-of-band bus while
relocating stations. Every message carries its type tag, the procedure it
belongs to, its origin gateway and its send time; `destination` is None for
multicast messages.

When adding a message type, add it to MessageType, define its model and extend
the ProtocolMessage union.
"""

from enum import Enum
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field

from .entities import GatewayStatus


class MessageType(str, Enum):
    """Federation message types."""
    OFFLOAD_REQUEST = "offload_request"
    OFFLOAD_RESPONSE = "offload_response"
    ALLOCATION_REQUEST = "allocation_request"
    ALLOCATION_RESPONSE = "allocation_response"
    HANDOVER_COMMAND = "handover_command"
    ABORT = "abort"


class AdvertisedStation(BaseModel):
    """A station listed in an OffloadRequest with its measured traffic profile."""
    hashed_aid: int = Field(..., ge=0, description="AID hash carried by the probe CTS")
    mac: str = Field(..., description="Station MAC address")
    uplink_inelastic: Optional[float] = Field(None, ge=0, description="nu_k (bit/s), None if never measured")
    uplink_elastic: Optional[float] = Field(None, ge=0, description="eta_k (bit/s), None if never measured")
    downlink_inelastic: float = Field(0.0, ge=0, description="Inelastic traffic the station receives (bit/s)")
    downlink_elastic: float = Field(0.0, ge=0, description="Elastic traffic the station receives (bit/s)")
    avg_inelastic_payload: Optional[float] = Field(None, gt=0)
    avg_elastic_payload: Optional[float] = Field(None, gt=0)
    avg_rate: Optional[float] = Field(None, gt=0, description="Rate with the current gateway")


class OfferedCombo(BaseModel):
    """A station subset a responder can admit."""
    stations: List[str] = Field(..., min_length=1, description="MACs in the subset")
    b_value: float = Field(..., description="b-metric after admitting the subset (bit/s)")
    b_over_s: float = Field(..., description="b-metric normalised by the recomputed S")
    rates: Dict[str, float] = Field(default_factory=dict, description="Probed rate per MAC")


class _BaseMessage(BaseModel):
    procedure_id: str = Field(..., description="Procedure identifier (origin + sequence)")
    origin: str = Field(..., description="Sending gateway id")
    destination: Optional[str] = Field(None, description="Receiving gateway id; None for multicast")
    sent_at: float = Field(0.0, ge=0, description="Simulated send time (s)")

    def summary(self) -> str:
        """Compact payload description for the protocol transcript."""
        return ""


class OffloadRequest(_BaseMessage):
    message_type: Literal[MessageType.OFFLOAD_REQUEST] = MessageType.OFFLOAD_REQUEST
    status: GatewayStatus = Field(..., description="Requester status (light or heavy)")
    channel: int = Field(..., ge=0, description="Requester's frequency channel")
    requester_b_over_s: float = Field(..., description="Advertised B/S of the requester")
    stations: List[AdvertisedStation] = Field(default_factory=list)
    flagged: bool = Field(False, description="Wake-up flag for off gateways")

    def summary(self) -> str:
        macs = ",".join(s.mac for s in self.stations)
        return (
            f"status={self.status.value} b/S={self.requester_b_over_s:.4f} "
            f"flagged={int(self.flagged)} stations=[{macs}]"
        )


class OffloadResponse(_BaseMessage):
    message_type: Literal[MessageType.OFFLOAD_RESPONSE] = MessageType.OFFLOAD_RESPONSE
    combos: List[OfferedCombo] = Field(default_factory=list)

    def summary(self) -> str:
        return f"combos={len(self.combos)}"


class AllocationRequest(_BaseMessage):
    message_type: Literal[MessageType.ALLOCATION_REQUEST] = MessageType.ALLOCATION_REQUEST
    assigned: List[str] = Field(..., description="MACs assigned to the destination")
    requester_b_over_s: float
    status: GatewayStatus = Field(..., description="Kind of procedure (light or heavy)")

    def summary(self) -> str:
        return f"assigned=[{','.join(self.assigned)}]"


class AllocationResponse(_BaseMessage):
    message_type: Literal[MessageType.ALLOCATION_RESPONSE] = MessageType.ALLOCATION_RESPONSE
    accept: bool
    b_value: Optional[float] = None

    def summary(self) -> str:
        return f"accept={int(self.accept)}"


class HandoverCommand(_BaseMessage):
    message_type: Literal[MessageType.HANDOVER_COMMAND] = MessageType.HANDOVER_COMMAND
    assignments: Dict[str, str] = Field(default_factory=dict, description="MAC -> gateway id")
    requester_status: GatewayStatus

    def summary(self) -> str:
        pairs = ",".join(f"{mac}->{gw}" for mac, gw in sorted(self.assignments.items()))
        return f"assignments=[{pairs}]"


class Abort(_BaseMessage):
    message_type: Literal[MessageType.ABORT] = MessageType.ABORT
    reason: str = Field("", description="Why the procedure ended")

    def summary(self) -> str:
        return f"reason={self.reason}"


ProtocolMessage = Annotated[
    Union[
        OffloadRequest,
        OffloadResponse,
        AllocationRequest,
        AllocationResponse,
        HandoverCommand,
        Abort,
    ],
    Field(discriminator="message_type"),
]
