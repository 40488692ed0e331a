"""Wire messages exchanged between parties."""

from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter

from qvote.models.ledger import UpdateRecord
from qvote.utils.security import canonical_bytes


class ShareMessage(BaseModel):
    """Mask share r_{i,j} from row owner i to voter j (quantum channel)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    type: Literal["share"] = "share"
    row_owner: int = Field(..., ge=1)
    share: int = Field(..., ge=0)


class RecordMessage(BaseModel):
    """Ledger update sent by a voter to one miner."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    type: Literal["record"] = "record"
    record: UpdateRecord
    seq: int = Field(default=0, ge=0)


class NackMessage(BaseModel):
    """Negative acknowledgement of a frame that failed authentication."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    type: Literal["nack"] = "nack"
    ref: str


Message = Annotated[
    ShareMessage | RecordMessage | NackMessage, Field(discriminator="type")
]

_message_adapter: TypeAdapter[Message] = TypeAdapter(Message)


def encode_message(message: ShareMessage | RecordMessage | NackMessage) -> bytes:
    return canonical_bytes(message.model_dump(mode="json"))


def decode_message(raw: bytes) -> ShareMessage | RecordMessage | NackMessage:
    """
    Parse wire bytes into a message.

    Raises:
        pydantic.ValidationError: If the bytes are not a valid message
    """
    return _message_adapter.validate_json(raw)
