"""Ledger data models: update records, consensus decisions and blocks."""

from enum import Enum
from typing import Any, Literal, Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qvote.utils.security import canonical_bytes, digest_hex


class RecordKind(str, Enum):
    BALLOT_COMMITMENT = "ballot_commitment"
    BALLOT_OPENING = "ballot_opening"


class CommitmentPayload(BaseModel):
    """Commitment evidence broadcast by a voter."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    type: Literal["commitment"] = "commitment"
    evidence: tuple[str, ...]


class OpeningPayload(BaseModel):
    """Opening of a masked ballot: claimed value and per-bit nonces."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    type: Literal["opening"] = "opening"
    value: int = Field(..., ge=0)
    decommit_token: tuple[str, ...]


_PAYLOAD_TYPE = {
    RecordKind.BALLOT_COMMITMENT: "commitment",
    RecordKind.BALLOT_OPENING: "opening",
}


class UpdateRecord(BaseModel):
    """
    A ledger update submitted by a voter.

    The auth tag authenticates the body to one miner and is stripped before the
    record is placed on-chain.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: RecordKind
    voter: str
    payload: CommitmentPayload | OpeningPayload = Field(..., discriminator="type")
    auth_tag: str | None = None

    @model_validator(mode="after")
    def payload_matches_kind(self) -> Self:
        if self.payload.type != _PAYLOAD_TYPE[self.kind]:
            raise ValueError(f"{self.kind.value} record carries a {self.payload.type}")
        return self

    def body(self) -> dict[str, Any]:
        return self.model_dump(mode="json", exclude={"auth_tag"})

    def body_bytes(self) -> bytes:
        """Canonical bytes covered by the auth tag."""
        return canonical_bytes(self.body())

    def body_digest(self) -> str:
        return digest_hex(self.body_bytes())

    def with_tag(self, tag: str | None) -> "UpdateRecord":
        return self.model_copy(update={"auth_tag": tag})


class RejectionReason(str, Enum):
    AUTH_FAILURE = "auth_failure"
    DUPLICATE_BALLOT = "duplicate_ballot"
    NOT_ELIGIBLE = "not_eligible"
    PHASE_VIOLATION = "phase_violation"
    MISSING_COMMITMENT = "missing_commitment"
    CHEAT_DETECTED = "cheat_detected"
    NO_CONSENSUS = "no_consensus"
    DELIVERY_FAILURE = "delivery_failure"


def admission_threshold(m: int) -> int:
    """ceil(m / 2): votes needed to admit an update among m miners."""
    return (m + 1) // 2


class ConsensusDecision(BaseModel):
    """
    Outcome of one agreement round.

    Attributes:
        round: Round number (1-based)
        agreed_update: Digest of the version the honest miners agreed on
        admitted: Whether the update enters the ledger
        votes_for: Admissible opinions on the agreed version
        votes_total: Number of miners
        reason: Dominant rejection reason when not admitted
    """

    model_config = ConfigDict(frozen=True)

    round: int = Field(..., ge=1)
    agreed_update: str | None
    admitted: bool
    votes_for: int = Field(..., ge=0)
    votes_total: int = Field(..., ge=1)
    reason: RejectionReason | None = None

    @model_validator(mode="after")
    def admission_is_consistent(self) -> Self:
        if self.votes_for > self.votes_total:
            raise ValueError("votes_for exceeds votes_total")
        if self.admitted:
            if self.agreed_update is None:
                raise ValueError("admitted decision without an agreed update")
            if self.votes_for < admission_threshold(self.votes_total):
                raise ValueError("admitted decision below the admission threshold")
            if self.reason is not None:
                raise ValueError("admitted decision carries a rejection reason")
        return self


class LedgerBlock(BaseModel):
    """Block of admitted records. Height 0 is the genesis block."""

    model_config = ConfigDict(frozen=True)

    height: int = Field(..., ge=0)
    prev_digest: str
    records: tuple[UpdateRecord, ...] = ()
    decision: ConsensusDecision | None = None

    def to_json(self) -> dict[str, Any]:
        return self.model_dump(mode="json")

    def digest(self) -> str:
        return digest_hex(self.to_json())


class SubmissionResult(BaseModel):
    """Outcome of submit_update."""

    model_config = ConfigDict(frozen=True)

    accepted: bool
    reason: RejectionReason | None = None
    decision: ConsensusDecision
    block_height: int | None = None


class InclusionStatus(BaseModel):
    """Where a voter's records sit on a chain."""

    voter: str
    committed: bool = False
    opened: bool = False
    block_heights: list[int] = Field(default_factory=list)
