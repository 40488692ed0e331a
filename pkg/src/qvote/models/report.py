"""Election, audit and security report models."""

from enum import Enum
from typing import Literal, Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qvote.models.config import AdversaryRole, CommitmentMode
from qvote.models.ledger import InclusionStatus, RejectionReason


class CheatEvent(BaseModel):
    """A detected cheat attributed to a party."""

    model_config = ConfigDict(frozen=True)

    party: str
    kind: Literal["rebind", "peek", "opening_rejected"]
    bits: list[int] = Field(default_factory=list)
    detail: str = ""


class RoundSummary(BaseModel):
    """One consensus round as reported."""

    model_config = ConfigDict(frozen=True)

    round: int
    kind: str
    sender: str
    admitted: bool
    votes_for: int
    votes_total: int
    agreed_update: str | None = None
    reason: RejectionReason | None = None
    trace_line: int


class AbortReason(str, Enum):
    WITHHELD_OPENING = "withheld_opening"
    CHEAT_DETECTED = "cheat_detected"
    MISSING_COMMITMENT = "missing_commitment"


class ElectionReport(BaseModel):
    """
    Result of one election run.

    The tally is present if and only if the election was not aborted.
    """

    seed: int
    n_voters: int
    m_miners: int
    commitment_mode: CommitmentMode
    p_detect: float
    adversary_role: AdversaryRole | None = None
    tally: int | None = None
    aborted: bool = False
    abort_reason: AbortReason | None = None
    culprits: list[str] = Field(default_factory=list)
    inclusion: list[InclusionStatus] = Field(default_factory=list)
    cheat_events: list[CheatEvent] = Field(default_factory=list)
    rounds: list[RoundSummary] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)
    early_tally_guess: int | None = None
    delivery_failures: int = 0
    chain_head: str
    trace_head: str

    @model_validator(mode="after")
    def tally_iff_completed(self) -> Self:
        if self.aborted == (self.tally is not None):
            raise ValueError("tally must be present exactly when not aborted")
        if self.aborted and self.abort_reason is None:
            raise ValueError("aborted report needs an abort reason")
        return self


class SecurityProperty(str, Enum):
    ANONYMITY = "anonymity"
    BINDING = "binding"
    NON_REUSABILITY = "non-reusability"
    VERIFIABILITY = "verifiability"
    ELIGIBILITY = "eligibility"
    FAIRNESS = "fairness"
    SELF_TALLYING = "self-tallying"


VerdictStatus = Literal["pass", "fail", "not guaranteed", "tally-determined"]


class SecurityVerdict(BaseModel):
    """
    One row of the security table.

    Attributes:
        property: Security property checked
        passed: Whether the row counts as a pass
        status: pass, fail, not guaranteed or tally-determined
        evidence: Pointer into the relevant trace (e.g. "rebind:trace#41")
    """

    model_config = ConfigDict(frozen=True)

    property: SecurityProperty
    passed: bool
    status: VerdictStatus
    evidence: str = ""


class SecurityReport(BaseModel):
    suite: str
    seed: int
    verdicts: list[SecurityVerdict]

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)


class AuditVerdict(BaseModel):
    """
    Anonymity audit result.

    Attributes:
        n: Voter count
        colluders: Colluding voter indices
        mode: exhaustive, factorized or sampled
        passed: Whether views are independent of honest votes given their sum
        status: pass, fail or tally-determined
        matrices_enumerated: Mask matrices (or honest-row tuples) enumerated
        counterexample: Two honest vote vectors with different view
            distributions, when the audit fails
        detail: Free-form note
    """

    n: int
    colluders: list[int]
    mode: Literal["exhaustive", "factorized", "sampled"]
    passed: bool
    status: VerdictStatus
    matrices_enumerated: int = 0
    counterexample: list[list[int]] | None = None
    detail: str = ""


class MonteCarloEstimate(BaseModel):
    """Observed frequency of an event against its analytic expectation."""

    observed: float
    expected: float
    trials: int

    @property
    def deviation(self) -> float:
        return abs(self.observed - self.expected)


class AttackResult(BaseModel):
    """Election report of an adversarial run plus the verdicts it supports."""

    report: ElectionReport
    verdicts: list[SecurityVerdict]
