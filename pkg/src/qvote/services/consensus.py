"""
Miner-side validation and the honest-success agreement round.

The agreement protocol is modelled by its contract only: honest miners agree
on the version most of them received, and the update is admitted when at least
half of all miners (ceil(m/2)) hold an admissible opinion on that version.
"""

from collections import Counter
from collections.abc import Collection, Mapping, Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING

from loguru import logger

from qvote.domain.exceptions import NoMiners
from qvote.models.ledger import (
    CommitmentPayload,
    ConsensusDecision,
    OpeningPayload,
    RecordKind,
    RejectionReason,
    UpdateRecord,
    admission_threshold,
)
from qvote.services.commitment import (
    CheatDetected,
    Commitment,
    CommitmentScheme,
    Opening,
)
from qvote.utils.security import AuthKeyTable

if TYPE_CHECKING:
    from qvote.services.ledger import LedgerNode


def is_admitted(votes_for: int, m: int) -> bool:
    return votes_for >= admission_threshold(m)


@dataclass(frozen=True)
class MinerOpinion:
    """
    One miner's verdict on the copy of an update it received.

    Attributes:
        miner: Miner id
        update_digest: Body digest of the received copy ("" if none arrived)
        admissible: Whether the copy passes local checks
        reason: Why it does not
    """

    miner: str
    update_digest: str
    admissible: bool
    reason: RejectionReason | None = None

    def inverted(self) -> "MinerOpinion":
        """Verdict of a dishonest miner that lies about this opinion."""
        if self.admissible:
            return MinerOpinion(
                self.miner, self.update_digest, False, RejectionReason.NO_CONSENSUS
            )
        return MinerOpinion(self.miner, self.update_digest, True, None)


def local_consistency_check(
    miner: str,
    node: "LedgerNode",
    record: UpdateRecord,
    *,
    keys: AuthKeyTable,
    roster: Collection[str],
    scheme: CommitmentScheme,
    n_voters: int,
) -> MinerOpinion:
    """
    Validate an update against a miner's chain copy.

    Checks, in order: the voter is on the roster, the auth tag verifies under
    the claimed voter's key, no ballot of the same kind exists, the phase
    admits the record kind, and an opening verifies against the on-chain
    commitment.

    Args:
        miner: Checking miner
        node: The miner's ledger node (chain plus pending admissions)
        record: Copy received by this miner
        keys: Pairwise authentication keys
        roster: Eligible voter ids
        scheme: Commitment scheme used to verify openings
        n_voters: Election size (commitments needed before tally opens)

    Returns:
        MinerOpinion
    """
    digest = record.body_digest()

    def reject(reason: RejectionReason) -> MinerOpinion:
        return MinerOpinion(miner, digest, False, reason)

    if record.voter not in roster:
        return reject(RejectionReason.NOT_ELIGIBLE)
    if not keys.verify(record.voter, miner, record.body_bytes(), record.auth_tag):
        return reject(RejectionReason.AUTH_FAILURE)

    tally_open = node.tally_phase_open(n_voters)
    if record.kind is RecordKind.BALLOT_COMMITMENT:
        if node.commitment_for(record.voter) is not None:
            return reject(RejectionReason.DUPLICATE_BALLOT)
        if tally_open:
            return reject(RejectionReason.PHASE_VIOLATION)
        return MinerOpinion(miner, digest, True)

    if not tally_open:
        return reject(RejectionReason.PHASE_VIOLATION)
    committed = node.commitment_for(record.voter)
    if committed is None:
        return reject(RejectionReason.MISSING_COMMITMENT)
    if node.opening_for(record.voter) is not None:
        return reject(RejectionReason.DUPLICATE_BALLOT)
    payload = record.payload
    evidence = committed.payload
    if not isinstance(payload, OpeningPayload) or not isinstance(
        evidence, CommitmentPayload
    ):
        return reject(RejectionReason.CHEAT_DETECTED)
    result = scheme.verify_opening(
        Commitment(committer=record.voter, evidence=evidence.evidence),
        Opening(value=payload.value, decommit_token=payload.decommit_token),
    )
    if isinstance(result, CheatDetected):
        return reject(RejectionReason.CHEAT_DETECTED)
    return MinerOpinion(miner, digest, True)


def hsba_round(
    update_versions: Mapping[str, str],
    opinions: Sequence[MinerOpinion],
    honest_set: Collection[str],
    round_number: int = 1,
) -> ConsensusDecision:
    """
    Run one agreement round.

    Args:
        update_versions: Miner id -> digest of the copy it received ("" if none)
        opinions: One opinion per miner
        honest_set: Miners that follow the protocol
        round_number: Round number to stamp on the decision

    Returns:
        ConsensusDecision; a tie between honest versions agrees on nothing

    Raises:
        NoMiners: If there are no miners or no honest miners
    """
    if not update_versions:
        raise NoMiners("consensus round without miners")
    honest = [miner for miner in update_versions if miner in honest_set]
    if not honest:
        raise NoMiners("consensus round without honest miners")
    m = len(update_versions)

    counts = Counter(
        update_versions[miner] for miner in honest if update_versions[miner]
    )
    ranked = counts.most_common(2)
    agreed: str | None = None
    if ranked and (len(ranked) == 1 or ranked[0][1] > ranked[1][1]):
        agreed = ranked[0][0]

    votes_for = (
        sum(1 for op in opinions if op.admissible and op.update_digest == agreed)
        if agreed is not None
        else 0
    )
    admitted = agreed is not None and is_admitted(votes_for, m)

    reason: RejectionReason | None = None
    if not admitted:
        honest_reasons = Counter(
            op.reason
            for op in opinions
            if op.miner in honest_set and not op.admissible and op.reason is not None
        )
        reason = (
            honest_reasons.most_common(1)[0][0]
            if honest_reasons and agreed is not None
            else RejectionReason.NO_CONSENSUS
        )
        if agreed is None and not counts:
            reason = RejectionReason.DELIVERY_FAILURE

    logger.debug(
        f"Round {round_number}: agreed={agreed and agreed[:12]} "
        f"votes={votes_for}/{m} admitted={admitted}"
    )
    return ConsensusDecision(
        round=round_number,
        agreed_update=agreed,
        admitted=admitted,
        votes_for=votes_for,
        votes_total=m,
        reason=reason,
    )
