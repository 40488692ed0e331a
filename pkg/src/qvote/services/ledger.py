"""
Replicated append-only ledger.

Every miner holds a LedgerNode with its own chain copy. Updates go through a
consensus round; admitted records are appended to every copy, either one block
per round or, with batching, one block per protocol phase. On-chain records
carry no auth tag: the consensus decision in the block authenticates them.
"""

from collections.abc import Callable, Collection, Iterable, Mapping, Sequence

from loguru import logger

from qvote.domain.exceptions import ChainIntegrityError
from qvote.models.ledger import (
    ConsensusDecision,
    InclusionStatus,
    LedgerBlock,
    RecordKind,
    RejectionReason,
    SubmissionResult,
    UpdateRecord,
    admission_threshold,
)
from qvote.models.report import RoundSummary
from qvote.services.commitment import CommitmentScheme
from qvote.services.consensus import MinerOpinion, hsba_round, local_consistency_check
from qvote.services.trace import TraceRecorder
from qvote.utils.security import (
    GENESIS_DIGEST,
    AuthKeyTable,
    canonical_bytes,
    digest_hex,
)


def genesis_block() -> LedgerBlock:
    return LedgerBlock(height=0, prev_digest=GENESIS_DIGEST)


class LedgerNode:
    """A miner's chain copy plus records admitted but not yet blocked."""

    def __init__(self, owner: str):
        self.owner = owner
        self._chain: list[LedgerBlock] = [genesis_block()]
        self.pending: list[UpdateRecord] = []

    @property
    def height(self) -> int:
        return self._chain[-1].height

    @property
    def head_digest(self) -> str:
        return self._chain[-1].digest()

    def append(self, block: LedgerBlock) -> None:
        """
        Append a block to this copy.

        Raises:
            ChainIntegrityError: If the block does not extend the head
        """
        if block.height != self.height + 1 or block.prev_digest != self.head_digest:
            raise ChainIntegrityError(
                f"{self.owner}: block {block.height} does not extend "
                f"block {self.height}"
            )
        self._chain.append(block)
        admitted = set(block.records)
        self.pending = [r for r in self.pending if r not in admitted]

    def snapshot(self) -> tuple[LedgerBlock, ...]:
        return tuple(self._chain)

    def _records(self) -> Iterable[UpdateRecord]:
        for block in self._chain:
            yield from block.records
        yield from self.pending

    def _find(self, kind: RecordKind, voter: str) -> UpdateRecord | None:
        return next(
            (r for r in self._records() if r.kind is kind and r.voter == voter), None
        )

    def commitment_for(self, voter: str) -> UpdateRecord | None:
        return self._find(RecordKind.BALLOT_COMMITMENT, voter)

    def opening_for(self, voter: str) -> UpdateRecord | None:
        return self._find(RecordKind.BALLOT_OPENING, voter)

    def commitment_count(self) -> int:
        return sum(1 for r in self._records() if r.kind is RecordKind.BALLOT_COMMITMENT)

    def tally_phase_open(self, n_voters: int) -> bool:
        """Openings are admissible once all n commitments are admitted."""
        return self.commitment_count() >= n_voters


def verify_chain(blocks: Sequence[LedgerBlock]) -> int | None:
    """
    Check heights and prev-digest links of a chain.

    Returns:
        int | None: Height of the first broken block, or None if intact
    """
    prev = GENESIS_DIGEST
    for expected_height, block in enumerate(blocks):
        if block.height != expected_height or block.prev_digest != prev:
            return expected_height
        prev = block.digest()
    return None


def verify_inclusion(voter: str, chain: Sequence[LedgerBlock]) -> InclusionStatus:
    """Report whether the voter's commitment and opening are on the chain."""
    status = InclusionStatus(voter=voter)
    for block in chain:
        for record in block.records:
            if record.voter != voter:
                continue
            if record.kind is RecordKind.BALLOT_COMMITMENT:
                status.committed = True
            else:
                status.opened = True
            if block.height not in status.block_heights:
                status.block_heights.append(block.height)
    return status


def chain_to_json_lines(blocks: Sequence[LedgerBlock]) -> bytes:
    """Export a chain as canonical JSON lines, one block per line."""
    return b"".join(canonical_bytes(block.to_json()) + b"\n" for block in blocks)


class Ledger:
    """
    The miners' replicated ledger.

    Args:
        miners: Miner ids (ordered)
        honest: Miners that follow the protocol; the rest invert their verdicts
        keys: Pairwise auth keys
        roster: Eligible voter ids
        scheme: Commitment scheme used by miners to check openings
        n_voters: Election size
        trace: Trace recorder for consensus and block records
        clock: Current simulation tick
        batch_blocks: Defer blocks until flush()
    """

    def __init__(
        self,
        miners: Sequence[str],
        honest: Collection[str],
        *,
        keys: AuthKeyTable,
        roster: Collection[str],
        scheme: CommitmentScheme,
        n_voters: int,
        trace: TraceRecorder,
        clock: Callable[[], int] = lambda: 0,
        batch_blocks: bool = False,
    ):
        self.miners = list(miners)
        self.honest = frozenset(honest)
        self.keys = keys
        self.roster = frozenset(roster)
        self.scheme = scheme
        self.n_voters = n_voters
        self.trace = trace
        self.clock = clock
        self.batch_blocks = batch_blocks
        self.nodes = {miner: LedgerNode(miner) for miner in self.miners}
        self.rounds: list[RoundSummary] = []
        self.warnings: list[str] = []
        self._round = 0
        self._pending_decisions: list[ConsensusDecision] = []

        threshold = admission_threshold(len(self.miners))
        if len(self.honest) < threshold:
            self.warnings.append(
                f"honest miners ({len(self.honest)}) below admission threshold "
                f"({threshold}); honest-success guarantee does not hold"
            )
            logger.warning(self.warnings[-1])

        genesis = genesis_block()
        self.trace.record(
            self.clock(),
            "block",
            detail={"block": genesis.to_json(), "digest": genesis.digest()},
        )

    def node(self, miner: str | None = None) -> LedgerNode:
        return self.nodes[miner or self._reference_miner()]

    def _reference_miner(self) -> str:
        honest = [m for m in self.miners if m in self.honest]
        return honest[0] if honest else self.miners[0]

    def _opinion(self, miner: str, record: UpdateRecord | None) -> MinerOpinion:
        if record is None:
            return MinerOpinion(miner, "", False, RejectionReason.DELIVERY_FAILURE)
        opinion = local_consistency_check(
            miner,
            self.nodes[miner],
            record,
            keys=self.keys,
            roster=self.roster,
            scheme=self.scheme,
            n_voters=self.n_voters,
        )
        return opinion if miner in self.honest else opinion.inverted()

    def submit_update(
        self, sender: str, versions: Mapping[str, UpdateRecord | None]
    ) -> SubmissionResult:
        """
        Run consensus on an update and append it if admitted.

        Args:
            sender: Party that submitted the update
            versions: Copy of the update received by each miner (None if lost)

        Returns:
            SubmissionResult
        """
        self._round += 1
        opinions = [self._opinion(m, versions.get(m)) for m in self.miners]
        digests = {op.miner: op.update_digest for op in opinions}
        decision = hsba_round(digests, opinions, self.honest, self._round)

        record = next(
            (
                r
                for r in versions.values()
                if r is not None and r.body_digest() == decision.agreed_update
            ),
            None,
        )
        kind = record.kind.value if record else None
        line = self.trace.record(
            self.clock(),
            "consensus",
            sender=sender,
            detail={
                "round": decision.round,
                "kind": kind,
                "agreed_update": decision.agreed_update,
                "admitted": decision.admitted,
                "votes_for": decision.votes_for,
                "votes_total": decision.votes_total,
                "reason": decision.reason.value if decision.reason else None,
            },
        )
        self.rounds.append(
            RoundSummary(
                round=decision.round,
                kind=kind or "unknown",
                sender=sender,
                admitted=decision.admitted,
                votes_for=decision.votes_for,
                votes_total=decision.votes_total,
                agreed_update=decision.agreed_update,
                reason=decision.reason,
                trace_line=line,
            )
        )

        if not decision.admitted or record is None:
            logger.info(
                f"Round {decision.round}: update from {sender} rejected "
                f"({decision.reason.value if decision.reason else 'unknown'})"
            )
            return SubmissionResult(
                accepted=False, reason=decision.reason, decision=decision
            )

        on_chain = record.with_tag(None)
        for node in self.nodes.values():
            node.pending.append(on_chain)
        self._pending_decisions.append(decision)
        height = None if self.batch_blocks else self.flush()
        return SubmissionResult(accepted=True, decision=decision, block_height=height)

    def flush(self) -> int | None:
        """
        Seal pending admitted records into one block on every node.

        Returns:
            int | None: Height of the new block, or None if nothing was pending
        """
        reference = self.node()
        if not reference.pending:
            return None
        records = tuple(reference.pending)
        decisions = self._pending_decisions
        if len(decisions) == 1:
            decision = decisions[0]
        else:
            decision = ConsensusDecision(
                round=decisions[-1].round,
                agreed_update=digest_hex([r.body_digest() for r in records]),
                admitted=True,
                votes_for=min(d.votes_for for d in decisions),
                votes_total=len(self.miners),
            )
        block = LedgerBlock(
            height=reference.height + 1,
            prev_digest=reference.head_digest,
            records=records,
            decision=decision,
        )
        for node in self.nodes.values():
            node.append(block)
        self._pending_decisions = []
        self.trace.record(
            self.clock(),
            "block",
            detail={"block": block.to_json(), "digest": block.digest()},
        )
        logger.debug(f"Block {block.height} sealed with {len(records)} record(s)")
        return block.height

    def read_chain(self, observer: str | None = None) -> tuple[LedgerBlock, ...]:
        """
        Immutable snapshot of the public chain.

        Any party, outsiders included, may read; every copy is identical.
        """
        snapshot = self.node().snapshot()
        logger.debug(f"{observer or 'anonymous'} read {len(snapshot)} block(s)")
        return snapshot

    def copies_agree(self) -> bool:
        heads = {node.head_digest for node in self.nodes.values()}
        return len(heads) == 1
