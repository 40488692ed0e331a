"""
Election protocol: voter and miner state machines and the election driver.

Ballot commitment:
    1a. every voter draws a zero-sum mask row
    1b. share r_{i,j} goes to voter j over a quantum channel (the diagonal
        share stays local)
    1c. the voter masks its vote with the received column, commits to the
        masked ballot and broadcasts the commitment to every miner; miners
        agree on it and append it to the ledger
Barrier: openings are admissible only once all n commitments are on-chain.
Tally:
    2a. voters open their commitments to every miner
    2b. miners agree on the openings
    2c. anyone sums the opened masked ballots from the public chain
"""

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple

import numpy as np
from loguru import logger
from pydantic import ValidationError

from qvote.core.trace_context import run_id_context
from qvote.domain.exceptions import (
    IncompleteChain,
    PhaseViolation,
    ScenarioError,
    SimulationTimeout,
)
from qvote.models.config import (
    AdversaryRole,
    AdversarySpec,
    ScenarioConfig,
    party_sort_key,
    voter_id,
    voter_index,
)
from qvote.models.ledger import (
    CommitmentPayload,
    LedgerBlock,
    OpeningPayload,
    RecordKind,
    RejectionReason,
    UpdateRecord,
)
from qvote.models.messages import (
    NackMessage,
    RecordMessage,
    ShareMessage,
    decode_message,
    encode_message,
)
from qvote.models.report import AbortReason, CheatEvent, ElectionReport
from qvote.services.commitment import (
    Commitment,
    CommitmentScheme,
    Opening,
    create_commitment_scheme,
)
from qvote.services.ledger import Ledger, verify_inclusion
from qvote.services.masking import (
    MaskColumn,
    MaskedBallot,
    MaskRow,
    Modulus,
    gen_mask_row,
    mask_ballot,
    tally,
)
from qvote.services.netsim import ChannelKind, Delivery, Frame, Network, Observation
from qvote.services.trace import TraceRecorder
from qvote.utils.rng import Stream, make_rng
from qvote.utils.security import AuthKeyTable

MAX_SEND_ATTEMPTS = 3


# ============================================================================
# PARTIES
# ============================================================================


@dataclass
class _Outgoing:
    receiver: str
    kind: ChannelKind
    payload: bytes
    attempts: int = 1


class Party:
    """
    A network endpoint. Roles (voter, miner) attach to it.

    Failed deliveries are answered with a NACK; a NACKed frame is resent from
    the outbox until MAX_SEND_ATTEMPTS is reached.
    """

    def __init__(self, pid: str, network: Network):
        self.pid = pid
        self.network = network
        self.roles: list["Voter | Miner"] = []
        self._outbox: dict[str, _Outgoing] = {}
        self._sent = 0
        network.register(pid, self.handle)

    def transmit(
        self,
        receiver: str,
        kind: ChannelKind,
        message: ShareMessage | RecordMessage,
    ) -> str:
        self._sent += 1
        ref = f"{self.pid}>{receiver}#{self._sent}"
        payload = encode_message(message)
        self._outbox[ref] = _Outgoing(receiver, kind, payload)
        self.network.send(self.pid, receiver, kind, payload, ref)
        return ref

    def handle(self, delivery: Delivery) -> None:
        if not delivery.ok:
            nack = encode_message(NackMessage(ref=delivery.ref))
            self.network.send(
                self.pid, delivery.sender, ChannelKind.CLASSICAL_AUTH, nack
            )
            return
        try:
            message = decode_message(delivery.payload)
        except ValidationError:
            logger.warning(f"{self.pid} dropped an undecodable frame {delivery.ref}")
            return
        if isinstance(message, NackMessage):
            self._retransmit(message.ref)
            return
        for role in self.roles:
            role.on_message(delivery, message)

    def _retransmit(self, ref: str) -> None:
        outgoing = self._outbox.get(ref)
        if outgoing is None:
            return
        if outgoing.attempts >= MAX_SEND_ATTEMPTS:
            logger.warning(
                f"{self.pid} gave up on {ref} after {outgoing.attempts} tries"
            )
            return
        outgoing.attempts += 1
        logger.debug(f"{self.pid} resends {ref} (attempt {outgoing.attempts})")
        self.network.send(
            self.pid, outgoing.receiver, outgoing.kind, outgoing.payload, ref
        )


class VoterPhase(IntEnum):
    INIT = 0
    SHARES_SENT = 1
    COLUMN_COMPLETE = 2
    COMMITTED = 3
    OPENED = 4
    DONE = 5


@dataclass
class VoterState:
    phase: VoterPhase = VoterPhase.INIT
    row: MaskRow | None = None
    received: dict[int, int] = field(default_factory=dict)
    ballot: MaskedBallot | None = None
    commitment: Commitment | None = None
    opening: Opening | None = None


class Voter:
    """Voter role. The vote never leaves this object unmasked."""

    def __init__(
        self,
        party: Party,
        index: int,
        vote: int,
        modulus: Modulus,
        keys: AuthKeyTable,
        miners: Sequence[str],
    ):
        self.party = party
        self.index = index
        self._vote = vote
        self.modulus = modulus
        self.keys = keys
        self.miners = list(miners)
        self.state = VoterState()
        party.roles.append(self)

    @property
    def pid(self) -> str:
        return self.party.pid

    def _advance(self, expected: VoterPhase, target: VoterPhase) -> None:
        if self.state.phase is not expected or target <= self.state.phase:
            raise PhaseViolation(
                f"{self.pid}: cannot move from {self.state.phase.name} "
                f"to {target.name}"
            )
        self.state.phase = target

    def generate_row(self, rng: np.random.Generator) -> MaskRow:
        if self.state.phase is not VoterPhase.INIT or self.state.row is not None:
            raise PhaseViolation(f"{self.pid}: mask row already drawn")
        self.state.row = gen_mask_row(self.modulus.n, rng, owner=self.index)
        return self.state.row

    def send_shares(self) -> None:
        row = self.state.row
        if row is None:
            raise PhaseViolation(f"{self.pid}: no mask row to share")
        self._advance(VoterPhase.INIT, VoterPhase.SHARES_SENT)
        for j in range(1, self.modulus.n + 1):
            share = row.share_for(j)
            if j == self.index:
                self.state.received[j] = share
                continue
            self.party.transmit(
                voter_id(j),
                ChannelKind.QUANTUM_SECURE,
                ShareMessage(row_owner=self.index, share=share),
            )
        self._maybe_complete()

    def on_message(
        self, delivery: Delivery, message: ShareMessage | RecordMessage
    ) -> None:
        if not isinstance(message, ShareMessage):
            return
        if delivery.channel is not ChannelKind.QUANTUM_SECURE:
            logger.warning(f"{self.pid} ignored a share sent in the clear")
            return
        if voter_id(message.row_owner) != delivery.sender:
            logger.warning(f"{self.pid} ignored a share with a forged owner")
            return
        self.state.received.setdefault(message.row_owner, message.share)
        self._maybe_complete()

    def _maybe_complete(self) -> None:
        if (
            self.state.phase is not VoterPhase.SHARES_SENT
            or len(self.state.received) < self.modulus.n
        ):
            return
        column = MaskColumn(
            receiver=self.index,
            shares=tuple(
                self.state.received[k] for k in range(1, self.modulus.n + 1)
            ),
        )
        self.state.ballot = mask_ballot(self._vote, column, self.modulus)
        self._advance(VoterPhase.SHARES_SENT, VoterPhase.COLUMN_COMPLETE)

    def broadcast(
        self,
        kind: RecordKind,
        payload: CommitmentPayload | OpeningPayload,
        seq: int = 0,
        claimed_voter: str | None = None,
    ) -> None:
        """Send a record to every miner, tagged under this party's keys."""
        record = UpdateRecord(
            kind=kind, voter=claimed_voter or self.pid, payload=payload
        )
        for miner in self.miners:
            tag = self.keys.sign(self.pid, miner, record.body_bytes())
            self.party.transmit(
                miner,
                ChannelKind.CLASSICAL_AUTH,
                RecordMessage(record=record.with_tag(tag), seq=seq),
            )

    def commit(self, scheme: CommitmentScheme, rng: np.random.Generator) -> Commitment:
        ballot = self.state.ballot
        if ballot is None:
            raise PhaseViolation(f"{self.pid}: masked ballot not ready")
        self._advance(VoterPhase.COLUMN_COMPLETE, VoterPhase.COMMITTED)
        commitment, opening = scheme.commit(self.pid, ballot.value, rng)
        self.state.commitment = commitment
        self.state.opening = opening
        payload = CommitmentPayload(evidence=commitment.evidence)
        self.broadcast(RecordKind.BALLOT_COMMITMENT, payload)
        return commitment

    def open(self, opening: Opening | None = None) -> None:
        """Broadcast the opening (an adversary may substitute a forged one)."""
        self._advance(VoterPhase.COMMITTED, VoterPhase.OPENED)
        opening = opening or self.state.opening
        if opening is None:
            raise PhaseViolation(f"{self.pid}: nothing to open")
        self.broadcast(
            RecordKind.BALLOT_OPENING,
            OpeningPayload(
                value=opening.value, decommit_token=opening.decommit_token
            ),
        )

    def finish(self) -> None:
        if self.state.phase is VoterPhase.DONE:
            return
        self._advance(self.state.phase, VoterPhase.DONE)


class Slot(NamedTuple):
    """Identity of one submission: who sent what, and which copy."""

    kind: RecordKind
    sender: str
    seq: int


def _slot_order(slot: Slot) -> tuple:
    return (party_sort_key(slot.sender), slot.seq)


class Miner:
    """Miner role: buffers received records until the next consensus round."""

    def __init__(self, party: Party):
        self.party = party
        self.inbox: dict[Slot, UpdateRecord] = {}
        party.roles.append(self)

    @property
    def pid(self) -> str:
        return self.party.pid

    def on_message(
        self, delivery: Delivery, message: ShareMessage | RecordMessage
    ) -> None:
        if isinstance(message, RecordMessage):
            slot = Slot(message.record.kind, delivery.sender, message.seq)
            self.inbox.setdefault(slot, message.record)


# ============================================================================
# ELECTION DRIVER
# ============================================================================


@dataclass(frozen=True)
class _Abort:
    reason: AbortReason
    culprits: list[str]


@dataclass
class ElectionRun:
    """
    Everything an election run produced.

    Attributes:
        report: Election report
        trace: Trace JSON lines
        chain: Public chain snapshot
        observations: Eavesdropper log of the network
        evidence: Trace line numbers of notable records (rebind, peek, abort,
            tally, delivery_failure)
        votes: Plain votes (simulator oracle for tests and verdicts)
    """

    report: ElectionReport
    trace: bytes
    chain: tuple[LedgerBlock, ...]
    observations: list[Observation]
    evidence: dict[str, int] = field(default_factory=dict)
    votes: list[int] = field(default_factory=list)


class Election:
    """One election run built from a ScenarioConfig."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.n = config.n_voters
        self.modulus = Modulus(self.n)
        self.votes = config.resolved_votes()
        self.adversary: AdversarySpec | None = config.adversary
        self.voter_ids = config.voter_ids
        self.miner_ids = config.miner_ids

        self.trace = TraceRecorder()
        roster = list(dict.fromkeys([*self.voter_ids, *self.miner_ids]))
        self.keys = AuthKeyTable.generate(roster, make_rng(config.seed, Stream.KEYS))
        self.scheme = create_commitment_scheme(config.commitment_params, self.modulus)
        self.network = Network(self.keys, config.tick_limit, self.trace)
        self.adversary_rng = make_rng(config.seed, Stream.ADVERSARY)
        self.cheat_events: list[CheatEvent] = []
        self.evidence: dict[str, int] = {}
        self.early_tally_guess: int | None = None
        self._tampered: set[str] = set()
        self._duplicate_opening: Opening | None = None

        self.trace.record(
            0,
            "scenario",
            detail={
                "n_voters": self.n,
                "m_miners": config.m_miners,
                "miners": self.miner_ids,
                "commitment_mode": config.commitment_mode.value,
                "p_detect": config.p_detect,
                "adversary": self.adversary.role.value if self.adversary else None,
                "batch_blocks": config.batch_blocks,
                "seed": config.seed,
            },
        )
        self.ledger = Ledger(
            self.miner_ids,
            config.honest_miner_ids,
            keys=self.keys,
            roster=self.voter_ids,
            scheme=self.scheme,
            n_voters=self.n,
            trace=self.trace,
            clock=lambda: self.network.now,
            batch_blocks=config.batch_blocks,
        )

        self.parties = {pid: Party(pid, self.network) for pid in roster}
        self.voters = [
            Voter(
                self.parties[vid],
                i,
                self.votes[i - 1],
                self.modulus,
                self.keys,
                self.miner_ids,
            )
            for i, vid in enumerate(self.voter_ids, start=1)
        ]
        self.miners = {mid: Miner(self.parties[mid]) for mid in self.miner_ids}
        self._setup_adversary()

    # ------------------------------------------------------------------
    # adversary hooks
    # ------------------------------------------------------------------

    def _role(self, role: AdversaryRole) -> bool:
        return self.adversary is not None and self.adversary.role is role

    @property
    def spec(self) -> AdversarySpec:
        if self.adversary is None:
            raise ScenarioError("scenario has no adversary")
        return self.adversary

    def _adversary_voter(self) -> Voter:
        return self.voters[self.spec.voter - 1]

    def _setup_adversary(self) -> None:
        if self.adversary is None:
            return
        logger.info(f"Adversary injected: {self.adversary.role.value}")
        if self._role(AdversaryRole.OUTSIDER):
            outsider = Party(self.adversary.outsider_id, self.network)
            self.parties[outsider.pid] = outsider
        elif self._role(AdversaryRole.TAMPERER):
            self.network.add_interceptor(self._tamper)
        elif self._role(AdversaryRole.IMPERSONATOR):
            if self._impersonation_victim() == self._adversary_voter().index:
                raise ScenarioError("impersonator needs a victim other than itself")

    def _impersonation_victim(self) -> int:
        if self.spec.victim is not None:
            return self.spec.victim
        return self.spec.voter % self.n + 1

    def _tamper(self, frame: Frame) -> None:
        victim = voter_id(self.spec.victim or self.spec.voter)
        if (
            frame.sender != victim
            or frame.receiver in self._tampered
            or frame.wire is None
        ):
            return
        try:
            message = decode_message(frame.wire)
        except ValidationError:
            return
        if not isinstance(message, RecordMessage):
            return
        record = message.record
        if not isinstance(record.payload, CommitmentPayload):
            return
        first = record.payload.evidence[0]
        altered = first[:-1] + ("0" if first[-1] != "0" else "1")
        forged = record.model_copy(
            update={
                "payload": CommitmentPayload(
                    evidence=(altered, *record.payload.evidence[1:])
                )
            }
        )
        if frame.tamper(encode_message(RecordMessage(record=forged, seq=message.seq))):
            self._tampered.add(frame.receiver)
            logger.info(f"Tamperer altered {frame.ref}")

    def _inject_commitment_attacks(self) -> None:
        if self._role(AdversaryRole.DUPLICATE_VOTER):
            voter = self._adversary_voter()
            ballot = voter.state.ballot
            if ballot is None:
                raise PhaseViolation(f"{voter.pid}: masked ballot not ready")
            second = (ballot.value + 1) % self.modulus.value
            commitment, opening = self.scheme.commit(
                voter.pid, second, self.adversary_rng
            )
            self._duplicate_opening = opening
            voter.broadcast(
                RecordKind.BALLOT_COMMITMENT,
                CommitmentPayload(evidence=commitment.evidence),
                seq=1,
            )
        elif self._role(AdversaryRole.IMPERSONATOR):
            attacker = self._adversary_voter()
            victim = voter_id(self._impersonation_victim())
            commitment, _ = self.scheme.commit(
                victim,
                int(self.adversary_rng.integers(0, self.modulus.value)),
                self.adversary_rng,
            )
            attacker.broadcast(
                RecordKind.BALLOT_COMMITMENT,
                CommitmentPayload(evidence=commitment.evidence),
                seq=1,
                claimed_voter=victim,
            )
        elif self._role(AdversaryRole.OUTSIDER):
            outsider = self.parties[self.spec.outsider_id]
            commitment, _ = self.scheme.commit(outsider.pid, 0, self.adversary_rng)
            record = UpdateRecord(
                kind=RecordKind.BALLOT_COMMITMENT,
                voter=outsider.pid,
                payload=CommitmentPayload(evidence=commitment.evidence),
            )
            for miner in self.miner_ids:
                outsider.transmit(
                    miner, ChannelKind.CLASSICAL_AUTH, RecordMessage(record=record)
                )

    def _early_open(self) -> None:
        if not self._role(AdversaryRole.EARLY_OPENER):
            return
        actor = self.miner_ids[self.spec.miner - 1]
        guesses = []
        for block in self.ledger.read_chain(actor):
            for record in block.records:
                if not isinstance(record.payload, CommitmentPayload):
                    continue
                commitment = Commitment(
                    committer=record.voter, evidence=record.payload.evidence
                )
                guess, events = self.scheme.adversarial_peek(
                    commitment, self.adversary_rng, actor
                )
                guesses.append(guess)
                bits = [event.bit for event in events]
                line = self.trace.record(
                    self.network.now,
                    "peek",
                    sender=actor,
                    detail={"voter": record.voter, "detected_bits": bits},
                )
                self.evidence.setdefault("peek", line)
                if events:
                    self.cheat_events.append(
                        CheatEvent(
                            party=actor,
                            kind="peek",
                            bits=bits,
                            detail=f"{record.voter} trace#{line}",
                        )
                    )
        self.early_tally_guess = sum(guesses) % self.modulus.value
        logger.info(f"Early opener {actor} guessed tally {self.early_tally_guess}")

    def _opening_for(self, voter: Voter) -> Opening | None:
        opening = voter.state.opening
        rebinder = (
            self._adversary_voter() if self._role(AdversaryRole.REBINDER) else None
        )
        if voter is not rebinder:
            return opening
        commitment = voter.state.commitment
        if opening is None or commitment is None:
            raise PhaseViolation(f"{voter.pid}: nothing committed to rebind")
        new_value = self.spec.rebind_value
        if new_value is None:
            new_value = (opening.value + 1) % self.modulus.value
        forged, events = self.scheme.adversarial_rebind(
            commitment, new_value, self.adversary_rng
        )
        bits = [event.bit for event in events]
        line = self.trace.record(
            self.network.now,
            "rebind",
            sender=voter.pid,
            detail={"detected_bits": bits},
        )
        self.evidence["rebind"] = line
        if events:
            self.cheat_events.append(
                CheatEvent(
                    party=voter.pid, kind="rebind", bits=bits, detail=f"trace#{line}"
                )
            )
        return forged

    # ------------------------------------------------------------------
    # phases
    # ------------------------------------------------------------------

    def _run_consensus(
        self, kind: RecordKind
    ) -> list[tuple[Slot, RejectionReason | None, int]]:
        pending = {
            slot
            for miner in self.miners.values()
            for slot in miner.inbox
            if slot.kind is kind
        }
        slots = sorted(pending, key=_slot_order)
        outcomes = []
        for slot in slots:
            versions = {
                mid: miner.inbox.pop(slot, None) for mid, miner in self.miners.items()
            }
            result = self.ledger.submit_update(slot.sender, versions)
            outcomes.append((slot, result.reason, self.ledger.rounds[-1].trace_line))
        return outcomes

    def _ballot_commitment(self) -> None:
        seed = self.config.seed
        for voter in self.voters:
            voter.generate_row(make_rng(seed, Stream.MASK_ROW, voter.index))
        for voter in self.voters:
            voter.send_shares()
        self.network.run_until_quiescent()

        for voter in self.voters:
            voter.commit(self.scheme, make_rng(seed, Stream.COMMITMENT, voter.index))
        self._inject_commitment_attacks()
        self.network.run_until_quiescent()
        self._run_consensus(RecordKind.BALLOT_COMMITMENT)
        self.ledger.flush()

    def _barrier(self) -> _Abort | None:
        node = self.ledger.node()
        missing = [v for v in self.voter_ids if node.commitment_for(v) is None]
        if missing:
            logger.warning(f"Commitments missing at the barrier: {missing}")
            return _Abort(AbortReason.MISSING_COMMITMENT, missing)
        return None

    def _missing_openings(self) -> list[str]:
        reference = self.miners[self.ledger.node().owner]
        opened = {
            slot.sender
            for slot in reference.inbox
            if slot.kind is RecordKind.BALLOT_OPENING
        }
        return [v for v in self.voter_ids if v not in opened]

    def _poll_openings(self) -> None:
        if self._missing_openings():
            self.network.schedule(1, self._poll_openings)

    def _tally_phase(self) -> _Abort | None:
        withholder = (
            self._adversary_voter()
            if self._role(AdversaryRole.WITHHOLD_OPENING)
            else None
        )
        for voter in self.voters:
            if voter is withholder:
                logger.info(f"{voter.pid} withholds its opening")
                voter.finish()
                continue
            voter.open(self._opening_for(voter))
        if self._role(AdversaryRole.DUPLICATE_VOTER) and self._duplicate_opening:
            opening = self._duplicate_opening
            payload = OpeningPayload(
                value=opening.value, decommit_token=opening.decommit_token
            )
            self._adversary_voter().broadcast(RecordKind.BALLOT_OPENING, payload, seq=1)

        self.network.schedule(1, self._poll_openings)
        try:
            self.network.run_until_quiescent(
                diagnose=lambda: "openings missing from "
                + ", ".join(self._missing_openings())
            )
        except SimulationTimeout as exc:
            logger.warning(str(exc))

        outcomes = self._run_consensus(RecordKind.BALLOT_OPENING)
        self.ledger.flush()

        cheaters = []
        for slot, reason, line in outcomes:
            if reason is RejectionReason.CHEAT_DETECTED:
                cheaters.append(slot.sender)
                self.cheat_events.append(
                    CheatEvent(
                        party=slot.sender,
                        kind="opening_rejected",
                        detail=f"trace#{line}",
                    )
                )
        if cheaters:
            return _Abort(AbortReason.CHEAT_DETECTED, cheaters)
        node = self.ledger.node()
        missing = [v for v in self.voter_ids if node.opening_for(v) is None]
        if missing:
            return _Abort(AbortReason.WITHHELD_OPENING, missing)
        return None

    def run(self) -> ElectionRun:
        self._ballot_commitment()
        abort = self._barrier()
        if abort is None:
            self._early_open()
            abort = self._tally_phase()
        for voter in self.voters:
            voter.finish()
        return self._finish(abort)

    def _finish(self, abort: _Abort | None) -> ElectionRun:
        chain = self.ledger.read_chain()
        now = self.network.now
        result: int | None = None
        if abort is not None:
            self.evidence["abort"] = self.trace.record(
                now,
                "abort",
                detail={"reason": abort.reason.value, "culprits": abort.culprits},
            )
            logger.warning(
                f"Election aborted ({abort.reason.value}): {', '.join(abort.culprits)}"
            )
        else:
            result = self_tally(chain, self.n)
            self.evidence["tally"] = self.trace.record(
                now, "tally", detail={"tally": result}
            )
            logger.info(f"Election completed: tally {result} of {self.n}")

        if self.network.failure_lines:
            self.evidence["delivery_failure"] = self.network.failure_lines[0]

        warnings = list(self.ledger.warnings)
        if not self.scheme.binding_guaranteed:
            warnings.append("binding not guaranteed (cheat_sensitive with p_detect=0)")

        report = ElectionReport(
            seed=self.config.seed,
            n_voters=self.n,
            m_miners=self.config.m_miners,
            commitment_mode=self.config.commitment_mode,
            p_detect=self.config.p_detect,
            adversary_role=self.adversary.role if self.adversary else None,
            tally=result,
            aborted=abort is not None,
            abort_reason=abort.reason if abort else None,
            culprits=abort.culprits if abort else [],
            inclusion=[verify_inclusion(v, chain) for v in self.voter_ids],
            cheat_events=self.cheat_events,
            rounds=self.ledger.rounds,
            warnings=warnings,
            early_tally_guess=self.early_tally_guess,
            delivery_failures=self.network.delivery_failures,
            chain_head=chain[-1].digest(),
            trace_head=self.trace.head,
        )
        return ElectionRun(
            report=report,
            trace=self.trace.to_bytes(),
            chain=chain,
            observations=list(self.network.observations),
            evidence=dict(self.evidence),
            votes=list(self.votes),
        )


def run_election(config: ScenarioConfig) -> ElectionRun:
    """
    Execute one election end to end.

    Args:
        config: Scenario

    Returns:
        ElectionRun; the report is aborted when an opening is withheld or
        rejected as a cheat, or a commitment is missing at the barrier
    """
    token = run_id_context.set(f"seed-{config.seed}")
    try:
        logger.info(
            f"Election n={config.n_voters} m={config.m_miners} "
            f"mode={config.commitment_mode.value}"
        )
        return Election(config).run()
    finally:
        run_id_context.reset(token)


def self_tally(chain: Sequence[LedgerBlock], n_voters: int | None = None) -> int:
    """
    Recompute the tally from public chain data only.

    Args:
        chain: Chain snapshot
        n_voters: Expected election size (defaults to the commitment count)

    Returns:
        int: Agree-count

    Raises:
        IncompleteChain: If a commitment lacks an opening, or fewer than
            n_voters commitments are on the chain
    """
    committed: list[str] = []
    openings: dict[str, int] = {}
    for block in chain:
        for record in block.records:
            if record.kind is RecordKind.BALLOT_COMMITMENT:
                committed.append(record.voter)
            elif isinstance(record.payload, OpeningPayload):
                openings[record.voter] = record.payload.value
    n = n_voters if n_voters is not None else len(committed)
    if n < 1 or len(committed) != n:
        raise IncompleteChain(f"{len(committed)} commitment(s) on chain, expected {n}")
    missing = [voter for voter in committed if voter not in openings]
    if missing:
        raise IncompleteChain(f"no opening on chain for {', '.join(missing)}")
    ballots = []
    for voter in committed:
        index = voter_index(voter)
        if index is None:
            raise IncompleteChain(f"{voter} is not a voter id")
        ballots.append(MaskedBallot(voter=index, value=openings[voter]))
    return tally(ballots, Modulus(n))
