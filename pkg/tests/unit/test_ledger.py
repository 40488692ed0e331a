"""Tests for the replicated ledger and miner-side checks."""

import numpy as np
import pytest

from qvote.domain.exceptions import ChainIntegrityError
from qvote.models.config import CommitmentParams
from qvote.models.ledger import (
    CommitmentPayload,
    LedgerBlock,
    OpeningPayload,
    RecordKind,
    RejectionReason,
    UpdateRecord,
)
from qvote.services.commitment import create_commitment_scheme
from qvote.services.ledger import (
    Ledger,
    LedgerNode,
    chain_to_json_lines,
    genesis_block,
    verify_chain,
    verify_inclusion,
)
from qvote.services.masking import Modulus
from qvote.services.trace import TraceRecorder, verify_trace
from qvote.utils.security import GENESIS_DIGEST, AuthKeyTable

VOTERS = ["V1", "V2", "V3"]
MINERS = ["M1", "M2", "M3"]


class Harness:
    """A three-voter, three-miner ledger with helpers to build tagged updates."""

    def __init__(self, honest=MINERS, batch_blocks=False, seed=7):
        self.rng = np.random.default_rng(seed)
        self.keys = AuthKeyTable.generate([*VOTERS, *MINERS, "X1"], self.rng)
        self.scheme = create_commitment_scheme(
            CommitmentParams.for_voters(3), Modulus(3)
        )
        self.trace = TraceRecorder()
        self.ledger = Ledger(
            MINERS,
            honest,
            keys=self.keys,
            roster=VOTERS,
            scheme=self.scheme,
            n_voters=3,
            trace=self.trace,
            batch_blocks=batch_blocks,
        )
        self.openings = {}

    def tagged(self, record: UpdateRecord, signer: str | None = None):
        signer = signer or record.voter
        return {
            m: record.with_tag(self.keys.sign(signer, m, record.body_bytes()))
            for m in MINERS
        }

    def commitment(self, voter: str, value: int) -> UpdateRecord:
        commitment, opening = self.scheme.commit(voter, value, self.rng)
        self.openings[voter] = opening
        return UpdateRecord(
            kind=RecordKind.BALLOT_COMMITMENT,
            voter=voter,
            payload=CommitmentPayload(evidence=commitment.evidence),
        )

    def opening(self, voter: str, value: int | None = None) -> UpdateRecord:
        opening = self.openings[voter]
        return UpdateRecord(
            kind=RecordKind.BALLOT_OPENING,
            voter=voter,
            payload=OpeningPayload(
                value=opening.value if value is None else value,
                decommit_token=opening.decommit_token,
            ),
        )

    def submit(self, record: UpdateRecord, signer: str | None = None):
        versions = self.tagged(record, signer)
        return self.ledger.submit_update(signer or record.voter, versions)

    def commit_all(self, values=(3, 0, 3)):
        for voter, value in zip(VOTERS, values, strict=True):
            assert self.submit(self.commitment(voter, value)).accepted


def test_genesis_block_starts_every_copy():
    harness = Harness()
    for node in harness.ledger.nodes.values():
        assert node.snapshot() == (genesis_block(),)
    assert genesis_block().prev_digest == GENESIS_DIGEST


def test_admitted_commitment_is_appended_to_every_copy():
    harness = Harness()
    result = harness.submit(harness.commitment("V1", 2))
    assert result.accepted
    assert result.block_height == 1
    assert harness.ledger.copies_agree()
    chain = harness.ledger.read_chain("X1")
    assert chain[1].records[0].auth_tag is None
    assert verify_chain(chain) is None


def test_duplicate_commitment_is_rejected():
    harness = Harness()
    assert harness.submit(harness.commitment("V1", 2)).accepted
    second = harness.submit(harness.commitment("V1", 1))
    assert not second.accepted
    assert second.reason is RejectionReason.DUPLICATE_BALLOT


def test_outsider_update_is_not_eligible():
    harness = Harness()
    record = UpdateRecord(
        kind=RecordKind.BALLOT_COMMITMENT,
        voter="X1",
        payload=CommitmentPayload(evidence=("00",)),
    )
    result = harness.submit(record)
    assert not result.accepted
    assert result.reason is RejectionReason.NOT_ELIGIBLE


def test_update_tagged_by_another_party_fails_auth():
    harness = Harness()
    result = harness.submit(harness.commitment("V1", 2), signer="V2")
    assert not result.accepted
    assert result.reason is RejectionReason.AUTH_FAILURE


def test_opening_before_all_commitments_is_a_phase_violation():
    harness = Harness()
    harness.submit(harness.commitment("V1", 2))
    result = harness.submit(harness.opening("V1"))
    assert result.reason is RejectionReason.PHASE_VIOLATION


def test_late_commitment_from_committed_voter_is_a_duplicate():
    harness = Harness()
    harness.commit_all()
    record = UpdateRecord(
        kind=RecordKind.BALLOT_COMMITMENT,
        voter="V1",
        payload=CommitmentPayload(evidence=("ab", "cd")),
    )
    result = harness.submit(record)
    assert result.reason is RejectionReason.DUPLICATE_BALLOT


def test_valid_openings_are_admitted_and_duplicates_rejected():
    harness = Harness()
    harness.commit_all()
    for voter in VOTERS:
        assert harness.submit(harness.opening(voter)).accepted
    again = harness.submit(harness.opening("V1"))
    assert again.reason is RejectionReason.DUPLICATE_BALLOT
    status = verify_inclusion("V2", harness.ledger.read_chain())
    assert status.committed and status.opened
    assert status.block_heights == [2, 5]


def test_opening_to_another_value_is_a_cheat():
    harness = Harness()
    harness.commit_all()
    result = harness.submit(harness.opening("V1", value=1))
    assert not result.accepted
    assert result.reason is RejectionReason.CHEAT_DETECTED


def test_lost_copies_are_delivery_failures():
    harness = Harness()
    result = harness.ledger.submit_update("V1", dict.fromkeys(MINERS))
    assert result.reason is RejectionReason.DELIVERY_FAILURE


def test_dishonest_miner_cannot_block_or_admit_alone():
    harness = Harness(honest=["M1", "M2"])
    assert harness.submit(harness.commitment("V1", 2)).accepted
    duplicate = harness.submit(harness.commitment("V1", 1))
    assert not duplicate.accepted


def test_too_few_honest_miners_is_warned():
    harness = Harness(honest=["M1"])
    assert harness.ledger.warnings


def test_batching_defers_blocks_until_flush():
    harness = Harness(batch_blocks=True)
    harness.commit_all()
    assert harness.ledger.node().height == 0
    assert harness.ledger.flush() == 1
    block = harness.ledger.read_chain()[1]
    assert len(block.records) == 3
    assert block.decision is not None and block.decision.admitted
    assert harness.ledger.flush() is None


def test_node_rejects_non_extending_block():
    node = LedgerNode("M1")
    with pytest.raises(ChainIntegrityError):
        node.append(LedgerBlock(height=2, prev_digest=node.head_digest))
    with pytest.raises(ChainIntegrityError):
        node.append(LedgerBlock(height=1, prev_digest=GENESIS_DIGEST))


def test_verify_chain_reports_first_broken_height():
    harness = Harness()
    harness.commit_all()
    chain = list(harness.ledger.read_chain())
    chain[2] = chain[2].model_copy(update={"prev_digest": "f" * 64})
    assert verify_chain(chain) == 2


def test_chain_export_is_one_canonical_line_per_block():
    harness = Harness()
    harness.commit_all()
    lines = chain_to_json_lines(harness.ledger.read_chain()).splitlines()
    assert len(lines) == 4
    assert lines[0].startswith(b"{")


def test_ledger_trace_replays():
    harness = Harness()
    harness.commit_all()
    result = verify_trace(harness.trace.to_bytes())
    assert result.ok, result.reason
