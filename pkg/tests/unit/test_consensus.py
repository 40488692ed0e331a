"""Tests for the agreement round and admission rule."""

import pytest
from pydantic import ValidationError

from qvote.domain.exceptions import NoMiners
from qvote.models.ledger import ConsensusDecision, RejectionReason, admission_threshold
from qvote.services.consensus import MinerOpinion, hsba_round, is_admitted


def _miners(m: int) -> list[str]:
    return [f"M{j}" for j in range(1, m + 1)]


def _round(m: int, admissible: int, honest: list[str] | None = None):
    miners = _miners(m)
    versions = dict.fromkeys(miners, "d1")
    opinions = [
        MinerOpinion(miner, "d1", True)
        if j < admissible
        else MinerOpinion(miner, "d1", False, RejectionReason.AUTH_FAILURE)
        for j, miner in enumerate(miners)
    ]
    return hsba_round(versions, opinions, honest or miners)


@pytest.mark.parametrize("m", range(1, 10))
def test_admission_threshold_is_half_rounded_up(m):
    threshold = admission_threshold(m)
    assert threshold == -(-m // 2)
    for k in range(m + 1):
        decision = _round(m, k)
        assert decision.admitted == (k >= threshold)
        assert decision.votes_for == k
        assert decision.votes_total == m
        assert is_admitted(k, m) == decision.admitted


def test_three_miners_need_two_votes():
    assert not _round(3, 1).admitted
    assert _round(3, 2).admitted


def test_four_miners_split_two_two_is_admitted():
    decision = _round(4, 2)
    assert decision.admitted
    assert decision.agreed_update == "d1"
    assert decision.reason is None


def test_single_miner_decides_alone():
    assert _round(1, 1).admitted
    rejected = _round(1, 0)
    assert not rejected.admitted
    assert rejected.reason is RejectionReason.AUTH_FAILURE


def test_rejection_reports_dominant_honest_reason():
    decision = _round(5, 1)
    assert not decision.admitted
    assert decision.reason is RejectionReason.AUTH_FAILURE


def test_tied_versions_reach_no_agreement():
    versions = {"M1": "a", "M2": "b"}
    opinions = [MinerOpinion("M1", "a", True), MinerOpinion("M2", "b", True)]
    decision = hsba_round(versions, opinions, {"M1", "M2"})
    assert decision.agreed_update is None
    assert not decision.admitted
    assert decision.reason is RejectionReason.NO_CONSENSUS


def test_majority_version_wins():
    versions = {"M1": "a", "M2": "a", "M3": "b"}
    opinions = [
        MinerOpinion("M1", "a", True),
        MinerOpinion("M2", "a", True),
        MinerOpinion("M3", "b", True),
    ]
    decision = hsba_round(versions, opinions, set(versions))
    assert decision.agreed_update == "a"
    assert decision.votes_for == 2
    assert decision.admitted


def test_nothing_delivered_is_a_delivery_failure():
    versions = {"M1": "", "M2": ""}
    opinions = [
        MinerOpinion("M1", "", False, RejectionReason.DELIVERY_FAILURE),
        MinerOpinion("M2", "", False, RejectionReason.DELIVERY_FAILURE),
    ]
    decision = hsba_round(versions, opinions, {"M1", "M2"})
    assert decision.reason is RejectionReason.DELIVERY_FAILURE


def test_dishonest_minority_cannot_block_admission():
    """One lying miner out of three still leaves two admissible votes."""
    miners = _miners(3)
    versions = dict.fromkeys(miners, "d1")
    honest = [MinerOpinion(m, "d1", True) for m in miners[:2]]
    liar = MinerOpinion("M3", "d1", True).inverted()
    decision = hsba_round(versions, [*honest, liar], set(miners[:2]))
    assert decision.admitted
    assert decision.votes_for == 2


def test_inverted_opinion_flips_verdict():
    rejected = MinerOpinion("M1", "d", False, RejectionReason.DUPLICATE_BALLOT)
    assert rejected.inverted().admissible
    assert not MinerOpinion("M1", "d", True).inverted().admissible


def test_round_without_miners_raises():
    with pytest.raises(NoMiners):
        hsba_round({}, [], set())


def test_round_without_honest_miners_raises():
    with pytest.raises(NoMiners):
        hsba_round({"M1": "d"}, [MinerOpinion("M1", "d", True)], set())


def test_decision_model_rejects_admission_below_threshold():
    with pytest.raises(ValidationError):
        ConsensusDecision(
            round=1, agreed_update="d", admitted=True, votes_for=1, votes_total=3
        )
