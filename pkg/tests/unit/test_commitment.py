"""Tests for the commitment backends."""

import numpy as np
import pytest

from qvote.domain.exceptions import AlreadyOpened, ValueOutOfRange
from qvote.models.config import CommitmentMode, CommitmentParams
from qvote.services.commitment import (
    CheatDetected,
    CheatSensitiveCommitmentScheme,
    CommitPhase,
    IdealCommitmentScheme,
    Opening,
    OpenResult,
    create_commitment_scheme,
    to_bits,
)
from qvote.services.masking import Modulus


def _scheme(mode=CommitmentMode.IDEAL, p_detect=1.0, n=3):
    params = CommitmentParams.for_voters(n, mode, p_detect)
    return create_commitment_scheme(params, Modulus(n))


def test_factory_selects_backend():
    assert isinstance(_scheme(), IdealCommitmentScheme)
    assert isinstance(
        _scheme(CommitmentMode.CHEAT_SENSITIVE, 0.5), CheatSensitiveCommitmentScheme
    )


def test_bit_width_covers_residues():
    assert CommitmentParams.for_voters(1).bit_width == 1
    assert CommitmentParams.for_voters(3).bit_width == 2
    assert CommitmentParams.for_voters(4).bit_width == 3


def test_too_narrow_bit_width_is_rejected():
    with pytest.raises(ValueError):
        IdealCommitmentScheme(CommitmentParams(bit_width=1), Modulus(3))


def test_to_bits_is_little_endian():
    assert to_bits(6, 3) == [0, 1, 1]


@pytest.mark.parametrize("value", [0, 1, 2, 3])
def test_commit_then_open_returns_value(rng, value):
    scheme = _scheme()
    commitment, opening = scheme.commit("V1", value, rng)
    assert len(commitment.evidence) == 2
    assert scheme.open(commitment, opening) == OpenResult(value)
    assert commitment.phase is CommitPhase.OPENED


def test_commit_rejects_out_of_range_value(rng):
    with pytest.raises(ValueOutOfRange):
        _scheme().commit("V1", 4, rng)


def test_second_open_raises(rng):
    scheme = _scheme()
    commitment, opening = scheme.commit("V1", 2, rng)
    scheme.open(commitment, opening)
    with pytest.raises(AlreadyOpened):
        scheme.open(commitment, opening)


def test_verify_opening_does_not_change_phase(rng):
    scheme = _scheme()
    commitment, opening = scheme.commit("V1", 2, rng)
    scheme.verify_opening(commitment, opening)
    assert commitment.phase is CommitPhase.COMMITTED


def test_altered_value_is_detected(rng):
    scheme = _scheme()
    commitment, opening = scheme.commit("V1", 1, rng)
    forged = Opening(value=2, decommit_token=opening.decommit_token)
    result = scheme.verify_opening(commitment, forged)
    assert isinstance(result, CheatDetected)
    assert result.detected_bits == (0, 1)


def test_rejected_opening_stays_committed(rng):
    scheme = _scheme()
    commitment, opening = scheme.commit("V1", 1, rng)
    forged = Opening(value=2, decommit_token=opening.decommit_token)
    assert isinstance(scheme.open(commitment, forged), CheatDetected)
    assert commitment.phase is CommitPhase.COMMITTED
    assert scheme.open(commitment, opening) == OpenResult(1)
    assert commitment.phase is CommitPhase.OPENED


def test_evidence_is_bound_to_committer(rng):
    scheme = _scheme()
    commitment, opening = scheme.commit("V1", 3, rng)
    commitment.committer = "V2"
    assert isinstance(scheme.verify_opening(commitment, opening), CheatDetected)


def test_ideal_rebind_is_always_caught(rng):
    scheme = _scheme()
    commitment, _ = scheme.commit("V1", 1, rng)
    forged, events = scheme.adversarial_rebind(commitment, 2, rng)
    assert [e.bit for e in events] == [0, 1]
    assert isinstance(scheme.verify_opening(commitment, forged), CheatDetected)


def test_rebind_to_same_value_flips_nothing(rng):
    scheme = _scheme(CommitmentMode.CHEAT_SENSITIVE, 1.0)
    commitment, _ = scheme.commit("V1", 3, rng)
    forged, events = scheme.adversarial_rebind(commitment, 3, rng)
    assert events == []
    assert scheme.verify_opening(commitment, forged) == OpenResult(3)


def test_undetectable_rebind_verifies_at_p_zero(rng):
    scheme = _scheme(CommitmentMode.CHEAT_SENSITIVE, 0.0)
    assert not scheme.binding_guaranteed
    commitment, _ = scheme.commit("V1", 0, rng)
    forged, events = scheme.adversarial_rebind(commitment, 3, rng)
    assert events == []
    assert scheme.verify_opening(commitment, forged) == OpenResult(3)


def test_partially_detected_rebind_fails_on_detected_bits(mocker, rng):
    scheme = _scheme(CommitmentMode.CHEAT_SENSITIVE, 0.5)
    mocker.patch.object(scheme, "_bit_detected", side_effect=[True, False])
    commitment, _ = scheme.commit("V1", 0, rng)
    forged, events = scheme.adversarial_rebind(commitment, 3, rng)
    assert [e.bit for e in events] == [0]
    result = scheme.verify_opening(commitment, forged)
    assert isinstance(result, CheatDetected)
    assert result.detected_bits == (0,)


def test_ideal_peek_learns_nothing_beyond_uniform():
    """Peeking at an ideal commitment is right about 1/(n+1) of the time."""
    scheme = _scheme(n=3)
    rng = np.random.default_rng(5)
    commitment, _ = scheme.commit("V1", 2, rng)
    guesses = [scheme.adversarial_peek(commitment, rng, "M1")[0] for _ in range(4000)]
    accuracy = np.mean(np.array(guesses) == 2)
    assert abs(accuracy - 0.25) < 0.03


def test_cheat_sensitive_peek_reveals_and_flags(rng):
    scheme = _scheme(CommitmentMode.CHEAT_SENSITIVE, 1.0)
    commitment, _ = scheme.commit("V1", 2, rng)
    value, events = scheme.adversarial_peek(commitment, rng, "M1")
    assert value == 2
    assert {e.kind for e in events} == {"peek"}
    assert len(events) == 2


def test_rebind_detection_frequency_matches_p():
    scheme = _scheme(CommitmentMode.CHEAT_SENSITIVE, 0.3)
    rng = np.random.default_rng(17)
    detected = 0
    trials = 4000
    for _ in range(trials):
        commitment, _ = scheme.commit("V1", 0, rng)
        _, events = scheme.adversarial_rebind(commitment, 1, rng)
        detected += bool(events)
    assert abs(detected / trials - 0.3) < 0.03
