"""Acceptance-scale batteries: correctness, security properties, determinism."""

from pathlib import Path

import numpy as np
import pytest
from scipy.stats import chisquare

from qvote.models.config import (
    AdversaryRole,
    AdversarySpec,
    CommitmentMode,
    CommitmentParams,
    ScenarioConfig,
    voter_id,
)
from qvote.models.ledger import RecordKind, RejectionReason
from qvote.models.report import AbortReason
from qvote.services.commitment import OpenResult, create_commitment_scheme
from qvote.services.ledger import verify_inclusion
from qvote.services.masking import (
    Modulus,
    column_of,
    gen_mask_matrix,
    mask_ballot,
    tally,
)
from qvote.services.protocol import run_election
from qvote.services.security_suite import (
    early_opener_accuracy,
    rebind_detection_rate,
    run_attack,
)
from qvote.services.trace import verify_trace

pytestmark = pytest.mark.slow

TRIALS = 10_000
SCENARIO_FILES = sorted(
    (Path(__file__).resolve().parents[2] / "scenarios").glob("*.json")
)


def _scheme(n: int, mode=CommitmentMode.IDEAL, p_detect: float = 1.0):
    params = CommitmentParams.for_voters(n, mode, p_detect)
    return create_commitment_scheme(params, Modulus(n))


def _randomized(rng: np.random.Generator, seed: int) -> ScenarioConfig:
    return ScenarioConfig(
        n_voters=int(rng.integers(2, 7)),
        votes="random",
        m_miners=int(rng.integers(1, 6)),
        seed=seed,
    )


# ============================================================================
# Tally correctness
# ============================================================================


@pytest.mark.parametrize("n", range(1, 26))
def test_two_hundred_elections_per_size_tally_exactly(n):
    for seed in range(200):
        config = ScenarioConfig(n_voters=n, votes="random", m_miners=3, seed=seed)
        run = run_election(config)
        assert run.report.tally == sum(config.resolved_votes()), (n, seed)
        for voter in config.voter_ids:
            status = verify_inclusion(voter, run.chain)
            assert status.committed and status.opened, (n, seed, voter)


def test_congruence_chain_on_random_instances():
    rng = np.random.default_rng(31)
    for _ in range(TRIALS):
        n = int(rng.integers(1, 26))
        modulus = Modulus(n)
        votes = [int(v) for v in rng.integers(0, 2, size=n)]
        rows = gen_mask_matrix(n, rng)
        ballots = [
            mask_ballot(vote, column_of(rows, i), modulus)
            for i, vote in enumerate(votes, start=1)
        ]
        masked_sum = sum(b.value for b in ballots) % modulus.value
        assert masked_sum == sum(votes) % modulus.value
        assert tally(ballots, modulus) == sum(votes)


# ============================================================================
# Commitment statistics
# ============================================================================


def _leading_digits(scheme, value: int, rng: np.random.Generator) -> np.ndarray:
    commitments = [scheme.commit("V1", value, rng)[0] for _ in range(TRIALS)]
    return np.array([[int(e[0], 16) for e in c.evidence] for c in commitments])


def test_ideal_evidence_does_not_depend_on_the_value():
    scheme = _scheme(3)
    rng = np.random.default_rng(8)
    zeros = _leading_digits(scheme, 0, rng)
    threes = _leading_digits(scheme, 3, rng)
    for bit in range(zeros.shape[1]):
        p = np.bincount(zeros[:, bit], minlength=16) / TRIALS
        q = np.bincount(threes[:, bit], minlength=16) / TRIALS
        assert 0.5 * np.abs(p - q).sum() < 0.05


def test_ideal_peek_guesses_are_uniform():
    scheme = _scheme(3)
    rng = np.random.default_rng(12)
    commitment, opening = scheme.commit("V1", 2, rng)
    guesses = [scheme.adversarial_peek(commitment, rng, "M1")[0] for _ in range(TRIALS)]
    assert chisquare(np.bincount(guesses, minlength=4)).pvalue > 0.01
    assert scheme.open(commitment, opening) == OpenResult(2)


def test_three_bit_peek_is_detected_seven_times_in_eight():
    scheme = _scheme(4, CommitmentMode.CHEAT_SENSITIVE, 0.5)
    assert scheme.params.bit_width == 3
    rng = np.random.default_rng(13)
    commitment, opening = scheme.commit("V1", 2, rng)
    detected = sum(
        bool(scheme.adversarial_peek(commitment, rng, "M1")[1]) for _ in range(TRIALS)
    )
    assert abs(detected / TRIALS - 0.875) <= 0.02
    assert scheme.open(commitment, opening) == OpenResult(2)


@pytest.mark.parametrize("flipped", [1, 2, 3])
def test_rebind_detection_at_quarter_probability(flipped):
    params = CommitmentParams(
        mode=CommitmentMode.CHEAT_SENSITIVE, p_detect=0.25, bit_width=3
    )
    estimate = rebind_detection_rate(params, flipped, trials=TRIALS, seed=flipped)
    assert estimate.expected == pytest.approx(1 - 0.75**flipped)
    assert estimate.deviation <= 0.02


def test_early_opener_accuracy_matches_blind_guessing():
    estimate = early_opener_accuracy(3, CommitmentParams.for_voters(3), trials=TRIALS)
    assert estimate.expected == pytest.approx(0.25)
    assert estimate.deviation <= 0.02


# ============================================================================
# Attack batteries
# ============================================================================


def test_ideal_rebinder_is_caught_in_every_run():
    for seed in range(100):
        config = ScenarioConfig(n_voters=3, votes="random", m_miners=3, seed=seed)
        result = run_attack(config, AdversarySpec(role=AdversaryRole.REBINDER))
        report = result.report
        assert report.abort_reason is AbortReason.CHEAT_DETECTED, seed
        assert report.culprits == ["V1"]
        assert all(v.passed for v in result.verdicts)


def test_duplicate_voter_has_one_admitted_ballot_in_every_run():
    rng = np.random.default_rng(55)
    for seed in range(100):
        config = _randomized(rng, seed)
        voter = int(rng.integers(1, config.n_voters + 1))
        adversary = AdversarySpec(role=AdversaryRole.DUPLICATE_VOTER, voter=voter)
        result = run_attack(config, adversary)
        admitted = [
            r
            for r in result.report.rounds
            if r.sender == voter_id(voter)
            and r.admitted
            and r.kind == RecordKind.BALLOT_COMMITMENT.value
        ]
        assert len(admitted) == 1, seed
        assert all(v.passed for v in result.verdicts), seed


def test_outsiders_are_never_eligible():
    rng = np.random.default_rng(77)
    for seed in range(100):
        config = _randomized(rng, seed)
        outsider = f"X{seed}"
        adversary = AdversarySpec(role=AdversaryRole.OUTSIDER, outsider_id=outsider)
        result = run_attack(config, adversary)
        rounds = [r for r in result.report.rounds if r.sender == outsider]
        assert rounds, seed
        assert all(
            not r.admitted and r.reason is RejectionReason.NOT_ELIGIBLE for r in rounds
        ), seed
        assert result.report.tally == sum(config.resolved_votes())


# ============================================================================
# Verifiability and determinism
# ============================================================================


def test_single_bit_flips_are_detected():
    trace = run_election(
        ScenarioConfig(n_voters=4, votes="random", m_miners=3, seed=9)
    ).trace
    rng = np.random.default_rng(404)
    positions = rng.choice(len(trace), size=100, replace=False)
    for position in positions:
        mutated = bytearray(trace)
        mutated[position] ^= 1 << int(rng.integers(0, 8))
        assert not verify_trace(bytes(mutated)).ok, position


@pytest.mark.parametrize("path", SCENARIO_FILES, ids=lambda path: path.stem)
def test_every_scenario_file_is_deterministic(path):
    config = ScenarioConfig.model_validate_json(path.read_text())
    first, second = run_election(config), run_election(config)
    assert first.trace == second.trace
    assert first.report.model_dump_json() == second.report.model_dump_json()
    assert verify_trace(first.trace).ok
