"""Whole-election runs across roster sizes and scenario files."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qvote.models.config import ScenarioConfig
from qvote.services.protocol import run_election, self_tally
from qvote.services.trace import verify_trace


def _check(config: ScenarioConfig) -> None:
    run = run_election(config)
    votes = config.resolved_votes()
    assert not run.report.aborted
    assert run.report.tally == sum(votes)
    assert self_tally(run.chain, config.n_voters) == sum(votes)
    verification = verify_trace(run.trace)
    assert verification.ok, verification
    assert verification.tally == sum(votes)


@pytest.mark.parametrize("n", range(1, 7))
def test_honest_elections_tally_correctly(n):
    _check(ScenarioConfig(n_voters=n, votes="random", m_miners=3, seed=100 + n))


@settings(max_examples=15, deadline=None)
@given(
    votes=st.lists(st.integers(0, 1), min_size=1, max_size=6),
    m=st.integers(1, 4),
    seed=st.integers(0, 2**16),
)
def test_any_vote_vector_is_tallied(votes, m, seed):
    _check(ScenarioConfig(n_voters=len(votes), votes=votes, m_miners=m, seed=seed))


@pytest.mark.slow
@pytest.mark.parametrize("n", [10, 17, 25])
def test_large_elections_tally_correctly(n):
    _check(
        ScenarioConfig(
            n_voters=n,
            votes="random",
            m_miners=5,
            commitment_mode="cheat_sensitive",
            p_detect=0.5,
            seed=n,
        )
    )


@pytest.mark.parametrize(
    "name",
    ["honest3.json", "dishonest_miner4.json", "miners_are_voters.json"],
)
def test_scenario_files_complete(scenario_dir, name):
    _check(ScenarioConfig.model_validate_json((scenario_dir / name).read_text()))


@pytest.mark.slow
def test_random25_scenario_completes(scenario_dir):
    _check(
        ScenarioConfig.model_validate_json(
            (scenario_dir / "random25.json").read_text()
        )
    )


def test_honest3_scenario_tally_is_two(scenario_dir):
    data = json.loads((scenario_dir / "honest3.json").read_text())
    assert run_election(ScenarioConfig.model_validate(data)).report.tally == 2


def test_identical_scenarios_give_identical_bytes(honest3):
    first, second = run_election(honest3), run_election(honest3)
    assert first.trace == second.trace
    assert first.report == second.report
    assert first.report.chain_head == second.report.chain_head
