"""Tests for masking arithmetic."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from qvote.domain.exceptions import (
    IncompleteBallotSet,
    InvalidVote,
    InvalidVoterCount,
    MalformedColumn,
)
from qvote.services.masking import (
    MaskColumn,
    MaskedBallot,
    MaskRow,
    Modulus,
    Vote,
    column_of,
    gen_mask_matrix,
    gen_mask_row,
    iter_mask_rows,
    mask_ballot,
    plaintext_tally,
    tally,
)


def test_modulus_is_n_plus_one():
    assert Modulus(3).value == 4
    assert Modulus(1).value == 2
    assert Modulus(3).contains(3)
    assert not Modulus(3).contains(4)


def test_modulus_rejects_zero_voters():
    with pytest.raises(InvalidVoterCount):
        Modulus(0)


def test_vote_parse_rejects_non_binary():
    assert Vote.parse(1) is Vote.AGREE
    with pytest.raises(InvalidVote):
        Vote.parse(2)
    with pytest.raises(InvalidVote):
        Vote.parse(True)


def test_single_voter_row_is_zero(rng):
    """n = 1: the only zero-sum row is (0), so the ballot equals the vote."""
    row = gen_mask_row(1, rng)
    assert row.entries == (0,)
    ballot = mask_ballot(1, column_of([row], 1), Modulus(1))
    assert ballot.value == 1
    assert tally([ballot], Modulus(1)) == 1


def test_worked_example_three_voters():
    """Rows fixed by hand: columns sum to the masked ballots, ballots to 2."""
    rows = [
        MaskRow(owner=1, entries=(1, 2, 1)),
        MaskRow(owner=2, entries=(3, 0, 1)),
        MaskRow(owner=3, entries=(2, 2, 0)),
    ]
    modulus = Modulus(3)
    votes = [1, 0, 1]
    ballots = [
        mask_ballot(v, column_of(rows, i), modulus)
        for i, v in enumerate(votes, start=1)
    ]
    assert [b.value for b in ballots] == [3, 0, 3]
    assert tally(ballots, modulus) == 2


def test_gen_mask_row_is_reproducible():
    first = gen_mask_row(5, np.random.default_rng(0), owner=2)
    second = gen_mask_row(5, np.random.default_rng(0), owner=2)
    assert first == second
    assert first.owner == 2
    assert len(first.entries) == 5


def test_mask_ballot_rejects_wrong_share_count():
    with pytest.raises(MalformedColumn):
        mask_ballot(1, MaskColumn(receiver=1, shares=(0, 1)), Modulus(3))


def test_mask_ballot_rejects_out_of_range_share():
    with pytest.raises(MalformedColumn):
        mask_ballot(1, MaskColumn(receiver=1, shares=(0, 1, 4)), Modulus(3))


def test_tally_requires_every_voter_once():
    modulus = Modulus(3)
    ballots = [MaskedBallot(1, 0), MaskedBallot(2, 1)]
    with pytest.raises(IncompleteBallotSet):
        tally(ballots, modulus)
    with pytest.raises(IncompleteBallotSet):
        tally([*ballots, MaskedBallot(2, 1)], modulus)


def test_iter_mask_rows_enumerates_zero_sum_rows():
    rows = list(iter_mask_rows(3))
    assert len(rows) == 4**2
    assert all(sum(row) % 4 == 0 for row in rows)
    assert len(set(rows)) == len(rows)


@settings(max_examples=200, deadline=None)
@given(
    votes=st.lists(st.integers(0, 1), min_size=1, max_size=30),
    seed=st.integers(0, 2**32 - 1),
)
def test_tally_equals_plaintext_count(votes, seed):
    n = len(votes)
    modulus = Modulus(n)
    rows = gen_mask_matrix(n, np.random.default_rng(seed))
    assert all(sum(row.entries) % modulus.value == 0 for row in rows)
    ballots = [
        mask_ballot(v, column_of(rows, i), modulus)
        for i, v in enumerate(votes, start=1)
    ]
    assert all(modulus.contains(b.value) for b in ballots)
    assert tally(ballots, modulus) == plaintext_tally(votes)


def test_row_entries_are_uniform():
    """Each free coordinate of a row is uniform on Z_{n+1} (chi-square, n = 4)."""
    n = 4
    rng = np.random.default_rng(99)
    rows = np.array([gen_mask_row(n, rng).entries for _ in range(10_000)])
    for coordinate in range(n - 1):
        counts = np.bincount(rows[:, coordinate], minlength=n + 1)
        assert chisquare(counts).pvalue > 0.01
