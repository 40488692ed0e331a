"""Tests for the anonymity audits."""

import numpy as np
import pytest

from qvote.domain.exceptions import RefuseExhaustiveAudit
from qvote.services import anonymity
from qvote.services.anonymity import anonymity_audit, sampled_anonymity_audit


def test_two_voters_without_coalition_pass_exhaustively():
    verdict = anonymity_audit(2)
    assert verdict.passed
    assert verdict.status == "pass"
    assert verdict.mode == "exhaustive"
    assert verdict.matrices_enumerated == 3**2


def test_three_voters_without_coalition_pass():
    verdict = anonymity_audit(3)
    assert verdict.passed
    assert verdict.matrices_enumerated == 4**6


def test_three_voters_with_one_colluder_pass():
    verdict = anonymity_audit(3, colluders=[1])
    assert verdict.passed
    assert verdict.colluders == [1]


def test_coalition_of_all_but_one_is_tally_determined():
    verdict = anonymity_audit(3, colluders=[1, 2])
    assert verdict.passed
    assert verdict.status == "tally-determined"
    assert anonymity_audit(2, colluders=[2]).status == "tally-determined"


def test_factorized_audit_matches_literal_enumeration():
    literal = anonymity_audit(3, colluders=[2], literal_limit=10**6)
    factorized = anonymity_audit(3, colluders=[2], literal_limit=1)
    assert literal.mode == "exhaustive"
    assert factorized.mode == "factorized"
    assert literal.passed and factorized.passed


@pytest.mark.slow
def test_four_voters_pass_factorized():
    verdict = anonymity_audit(4, colluders=[1])
    assert verdict.passed
    assert verdict.mode == "factorized"


def test_more_than_four_voters_is_refused():
    with pytest.raises(RefuseExhaustiveAudit):
        anonymity_audit(5)


def test_colluders_out_of_range_are_rejected():
    with pytest.raises(ValueError):
        anonymity_audit(3, colluders=[4])


def test_audit_detects_a_leaking_view(monkeypatch):
    """Coding views from plain votes (no masking) must fail the audit."""

    def leaky(matrices, votes, colluders, m):
        return np.full(len(matrices), int("".join(map(str, votes)), 2))

    monkeypatch.setattr(anonymity, "_view_codes", leaky)
    verdict = anonymity_audit(3, literal_limit=10**6)
    assert not verdict.passed
    assert verdict.status == "fail"
    first, second = verdict.counterexample
    assert sum(first) == sum(second) and first != second


def test_sampled_audit_passes_for_large_elections():
    verdict = sampled_anonymity_audit(12, colluders=[1, 2], samples=1500, seed=4)
    assert verdict.mode == "sampled"
    assert verdict.passed


def test_sampled_audit_tally_determined_coalition():
    verdict = sampled_anonymity_audit(6, colluders=[1, 2, 3, 4, 5])
    assert verdict.status == "tally-determined"
