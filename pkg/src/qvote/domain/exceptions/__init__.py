"""
Domain exceptions - protocol rule violations and simulator errors.

Rejections decided by miners are not exceptions; they are reported as
SubmissionResult values. Exceptions signal misuse of an operation or a
simulation that cannot continue.
"""


class QVoteError(Exception):
    """Base class for all simulator errors."""


# ============================================================================
# Masking
# ============================================================================


class InvalidVoterCount(QVoteError, ValueError):
    """The voter count n must be at least 1."""


class InvalidVote(QVoteError, ValueError):
    """A vote must be 0 (disagree) or 1 (agree)."""


class MalformedColumn(QVoteError, ValueError):
    """A mask column has the wrong share count or a share out of range."""


class IncompleteBallotSet(QVoteError, ValueError):
    """The ballots to tally do not cover each voter index exactly once."""


# ============================================================================
# Commitment
# ============================================================================


class ValueOutOfRange(QVoteError, ValueError):
    """The committed value is not a residue of the modulus."""


class AlreadyOpened(QVoteError):
    """The commitment has already left the Committed phase."""


# ============================================================================
# Consensus / ledger
# ============================================================================


class NoMiners(QVoteError, ValueError):
    """A consensus round needs at least one miner and one honest miner."""


class ChainIntegrityError(QVoteError):
    """A block does not extend the chain (height or prev digest mismatch)."""


class IncompleteChain(QVoteError):
    """The chain does not carry an admitted opening for every commitment."""


# ============================================================================
# Network simulation
# ============================================================================


class NoChannel(QVoteError):
    """No channel of the requested kind exists between the two parties."""


class SimulationTimeout(QVoteError):
    """The event loop ran past its tick limit (usually a deadlock)."""

    def __init__(self, tick_limit: int, diagnostic: str):
        self.tick_limit = tick_limit
        self.diagnostic = diagnostic
        super().__init__(f"tick limit {tick_limit} exceeded: {diagnostic}")


# ============================================================================
# Protocol / analysis
# ============================================================================


class PhaseViolation(QVoteError):
    """A voter state machine was driven out of its phase order."""


class RefuseExhaustiveAudit(QVoteError, ValueError):
    """The voter count is too large for exhaustive enumeration."""


class ScenarioError(QVoteError, ValueError):
    """The scenario configuration cannot be executed."""


__all__ = [
    "AlreadyOpened",
    "ChainIntegrityError",
    "IncompleteBallotSet",
    "IncompleteChain",
    "InvalidVote",
    "InvalidVoterCount",
    "MalformedColumn",
    "NoChannel",
    "NoMiners",
    "PhaseViolation",
    "QVoteError",
    "RefuseExhaustiveAudit",
    "ScenarioError",
    "SimulationTimeout",
    "ValueOutOfRange",
]
