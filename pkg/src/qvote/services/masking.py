"""
Masking arithmetic for self-tallying ballots.

Every voter draws a mask row of residues mod n+1 whose entries sum to zero,
hands entry j to voter j, and publishes its vote plus the column of shares it
received. Since every row sums to zero, the masked ballots sum to the plain
agree-count, which never exceeds n and is therefore decoded exactly.
"""

import itertools
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from qvote.domain.exceptions import (
    IncompleteBallotSet,
    InvalidVote,
    InvalidVoterCount,
    MalformedColumn,
)


class Vote(IntEnum):
    """Binary ballot choice."""

    DISAGREE = 0
    AGREE = 1

    @classmethod
    def parse(cls, value: int) -> "Vote":
        """
        Coerce an integer into a vote.

        Raises:
            InvalidVote: If value is not 0 or 1
        """
        if isinstance(value, bool) or value not in (0, 1):
            raise InvalidVote(f"vote must be 0 or 1, got {value!r}")
        return cls(value)


@dataclass(frozen=True)
class Modulus:
    """Residue ring Z_{n+1} for an election with n voters."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidVoterCount(f"voter count must be >= 1, got {self.n}")

    @property
    def value(self) -> int:
        return self.n + 1

    def contains(self, residue: int) -> bool:
        return 0 <= residue <= self.n


@dataclass(frozen=True)
class MaskRow:
    """Row generated by one voter; entry j (1-based) goes to voter j."""

    owner: int
    entries: tuple[int, ...]

    def share_for(self, receiver: int) -> int:
        return self.entries[receiver - 1]


@dataclass(frozen=True)
class MaskColumn:
    """Shares received by one voter, ordered by sender index."""

    receiver: int
    shares: tuple[int, ...]


@dataclass(frozen=True)
class MaskedBallot:
    voter: int
    value: int


def gen_mask_row(n: int, rng: np.random.Generator, owner: int = 1) -> MaskRow:
    """
    Draw a zero-sum mask row.

    The first n-1 entries are independent and uniform on Z_{n+1}; the last one
    is forced so that the row sums to 0.

    Args:
        n: Voter count
        rng: Seeded generator (one integers() call per row)
        owner: Voter index that owns the row

    Returns:
        MaskRow with n entries

    Raises:
        InvalidVoterCount: If n < 1
    """
    modulus = Modulus(n)
    free = [int(x) for x in rng.integers(0, modulus.value, size=n - 1)]
    last = (-sum(free)) % modulus.value
    return MaskRow(owner=owner, entries=(*free, last))


def gen_mask_matrix(n: int, rng: np.random.Generator) -> list[MaskRow]:
    """Draw one row per voter from a single generator."""
    return [gen_mask_row(n, rng, owner=i) for i in range(1, n + 1)]


def column_of(rows: Sequence[MaskRow], receiver: int) -> MaskColumn:
    """Collect the shares every row assigns to receiver."""
    ordered = sorted(rows, key=lambda row: row.owner)
    return MaskColumn(
        receiver=receiver, shares=tuple(row.share_for(receiver) for row in ordered)
    )


def mask_ballot(vote: int, column: MaskColumn, modulus: Modulus) -> MaskedBallot:
    """
    Mask a vote with the column of received shares.

    Args:
        vote: 0 or 1
        column: One share from every voter, self included
        modulus: Election modulus

    Returns:
        MaskedBallot with value (vote + sum(shares)) mod (n+1)

    Raises:
        InvalidVote: If vote is not binary
        MalformedColumn: If the share count is not n or a share is out of range
    """
    parsed = Vote.parse(vote)
    if len(column.shares) != modulus.n:
        raise MalformedColumn(
            f"column for voter {column.receiver} has {len(column.shares)} "
            f"shares, expected {modulus.n}"
        )
    if not all(modulus.contains(share) for share in column.shares):
        raise MalformedColumn(
            f"column for voter {column.receiver} holds a share outside "
            f"[0, {modulus.n}]"
        )
    value = (int(parsed) + sum(column.shares)) % modulus.value
    return MaskedBallot(voter=column.receiver, value=value)


def tally(ballots: Iterable[MaskedBallot], modulus: Modulus) -> int:
    """
    Sum the masked ballots mod n+1.

    Raises:
        IncompleteBallotSet: Unless there is exactly one ballot per voter 1..n
    """
    ballots = list(ballots)
    voters = [ballot.voter for ballot in ballots]
    if len(voters) != modulus.n or set(voters) != set(range(1, modulus.n + 1)):
        raise IncompleteBallotSet(
            f"expected one ballot for each of voters 1..{modulus.n}, "
            f"got {sorted(voters)}"
        )
    return sum(ballot.value for ballot in ballots) % modulus.value


def iter_mask_rows(n: int) -> Iterator[tuple[int, ...]]:
    """Yield every zero-sum row of length n over Z_{n+1}."""
    m = Modulus(n).value
    for free in itertools.product(range(m), repeat=n - 1):
        yield (*free, (-sum(free)) % m)


def plaintext_tally(votes: Iterable[int]) -> int:
    return sum(int(Vote.parse(v)) for v in votes)
