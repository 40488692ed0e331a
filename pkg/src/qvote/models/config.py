"""
Scenario configuration models.

A scenario is everything that determines one election run: roster sizes,
votes, commitment backend, adversary and seed. Identical scenarios produce
byte-identical traces and reports.
"""

from enum import Enum
from typing import Literal, Self

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from qvote.utils.rng import Stream, make_rng


def voter_id(index: int) -> str:
    """Party id of voter index (1-based)."""
    return f"V{index}"


def miner_id(index: int) -> str:
    """Party id of miner index (1-based)."""
    return f"M{index}"


def voter_index(party: str) -> int | None:
    """Voter index encoded in a party id, or None for non-voters."""
    if len(party) > 1 and party[0] == "V" and party[1:].isdigit():
        return int(party[1:])
    return None


def party_sort_key(party: str) -> tuple[str, int, str]:
    """Order party ids as V1, V2, ..., V10 rather than lexically."""
    prefix, digits = party[:1], party[1:]
    return (prefix, int(digits), "") if digits.isdigit() else (prefix, -1, digits)


class CommitmentMode(str, Enum):
    """Commitment backend."""

    IDEAL = "ideal"
    CHEAT_SENSITIVE = "cheat_sensitive"


class CommitmentParams(BaseModel):
    """Parameters of the commitment backend."""

    model_config = ConfigDict(frozen=True)

    mode: CommitmentMode = CommitmentMode.IDEAL
    p_detect: float = Field(default=1.0, ge=0.0, le=1.0)
    bit_width: int = Field(default=1, ge=1)

    @classmethod
    def for_voters(
        cls, n: int, mode: CommitmentMode = CommitmentMode.IDEAL, p_detect: float = 1.0
    ) -> "CommitmentParams":
        """
        Build parameters sized for residues mod n+1.

        Args:
            n: Voter count
            mode: Backend
            p_detect: Per-bit detection probability (CheatSensitive only)

        Returns:
            CommitmentParams with bit_width = ceil(log2(n+1))
        """
        return cls(mode=mode, p_detect=p_detect, bit_width=max(1, n.bit_length()))


class AdversaryRole(str, Enum):
    """Adversary behaviours the simulator can inject."""

    DUPLICATE_VOTER = "duplicate_voter"
    REBINDER = "rebinder"
    EARLY_OPENER = "early_opener"
    TAMPERER = "tamperer"
    COLLUDER_SET = "colluder_set"
    WITHHOLD_OPENING = "withhold_opening"
    OUTSIDER = "outsider"
    IMPERSONATOR = "impersonator"


class AdversarySpec(BaseModel):
    """
    Adversary injected into a scenario.

    Attributes:
        role: Behaviour to inject
        voter: Voter index acting dishonestly (duplicate, rebind, withhold,
            impersonator's claimed identity for impersonator)
        miner: Miner index acting as early opener
        colluders: Voter indices pooling their views
        rebind_value: Value a rebinder opens to (default: committed value + 1)
        outsider_id: Party id of an outsider
        victim: Voter index whose frames a tamperer alters
    """

    model_config = ConfigDict(frozen=True)

    role: AdversaryRole
    voter: int = Field(default=1, ge=1)
    miner: int = Field(default=1, ge=1)
    colluders: tuple[int, ...] = ()
    rebind_value: int | None = Field(default=None, ge=0)
    outsider_id: str = "X1"
    victim: int | None = Field(default=None, ge=1)

    @field_validator("outsider_id")
    @classmethod
    def outsider_is_not_rostered(cls, value: str) -> str:
        if voter_index(value) is not None or value.startswith("M"):
            raise ValueError(f"outsider id {value!r} collides with a roster id")
        return value


class ScenarioConfig(BaseModel):
    """
    One election scenario.

    Attributes:
        n_voters: Number of voters (>= 1)
        votes: Explicit 0/1 votes, or "random" to draw them from the seed
        m_miners: Number of miners (>= 1)
        commitment_mode: Commitment backend
        p_detect: Per-bit detection probability for cheat_sensitive
        adversary: Optional adversary
        seed: Scenario seed (mandatory)
        tick_limit: Event-loop tick limit
        batch_blocks: One block per phase instead of one per consensus round
        dishonest_miners: Miner indices that invert their verdicts
        miners_are_voters: Miners are the first m voters instead of distinct parties
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_voters: int = Field(..., ge=1)
    votes: list[int] | Literal["random"] = "random"
    m_miners: int = Field(default=3, ge=1)
    commitment_mode: CommitmentMode = CommitmentMode.IDEAL
    p_detect: float = Field(default=1.0, ge=0.0, le=1.0)
    adversary: AdversarySpec | None = None
    seed: int = Field(..., ge=0)
    tick_limit: int = Field(default=1000, ge=1)
    batch_blocks: bool = False
    dishonest_miners: tuple[int, ...] = ()
    miners_are_voters: bool = False

    @field_validator("votes")
    @classmethod
    def votes_are_binary(cls, value: list[int] | str) -> list[int] | str:
        if isinstance(value, list):
            bad = [v for v in value if isinstance(v, bool) or v not in (0, 1)]
            if bad:
                raise ValueError(f"votes must be 0 or 1, got {bad}")
        return value

    @model_validator(mode="after")
    def check_roster(self) -> Self:
        if isinstance(self.votes, list) and len(self.votes) != self.n_voters:
            raise ValueError(
                f"votes has {len(self.votes)} entries, n_voters is {self.n_voters}"
            )
        if any(not 1 <= j <= self.m_miners for j in self.dishonest_miners):
            raise ValueError("dishonest_miners refers to an unknown miner")
        if len(set(self.dishonest_miners)) >= self.m_miners:
            raise ValueError("at least one miner must be honest")
        if self.miners_are_voters and self.m_miners > self.n_voters:
            raise ValueError("miners_are_voters requires m_miners <= n_voters")
        adversary = self.adversary
        if adversary is not None:
            if adversary.voter > self.n_voters:
                raise ValueError("adversary.voter is not on the roster")
            if adversary.miner > self.m_miners:
                raise ValueError("adversary.miner is not a miner")
            if any(not 1 <= c <= self.n_voters for c in adversary.colluders):
                raise ValueError("adversary.colluders refers to an unknown voter")
            if adversary.victim is not None and adversary.victim > self.n_voters:
                raise ValueError("adversary.victim is not on the roster")
            if (
                adversary.rebind_value is not None
                and adversary.rebind_value > self.n_voters
            ):
                raise ValueError("adversary.rebind_value is outside [0, n_voters]")
        return self

    def resolved_votes(self) -> list[int]:
        """Explicit votes, or votes drawn from the VOTES stream of the seed."""
        if isinstance(self.votes, list):
            return list(self.votes)
        rng = make_rng(self.seed, Stream.VOTES)
        return [int(v) for v in rng.integers(0, 2, size=self.n_voters)]

    @property
    def voter_ids(self) -> list[str]:
        return [voter_id(i) for i in range(1, self.n_voters + 1)]

    @property
    def miner_ids(self) -> list[str]:
        if self.miners_are_voters:
            return [voter_id(j) for j in range(1, self.m_miners + 1)]
        return [miner_id(j) for j in range(1, self.m_miners + 1)]

    @property
    def honest_miner_ids(self) -> list[str]:
        dishonest = {self.miner_ids[j - 1] for j in self.dishonest_miners}
        return [mid for mid in self.miner_ids if mid not in dishonest]

    @property
    def commitment_params(self) -> CommitmentParams:
        return CommitmentParams.for_voters(
            self.n_voters, self.commitment_mode, self.p_detect
        )

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return self._revalidated(seed=seed)

    def with_adversary(self, adversary: AdversarySpec | None) -> "ScenarioConfig":
        return self._revalidated(adversary=adversary)

    def _revalidated(self, **changes: object) -> "ScenarioConfig":
        data = self.model_dump()
        data.update(changes)
        return ScenarioConfig.model_validate(data)
