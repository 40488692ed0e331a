"""
Bit commitment backends.

Values are committed bit by bit (little-endian). The evidence of bit k is
sha256("{committer}|{k}|{bit}|{nonce}") and the decommit token is the list of
nonces, so any miner can check an opening against on-chain evidence.

Two backends share this contract:
- IdealCommitmentScheme: perfectly hiding and binding.
- CheatSensitiveCommitmentScheme: binding and hiding are replaced by detection;
  every bit an adversary rebinds or learns early is detected independently
  with probability p_detect.

Quantum internals are not modelled. An undetected rebind is registered as an
equivocation on the sealed commitment, which is how the simulator lets the
forged opening verify.
"""

import hashlib
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Literal

import numpy as np
from loguru import logger

from qvote.domain.exceptions import AlreadyOpened, ValueOutOfRange
from qvote.models.config import CommitmentMode, CommitmentParams
from qvote.services.masking import Modulus
from qvote.utils.security import digest_hex


class CommitPhase(str, Enum):
    COMMITTED = "committed"
    OPENED = "opened"


@dataclass
class Commitment:
    """Public commitment: one hex digest per committed bit."""

    committer: str
    evidence: tuple[str, ...]
    phase: CommitPhase = CommitPhase.COMMITTED

    @property
    def evidence_id(self) -> str:
        return digest_hex(list(self.evidence))


@dataclass(frozen=True)
class Opening:
    """Claimed value plus the per-bit nonces."""

    value: int
    decommit_token: tuple[str, ...]


@dataclass(frozen=True)
class OpenResult:
    value: int


@dataclass(frozen=True)
class CheatDetected:
    committer: str
    detected_bits: tuple[int, ...]
    claimed_value: int | None = None


@dataclass(frozen=True)
class DetectionEvent:
    kind: Literal["rebind", "peek"]
    bit: int
    actor: str


@dataclass
class _Seal:
    value: int
    nonces: tuple[str, ...]
    equivocations: dict[int, str] = field(default_factory=dict)


def bit_digest(committer: str, k: int, bit: int, nonce: str) -> str:
    return hashlib.sha256(f"{committer}|{k}|{bit}|{nonce}".encode()).hexdigest()


def to_bits(value: int, width: int) -> list[int]:
    return [(value >> k) & 1 for k in range(width)]


class CommitmentScheme(ABC):
    """
    Commit/open contract shared by all backends.

    A scheme instance is shared by every party of one election. It keeps a
    seal per commitment so that adversarial rebinds and peeks can be resolved;
    honest parties only use commit, verify_opening and open.
    """

    def __init__(self, params: CommitmentParams, modulus: Modulus):
        """
        Initialize the scheme.

        Args:
            params: Backend parameters (bit_width must cover [0, n])
            modulus: Election modulus
        """
        if (1 << params.bit_width) < modulus.value:
            raise ValueError(
                f"bit_width {params.bit_width} cannot encode residues mod "
                f"{modulus.value}"
            )
        self.params = params
        self.modulus = modulus
        self._seals: dict[str, _Seal] = {}

    @property
    def binding_guaranteed(self) -> bool:
        return True

    @abstractmethod
    def _bit_detected(self, rng: np.random.Generator) -> bool:
        """Whether one adversarial bit operation is detected."""

    def commit(
        self, committer: str, value: int, rng: np.random.Generator
    ) -> tuple[Commitment, Opening]:
        """
        Commit to a residue.

        Args:
            committer: Party id
            value: Residue in [0, n]
            rng: Generator for the nonces

        Returns:
            (Commitment, Opening)

        Raises:
            ValueOutOfRange: If value is outside [0, n]
        """
        if not self.modulus.contains(value):
            raise ValueOutOfRange(f"value {value} outside [0, {self.modulus.n}]")
        nonces = tuple(rng.bytes(16).hex() for _ in range(self.params.bit_width))
        bits = to_bits(value, self.params.bit_width)
        evidence = tuple(
            bit_digest(committer, k, bit, nonce)
            for k, (bit, nonce) in enumerate(zip(bits, nonces, strict=True))
        )
        commitment = Commitment(committer=committer, evidence=evidence)
        self._seals[commitment.evidence_id] = _Seal(value=value, nonces=nonces)
        return commitment, Opening(value=value, decommit_token=nonces)

    def verify_opening(
        self, commitment: Commitment, opening: Opening
    ) -> OpenResult | CheatDetected:
        """
        Check an opening against commitment evidence without changing state.

        Args:
            commitment: Commitment as recorded on-chain
            opening: Claimed opening

        Returns:
            OpenResult if every bit matches, CheatDetected naming the failing bits
        """
        width = self.params.bit_width
        every_bit = tuple(range(width))
        if (
            len(commitment.evidence) != width
            or len(opening.decommit_token) != width
            or not self.modulus.contains(opening.value)
        ):
            return CheatDetected(commitment.committer, every_bit, opening.value)
        seal = self._seals.get(commitment.evidence_id)
        equivocations = seal.equivocations if seal else {}
        bad = tuple(
            k
            for k, bit in enumerate(to_bits(opening.value, width))
            if bit_digest(commitment.committer, k, bit, opening.decommit_token[k])
            != commitment.evidence[k]
            and equivocations.get(k) != opening.decommit_token[k]
        )
        if bad:
            return CheatDetected(commitment.committer, bad, opening.value)
        return OpenResult(opening.value)

    def open(
        self, commitment: Commitment, opening: Opening
    ) -> OpenResult | CheatDetected:
        """
        Verify an opening and move the commitment to the Opened phase.

        A rejected opening leaves the commitment Committed.

        Raises:
            AlreadyOpened: If the commitment was opened before
        """
        if commitment.phase is CommitPhase.OPENED:
            raise AlreadyOpened(f"commitment of {commitment.committer} already opened")
        result = self.verify_opening(commitment, opening)
        if isinstance(result, OpenResult):
            commitment.phase = CommitPhase.OPENED
        return result

    def adversarial_rebind(
        self,
        commitment: Commitment,
        new_value: int,
        rng: np.random.Generator,
        actor: str | None = None,
    ) -> tuple[Opening, list[DetectionEvent]]:
        """
        Forge an opening to a different value.

        Every flipped bit is detected independently. Undetected flips verify;
        detected flips keep the original nonce and therefore fail.

        Args:
            commitment: Target commitment (must be sealed by this scheme)
            new_value: Value to open to
            rng: Adversary generator
            actor: Party attempting the rebind (defaults to the committer)

        Returns:
            (forged opening, detection events)
        """
        if not self.modulus.contains(new_value):
            raise ValueOutOfRange(f"value {new_value} outside [0, {self.modulus.n}]")
        seal = self._seals[commitment.evidence_id]
        actor = actor or commitment.committer
        width = self.params.bit_width
        flipped = seal.value ^ new_value
        token = list(seal.nonces)
        events: list[DetectionEvent] = []
        for k in range(width):
            if not (flipped >> k) & 1:
                continue
            if self._bit_detected(rng):
                events.append(DetectionEvent(kind="rebind", bit=k, actor=actor))
                continue
            forged = rng.bytes(16).hex()
            seal.equivocations[k] = forged
            token[k] = forged
        logger.debug(
            f"Rebind {commitment.committer}: {seal.value} -> {new_value}, "
            f"{len(events)} bit(s) detected"
        )
        return Opening(value=new_value, decommit_token=tuple(token)), events

    @abstractmethod
    def adversarial_peek(
        self, commitment: Commitment, rng: np.random.Generator, actor: str
    ) -> tuple[int, list[DetectionEvent]]:
        """Try to learn a committed value before it is opened."""

    def sealed_value(self, commitment: Commitment) -> int:
        """Committed value. Oracle for analysis; parties never call this."""
        return self._seals[commitment.evidence_id].value


class IdealCommitmentScheme(CommitmentScheme):
    """Perfectly hiding, perfectly binding commitment."""

    def _bit_detected(self, rng: np.random.Generator) -> bool:
        return True

    def adversarial_peek(
        self, commitment: Commitment, rng: np.random.Generator, actor: str
    ) -> tuple[int, list[DetectionEvent]]:
        return int(rng.integers(0, self.modulus.value)), []


class CheatSensitiveCommitmentScheme(CommitmentScheme):
    """Commitment whose cheats are detected bit by bit with probability p_detect."""

    @property
    def binding_guaranteed(self) -> bool:
        return self.params.p_detect > 0.0

    def _bit_detected(self, rng: np.random.Generator) -> bool:
        return bool(rng.random() < self.params.p_detect)

    def adversarial_peek(
        self, commitment: Commitment, rng: np.random.Generator, actor: str
    ) -> tuple[int, list[DetectionEvent]]:
        events = [
            DetectionEvent(kind="peek", bit=k, actor=actor)
            for k in range(self.params.bit_width)
            if self._bit_detected(rng)
        ]
        return self.sealed_value(commitment), events


def create_commitment_scheme(
    params: CommitmentParams, modulus: Modulus
) -> CommitmentScheme:
    """
    Build the backend selected by params.mode.

    Args:
        params: Backend parameters
        modulus: Election modulus

    Returns:
        CommitmentScheme implementation
    """
    if params.mode is CommitmentMode.IDEAL:
        return IdealCommitmentScheme(params, modulus)
    if params.mode is CommitmentMode.CHEAT_SENSITIVE:
        return CheatSensitiveCommitmentScheme(params, modulus)
    raise ValueError(f"Unsupported commitment mode: {params.mode}")
