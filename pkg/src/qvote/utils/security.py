"""
Security utilities for canonical encoding, digests and message authentication.

Provides:
- Canonical JSON encoding so that equal values always hash to equal digests
- SHA-256 digests rendered as lowercase hex
- AuthKeyTable: pre-shared per-pair keys standing in for QKD-established keys,
  used to tag and verify messages with itsdangerous signers
"""

import hashlib
from collections.abc import Iterable
from itertools import combinations_with_replacement
from typing import Any

import canonicaljson
import numpy as np
from itsdangerous import Signer

GENESIS_DIGEST = "0" * 64
AUTH_SALT = "qvote.channel-auth"


def canonical_bytes(data: Any) -> bytes:
    """
    Encode a JSON-compatible value canonically (sorted keys, no whitespace).

    Args:
        data: JSON-compatible value

    Returns:
        bytes: UTF-8 canonical JSON
    """
    return canonicaljson.encode_canonical_json(data)


def digest_hex(data: bytes | Any) -> str:
    """
    SHA-256 digest of raw bytes or of the canonical encoding of a value.

    Args:
        data: Bytes, or a JSON-compatible value to encode first

    Returns:
        str: Lowercase hex digest
    """
    raw = data if isinstance(data, bytes) else canonical_bytes(data)
    return hashlib.sha256(raw).hexdigest()


def chain_digest(previous: str, body: bytes) -> str:
    """
    Extend a hash chain: sha256(previous digest || body).

    Args:
        previous: Hex digest of the previous link
        body: Canonical bytes of the new link

    Returns:
        str: Hex digest of the new link
    """
    return hashlib.sha256(previous.encode("ascii") + body).hexdigest()


def _pair(a: str, b: str) -> frozenset[str]:
    return frozenset((a, b))


class AuthKeyTable:
    """
    Symmetric key material for every authenticated party pair.

    Keys are fixed by the scenario seed. Tags are HMAC-SHA256 signatures
    produced by itsdangerous; the simulator treats forgery as impossible.
    """

    def __init__(self, keys: dict[frozenset[str], bytes]):
        """
        Initialize the key table.

        Args:
            keys: Mapping from unordered party pair to key bytes
        """
        self._keys = dict(keys)

    @classmethod
    def generate(
        cls, parties: Iterable[str], rng: np.random.Generator
    ) -> "AuthKeyTable":
        """
        Draw one 32-byte key for every unordered pair of parties.

        Each party also gets a key with itself, used when a voter that is also
        a miner submits to its own miner role.

        Args:
            parties: Party ids (voters and miners)
            rng: Seeded generator; pairs are visited in sorted order

        Returns:
            AuthKeyTable covering every pair
        """
        ordered = sorted(set(parties))
        keys = {
            _pair(a, b): rng.bytes(32)
            for a, b in combinations_with_replacement(ordered, 2)
        }
        return cls(keys)

    def __len__(self) -> int:
        return len(self._keys)

    def has_key(self, a: str, b: str) -> bool:
        """Whether the pair (a, b) shares a key."""
        return _pair(a, b) in self._keys

    def _signer(self, a: str, b: str) -> Signer | None:
        key = self._keys.get(_pair(a, b))
        if key is None:
            return None
        return Signer(key, salt=AUTH_SALT, digest_method=hashlib.sha256)

    def sign(self, sender: str, receiver: str, payload: bytes) -> str | None:
        """
        Tag a payload under the key shared by sender and receiver.

        Args:
            sender: Party producing the tag
            receiver: Party that will verify it
            payload: Bytes to authenticate

        Returns:
            str | None: Tag, or None when the pair shares no key
        """
        signer = self._signer(sender, receiver)
        if signer is None:
            return None
        return signer.get_signature(payload).decode("ascii")

    def verify(
        self, sender: str, receiver: str, payload: bytes, tag: str | None
    ) -> bool:
        """
        Check a tag under the key shared by sender and receiver.

        Args:
            sender: Party the payload claims to come from
            receiver: Verifying party
            payload: Authenticated bytes
            tag: Tag to check

        Returns:
            bool: True only if the pair shares a key and the tag matches
        """
        signer = self._signer(sender, receiver)
        if signer is None or not tag:
            return False
        return signer.verify_signature(payload, tag.encode("ascii"))
