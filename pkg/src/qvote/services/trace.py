"""
Hash-chained event trace.

Every line is the canonical JSON object
{tick, type, sender, receiver, channel, digest, detail} where digest is
sha256(previous digest || canonical body without digest), starting from 64
zeros. Block records embed the full block so that anyone holding the trace can
rebuild the chain and recompute the tally.
"""

import json
from dataclasses import dataclass, field
from typing import Any

from qvote.utils.security import (
    GENESIS_DIGEST,
    canonical_bytes,
    chain_digest,
    digest_hex,
)

TRACE_FIELDS = frozenset(
    {"tick", "type", "sender", "receiver", "channel", "digest", "detail"}
)
RECORD_TYPES = frozenset(
    {
        "scenario",
        "deliver",
        "delivery_failure",
        "consensus",
        "block",
        "peek",
        "rebind",
        "abort",
        "tally",
    }
)


class TraceRecorder:
    """Append-only recorder producing the trace JSON lines."""

    def __init__(self) -> None:
        self._lines: list[bytes] = []
        self._head = GENESIS_DIGEST

    @property
    def head(self) -> str:
        return self._head

    def __len__(self) -> int:
        return len(self._lines)

    def record(
        self,
        tick: int,
        type: str,
        sender: str | None = None,
        receiver: str | None = None,
        channel: str | None = None,
        detail: dict[str, Any] | None = None,
    ) -> int:
        """
        Append one record.

        Args:
            tick: Simulation tick
            type: Record type (see RECORD_TYPES)
            sender: Originating party, if any
            receiver: Receiving party, if any
            channel: Channel kind, if the record is a delivery
            detail: Type-specific JSON-compatible fields

        Returns:
            int: 1-based line number of the record
        """
        if type not in RECORD_TYPES:
            raise ValueError(f"Unknown trace record type: {type}")
        body = {
            "tick": tick,
            "type": type,
            "sender": sender,
            "receiver": receiver,
            "channel": channel,
            "detail": detail or {},
        }
        self._head = chain_digest(self._head, canonical_bytes(body))
        self._lines.append(canonical_bytes({**body, "digest": self._head}))
        return len(self._lines)

    def to_bytes(self) -> bytes:
        return b"".join(line + b"\n" for line in self._lines)


@dataclass
class TraceVerification:
    """
    Result of replaying a trace.

    Attributes:
        ok: Whether every check passed
        first_bad_line: 1-based line of the first failure
        reason: Failure description
        tally: Tally recomputed from the block records (None if incomplete)
        lines: Number of lines read
        warnings: Findings that leave the trace valid, such as a run that
            ended without a tally
    """

    ok: bool
    first_bad_line: int | None = None
    reason: str | None = None
    tally: int | None = None
    lines: int = 0
    warnings: list[str] = field(default_factory=list)


@dataclass
class _ChainReplay:
    n_voters: int | None = None
    height: int = -1
    block_digest: str = GENESIS_DIGEST
    commitments: set[str] = field(default_factory=set)
    openings: dict[str, int] = field(default_factory=dict)

    def tally(self) -> int | None:
        if self.n_voters is None or not self.commitments:
            return None
        if set(self.openings) != self.commitments:
            return None
        return sum(self.openings.values()) % (self.n_voters + 1)


def _check_block(replay: _ChainReplay, detail: dict[str, Any]) -> str | None:
    block = detail.get("block")
    if not isinstance(block, dict):
        return "block record without block"
    height = block.get("height")
    if height != replay.height + 1:
        return f"block height {height}, expected {replay.height + 1}"
    expected_prev = GENESIS_DIGEST if height == 0 else replay.block_digest
    if block.get("prev_digest") != expected_prev:
        return f"block {height} does not link to block {replay.height}"
    digest = digest_hex(block)
    if detail.get("digest") != digest:
        return f"block {height} digest mismatch"
    for record in block.get("records", []):
        voter = record.get("voter")
        payload = record.get("payload", {})
        if record.get("kind") == "ballot_commitment":
            replay.commitments.add(voter)
        elif record.get("kind") == "ballot_opening":
            replay.openings[voter] = int(payload.get("value", 0))
    replay.height = height
    replay.block_digest = digest
    return None


def verify_trace(data: bytes) -> TraceVerification:
    """
    Replay a trace and check it end to end.

    Checks, line by line: JSON well-formedness and canonical encoding, the
    digest chain, block heights and links, block digests, and that a recorded
    tally equals the tally recomputed from the block records.

    Args:
        data: Raw trace bytes

    Returns:
        TraceVerification
    """
    if not data:
        return TraceVerification(ok=False, first_bad_line=1, reason="empty trace")
    raw_lines = data.split(b"\n")
    if raw_lines[-1] != b"":
        return TraceVerification(
            ok=False,
            first_bad_line=len(raw_lines),
            reason="missing trailing newline",
            lines=len(raw_lines),
        )
    raw_lines.pop()

    head = GENESIS_DIGEST
    replay = _ChainReplay()
    outcome_seen = False
    failures = 0

    def fail(number: int, reason: str) -> TraceVerification:
        return TraceVerification(
            ok=False, first_bad_line=number, reason=reason, lines=len(raw_lines)
        )

    for number, line in enumerate(raw_lines, start=1):
        try:
            obj = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            return fail(number, f"unparseable line: {exc}")
        if not isinstance(obj, dict) or set(obj) != TRACE_FIELDS:
            return fail(number, "unexpected record fields")
        try:
            canonical = canonical_bytes(obj)
        except ValueError as exc:
            return fail(number, f"unencodable line: {exc}")
        if canonical != line:
            return fail(number, "line is not canonical JSON")
        body = {key: value for key, value in obj.items() if key != "digest"}
        expected = chain_digest(head, canonical_bytes(body))
        if obj["digest"] != expected:
            return fail(number, "digest chain mismatch")
        head = expected

        kind = obj["type"]
        detail = obj["detail"]
        if kind not in RECORD_TYPES or not isinstance(detail, dict):
            return fail(number, f"unknown record type {kind!r}")
        if kind == "scenario":
            replay.n_voters = detail.get("n_voters")
        elif kind == "block":
            problem = _check_block(replay, detail)
            if problem:
                return fail(number, problem)
        elif kind == "delivery_failure":
            failures += 1
        elif kind == "abort":
            outcome_seen = True
        elif kind == "tally":
            outcome_seen = True
            recomputed = replay.tally()
            if detail.get("tally") != recomputed:
                return fail(
                    number,
                    f"recorded tally {detail.get('tally')} != recomputed {recomputed}",
                )

    warnings = []
    if replay.n_voters is None:
        warnings.append("no scenario record; tally not recomputed")
    if not outcome_seen:
        warnings.append("trace ends without a tally or abort record")
    if failures:
        warnings.append(f"{failures} delivery failure(s) recorded")
    return TraceVerification(
        ok=True, tally=replay.tally(), lines=len(raw_lines), warnings=warnings
    )
