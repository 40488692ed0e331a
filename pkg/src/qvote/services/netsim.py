"""
Deterministic discrete-event network on a simpy environment.

Every delivery and timer is a simpy process that waits out its latency with
``env.timeout`` and then acts. Events at the same tick fire in scheduling
order. Links have unit latency and never lose or reorder frames; a self-send
is delivered in the same tick.

Frames between parties sharing a key carry an authentication tag, so an
interceptor that alters a classical frame causes a failed delivery rather
than a silent substitution. Quantum frames are opaque: eavesdroppers log only
that a frame passed, the trace never holds a digest of their content, and any
attempt to alter one disturbs it so that it arrives as a delivery failure.
"""

from collections import defaultdict
from collections.abc import Callable, Generator
from dataclasses import dataclass
from enum import Enum
from typing import Any

import simpy
from simpy.core import Infinity
from loguru import logger

from qvote.domain.exceptions import NoChannel, SimulationTimeout
from qvote.services.trace import TraceRecorder
from qvote.utils.security import AuthKeyTable, digest_hex


class ChannelKind(str, Enum):
    QUANTUM_SECURE = "quantum_secure"
    CLASSICAL_AUTH = "classical_auth"


@dataclass(frozen=True)
class Channel:
    a: str
    b: str
    kind: ChannelKind


@dataclass(frozen=True)
class Delivery:
    """A frame as handed to the receiver."""

    sender: str
    receiver: str
    channel: ChannelKind
    payload: bytes
    ok: bool
    authenticated: bool
    ref: str
    tick: int


@dataclass(frozen=True)
class Observation:
    """
    What a network eavesdropper logs about one frame.

    ``length`` and ``payload`` are None for quantum frames.
    """

    tick: int
    sender: str
    receiver: str
    channel: ChannelKind
    length: int | None
    payload: bytes | None


class Frame:
    """
    A frame in flight, as seen by interceptors.

    Classical frames expose and accept replacement of their wire bytes.
    Quantum frames expose nothing; tampering with one only disturbs it.
    """

    def __init__(
        self,
        sender: str,
        receiver: str,
        channel: ChannelKind,
        payload: bytes,
        tag: str | None,
        ref: str,
    ):
        self.sender = sender
        self.receiver = receiver
        self.channel = channel
        self.tag = tag
        self.ref = ref
        self._payload = payload
        self.tampered = False
        self.disturbed = False

    @property
    def classical(self) -> bool:
        return self.channel is ChannelKind.CLASSICAL_AUTH

    @property
    def wire(self) -> bytes | None:
        return self._payload if self.classical else None

    def tamper(self, payload: bytes) -> bool:
        """
        Replace the wire bytes.

        Returns:
            bool: True if the bytes were replaced (classical frames only).
                A quantum frame keeps its content but is marked disturbed.
        """
        if not self.classical:
            self.disturbed = True
            return False
        self._payload = payload
        self.tampered = True
        return True

    @property
    def payload(self) -> bytes:
        return self._payload


Handler = Callable[[Delivery], None]
Interceptor = Callable[[Frame], None]


class Network:
    """
    simpy environment plus the channels between registered parties.

    Args:
        keys: Pairwise keys; quantum channels exist only between keyed pairs
        tick_limit: Largest tick an event may fire at
        trace: Recorder for deliver and delivery_failure records
    """

    def __init__(self, keys: AuthKeyTable, tick_limit: int, trace: TraceRecorder):
        self.keys = keys
        self.tick_limit = tick_limit
        self.trace = trace
        self.env = simpy.Environment()
        self.observations: list[Observation] = []
        self.delivery_failures = 0
        self.failure_lines: list[int] = []
        self._pending = 0
        self._frame_seq = 0
        self._error: Exception | None = None
        self._handlers: dict[str, list[Handler]] = defaultdict(list)
        self._interceptors: list[Interceptor] = []

    @property
    def now(self) -> int:
        return int(self.env.now)

    def register(self, party: str, handler: Handler) -> None:
        """Attach a delivery handler; a party may register several."""
        self._handlers[party].append(handler)

    def is_registered(self, party: str) -> bool:
        return party in self._handlers

    def add_interceptor(self, interceptor: Interceptor) -> None:
        self._interceptors.append(interceptor)

    def channel(self, a: str, b: str, kind: ChannelKind) -> Channel:
        """
        Resolve the channel of the given kind between two parties.

        Raises:
            NoChannel: If either party is unregistered, or a quantum channel is
                requested between parties that share no key
        """
        for party in (a, b):
            if not self.is_registered(party):
                raise NoChannel(f"{party} is not on the network")
        quantum = kind is ChannelKind.QUANTUM_SECURE
        if quantum and a != b and not self.keys.has_key(a, b):
            raise NoChannel(f"no quantum channel between {a} and {b}")
        return Channel(a, b, kind)

    def _after(
        self, delay: int, action: Callable[[], None]
    ) -> Generator[simpy.Event, Any, None]:
        yield self.env.timeout(delay)
        self._pending -= 1
        try:
            action()
        except Exception as exc:
            # Re-raised unchanged by run_until_quiescent
            self._error = exc

    def _start(self, delay: int, action: Callable[[], None]) -> simpy.Process:
        self._pending += 1
        return self.env.process(self._after(delay, action))

    def schedule(self, delay: int, callback: Callable[[], None]) -> simpy.Process:
        """Run callback after delay ticks. Timers are not traced."""
        return self._start(delay, callback)

    def send(
        self,
        sender: str,
        receiver: str,
        kind: ChannelKind,
        payload: bytes,
        ref: str | None = None,
    ) -> simpy.Process:
        """
        Send a frame.

        Args:
            sender: Sending party
            receiver: Receiving party
            kind: Channel kind
            payload: Wire bytes
            ref: Frame reference (generated if omitted)

        Returns:
            The delivery process

        Raises:
            NoChannel: See channel()
        """
        channel = self.channel(sender, receiver, kind)
        if ref is None:
            self._frame_seq += 1
            ref = f"{sender}>{receiver}#{self._frame_seq}"
        tag = self.keys.sign(sender, receiver, payload) if sender != receiver else None
        frame = Frame(sender, receiver, channel.kind, payload, tag, ref)
        if sender != receiver:
            for interceptor in self._interceptors:
                interceptor(frame)
            self.observations.append(
                Observation(
                    tick=self.now,
                    sender=sender,
                    receiver=receiver,
                    channel=channel.kind,
                    length=len(payload) if frame.classical else None,
                    payload=frame.wire,
                )
            )
        delay = 0 if sender == receiver else 1
        return self._start(delay, lambda: self._deliver(frame))

    def _deliver(self, frame: Frame) -> None:
        keyed = frame.tag is not None
        ok = not frame.disturbed and (
            not keyed
            or self.keys.verify(frame.sender, frame.receiver, frame.payload, frame.tag)
        )
        delivery = Delivery(
            sender=frame.sender,
            receiver=frame.receiver,
            channel=frame.channel,
            payload=frame.payload,
            ok=ok,
            authenticated=keyed and ok,
            ref=frame.ref,
            tick=self.now,
        )
        detail: dict[str, Any] = {"ref": frame.ref}
        if frame.classical:
            detail["payload_digest"] = digest_hex(frame.payload)
        detail["authenticated"] = delivery.authenticated
        if ok:
            self.trace.record(
                self.now, "deliver", frame.sender, frame.receiver,
                frame.channel.value, detail,
            )
        else:
            self.delivery_failures += 1
            line = self.trace.record(
                self.now, "delivery_failure", frame.sender, frame.receiver,
                frame.channel.value, detail,
            )
            self.failure_lines.append(line)
            logger.warning(
                f"Frame {frame.ref} failed authentication at {frame.receiver}"
            )
        for handler in self._handlers[frame.receiver]:
            handler(delivery)

    @property
    def pending(self) -> int:
        return self._pending

    def run_until_quiescent(self, diagnose: Callable[[], str] | None = None) -> int:
        """
        Step the environment until no event remains.

        Args:
            diagnose: Produces the timeout diagnostic (e.g. missing openings)

        Returns:
            int: Tick of the last processed event

        Raises:
            SimulationTimeout: If the next event lies beyond the tick limit
        """
        while self.env.peek() != Infinity:
            if self.env.peek() > self.tick_limit:
                diagnostic = (
                    diagnose() if diagnose else f"{self.pending} event(s) pending"
                )
                # Dropping the environment discards every pending process
                self.env = simpy.Environment(initial_time=self.now)
                self._pending = 0
                raise SimulationTimeout(self.tick_limit, diagnostic)
            self.env.step()
            if self._error is not None:
                error, self._error = self._error, None
                raise error
        return self.now
