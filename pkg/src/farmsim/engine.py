"""Deterministic discrete-event core.

Virtual clock, ordered event queue with a stable tie-break, named random
number streams derived from one master seed, and a table of severable
node-to-node links. One caller drives ``run_until``; every state change in
the simulation happens inside an event handler invoked from it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Any, Callable

import numpy as np

__all__ = [
    "Engine",
    "EventHandle",
    "Link",
    "LinkTable",
    "RngStream",
    "SchedulingError",
    "SimEvent",
    "UnknownLinkError",
]


class SchedulingError(ValueError):
    """An event was scheduled before the current clock, or time ran backwards."""


class UnknownLinkError(KeyError):
    """A message was sent over a link that is not part of the topology."""


@dataclass(frozen=True)
class SimEvent:
    """One scheduled occurrence. (fire_time, sequence) is a strict total order."""

    fire_time: float
    sequence: int
    target: str
    kind: str
    payload: Any = None


class EventHandle:
    """Cancellation token for a scheduled event.

    Cancellation is lazy: the heap entry stays put and is silently discarded
    when popped, so a cancelled event never executes, never appears in the
    trace, and never produces actions.
    """

    __slots__ = ("event", "cancelled")

    def __init__(self, event: SimEvent):
        self.event = event
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


@dataclass
class RngStream:
    """A named, independently seeded random stream.

    The same (seed, stream_id) pair always yields the same draw sequence,
    and streams never share state, so adding a new consumer cannot disturb
    the draws seen by existing ones.
    """

    seed: int
    stream_id: str
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        digest = hashlib.sha256(self.stream_id.encode("utf-8")).digest()
        key = int.from_bytes(digest[:8], "big")
        seq = np.random.SeedSequence([self.seed & ((1 << 64) - 1), key])
        self.generator = np.random.default_rng(seq)


@dataclass
class Link:
    source: str
    dest: str
    kind: str  # "data" | "control"
    latency: float = 0.0
    status: str = "up"  # "up" | "severed"
    sent: int = 0
    delivered: int = 0
    dropped: int = 0
    in_flight: int = 0

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.source, self.dest, self.kind)


class _LinkDelivery:
    """Internal wrapper so the engine can settle link accounting on arrival."""

    __slots__ = ("link", "body")

    def __init__(self, link: Link, body: Any):
        self.link = link
        self.body = body


class LinkTable:
    """Topology-declared links plus their status and message accounting.

    Per-link conservation holds at every instant:
    ``sent == delivered + dropped + in_flight``.
    """

    def __init__(self):
        self._links: dict[tuple[str, str, str], Link] = {}

    def declare(self, source: str, dest: str, kind: str, latency: float = 0.0) -> Link:
        key = (source, dest, kind)
        if key in self._links:
            raise ValueError(f"link {key} declared twice")
        link = Link(source, dest, kind, latency)
        self._links[key] = link
        return link

    def get(self, source: str, dest: str, kind: str) -> Link:
        try:
            return self._links[(source, dest, kind)]
        except KeyError:
            raise UnknownLinkError(f"no link ({source}, {dest}, {kind}) in topology") from None

    def exists(self, source: str, dest: str, kind: str) -> bool:
        return (source, dest, kind) in self._links

    def status(self, source: str, dest: str, kind: str) -> str:
        return self.get(source, dest, kind).status

    def sever(self, source: str, dest: str, kind: str) -> str:
        link = self.get(source, dest, kind)
        link.status = "severed"
        return link.status

    def restore(self, source: str, dest: str, kind: str) -> str:
        link = self.get(source, dest, kind)
        link.status = "up"
        return link.status

    def drop_counts(self) -> dict[tuple[str, str, str], int]:
        return {key: link.dropped for key, link in self._links.items()}

    def items(self):
        return self._links.items()

    def values(self):
        return self._links.values()


class Engine:
    """Single-owner simulation engine.

    All scheduling, message passing and clock movement goes through this
    object; handlers registered per target node receive events in strict
    (fire_time, sequence) order.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.now = 0.0
        self.links = LinkTable()
        self.trace: list[tuple[float, int, str, str]] = []
        self._heap: list[tuple[float, int, EventHandle]] = []
        self._sequence = 0
        self._streams: dict[str, RngStream] = {}
        self._handlers: dict[str, Callable[[SimEvent], None]] = {}

    # ------------------------------------------------------------------
    # random streams
    # ------------------------------------------------------------------
    def stream(self, stream_id: str) -> np.random.Generator:
        if stream_id not in self._streams:
            self._streams[stream_id] = RngStream(self.seed, stream_id)
        return self._streams[stream_id].generator

    # ------------------------------------------------------------------
    # scheduling
    # ------------------------------------------------------------------
    def register(self, target: str, handler: Callable[[SimEvent], None]) -> None:
        if target in self._handlers:
            raise ValueError(f"handler for target {target!r} already registered")
        self._handlers[target] = handler

    def schedule(
        self,
        *,
        delay: float | None = None,
        at: float | None = None,
        target: str,
        kind: str,
        payload: Any = None,
    ) -> EventHandle:
        if (delay is None) == (at is None):
            raise ValueError("exactly one of delay= or at= must be given")
        fire_time = self.now + delay if at is None else at
        if fire_time < self.now:
            raise SchedulingError(
                f"cannot schedule {kind!r} at t={fire_time} before clock t={self.now}"
            )
        event = SimEvent(float(fire_time), self._sequence, target, kind, payload)
        self._sequence += 1
        handle = EventHandle(event)
        heappush(self._heap, (event.fire_time, event.sequence, handle))
        return handle

    def cancel(self, handle: EventHandle) -> None:
        handle.cancel()

    def run_until(self, t_end: float) -> list[tuple[float, int, str, str]]:
        """Execute every pending event with fire_time <= t_end, then set the
        clock to t_end. Returns the trace slice for this call."""
        if t_end < self.now:
            raise SchedulingError(f"cannot run backwards to t={t_end} from t={self.now}")
        executed: list[tuple[float, int, str, str]] = []
        while self._heap and self._heap[0][0] <= t_end:
            _, _, handle = heappop(self._heap)
            if handle.cancelled:
                continue
            event = handle.event
            self.now = event.fire_time
            payload = event.payload
            if isinstance(payload, _LinkDelivery):
                payload.link.in_flight -= 1
                payload.link.delivered += 1
                event = SimEvent(
                    event.fire_time, event.sequence, event.target, event.kind, payload.body
                )
            record = (event.fire_time, event.sequence, event.target, event.kind)
            self.trace.append(record)
            executed.append(record)
            handler = self._handlers.get(event.target)
            if handler is None:
                raise KeyError(f"no handler registered for event target {event.target!r}")
            handler(event)
        self.now = float(t_end)
        return executed

    # ------------------------------------------------------------------
    # links
    # ------------------------------------------------------------------
    def declare_link(self, source: str, dest: str, kind: str, latency: float = 0.0) -> Link:
        return self.links.declare(source, dest, kind, latency)

    def send(
        self,
        body: Any,
        source: str,
        dest: str,
        kind: str,
        *,
        event_kind: str = "message",
        extra_delay: float = 0.0,
    ) -> str:
        """Send a message over a declared link.

        Returns "delivered" when a delivery event was scheduled (after the
        link latency plus any extra delay) or "dropped" when the link is
        severed; drops are counted on the link and the message vanishes.
        """
        link = self.links.get(source, dest, kind)
        link.sent += 1
        if link.status == "severed":
            link.dropped += 1
            return "dropped"
        link.in_flight += 1
        self.schedule(
            delay=link.latency + extra_delay,
            target=dest,
            kind=event_kind,
            payload=_LinkDelivery(link, body),
        )
        return "delivered"

    def sever_link(self, source: str, dest: str, kind: str) -> str:
        return self.links.sever(source, dest, kind)

    def restore_link(self, source: str, dest: str, kind: str) -> str:
        return self.links.restore(source, dest, kind)

    # ------------------------------------------------------------------
    # trace export
    # ------------------------------------------------------------------
    @staticmethod
    def trace_line(record: tuple[float, int, str, str]) -> str:
        t, seq, target, kind = record
        return json.dumps(
            {"t": t, "seq": seq, "target": target, "kind": kind}, separators=(",", ":")
        )

    def export_trace(self) -> str:
        if not self.trace:
            return ""
        return "\n".join(self.trace_line(r) for r in self.trace) + "\n"

    def trace_digest(self) -> str:
        return hashlib.sha256(self.export_trace().encode("utf-8")).hexdigest()
