"""Deterministic discrete-event simulation of the transport paths.

One `Simulator` owns the clock, the event queue and the seed. Channels
schedule their own events on it. Every random draw for a packet copy comes
from a generator keyed on (seed, channel, sequence, attempt), so a packet's
fate never depends on what other packets did.
"""
from __future__ import annotations

import bisect
import csv
import enum
import heapq
import io
import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Callable

FRAME_MS = 20.0


class ChannelKind(enum.Enum):
    ReliableOrderedRelay = "reliable_ordered_relay"
    ReliablePeer = "reliable_peer"
    UnreliablePeer = "unreliable_peer"
    MediaRelay = "media_relay"

    @property
    def reliable(self) -> bool:
        return self in (ChannelKind.ReliableOrderedRelay, ChannelKind.ReliablePeer)

    @property
    def peer(self) -> bool:
        return self in (ChannelKind.ReliablePeer, ChannelKind.UnreliablePeer)


class ChannelClosed(RuntimeError):
    pass


@dataclass(frozen=True)
class PathProfile:
    """One network hop. Jitter is lognormal with median `jitter_ms` and shape `jitter_sigma`."""

    latency_ms: float = 0.0
    jitter_ms: float = 0.0
    jitter_sigma: float = 0.0
    loss: float = 0.0

    def __post_init__(self):
        if self.latency_ms < 0 or self.jitter_ms < 0 or self.jitter_sigma < 0:
            raise ValueError("latency and jitter parameters must be non-negative")
        if not 0.0 <= self.loss < 1.0:
            raise ValueError("loss must lie in [0, 1)")

    def jitter(self, z: float) -> float:
        """Jitter for a standard normal deviate `z`."""
        return self.jitter_ms * math.exp(self.jitter_sigma * z)

    def sample_jitter(self, rng: random.Random) -> float:
        return self.jitter(rng.gauss(0.0, 1.0))

    def jitter_mean(self) -> float:
        return self.jitter_ms * math.exp(self.jitter_sigma ** 2 / 2.0)

    def jitter_variance(self) -> float:
        s2 = self.jitter_sigma ** 2
        return self.jitter_ms ** 2 * math.exp(s2) * (math.exp(s2) - 1.0)

    @classmethod
    def from_dict(cls, d: dict) -> PathProfile:
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class NetworkProfile:
    """Paths and per-kind processing delays for one sender/observer pair.

    Transforms in the relay architecture cross sender_server then
    server_observer with `relay_processing_ms` at the sync server. Audio
    crosses media_uplink/media_downlink (defaulting to the same two hops)
    with `media_processing_ms` at the SFU. Peer data channels add
    `encryption_ms` once per send and either go `direct` or through the SFU
    (`peer_route="sfu"`) with `sfu_forward_ms` in the middle.
    """

    sender_server: PathProfile = PathProfile()
    server_observer: PathProfile = PathProfile()
    direct: PathProfile = PathProfile()
    media_uplink: PathProfile | None = None
    media_downlink: PathProfile | None = None
    relay_processing_ms: float = 0.0
    media_processing_ms: float = 0.0
    sfu_forward_ms: float = 0.0
    encryption_ms: float = 0.5
    rto_ms: float = 200.0
    jitter_buffer_frames: int = 2
    peer_route: str = "sfu"

    def __post_init__(self):
        if self.rto_ms <= 0:
            raise ValueError("RTO must be positive")
        if min(self.relay_processing_ms, self.media_processing_ms,
               self.sfu_forward_ms, self.encryption_ms) < 0:
            raise ValueError("processing delays must be non-negative")
        if self.jitter_buffer_frames < 0:
            raise ValueError("jitter buffer depth must be non-negative")
        if self.peer_route not in ("sfu", "direct"):
            raise ValueError("peer_route must be 'sfu' or 'direct'")

    def route(self, kind: ChannelKind) -> tuple[list[PathProfile], list[float], float]:
        """(hops, processing delay after each hop but the last, delay added at send)."""
        if kind is ChannelKind.ReliableOrderedRelay:
            return [self.sender_server, self.server_observer], [self.relay_processing_ms], 0.0
        if kind is ChannelKind.MediaRelay:
            up = self.media_uplink or self.sender_server
            down = self.media_downlink or self.server_observer
            return [up, down], [self.media_processing_ms], 0.0
        if self.peer_route == "direct":
            return [self.direct], [], self.encryption_ms
        return [self.sender_server, self.server_observer], [self.sfu_forward_ms], self.encryption_ms

    @classmethod
    def from_dict(cls, d: dict) -> NetworkProfile:
        kw = dict(d)
        for key in ("sender_server", "server_observer", "direct", "media_uplink", "media_downlink"):
            if kw.get(key) is not None:
                kw[key] = PathProfile.from_dict(kw[key])
        if "jitter_buffer_frames" in kw:
            kw["jitter_buffer_frames"] = int(kw["jitter_buffer_frames"])
        return cls(**kw)

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            out[k] = v.__dict__.copy() if isinstance(v, PathProfile) else v
        return out


@dataclass(frozen=True, order=True)
class TraceEvent:
    time_ms: float
    event: str
    channel: str
    sequence: int


class Simulator:
    def __init__(self, seed: int = 0):
        self.seed = seed
        self.now = 0.0
        self._queue: list = []
        self._order = itertools.count()
        self.trace: list[TraceEvent] = []

    def schedule(self, time_ms: float, action: Callable[[], None]) -> None:
        if time_ms < self.now:
            raise ValueError(f"cannot schedule at {time_ms} before now={self.now}")
        heapq.heappush(self._queue, (time_ms, next(self._order), action))

    def at(self, time_ms: float, action: Callable[[], None]) -> None:
        """Schedule an external stimulus (e.g. an application send)."""
        self.schedule(time_ms, action)

    def record(self, event: str, channel: str, sequence: int) -> None:
        self.trace.append(TraceEvent(self.now, event, channel, sequence))

    def rng_for(self, *key) -> random.Random:
        return random.Random(":".join(str(k) for k in (self.seed, *key)))

    def run_until_idle(self) -> list[TraceEvent]:
        while self._queue:
            t, _, action = heapq.heappop(self._queue)
            self.now = t
            action()
        return self.trace

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_ms", "event", "channel", "sequence"])
        for e in self.trace:
            w.writerow([repr(e.time_ms), e.event, e.channel, e.sequence])
        return buf.getvalue()


Deliver = Callable[[bytes, int, float], None]


class Channel:
    """One-directional channel from sender to observer.

    `on_deliver(payload, seq, time)` fires when the application sees the
    packet. For MediaRelay that is the jitter-buffer playout time.
    `drop` lets tests force a loss: drop(seq, attempt, hop) -> bool.
    """

    def __init__(self, sim: Simulator, name: str, kind: ChannelKind, profile: NetworkProfile,
                 on_deliver: Deliver | None = None,
                 drop: Callable[[int, int, int], bool] | None = None):
        self.sim = sim
        self.name = name
        self.kind = kind
        self.profile = profile
        self.on_deliver = on_deliver
        self.drop = drop
        self.hops, self.processing, self.send_delay = profile.route(kind)
        self.open = True
        self._next_seq = 0
        self._arrived: set[int] = set()
        self._delivered: set[int] = set()
        self.sent = 0
        self.copies = 0
        self.lost_copies = 0
        # ordered delivery bookkeeping
        self._outstanding: list[int] = []
        self._held: dict[int, bytes] = {}
        self.jitter_buffer = (JitterBuffer(profile.jitter_buffer_frames)
                              if kind is ChannelKind.MediaRelay else None)

    def close(self) -> None:
        self.open = False

    def send(self, payload: bytes, seq: int | None = None) -> int:
        if not self.open:
            raise ChannelClosed(f"channel {self.name} is closed")
        if seq is None:
            seq = self._next_seq
        self._next_seq = max(self._next_seq, seq + 1)
        self.sent += 1
        self.sim.record("send", self.name, seq)
        if self.kind is ChannelKind.ReliableOrderedRelay:
            bisect.insort(self._outstanding, seq)
        self._launch(payload, seq, 0)
        return seq

    def _launch(self, payload: bytes, seq: int, attempt: int) -> None:
        self.copies += 1
        rng = self.sim.rng_for(self.name, seq, attempt)
        t = self.sim.now + self.send_delay
        lost = False
        for h, hop in enumerate(self.hops):
            # both draws always taken so loss and jitter settings never shift each other's stream
            u = rng.random()
            z = rng.gauss(0.0, 1.0)
            if u < hop.loss or (self.drop is not None and self.drop(seq, attempt, h)):
                lost = True
                break
            t += hop.latency_ms + hop.jitter(z)
            if h < len(self.processing):
                t += self.processing[h]
        if lost:
            self.lost_copies += 1
            self.sim.record("drop", self.name, seq)
        else:
            self.sim.schedule(t, lambda: self._arrive(payload, seq))
        if self.kind.reliable:
            self.sim.schedule(self.sim.now + self.profile.rto_ms,
                              lambda: self._retransmit_check(payload, seq, attempt + 1))

    def _retransmit_check(self, payload: bytes, seq: int, attempt: int) -> None:
        if seq in self._arrived:
            return
        self.sim.record("retransmit", self.name, seq)
        self._launch(payload, seq, attempt)

    def _arrive(self, payload: bytes, seq: int) -> None:
        if seq in self._arrived:
            self.sim.record("duplicate", self.name, seq)
            return
        self._arrived.add(seq)
        self.sim.record("arrive", self.name, seq)
        if self.kind is ChannelKind.ReliableOrderedRelay:
            self._held[seq] = payload
            while self._outstanding and self._outstanding[0] in self._held:
                s = self._outstanding.pop(0)
                self._deliver(self._held.pop(s), s)
        elif self.kind is ChannelKind.MediaRelay:
            t = self.jitter_buffer.offer(seq, self.sim.now)
            if t is None:
                self.sim.record("late", self.name, seq)
            else:
                self.sim.schedule(t, lambda: self._deliver(payload, seq))
        else:
            self._deliver(payload, seq)

    def _deliver(self, payload: bytes, seq: int) -> None:
        self._delivered.add(seq)
        self.sim.record("deliver", self.name, seq)
        if self.on_deliver is not None:
            self.on_deliver(payload, seq, self.sim.now)

    @property
    def delivered(self) -> set[int]:
        return set(self._delivered)


@dataclass
class JitterBuffer:
    """Fixed-depth playout buffer.

    The first frame to arrive anchors the schedule: frame k is due at
    first_arrival + depth*20 + (k - first_seq)*20 ms. A frame plays at
    max(arrival, due) unless it arrives after its slot has ended
    (arrival > due + 20 ms), in which case it is discarded.
    """

    depth: int
    frame_ms: float = FRAME_MS
    anchor: tuple[int, float] | None = None
    discarded: int = 0
    played: dict[int, float] = field(default_factory=dict)

    def due(self, seq: int) -> float:
        first_seq, first_t = self.anchor
        return first_t + self.depth * self.frame_ms + (seq - first_seq) * self.frame_ms

    def offer(self, seq: int, arrival: float) -> float | None:
        if self.anchor is None:
            self.anchor = (seq, arrival)
        due = self.due(seq)
        if arrival > due + self.frame_ms:
            self.discarded += 1
            return None
        t = max(arrival, due)
        self.played[seq] = t
        return t


def receiver_audio_clock(arrivals: dict[int, float], depth: int,
                         frame_ms: float = FRAME_MS) -> tuple[dict[int, float], int]:
    """Playout time per frame sequence for a batch of arrivals, plus the discard count."""
    jb = JitterBuffer(depth, frame_ms)
    for seq, t in sorted(arrivals.items(), key=lambda kv: (kv[1], kv[0])):
        jb.offer(seq, t)
    return jb.played, jb.discarded
