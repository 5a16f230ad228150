"""Audio-vs-gesture consistency experiment.

A sender repeats an audio clip and, with each repetition, moves its
avatar's left hand once around a circle. The observer timestamps the
playout of each clip's first audio frame and the arrival of the first
transform packet showing the hand moving. Offset = audio - transform.
"""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

from .bone_map import BoneMapping, map_bones
from .ik import IKTarget, bind_effector_positions, solve_body_pose
from .math3d import Vec3
from .skeleton import CanonicalSlot, Skeleton, canonical_skeleton, forward_kinematics
from .transport import Channel, ChannelKind, NetworkProfile, Simulator
from .wire import (AUDIO_FRAME_MS, AudioFrame, TransformEntry, TransformPacket, decode,
                   encode_audio, encode_packet)

MOTION_THRESHOLD_M = 1e-3
AUDIO_PAYLOAD_BYTES = 160
SENDER_ID = 1
ARCHITECTURES = ("original", "proposed")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    architecture: str = "proposed"
    duration_ms: float = 300_000.0
    cycle_ms: float = 3_000.0
    send_rate_hz: float = 20.0
    audio_frame_ms: float = AUDIO_FRAME_MS
    hand_radius_m: float = 0.3
    hand_period_ms: float = 3_000.0
    trigger_offset_ms: float = 0.0
    network: NetworkProfile = NetworkProfile()
    seed: int = 0
    # None picks the architecture default: relay for original, reliable peer for proposed
    transform_channel: str | None = None

    def validate(self) -> None:
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(f"architecture must be one of {ARCHITECTURES}")
        if self.cycle_ms <= 0 or self.duration_ms < self.cycle_ms:
            raise ConfigError("duration must be at least one cycle")
        if self.send_rate_hz <= 0:
            raise ConfigError("send rate must be positive")
        if self.audio_frame_ms != AUDIO_FRAME_MS:
            raise ConfigError("audio frames are fixed at 20 ms")
        if self.hand_radius_m <= 0 or self.hand_period_ms <= 0:
            raise ConfigError("hand circle radius and period must be positive")
        if self.trigger_offset_ms < 0:
            raise ConfigError("trigger offset must be non-negative")
        if self.transform_channel is not None:
            try:
                ChannelKind(self.transform_channel)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    @property
    def n_cycles(self) -> int:
        return int(self.duration_ms // self.cycle_ms)

    def transform_kind(self) -> ChannelKind:
        if self.transform_channel is not None:
            return ChannelKind(self.transform_channel)
        if self.architecture == "original":
            return ChannelKind.ReliableOrderedRelay
        return ChannelKind.ReliablePeer

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        kw = dict(d)
        known = {f for f in cls.__dataclass_fields__}
        extra = set(kw) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        try:
            if "network" in kw:
                kw["network"] = NetworkProfile.from_dict(kw["network"])
            if "seed" in kw:
                kw["seed"] = int(kw["seed"])
            cfg = cls(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "network"}
        d["network"] = self.network.to_dict()
        return d


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def shipped_config(name: str) -> ExperimentConfig:
    """Load one of the bundled configs: 'original', 'proposed' or 'constant'."""
    text = resources.files("avatarsync.data.configs").joinpath(f"{name}.json").read_text()
    return ExperimentConfig.from_dict(json.loads(text))


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    audio_ms: float
    transform_ms: float

    @property
    def offset_ms(self) -> float:
        return self.audio_ms - self.transform_ms


@dataclass
class ExperimentReport:
    records: list[CycleRecord]
    mean_ms: float
    sd_ms: float
    discarded_audio: int
    config: ExperimentConfig
    seed: int
    missing_cycles: list[int] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "mean_ms": self.mean_ms,
            "sd_ms": self.sd_ms,
            "n": len(self.records),
            "discarded_audio": self.discarded_audio,
            "seed": self.seed,
        }

    def to_csv(self) -> str:
        return records_to_csv(self.records)


def summarize(offsets) -> tuple[float, float]:
    """Arithmetic mean and sample (n-1) standard deviation."""
    xs = [float(x) for x in offsets]
    if len(xs) < 2:
        raise ValueError("standard deviation needs at least two records")
    return statistics.fmean(xs), statistics.stdev(xs)


def records_to_csv(records: list[CycleRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cycle", "audio_ms", "transform_ms", "offset_ms"])
    for r in records:
        w.writerow([r.cycle, repr(r.audio_ms), repr(r.transform_ms), repr(r.offset_ms)])
    return buf.getvalue()


def hand_position(t: float, config: ExperimentConfig, center: Vec3 | None = None) -> Vec3:
    """Left-hand target on a circle in the avatar's frontal (x-y) plane.

    `t` is time since the motion was triggered; `center` defaults to the
    reference avatar's bind-pose left hand.
    """
    if t < 0:
        raise ValueError("time must be non-negative")
    if center is None:
        center = _reference_hand_center()
    phase = 2.0 * math.pi * (t % config.hand_period_ms) / config.hand_period_ms
    r = config.hand_radius_m
    return center + Vec3(r * math.cos(phase), r * math.sin(phase), 0.0)


_REFERENCE: tuple[Skeleton, BoneMapping] | None = None


def _reference_avatar() -> tuple[Skeleton, BoneMapping]:
    global _REFERENCE
    if _REFERENCE is None:
        s = canonical_skeleton()
        _REFERENCE = (s, map_bones(s))
    return _REFERENCE


def _reference_hand_center() -> Vec3:
    s, m = _reference_avatar()
    return bind_effector_positions(s, m)["left_hand"]


class _PoseSource:
    """Full-body packet entries per motion time, solved by IK and memoized.

    The motion repeats every cycle, so only one cycle's worth of poses is
    ever solved.
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.skeleton, self.mapping = _reference_avatar()
        self.rest = bind_effector_positions(self.skeleton, self.mapping)
        self._cache: dict[float, tuple[TransformEntry, ...]] = {}

    def entries(self, motion_t: float) -> tuple[TransformEntry, ...]:
        key = motion_t % self.config.hand_period_ms
        got = self._cache.get(key)
        if got is None:
            goal = hand_position(key, self.config, self.rest["left_hand"])
            solved = solve_body_pose(
                self.skeleton, self.mapping,
                IKTarget(self.rest["head"]), IKTarget(goal), IKTarget(self.rest["right_hand"]),
            )
            world = forward_kinematics(self.skeleton, solved.pose)
            got = tuple(
                TransformEntry(int(slot), world[e.bone].position, world[e.bone].rotation)
                for slot, e in sorted(self.mapping.entries.items())
            )
            self._cache[key] = got
        return got


class _Observer:
    def __init__(self, config: ExperimentConfig, rest_hand: Vec3):
        self.config = config
        self.frames_per_cycle = int(round(config.cycle_ms / config.audio_frame_ms))
        self.audio: dict[int, float] = {}
        self.first_motion: dict[int, float] = {}
        # per cycle: (latest sequence seen, its hand position)
        self._last_seen: dict[int, tuple[int, Vec3]] = {}
        self._pending: dict[int, list[tuple[float, Vec3]]] = {}
        self.rest_hand = rest_hand

    def on_audio(self, payload: bytes, seq: int, t: float) -> None:
        cycle = seq // self.frames_per_cycle
        if cycle not in self.audio or t < self.audio[cycle]:
            self.audio[cycle] = t

    def on_transform(self, payload: bytes, seq: int, t: float) -> None:
        pkt = decode(payload)
        hand = pkt.entry(int(CanonicalSlot.LeftHand))
        if hand is None:
            return
        cfg = self.config
        cycle = int((pkt.timestamp_ms - cfg.trigger_offset_ms + 0.5) // cfg.cycle_ms)
        pos = hand.position
        prev = self._last_seen.get(cycle)
        if prev is None or seq > prev[0]:
            self._last_seen[cycle] = (seq, pos)
        self._pending.setdefault(cycle, []).append((t, pos))

    def resolve(self) -> None:
        """Apply the first-motion rule once every arrival is known."""
        for cycle, arrivals in sorted(self._pending.items()):
            if cycle == 0:
                rest = self.rest_hand
            elif cycle - 1 in self._last_seen:
                rest = self._last_seen[cycle - 1][1]
            else:
                continue
            for t, pos in arrivals:  # arrival order
                if pos.distance(rest) > MOTION_THRESHOLD_M:
                    self.first_motion[cycle] = t
                    break


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    config.validate()
    sim = Simulator(config.seed)
    poses = _PoseSource(config)
    obs = _Observer(config, poses.rest["left_hand"])
    net = config.network
    audio = Channel(sim, "audio", ChannelKind.MediaRelay, net, on_deliver=obs.on_audio)
    transforms = Channel(sim, "transform", config.transform_kind(), net,
                         on_deliver=obs.on_transform)

    n_cycles = config.n_cycles
    frames = obs.frames_per_cycle
    interval = 1000.0 / config.send_rate_hz
    per_cycle = int(math.ceil(config.cycle_ms / interval - 1e-9))

    for c in range(n_cycles):
        start = c * config.cycle_ms
        for k in range(frames):
            t = start + k * config.audio_frame_ms
            seq = c * frames + k
            frame = AudioFrame(SENDER_ID, seq, int(round(t)), AUDIO_PAYLOAD_BYTES)
            sim.at(t, _sender(audio, encode_audio(frame), seq))
        for j in range(per_cycle):
            motion_t = j * interval
            t = start + config.trigger_offset_ms + motion_t
            seq = c * per_cycle + j
            pkt = TransformPacket(SENDER_ID, seq, int(round(t)), poses.entries(motion_t))
            sim.at(t, _sender(transforms, encode_packet(pkt), seq))

    sim.run_until_idle()
    obs.resolve()

    records = []
    missing = []
    limit = config.duration_ms + 10_000.0
    for c in range(n_cycles):
        a = obs.audio.get(c)
        m = obs.first_motion.get(c)
        if a is None or m is None or not (0 <= a <= limit and 0 <= m <= limit):
            missing.append(c)
            continue
        records.append(CycleRecord(c, a, m))

    offsets = [r.offset_ms for r in records]
    if len(offsets) >= 2:
        mean, sd = summarize(offsets)
    elif offsets:
        mean, sd = offsets[0], float("nan")
    else:
        mean = sd = float("nan")
    return ExperimentReport(records, mean, sd, audio.jitter_buffer.discarded, config,
                            config.seed, missing)


def _sender(channel: Channel, payload: bytes, seq: int):
    return lambda: channel.send(payload, seq)


def with_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    return replace(config, seed=seed)


def read_records_csv(text: str) -> list[CycleRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    expected = ["cycle", "audio_ms", "transform_ms", "offset_ms"]
    if header != expected:
        raise ValueError(f"CSV header {header} does not match {expected}")
    return [CycleRecord(int(c), float(a), float(m)) for c, a, m, _ in reader]
