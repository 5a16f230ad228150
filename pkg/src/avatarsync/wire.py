"""Binary wire format for avatar transform packets and audio frames.

Layout (big-endian)::

    0  magic        u16  0xAB51
    2  version|type u8   high nibble version (1), low nibble packet type
    3  sender       u16
    5  sequence     u16  wrapping
    7  timestamp    u32  milliseconds
    11 body

Transform body: entries of 11 bytes each (slot u8, x/y/z i16 millimeters,
rotation u32 smallest-three), entry count implied by body length. Audio
body: payload size u16 followed by that many opaque bytes.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass

from .math3d import Quat, Vec3
from .skeleton import NUM_SLOTS

MAGIC = 0xAB51
VERSION = 1
TYPE_TRANSFORM = 0x01
TYPE_SCALE = 0x02  # reserved, not implemented
TYPE_AUDIO = 0x03

HEADER = struct.Struct(">HBHHI")
ENTRY = struct.Struct(">BhhhI")
AUDIO_SIZE = struct.Struct(">H")
HEADER_SIZE = HEADER.size  # 11
ENTRY_SIZE = ENTRY.size  # 11
AUDIO_FRAME_MS = 20
POSITION_LIMIT = 32.767
_AXIS_RANGE = 1.0 / math.sqrt(2.0)
_ROT_LEVELS = 1023


class EncodeError(ValueError):
    pass


class DecodeError(ValueError):
    pass


class BadMagic(DecodeError):
    pass


class UnsupportedVersion(DecodeError):
    pass


class UnsupportedType(DecodeError):
    pass


class Truncated(DecodeError):
    pass


class DuplicateSlot(DecodeError):
    pass


class InvalidSlot(DecodeError):
    pass


class InvalidRotation(DecodeError):
    pass


@dataclass(frozen=True)
class TransformEntry:
    slot: int
    position: Vec3
    rotation: Quat


@dataclass(frozen=True)
class TransformPacket:
    sender: int
    sequence: int
    timestamp_ms: int
    entries: tuple[TransformEntry, ...] = ()

    def entry(self, slot: int) -> TransformEntry | None:
        for e in self.entries:
            if e.slot == slot:
                return e
        return None


@dataclass(frozen=True)
class AudioFrame:
    sender: int
    sequence: int
    timestamp_ms: int
    payload_size: int = 0
    duration_ms: int = AUDIO_FRAME_MS


def _round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def quantize_position(v: Vec3) -> tuple[int, int, int]:
    out = []
    for axis, c in zip("xyz", (v.x, v.y, v.z)):
        if not math.isfinite(c) or abs(c) > POSITION_LIMIT:
            raise EncodeError(f"position {axis}={c!r} outside +/-{POSITION_LIMIT} m")
        out.append(_round_half_away(c * 1000.0))
    return out[0], out[1], out[2]


def dequantize_position(mm: tuple[int, int, int]) -> Vec3:
    return Vec3(mm[0] / 1000.0, mm[1] / 1000.0, mm[2] / 1000.0)


def quantize_rotation(q: Quat) -> int:
    comps = [q.w, q.x, q.y, q.z]
    n = math.sqrt(sum(c * c for c in comps))
    if not math.isfinite(n) or abs(n - 1.0) > 1e-3:
        raise EncodeError(f"rotation is not a unit quaternion (norm {n!r})")
    comps = [c / n for c in comps]
    largest = max(range(4), key=lambda i: abs(comps[i]))
    if comps[largest] < 0:
        comps = [-c for c in comps]
    word = largest << 30
    shift = 20
    for i, c in enumerate(comps):
        if i == largest:
            continue
        u = (c / _AXIS_RANGE + 1.0) * 0.5
        level = min(_ROT_LEVELS, max(0, int(math.floor(u * _ROT_LEVELS + 0.5))))
        word |= level << shift
        shift -= 10
    return word


def rotation_fields(word: int) -> tuple[int, tuple[int, int, int]]:
    """Split a rotation word into (dropped index, three 10-bit levels)."""
    return word >> 30, ((word >> 20) & 0x3FF, (word >> 10) & 0x3FF, word & 0x3FF)


def dequantize_rotation(word: int) -> Quat:
    largest, levels = rotation_fields(word)
    small = [(lv / _ROT_LEVELS * 2.0 - 1.0) * _AXIS_RANGE for lv in levels]
    rest = 1.0 - sum(c * c for c in small)
    comps = small[:largest] + [math.sqrt(max(0.0, rest))] + small[largest:]
    return Quat(*comps).normalized()


def _header(ptype: int, sender: int, sequence: int, timestamp_ms: int) -> bytes:
    if not 0 <= sender <= 0xFFFF:
        raise EncodeError(f"sender id {sender} does not fit 16 bits")
    return HEADER.pack(MAGIC, (VERSION << 4) | ptype, sender, sequence & 0xFFFF,
                       timestamp_ms & 0xFFFFFFFF)


def encode_packet(p: TransformPacket) -> bytes:
    if len(p.entries) > NUM_SLOTS:
        raise EncodeError(f"{len(p.entries)} entries exceed the {NUM_SLOTS}-slot rig")
    seen = set()
    parts = [_header(TYPE_TRANSFORM, p.sender, p.sequence, p.timestamp_ms)]
    for e in p.entries:
        if not 0 <= e.slot < NUM_SLOTS:
            raise EncodeError(f"slot index {e.slot} out of range")
        if e.slot in seen:
            raise EncodeError(f"slot {e.slot} appears twice")
        seen.add(e.slot)
        x, y, z = quantize_position(e.position)
        parts.append(ENTRY.pack(e.slot, x, y, z, quantize_rotation(e.rotation)))
    return b"".join(parts)


def encode_audio(f: AudioFrame) -> bytes:
    if not 0 <= f.payload_size <= 0xFFFF:
        raise EncodeError("audio payload size does not fit 16 bits")
    return (_header(TYPE_AUDIO, f.sender, f.sequence, f.timestamp_ms)
            + AUDIO_SIZE.pack(f.payload_size) + bytes(f.payload_size))


def _decode_header(data: bytes) -> tuple[int, int, int, int]:
    if len(data) < HEADER_SIZE:
        raise Truncated(f"{len(data)} bytes is shorter than the {HEADER_SIZE}-byte header")
    magic, vt, sender, seq, ts = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"bad magic 0x{magic:04X}")
    if vt >> 4 != VERSION:
        raise UnsupportedVersion(f"unsupported version {vt >> 4}")
    return vt & 0x0F, sender, seq, ts


def decode(data: bytes) -> TransformPacket | AudioFrame:
    """Decode either packet type; raises a DecodeError subclass on bad input."""
    data = bytes(data)
    ptype, sender, seq, ts = _decode_header(data)
    body = memoryview(data)[HEADER_SIZE:]
    if ptype == TYPE_TRANSFORM:
        if len(body) % ENTRY_SIZE:
            raise Truncated(f"transform body of {len(body)} bytes is not a whole number of entries")
        count = len(body) // ENTRY_SIZE
        if count > NUM_SLOTS:
            raise InvalidSlot(f"{count} entries exceed the {NUM_SLOTS}-slot rig")
        entries = []
        seen = set()
        for k in range(count):
            slot, x, y, z, word = ENTRY.unpack_from(body, k * ENTRY_SIZE)
            if slot >= NUM_SLOTS:
                raise InvalidSlot(f"slot index {slot} out of range")
            if slot in seen:
                raise DuplicateSlot(f"slot {slot} appears twice")
            seen.add(slot)
            _, levels = rotation_fields(word)
            small = [(lv / _ROT_LEVELS * 2.0 - 1.0) * _AXIS_RANGE for lv in levels]
            if sum(c * c for c in small) > 1.0:
                raise InvalidRotation(f"rotation word 0x{word:08X} is not a unit quaternion")
            entries.append(TransformEntry(slot, dequantize_position((x, y, z)),
                                          dequantize_rotation(word)))
        return TransformPacket(sender, seq, ts, tuple(entries))
    if ptype == TYPE_AUDIO:
        if len(body) < AUDIO_SIZE.size:
            raise Truncated("audio frame is missing its payload size")
        (size,) = AUDIO_SIZE.unpack_from(body)
        if len(body) - AUDIO_SIZE.size != size:
            raise Truncated(f"audio payload has {len(body) - AUDIO_SIZE.size} bytes, header says {size}")
        return AudioFrame(sender, seq, ts, size)
    raise UnsupportedType(f"packet type 0x{ptype:02X} is not supported")


def decode_packet(data: bytes) -> TransformPacket:
    out = decode(data)
    if not isinstance(out, TransformPacket):
        raise UnsupportedType("expected a transform packet")
    return out


def seq_distance(a: int, b: int) -> int:
    """Signed wrapping distance from a to b on 16-bit sequences, in [-32768, 32767]."""
    return ((b - a + 0x8000) & 0xFFFF) - 0x8000


def seq_newer(a: int, b: int) -> bool:
    """True when b comes after a (serial-number arithmetic)."""
    return 0 < seq_distance(a, b) < 0x8000
