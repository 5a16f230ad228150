import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from avatarsync.math3d import Quat, Vec3
from avatarsync.wire import (
    AudioFrame, BadMagic, DecodeError, DuplicateSlot, EncodeError, InvalidRotation, InvalidSlot,
    TransformEntry, TransformPacket, Truncated, UnsupportedType, UnsupportedVersion, decode,
    decode_packet, dequantize_position, dequantize_rotation, encode_audio, encode_packet,
    quantize_position, quantize_rotation, rotation_fields, seq_distance, seq_newer,
)

from conftest import random_quat

EMPTY = bytes.fromhex("AB51 11 0001 0000 00000000")


def random_packet(rng: random.Random) -> TransformPacket:
    slots = rng.sample(range(17), rng.randint(0, 17))
    entries = tuple(
        TransformEntry(s, Vec3(*(rng.uniform(-32.7, 32.7) for _ in range(3))), random_quat(rng))
        for s in slots
    )
    return TransformPacket(rng.randrange(65536), rng.randrange(65536), rng.randrange(2**32), entries)


def assert_close(a: TransformPacket, b: TransformPacket):
    assert (a.sender, a.sequence, a.timestamp_ms) == (b.sender, b.sequence, b.timestamp_ms)
    assert [e.slot for e in a.entries] == [e.slot for e in b.entries]
    for x, y in zip(a.entries, b.entries):
        for u, v in zip(x.position.as_list(), y.position.as_list()):
            assert abs(u - v) <= 0.0005 + 1e-12
        assert math.degrees(x.rotation.angle_to(y.rotation)) <= 0.5


def test_quantize_position_examples():
    assert quantize_position(Vec3()) == (0, 0, 0)
    assert quantize_position(Vec3(1.2345, -0.0004, 2.0)) == (1235, 0, 2000)
    assert quantize_position(Vec3(-0.0005, 0.0005, 32.767)) == (-1, 1, 32767)
    with pytest.raises(EncodeError, match="x"):
        quantize_position(Vec3(40, 0, 0))
    with pytest.raises(EncodeError, match="z"):
        quantize_position(Vec3(0, 0, -32.768))


@given(st.floats(-32.767, 32.767), st.floats(-32.767, 32.767), st.floats(-32.767, 32.767))
def test_position_roundtrip_half_millimeter(x, y, z):
    back = dequantize_position(quantize_position(Vec3(x, y, z)))
    for u, v in zip(back.as_list(), (x, y, z)):
        assert abs(u - v) <= 0.0005 + 1e-12


def test_quantize_rotation_examples():
    assert rotation_fields(quantize_rotation(Quat.identity())) == (0, (512, 512, 512))
    assert rotation_fields(quantize_rotation(Quat(0, 0, 0, 1))) == (3, (512, 512, 512))
    # sign normalization: -q encodes like q
    assert quantize_rotation(Quat(0, 0, 0, -1)) == quantize_rotation(Quat(0, 0, 0, 1))
    with pytest.raises(EncodeError):
        quantize_rotation(Quat(1.01, 0, 0, 0))


def test_rotation_roundtrip_1000():
    rng = random.Random(2)
    worst = 0.0
    for _ in range(1000):
        q = random_quat(rng)
        worst = max(worst, math.degrees(q.angle_to(dequantize_rotation(quantize_rotation(q)))))
    assert worst <= 0.5


def test_empty_packet_bytes():
    data = encode_packet(TransformPacket(1, 0, 0))
    assert data == EMPTY
    assert len(data) == 11
    assert decode_packet(data) == TransformPacket(1, 0, 0)


def test_hand_encoded_entry():
    p = TransformPacket(0x0203, 0x0405, 0x06070809,
                        (TransformEntry(7, Vec3(1.2345, -0.0004, 2.0), Quat.identity()),))
    word = (0 << 30) | (512 << 20) | (512 << 10) | 512
    expected = (bytes.fromhex("AB51 11 0203 0405 06070809") + bytes([7])
                + (1235).to_bytes(2, "big", signed=True) + (0).to_bytes(2, "big", signed=True)
                + (2000).to_bytes(2, "big", signed=True) + word.to_bytes(4, "big"))
    assert encode_packet(p) == expected


def test_full_packet_is_198_bytes():
    entries = tuple(TransformEntry(s, Vec3(), Quat.identity()) for s in range(17))
    assert len(encode_packet(TransformPacket(1, 2, 3, entries))) == 198


def test_random_roundtrip():
    rng = random.Random(9)
    for _ in range(500):
        p = random_packet(rng)
        data = encode_packet(p)
        assert data == encode_packet(p)
        assert_close(decode_packet(data), p)


def test_audio_roundtrip():
    f = AudioFrame(3, 65535, 123456, 160)
    data = encode_audio(f)
    assert len(data) == 11 + 2 + 160
    assert decode(data) == f


@pytest.mark.parametrize("mutate, err", [
    (lambda d: b"\x00\x00" + d[2:], BadMagic),
    (lambda d: d[:2] + b"\x21" + d[3:], UnsupportedVersion),
    (lambda d: d[:2] + b"\x12" + d[3:], UnsupportedType),
    (lambda d: d[:2] + b"\x14" + d[3:], UnsupportedType),
    (lambda d: d[:5], Truncated),
    (lambda d: d[:-3], Truncated),
    (lambda d: d + d[11:22], DuplicateSlot),
    (lambda d: d[:11] + b"\x11" + d[12:], InvalidSlot),
])
def test_decode_errors(mutate, err):
    p = TransformPacket(1, 2, 3, (TransformEntry(4, Vec3(0.1, 0.2, 0.3), Quat.identity()),
                                  TransformEntry(5, Vec3(), Quat.identity())))
    with pytest.raises(err):
        decode_packet(mutate(encode_packet(p)))


def test_invalid_rotation_word():
    # three components at the top level sum to 1.5 > 1, not a unit quaternion
    bad = EMPTY + bytes([0, 0, 0, 0, 0, 0, 0]) + ((1023 << 20) | (1023 << 10) | 1023).to_bytes(4, "big")
    with pytest.raises(InvalidRotation):
        decode(bad)


def test_encode_rejects_bad_packets():
    e = TransformEntry(3, Vec3(), Quat.identity())
    with pytest.raises(EncodeError):
        encode_packet(TransformPacket(1, 0, 0, (e, e)))
    with pytest.raises(EncodeError):
        encode_packet(TransformPacket(1, 0, 0, (TransformEntry(17, Vec3(), Quat.identity()),)))
    with pytest.raises(EncodeError):
        encode_packet(TransformPacket(70000, 0, 0))


@settings(max_examples=2000)
@given(st.binary(max_size=300))
def test_decoder_value_or_error(data):
    try:
        decode(data)
    except DecodeError:
        pass


@settings(max_examples=500)
@given(st.binary(min_size=0, max_size=200))
def test_decoder_with_valid_header(body):
    try:
        decode(EMPTY + body)
    except DecodeError:
        pass


def test_sequence_arithmetic():
    assert seq_distance(0, 1) == 1
    assert seq_distance(65535, 0) == 1
    assert seq_distance(0, 65535) == -1
    assert seq_newer(65530, 3)
    assert not seq_newer(3, 65530)
    assert not seq_newer(7, 7)


@given(st.integers(0, 65535), st.integers(-32767, 32767))
def test_sequence_distance_inverts_offset(a, k):
    assert seq_distance(a, (a + k) & 0xFFFF) == k
