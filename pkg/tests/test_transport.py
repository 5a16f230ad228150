import math
import statistics
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from avatarsync.transport import (ChannelClosed, Channel, ChannelKind as K, JitterBuffer,
                                  NetworkProfile, PathProfile, Simulator, receiver_audio_clock)


def relay_profile(**kw) -> NetworkProfile:
    base = dict(sender_server=PathProfile(30), server_observer=PathProfile(30),
                relay_processing_ms=5, media_processing_ms=5, encryption_ms=2)
    base.update(kw)
    return NetworkProfile(**base)


def collect(sim, name, kind, profile, **kw):
    got = []
    ch = Channel(sim, name, kind, profile, on_deliver=lambda p, s, t: got.append((s, t)), **kw)
    return ch, got


def test_direct_peer_example():
    sim = Simulator(0)
    prof = NetworkProfile(direct=PathProfile(50), encryption_ms=2, peer_route="direct")
    ch, got = collect(sim, "dc", K.ReliablePeer, prof)
    sim.at(1000, lambda: ch.send(b"x"))
    sim.run_until_idle()
    assert got == [(0, 1052.0)]


def test_relay_example():
    sim = Simulator(0)
    ch, got = collect(sim, "ws", K.ReliableOrderedRelay, relay_profile())
    sim.at(0, lambda: ch.send(b"x"))
    sim.run_until_idle()
    assert got == [(0, 65.0)]


def test_peer_through_sfu_adds_encryption_and_forwarding():
    sim = Simulator(0)
    ch, got = collect(sim, "dc", K.UnreliablePeer, relay_profile(sfu_forward_ms=1.0))
    sim.at(0, lambda: ch.send(b"x"))
    sim.run_until_idle()
    assert got == [(0, 2 + 30 + 1 + 30)]


def test_head_of_line_blocking_example():
    sim = Simulator(0)
    drop = lambda seq, attempt, hop: seq == 7 and attempt == 0
    ch, got = collect(sim, "ws", K.ReliableOrderedRelay, relay_profile(rto_ms=200), drop=drop)
    sim.at(0, lambda: ch.send(b"a", seq=7))
    sim.at(0, lambda: ch.send(b"b", seq=8))
    trace = sim.run_until_idle()
    assert got == [(7, 265.0), (8, 265.0)]
    assert [e for e in trace if e.event == "arrive"][0].sequence == 8  # held, not delivered
    assert sum(e.event == "retransmit" for e in trace) == 1


def test_reliable_peer_does_not_hold_later_packets():
    sim = Simulator(0)
    drop = lambda seq, attempt, hop: seq == 7 and attempt == 0
    prof = NetworkProfile(direct=PathProfile(50), encryption_ms=0, peer_route="direct")
    ch, got = collect(sim, "dc", K.ReliablePeer, prof, drop=drop)
    sim.at(0, lambda: ch.send(b"a", seq=7))
    sim.at(0, lambda: ch.send(b"b", seq=8))
    sim.run_until_idle()
    assert got == [(8, 50.0), (7, 250.0)]


def test_retransmission_copies_can_be_lost_too():
    sim = Simulator(0)
    drop = lambda seq, attempt, hop: attempt < 3
    ch, got = collect(sim, "ws", K.ReliableOrderedRelay, relay_profile(), drop=drop)
    sim.at(0, lambda: ch.send(b"a"))
    sim.run_until_idle()
    assert got == [(0, 600 + 65.0)]
    assert ch.copies == 4 and ch.lost_copies == 3


def test_closed_channel_rejects_send():
    ch = Channel(Simulator(0), "x", K.UnreliablePeer, relay_profile())
    ch.close()
    with pytest.raises(ChannelClosed):
        ch.send(b"")


def test_empty_queue_empty_trace():
    assert Simulator(3).run_until_idle() == []


def test_single_send_single_delivery():
    sim = Simulator(0)
    ch, _ = collect(sim, "a", K.UnreliablePeer, relay_profile())
    sim.at(0, lambda: ch.send(b""))
    trace = sim.run_until_idle()
    assert [e.event for e in trace].count("deliver") == 1


def busy_trace(seed: int) -> str:
    prof = relay_profile(sender_server=PathProfile(30, 10, 1.0, 0.1),
                         server_observer=PathProfile(30, 10, 1.0, 0.1),
                         media_uplink=PathProfile(20, 3, 0.5, 0.05))
    sim = Simulator(seed)
    chans = [Channel(sim, k.value, k, prof) for k in K]
    for i in range(200):
        for ch in chans:
            sim.at(i * 20.0, lambda ch=ch: ch.send(b"p"))
    sim.run_until_idle()
    return sim.trace_csv()


def test_seeded_runs_identical():
    a, b = busy_trace(11), busy_trace(11)
    assert a == b
    assert a.splitlines()[0] == "time_ms,event,channel,sequence"
    assert busy_trace(12) != a


def test_monotone_clock():
    sim = Simulator(0)
    sim.at(10, lambda: None)
    sim.run_until_idle()
    with pytest.raises(ValueError):
        sim.schedule(5, lambda: None)
    text = busy_trace(4).splitlines()[1:]
    times = [float(line.split(",")[0]) for line in text]
    assert times == sorted(times)


def test_ties_dispatch_in_insertion_order():
    sim = Simulator(0)
    seen = []
    for i in range(5):
        sim.at(7.0, lambda i=i: seen.append(i))
    sim.run_until_idle()
    assert seen == list(range(5))


@pytest.mark.parametrize("kind", list(K))
def test_conservation_at_loss_0_2(kind):
    lossy = PathProfile(20, 5, 0.5, 0.2)
    prof = NetworkProfile(sender_server=lossy, server_observer=lossy, direct=lossy,
                          relay_processing_ms=1, jitter_buffer_frames=1000, peer_route="direct")
    sim = Simulator(1)
    ch = Channel(sim, "c", kind, prof)
    n = 10_000
    for i in range(n):
        sim.at(i * 20.0, lambda: ch.send(b""))
    trace = sim.run_until_idle()
    counts = Counter(e.sequence for e in trace if e.event == "deliver")
    assert all(c == 1 for c in counts.values())
    if kind.reliable:
        assert len(counts) == n
    else:
        hops = len(prof.route(kind)[0])
        expected = n * 0.8 ** hops
        assert abs(len(counts) - expected) < 5 * math.sqrt(n * 0.25)  # binomial, generous
        late = sum(e.event == "late" for e in trace)
        assert len(counts) + late == n - ch.lost_copies


def test_ordered_relay_delivers_increasing_sequences():
    lossy = PathProfile(20, 15, 1.0, 0.2)
    sim = Simulator(2)
    ch, got = collect(sim, "ws", K.ReliableOrderedRelay,
                      NetworkProfile(sender_server=lossy, server_observer=lossy))
    for i in range(2000):
        sim.at(i * 10.0, lambda: ch.send(b""))
    sim.run_until_idle()
    seqs = [s for s, _ in got]
    assert seqs == list(range(2000))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 39))
def test_unreliable_peer_has_no_head_of_line_coupling(seed, removed):
    lossy = PathProfile(25, 20, 1.0, 0.3)
    prof = NetworkProfile(direct=lossy, peer_route="direct")

    def run(skip):
        sim = Simulator(seed)
        ch, got = collect(sim, "dc", K.UnreliablePeer, prof)
        for i in range(40):
            if i != skip:
                sim.at(i * 5.0, lambda i=i: ch.send(b"", seq=i))
        sim.run_until_idle()
        return dict(got)

    full, partial = run(None), run(removed)
    full.pop(removed, None)
    assert full == partial


def test_lognormal_variance_matches_within_10_percent():
    hop = PathProfile(40, 10, 0.5, 0.0)
    prof = NetworkProfile(direct=hop, encryption_ms=0, peer_route="direct")
    sim = Simulator(7)
    ch, got = collect(sim, "dc", K.UnreliablePeer, prof)
    n = 10_000
    for i in range(n):
        sim.at(float(i), lambda: ch.send(b""))
    sim.run_until_idle()
    latencies = [t - s for s, t in got]
    assert len(latencies) == n
    # closed-form lognormal moments, independent of the implementation
    s2 = 0.5 ** 2
    var = 10 ** 2 * math.exp(s2) * (math.exp(s2) - 1)
    mean = 40 + 10 * math.exp(s2 / 2)
    assert hop.jitter_variance() == pytest.approx(var)
    assert statistics.variance(latencies) == pytest.approx(var, rel=0.10)
    assert statistics.fmean(latencies) == pytest.approx(mean, rel=0.02)
    assert min(latencies) >= 40


# --- jitter buffer --------------------------------------------------------

def test_constant_network_buffer_two():
    arrivals = {k: 100.0 + 20 * k for k in range(10)}
    played, discarded = receiver_audio_clock(arrivals, 2)
    assert discarded == 0
    assert played == {k: 100.0 + 40 + 20 * k for k in range(10)}


def test_zero_depth_plays_on_arrival():
    arrivals = {k: 100.0 + 20 * k for k in range(10)}
    played, _ = receiver_audio_clock(arrivals, 0)
    assert played == arrivals


def test_frame_100ms_late_is_discarded():
    arrivals = {k: 100.0 + 20 * k for k in range(10)}
    arrivals[5] += 100
    played, discarded = receiver_audio_clock(arrivals, 2)
    assert discarded == 1 and 5 not in played


def test_slightly_late_frame_plays_at_arrival():
    jb = JitterBuffer(2)
    assert jb.offer(0, 0.0) == 40.0
    assert jb.offer(1, 70.0) == 70.0  # due 60, still inside its slot
    assert jb.offer(2, 101.0) is None  # due 80, slot ended at 100


def test_media_channel_plays_through_buffer():
    sim = Simulator(0)
    ch, got = collect(sim, "audio", K.MediaRelay, relay_profile(jitter_buffer_frames=2))
    for k in range(5):
        sim.at(20.0 * k, lambda: ch.send(b""))
    sim.run_until_idle()
    assert got == [(k, 65 + 40 + 20.0 * k) for k in range(5)]
