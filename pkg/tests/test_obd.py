import pytest
from hypothesis import given, strategies as st

from ecodrive import obd
from ecodrive.errors import (FrameError, LengthMismatch, TruncatedFrame,
                             UnknownPid, WrongMode)
from ecodrive.obd import Channel


def test_parse_speed_frame():
    f = obd.parse_frame(bytes([0x41, 0x0D, 0x3C]))
    assert f.pid == 0x0D
    assert f.data == bytes([0x3C])
    assert f.mode_echo == 0x41


@pytest.mark.parametrize("raw, exc", [
    ([0x41, 0x0C, 0x1A], LengthMismatch),
    ([0x41, 0x0D, 0x3C, 0x00], LengthMismatch),
    ([0x7F, 0x01, 0x12], WrongMode),
    ([0x41, 0x05, 0x50], UnknownPid),
    ([0x41], TruncatedFrame),
    ([], TruncatedFrame),
])
def test_parse_rejects(raw, exc):
    with pytest.raises(exc):
        obd.parse_frame(bytes(raw))


@pytest.mark.parametrize("text, channel, value", [
    ("41 0D 3C", Channel.SPEED, 60.0),
    ("41 0C 1A F8", Channel.RPM, 1726.0),
    ("41 10 03 E8", Channel.MAF, 10.0),
    ("41 0F 00", Channel.IAT, -40.0),
    ("41 0B 65", Channel.MAP, 101.0),
    ("41 43 00 FF", Channel.ABS_LOAD, 100.0),
    ("41 5E 00 78", Channel.FUEL_RATE, 6.0),
    ("410D3C", Channel.SPEED, 60.0),
])
def test_decode_values(text, channel, value):
    r = obd.decode(obd.parse_hex(text))
    assert r.channel is channel
    assert r.value == pytest.approx(value, abs=1e-12)


def test_unit_labels():
    assert obd.decode(obd.parse_hex("41 10 03 E8")).unit == "g/s"


@pytest.mark.parametrize("text", ["41 0D 3", "zz 0D 3C", "41 0D 3C 0"])
def test_parse_hex_garbage(text):
    with pytest.raises(FrameError):
        obd.parse_hex(text)


def test_decode_rejects_unknown_pid_frame():
    bogus = obd.PidFrame(b"\x41\x99\x00", 0x41, 0x99, b"\x00")
    with pytest.raises(UnknownPid):
        obd.decode(bogus)


_STEP = {Channel.SPEED: 1.0, Channel.RPM: 0.25, Channel.MAF: 0.01, Channel.MAP: 1.0,
         Channel.IAT: 1.0, Channel.ABS_LOAD: 100 / 255, Channel.FUEL_RATE: 0.05}
_COUNTS = {Channel.SPEED: 255, Channel.RPM: 65535, Channel.MAF: 65535, Channel.MAP: 255,
           Channel.IAT: 255, Channel.ABS_LOAD: 65535, Channel.FUEL_RATE: 65535}


@given(st.sampled_from(list(Channel)), st.data())
def test_encode_decode_round_trip(channel, data):
    k = data.draw(st.integers(0, _COUNTS[channel]))
    lo = obd.CHANNEL_RANGES[channel][0]
    value = lo + k * _STEP[channel]
    value = min(value, obd.CHANNEL_RANGES[channel][1])
    got = obd.decode(obd.parse_frame(obd.encode(channel, value))).value
    assert got == pytest.approx(value, abs=1e-9)


@given(st.integers(0, 255), st.binary(min_size=0, max_size=3))
def test_decode_total_over_known_pids(pid_index, data):
    pid = sorted(obd.PIDS)[pid_index % len(obd.PIDS)]
    raw = bytes([0x41, pid]) + data
    try:
        frame = obd.parse_frame(raw)
    except LengthMismatch:
        assert len(data) != obd.PIDS[pid].nbytes
        return
    r = obd.decode(frame)
    assert obd.in_range(r.channel, r.value)


def test_encode_out_of_range():
    with pytest.raises(ValueError):
        obd.encode(Channel.SPEED, 300)


def test_encode_hex_text():
    assert obd.encode_hex(Channel.RPM, 1726) == "41 0C 1A F8"
