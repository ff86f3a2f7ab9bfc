"""Mode 01 (current data) response decoding for the PIDs used in fuel estimation.

Input is the payload after the transport layer has been stripped: the mode
echo byte ``0x41``, the PID byte, then the data bytes A, B, ...

    >>> decode(parse_hex("41 0D 3C"))
    ChannelReading(channel=<Channel.SPEED: 'speed'>, value=60.0)
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

from .errors import LengthMismatch, TruncatedFrame, UnknownPid, WrongMode

MODE01_RESPONSE = 0x41


class Channel(enum.Enum):
    SPEED = "speed"
    RPM = "rpm"
    MAF = "maf"
    MAP = "map"
    IAT = "iat"
    ABS_LOAD = "abs_load"
    FUEL_RATE = "fuel_rate"


UNITS = {
    Channel.SPEED: "km/h",
    Channel.RPM: "rev/min",
    Channel.MAF: "g/s",
    Channel.MAP: "kPa",
    Channel.IAT: "degC",
    Channel.ABS_LOAD: "%",
    Channel.FUEL_RATE: "l/h",
}


@dataclass(frozen=True)
class _PidDef:
    channel: Channel
    nbytes: int
    decode: Callable[[bytes], float]
    encode: Callable[[float], bytes]
    lo: float
    hi: float


def _u16(d: bytes) -> int:
    return 256 * d[0] + d[1]


def _pack16(n: int) -> bytes:
    return bytes((n >> 8, n & 0xFF))


# Standard mode 01 scalings.
PIDS: dict[int, _PidDef] = {
    0x0D: _PidDef(Channel.SPEED, 1,
                  lambda d: float(d[0]),
                  lambda v: bytes((round(v),)),
                  0.0, 255.0),
    0x0C: _PidDef(Channel.RPM, 2,
                  lambda d: _u16(d) / 4.0,
                  lambda v: _pack16(round(v * 4)),
                  0.0, 16383.75),
    0x10: _PidDef(Channel.MAF, 2,
                  lambda d: _u16(d) / 100.0,
                  lambda v: _pack16(round(v * 100)),
                  0.0, 655.35),
    0x0B: _PidDef(Channel.MAP, 1,
                  lambda d: float(d[0]),
                  lambda v: bytes((round(v),)),
                  0.0, 255.0),
    0x0F: _PidDef(Channel.IAT, 1,
                  lambda d: float(d[0] - 40),
                  lambda v: bytes((round(v) + 40,)),
                  -40.0, 215.0),
    0x43: _PidDef(Channel.ABS_LOAD, 2,
                  lambda d: _u16(d) * 100.0 / 255.0,
                  lambda v: _pack16(round(v * 255 / 100)),
                  0.0, 25700.0),
    0x5E: _PidDef(Channel.FUEL_RATE, 2,
                  lambda d: _u16(d) / 20.0,
                  lambda v: _pack16(round(v * 20)),
                  0.0, 3276.75),
}

PID_FOR_CHANNEL = {d.channel: pid for pid, d in PIDS.items()}

# Physical range of each channel, inclusive.
CHANNEL_RANGES = {d.channel: (d.lo, d.hi) for d in PIDS.values()}


@dataclass(frozen=True)
class PidFrame:
    raw_bytes: bytes
    mode_echo: int
    pid: int
    data: bytes


@dataclass(frozen=True)
class ChannelReading:
    channel: Channel
    value: float

    @property
    def unit(self) -> str:
        return UNITS[self.channel]


def parse_frame(raw) -> PidFrame:
    """Split and validate a mode 01 response.

    Raises TruncatedFrame, WrongMode, UnknownPid or LengthMismatch; any
    other byte content is rejected through one of those.
    """
    raw = bytes(raw)
    if len(raw) < 2:
        raise TruncatedFrame(f"frame has {len(raw)} byte(s), need at least 2")
    if raw[0] != MODE01_RESPONSE:
        raise WrongMode(f"mode byte 0x{raw[0]:02X}, expected 0x41")
    pid = raw[1]
    spec = PIDS.get(pid)
    if spec is None:
        raise UnknownPid(f"PID 0x{pid:02X} not supported")
    data = raw[2:]
    if len(data) != spec.nbytes:
        raise LengthMismatch(
            f"PID 0x{pid:02X} needs {spec.nbytes} data byte(s), got {len(data)}")
    return PidFrame(raw_bytes=raw, mode_echo=raw[0], pid=pid, data=data)


def parse_hex(text: str) -> PidFrame:
    """Parse an ASCII hex frame such as ``"41 0D 3C"`` or ``"410D3C"``."""
    compact = "".join(text.split())
    if len(compact) % 2:
        raise TruncatedFrame(f"odd number of hex digits in {text!r}")
    try:
        raw = bytes.fromhex(compact)
    except ValueError:
        raise TruncatedFrame(f"not a hex frame: {text!r}") from None
    return parse_frame(raw)


def decode(frame: PidFrame) -> ChannelReading:
    spec = PIDS.get(frame.pid)
    if spec is None:
        raise UnknownPid(f"PID 0x{frame.pid:02X} not supported")
    if len(frame.data) != spec.nbytes:
        raise LengthMismatch(
            f"PID 0x{frame.pid:02X} needs {spec.nbytes} data byte(s)")
    return ChannelReading(spec.channel, spec.decode(frame.data))


def encode(channel: Channel, value: float) -> bytes:
    """Build the response frame that reports ``value`` for ``channel``.

    ``value`` is rounded to the nearest step of the channel's scaling.
    """
    lo, hi = CHANNEL_RANGES[channel]
    if not lo <= value <= hi:
        raise ValueError(f"{channel.value}={value} outside [{lo}, {hi}]")
    pid = PID_FOR_CHANNEL[channel]
    return bytes((MODE01_RESPONSE, pid)) + PIDS[pid].encode(value)


def encode_hex(channel: Channel, value: float) -> str:
    return " ".join(f"{b:02X}" for b in encode(channel, value))


def in_range(channel: Channel, value: float) -> bool:
    lo, hi = CHANNEL_RANGES[channel]
    return lo <= value <= hi
