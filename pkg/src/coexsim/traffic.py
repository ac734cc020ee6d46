"""Deterministic, seeded traffic generators.

Every generator is a pure function of (config, seed, duration): calling
it twice yields byte-identical frame sequences.  All times are integer
microseconds; airtimes round toward +infinity.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from enum import Enum

from .spectrum import RadioChannel, Technology, bluetooth_channel

ZIGBEE_BITRATE_BPS = 250_000          # one byte every 32 us
WIFI_CONTROL_BITRATE_BPS = 2_000_000  # DSSS basic rate
WIFI_DATA_BITRATE_BPS = 11_000_000
ZIGBEE_BYTE_US = 32
ZIGBEE_FRAME_BYTES = 122
SEQ_MODULO = 1 << 16

BLUETOOTH_SLOT_US = 625
BLUETOOTH_CHANNEL_COUNT = 79
# a packet releases the channel this long before its last slot ends
# (guard + return to the hop grid), so a 1-slot packet is on air 366 us
BLUETOOTH_TURNAROUND_US = 259
# establishment-phase hop interval is half a slot: 3200 hops/s
BLUETOOTH_ESTABLISHMENT_HALF_SLOTS = 2


class FrameKind(str, Enum):
    DATA = "data"
    CONTROL = "control"


class BluetoothMode(str, Enum):
    STEADY = "steady"
    ESTABLISHMENT = "establishment"


def airtime_us(length_bytes: int, bitrate_bps: int) -> int:
    """On-air duration, rounded up to a whole microsecond."""
    return math.ceil(length_bytes * 8 * 1_000_000 / bitrate_bps)


def derive_seed(master_seed: int, *parts) -> int:
    """Stable sub-seed derivation: independent streams never share draws."""
    tag = ":".join(str(p) for p in (master_seed, *parts))
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True, slots=True)
class Frame:
    technology: Technology
    source_id: str
    seq: int
    kind: FrameKind
    channel: RadioChannel
    start_us: int
    length_bytes: int
    bitrate_bps: int
    payload: bytes | None = None

    @property
    def airtime_us(self) -> int:
        return airtime_us(self.length_bytes, self.bitrate_bps)

    @property
    def end_us(self) -> int:
        return self.start_us + self.airtime_us


@dataclass(frozen=True, slots=True)
class StreamConfig:
    rate_pps: float
    length_bytes: int
    jitter_us: int = 0
    phase_us: int = 0
    rng_seed: int = 0

    def __post_init__(self):
        if self.rate_pps <= 0:
            raise ValueError("rate_pps must be positive")
        if self.jitter_us < 0:
            raise ValueError("jitter_us must be non-negative")

    @property
    def period_us(self) -> float:
        return 1_000_000.0 / self.rate_pps


def payload_bytes(seed: int, seq: int, n: int) -> bytes:
    """Deterministic pseudo-random frame content for one sequence number."""
    return random.Random(derive_seed(seed, "payload", seq)).randbytes(n)


def zigbee_schedule(cfg: StreamConfig, duration_us: int) -> list[tuple[int, int]]:
    """(seq, start_us) pairs for a jittered periodic sender.

    The nominal grid is phase + k * period; each start gets independent
    uniform jitter.  Starts are clamped to keep the half-duplex sender's
    frames from overlapping.
    """
    rng = random.Random(derive_seed(cfg.rng_seed, "zigbee-jitter"))
    air = airtime_us(cfg.length_bytes, ZIGBEE_BITRATE_BPS)
    out: list[tuple[int, int]] = []
    prev_end = None
    k = 0
    while True:
        nominal = cfg.phase_us + round(k * cfg.period_us)
        if nominal >= duration_us:
            break
        start = nominal + (rng.randint(-cfg.jitter_us, cfg.jitter_us) if cfg.jitter_us else 0)
        start = max(start, 0)
        if prev_end is not None and start < prev_end:
            start = prev_end
        out.append((k % SEQ_MODULO, start))
        prev_end = start + air
        k += 1
    return out


def zigbee_stream(
    cfg: StreamConfig,
    duration_us: int,
    channel: RadioChannel,
    source_id: str = "zigbee",
    with_payload: bool = False,
) -> list[Frame]:
    """Periodic ZigBee sender; seq increments by one per frame and wraps."""
    if duration_us <= 0:
        raise ValueError("duration_us must be positive")
    frames = []
    for seq, start in zigbee_schedule(cfg, duration_us):
        frames.append(
            Frame(
                technology=Technology.ZIGBEE,
                source_id=source_id,
                seq=seq,
                kind=FrameKind.DATA,
                channel=channel,
                start_us=start,
                length_bytes=cfg.length_bytes,
                bitrate_bps=ZIGBEE_BITRATE_BPS,
                payload=payload_bytes(cfg.rng_seed, seq, cfg.length_bytes)
                if with_payload
                else None,
            )
        )
    return frames


def wifi_stream(
    control_interval_us: int,
    control_length_bytes: int,
    data_rate_pps: float,
    data_length_bytes: int,
    duration_us: int,
    channel: RadioChannel,
    source_id: str = "wifi",
    control_phase_us: int = 0,
) -> list[Frame]:
    """Single WiFi transmitter: periodic control frames at the basic rate
    plus a data stream at 11 Mbps.

    Control frames keep their schedule; data frames due while a control
    frame is on air are suppressed (one radio, control first).
    """
    if duration_us <= 0:
        raise ValueError("duration_us must be positive")
    if data_rate_pps < 0:
        raise ValueError("data_rate_pps must be >= 0")
    controls: list[Frame] = []
    if control_interval_us > 0:
        ctrl_air = airtime_us(control_length_bytes, WIFI_CONTROL_BITRATE_BPS)
        if ctrl_air > control_interval_us:
            raise ValueError("control frames overlap: interval shorter than airtime")
        t = control_phase_us
        seq = 0
        while t < duration_us:
            controls.append(
                Frame(
                    technology=Technology.WIFI,
                    source_id=source_id,
                    seq=seq,
                    kind=FrameKind.CONTROL,
                    channel=channel,
                    start_us=t,
                    length_bytes=control_length_bytes,
                    bitrate_bps=WIFI_CONTROL_BITRATE_BPS,
                )
            )
            seq += 1
            t += control_interval_us

    datas: list[Frame] = []
    if data_rate_pps > 0:
        data_air = airtime_us(data_length_bytes, WIFI_DATA_BITRATE_BPS)
        period = 1_000_000.0 / data_rate_pps
        if data_air > period:
            raise ValueError(
                f"data airtime {data_air} us exceeds period {period:.1f} us"
            )
        ci = 0
        seq = 0
        k = 0
        while True:
            start = round(k * period)
            k += 1
            if start >= duration_us:
                break
            end = start + data_air
            # suppress any data frame that would collide with a control frame
            while ci < len(controls) and controls[ci].end_us <= start:
                ci += 1
            if ci < len(controls) and controls[ci].start_us < end:
                continue
            datas.append(
                Frame(
                    technology=Technology.WIFI,
                    source_id=source_id,
                    seq=seq,
                    kind=FrameKind.DATA,
                    channel=channel,
                    start_us=start,
                    length_bytes=data_length_bytes,
                    bitrate_bps=WIFI_DATA_BITRATE_BPS,
                )
            )
            seq += 1
    merged = sorted(controls + datas, key=lambda f: f.start_us)
    return merged


def bluetooth_stream(
    mode: BluetoothMode,
    slots_per_packet: int,
    duration_us: int,
    seed: int = 0,
    source_id: str = "bluetooth",
) -> list[Frame]:
    """Frequency-hopping transmitter over the 79 Bluetooth channels.

    Steady mode hops on the 625 us slot grid, holding the hop channel for
    slots_per_packet slots per packet.  Establishment mode hops every
    312.5 us (3200 hops/s) with short inquiry bursts.  Hop channels come
    from the stream's own seeded generator, uniform over the 79 channels.

    Frame timing uses a 1-byte-per-microsecond encoding (bitrate 8 Mbps)
    so the multi-slot airtime law slots*625 - 259 holds exactly; only the
    burst timing matters, corruption strength lives in the intensity table.
    """
    if duration_us <= 0:
        raise ValueError("duration_us must be positive")
    if mode is BluetoothMode.STEADY and slots_per_packet not in (1, 3, 5):
        raise ValueError("slots_per_packet must be 1, 3 or 5")
    rng = random.Random(derive_seed(seed, "bluetooth-hops"))
    frames = []
    if mode is BluetoothMode.STEADY:
        packet_period = slots_per_packet * BLUETOOTH_SLOT_US
        air = packet_period - BLUETOOTH_TURNAROUND_US
        seq = 0
        t = 0
        while t < duration_us:
            hop = rng.randrange(BLUETOOTH_CHANNEL_COUNT)
            frames.append(
                Frame(
                    technology=Technology.BLUETOOTH,
                    source_id=source_id,
                    seq=seq % SEQ_MODULO,
                    kind=FrameKind.DATA,
                    channel=bluetooth_channel(hop),
                    start_us=t,
                    length_bytes=air,
                    bitrate_bps=8_000_000,
                )
            )
            seq += 1
            t += packet_period
    else:
        # inquiry/page bursts: 68 us ID packets on a 312.5 us half-slot grid
        air = 68
        seq = 0
        k = 0
        while True:
            t = (k * BLUETOOTH_SLOT_US) // BLUETOOTH_ESTABLISHMENT_HALF_SLOTS
            if t >= duration_us:
                break
            hop = rng.randrange(BLUETOOTH_CHANNEL_COUNT)
            frames.append(
                Frame(
                    technology=Technology.BLUETOOTH,
                    source_id=source_id,
                    seq=seq % SEQ_MODULO,
                    kind=FrameKind.DATA,
                    channel=bluetooth_channel(hop),
                    start_us=t,
                    length_bytes=air,
                    bitrate_bps=8_000_000,
                )
            )
            seq += 1
            k += 1
    return frames
