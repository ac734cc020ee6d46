"""Per-byte corruption of a victim ZigBee frame.

Turns time/frequency overlap with interfering frames, plus weak-SNR
noise, into a boolean mask over the victim's bytes.  Byte i of a frame
starting at S occupies [S + 32*i, S + 32*(i+1)) microseconds.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .spectrum import Technology
from .traffic import Frame, ZIGBEE_BYTE_US, airtime_us

# 5-byte synchronization header plus the length byte: corruption here
# prevents reception of the frame entirely
PHY_HEADER_BYTES = 5
HEADER_BYTES = 6


@dataclass(slots=True)
class CorruptionMask:
    bits: list[bool]

    @classmethod
    def clean(cls, length_bytes: int) -> "CorruptionMask":
        return cls(bits=[False] * length_bytes)

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def error_count(self) -> int:
        return sum(self.bits)

    @property
    def payload_error_count(self) -> int:
        return sum(self.bits[HEADER_BYTES:])

    def error_positions(self) -> list[int]:
        return [i for i, b in enumerate(self.bits) if b]


def header_hit(mask: CorruptionMask) -> bool:
    """True when the synchronization header or length byte is corrupted."""
    return any(mask.bits[:HEADER_BYTES])


def merge(masks: list[CorruptionMask]) -> CorruptionMask:
    """Byte-wise OR of equal-length masks."""
    if not masks:
        raise ValueError("merge requires at least one mask")
    n = len(masks[0])
    for m in masks[1:]:
        if len(m) != n:
            raise ValueError(f"mask length mismatch: {len(m)} != {n}")
    out = [False] * n
    for m in masks:
        for i, b in enumerate(m.bits):
            if b:
                out[i] = True
    return CorruptionMask(bits=out)


def corrupting_window(interferer: Frame) -> tuple[int, int]:
    """Half-open time interval [start, end) in which the interferer can
    flip victim bytes.

    A ZigBee interferer only corrupts after its own 5-byte physical
    header: a receiver locked onto the victim sees no energy advantage
    during the interferer's preamble.  WiFi and Bluetooth bursts count
    in full; their framing is absorbed by the intensity calibration.
    """
    if interferer.technology is Technology.ZIGBEE:
        head = airtime_us(PHY_HEADER_BYTES, interferer.bitrate_bps)
        return interferer.start_us + head, interferer.end_us
    return interferer.start_us, interferer.end_us


def collision_mask(
    victim: Frame,
    interferer: Frame,
    p_corrupt: float,
    rng: random.Random,
) -> CorruptionMask:
    """Mask from one interferer frame.

    Each victim byte whose time slot intersects the corrupting window is
    flipped with probability p_corrupt; bytes outside the window are
    never touched.  Coins are drawn in ascending byte order, one per
    eligible byte, so an independent microsecond-resolution oracle using
    the same generator reproduces the mask exactly.
    """
    n = victim.length_bytes
    mask = CorruptionMask.clean(n)
    ws, we = corrupting_window(interferer)
    if we <= victim.start_us or ws >= victim.end_us:
        return mask
    first = max(0, (ws - victim.start_us) // ZIGBEE_BYTE_US)
    last = min(n - 1, (we - 1 - victim.start_us) // ZIGBEE_BYTE_US)
    for i in range(first, last + 1):
        b_start = victim.start_us + i * ZIGBEE_BYTE_US
        b_end = b_start + ZIGBEE_BYTE_US
        if ws < b_end and b_start < we:
            if rng.random() < p_corrupt:
                mask.bits[i] = True
    return mask


@dataclass(frozen=True, slots=True)
class WeakLinkParams:
    """Two-state error chain for a low-SNR link.

    p_symbol is the chance one 4-bit symbol decodes wrong after
    de-spreading; a byte is two symbols.  burst_continue clusters errors:
    given a corrupted byte, the next byte is corrupted with this
    probability instead, which is what makes the measured error-length
    density non-geometric.
    """

    p_symbol: float = 0.004
    burst_continue: float = 0.25

    def __post_init__(self):
        if not 0.0 <= self.p_symbol < 1.0:
            raise ValueError("p_symbol must be in [0, 1)")
        if not 0.0 <= self.burst_continue < 1.0:
            raise ValueError("burst_continue must be in [0, 1)")

    @property
    def p_byte(self) -> float:
        return 1.0 - (1.0 - self.p_symbol) ** 2


def weak_link_mask(
    length_bytes: int,
    params: WeakLinkParams,
    rng: random.Random,
) -> CorruptionMask:
    """Noise mask over a whole frame from the two-state chain."""
    bits = [False] * length_bytes
    p_enter = params.p_byte
    p_stay = params.burst_continue
    corrupt = False
    rand = rng.random
    for i in range(length_bytes):
        p = p_stay if corrupt else p_enter
        corrupt = rand() < p
        bits[i] = corrupt
    return CorruptionMask(bits=bits)
