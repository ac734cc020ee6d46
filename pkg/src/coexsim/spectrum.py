"""Frequency-domain model of the 2.4 GHz ISM band.

Channel maps for the three radio technologies, band-overlap computation,
and the calibrated table that turns overlap into a per-byte corruption
probability.  All frequencies are in MHz.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from importlib import resources


class Technology(str, Enum):
    ZIGBEE = "zigbee"
    WIFI = "wifi"
    BLUETOOTH = "bluetooth"


class InterfererClass(str, Enum):
    """Row key of the intensity table."""

    WIFI_DATA = "wifi_data"
    WIFI_CONTROL = "wifi_control"
    ZIGBEE_COCHANNEL = "zigbee_cochannel"
    BLUETOOTH_SLOT = "bluetooth_slot"


class ChannelError(ValueError):
    """Channel index outside the technology's valid range."""


# index range, channel width (MHz) per technology
INDEX_RANGE = {
    Technology.ZIGBEE: (11, 26),
    Technology.WIFI: (1, 14),
    Technology.BLUETOOTH: (0, 78),
}
_WIDTH_MHZ = {
    Technology.ZIGBEE: 2.0,
    Technology.WIFI: 22.0,
    Technology.BLUETOOTH: 1.0,
}


def center_frequency(technology: Technology, index: int) -> float:
    """Center frequency in MHz of a channel index."""
    lo, hi = INDEX_RANGE[technology]
    if not lo <= index <= hi:
        raise ChannelError(
            f"{technology.value} channel {index} out of range [{lo}, {hi}]"
        )
    if technology is Technology.ZIGBEE:
        return 2405.0 + 5.0 * (index - 11)
    if technology is Technology.WIFI:
        return 2412.0 + 5.0 * (index - 1)
    return 2402.0 + index


@dataclass(frozen=True, slots=True)
class RadioChannel:
    technology: Technology
    index: int
    center_mhz: float
    width_mhz: float

    @classmethod
    def of(cls, technology: Technology, index: int) -> "RadioChannel":
        return cls(
            technology=technology,
            index=index,
            center_mhz=center_frequency(technology, index),
            width_mhz=_WIDTH_MHZ[technology],
        )

    @property
    def low_mhz(self) -> float:
        return self.center_mhz - self.width_mhz / 2.0

    @property
    def high_mhz(self) -> float:
        return self.center_mhz + self.width_mhz / 2.0


def zigbee_channel(index: int) -> RadioChannel:
    return RadioChannel.of(Technology.ZIGBEE, index)


def wifi_channel(index: int) -> RadioChannel:
    return RadioChannel.of(Technology.WIFI, index)


def bluetooth_channel(index: int) -> RadioChannel:
    return RadioChannel.of(Technology.BLUETOOTH, index)


@dataclass(frozen=True, slots=True)
class OverlapDescriptor:
    """Band overlap seen from the victim's side.

    fraction is the share of the victim band covered by the interferer
    band.  offset_mhz is the absolute center distance; side is -1 when
    the victim sits below the interferer center and +1 when above, so
    signed_offset_mhz distinguishes the two skirts of a wide interferer.
    """

    fraction: float
    offset_mhz: float
    side: int

    @property
    def signed_offset_mhz(self) -> float:
        return self.side * self.offset_mhz


def spectral_overlap(victim: RadioChannel, interferer: RadioChannel) -> OverlapDescriptor:
    """Overlap of the interferer band onto the victim band."""
    lo = max(victim.low_mhz, interferer.low_mhz)
    hi = min(victim.high_mhz, interferer.high_mhz)
    covered = max(0.0, hi - lo)
    delta = victim.center_mhz - interferer.center_mhz
    return OverlapDescriptor(
        fraction=covered / victim.width_mhz,
        offset_mhz=abs(delta),
        side=-1 if delta < 0 else 1,
    )


@dataclass(frozen=True, slots=True)
class IntensityRow:
    interferer_class: InterfererClass
    offset_lo_mhz: float
    offset_hi_mhz: float
    p_corrupt: float

    def contains(self, signed_offset: float) -> bool:
        return self.offset_lo_mhz <= signed_offset < self.offset_hi_mhz

    def distance(self, signed_offset: float) -> float:
        if self.contains(signed_offset):
            return 0.0
        return min(
            abs(signed_offset - self.offset_lo_mhz),
            abs(signed_offset - self.offset_hi_mhz),
        )


class IntensityTable:
    """Per-byte corruption probability keyed by interferer class and
    signed center-offset bucket.

    Buckets are signed (victim center minus interferer center) because
    the measured WiFi skirt is markedly asymmetric: a victim 7 MHz below
    the WiFi center is corrupted far more than one 8 MHz above it.
    """

    CSV_HEADER = ("class", "offset_lo_mhz", "offset_hi_mhz", "p_corrupt")

    def __init__(self, rows: list[IntensityRow]):
        for row in rows:
            if not 0.0 <= row.p_corrupt <= 1.0:
                raise ValueError(f"p_corrupt {row.p_corrupt} outside [0, 1]")
            if row.offset_lo_mhz >= row.offset_hi_mhz:
                raise ValueError("empty offset bucket")
        self.rows = list(rows)

    def lookup(self, interferer_class: InterfererClass, overlap: OverlapDescriptor) -> float:
        """Corruption probability for an overlapping interferer.

        Disjoint bands always yield 0.  Otherwise the row whose bucket
        contains the signed offset wins; with no containing row the
        nearest bucket of the same class is used.
        """
        if overlap.fraction == 0.0:
            return 0.0
        candidates = [r for r in self.rows if r.interferer_class is interferer_class]
        if not candidates:
            raise KeyError(f"no intensity rows for class {interferer_class.value}")
        offset = overlap.signed_offset_mhz
        best = min(candidates, key=lambda r: (r.distance(offset), r.offset_lo_mhz))
        return best.p_corrupt

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(self.CSV_HEADER)
        for row in self.rows:
            writer.writerow(
                [
                    row.interferer_class.value,
                    f"{row.offset_lo_mhz:g}",
                    f"{row.offset_hi_mhz:g}",
                    f"{row.p_corrupt:g}",
                ]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "IntensityTable":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != cls.CSV_HEADER:
            raise ValueError(
                f"intensity table header must be {','.join(cls.CSV_HEADER)}"
            )
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if len(rec) != 4:
                raise ValueError(f"intensity table line {lineno}: expected 4 fields")
            try:
                rows.append(
                    IntensityRow(
                        interferer_class=InterfererClass(rec[0].strip()),
                        offset_lo_mhz=float(rec[1]),
                        offset_hi_mhz=float(rec[2]),
                        p_corrupt=float(rec[3]),
                    )
                )
            except ValueError as exc:
                raise ValueError(f"intensity table line {lineno}: {exc}") from exc
        return cls(rows)

    @classmethod
    def default(cls) -> "IntensityTable":
        """The shipped calibration (data/intensity_default.csv)."""
        text = (
            resources.files("coexsim.data")
            .joinpath("intensity_default.csv")
            .read_text(encoding="utf-8")
        )
        return cls.from_csv(text)


def corruption_intensity(
    table: IntensityTable,
    interferer_class: InterfererClass,
    overlap: OverlapDescriptor,
) -> float:
    """Per-byte corruption probability for one interferer frame."""
    return table.lookup(interferer_class, overlap)
