"""Corruption-fingerprint pipeline.

Corrupted packets wait in a bounded push-out queue until the correct
copy of the same sequence number arrives via retransmission; the byte
diff feeds an error-length histogram whose peak structure identifies
the interfering technology.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum

DEFAULT_QUEUE_CAPACITY = 16
DEFAULT_MIN_SAMPLES = 20
MAX_ERROR_LEN = 121  # frame length minus the length byte

# a colliding ZigBee frame corrupts its airtime minus the 5-byte physical
# header, so the interferer length is the peak position plus that header
PHY_OVERHEAD_BYTES = 5

CONTROL_BAND = (24, 30)  # error lengths typical of basic-rate control bursts
DATA_BAND = (2, 6)       # error lengths typical of high-rate data bursts


@dataclass(frozen=True, slots=True)
class QueueEntry:
    source_id: str
    seq: int
    payload: bytes
    time_us: int


class CorruptedPacketQueue:
    """Bounded FIFO; inserting into a full queue evicts the oldest entry."""

    def __init__(self, capacity: int = DEFAULT_QUEUE_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.entries: deque[QueueEntry] = deque()

    def __len__(self) -> int:
        return len(self.entries)

    def push(self, entry: QueueEntry) -> None:
        if len(self.entries) == self.capacity:
            self.entries.popleft()
        self.entries.append(entry)

    def pop_matches(self, source_id: str, seq: int) -> list[QueueEntry]:
        """Remove and return every entry with this (source, seq)."""
        matched = [e for e in self.entries if e.source_id == source_id and e.seq == seq]
        if matched:
            self.entries = deque(
                e for e in self.entries if not (e.source_id == source_id and e.seq == seq)
            )
        return matched

    def clear(self) -> None:
        self.entries.clear()


def diff_count(corrupted: bytes, correct: bytes) -> int:
    """Number of byte positions where the two buffers differ."""
    if len(corrupted) != len(correct):
        raise ValueError(
            f"length mismatch: {len(corrupted)} != {len(correct)}"
        )
    return sum(1 for a, b in zip(corrupted, correct) if a != b)


class ErrorHistogram:
    """Empirical frequency of erroneous-byte counts per corrupted packet."""

    def __init__(self):
        self.counts = [0] * (MAX_ERROR_LEN + 1)  # index 1..121 used
        self.total = 0

    def add(self, error_len: int, n: int = 1) -> None:
        if not 1 <= error_len <= MAX_ERROR_LEN:
            raise ValueError(f"error length {error_len} outside 1..{MAX_ERROR_LEN}")
        self.counts[error_len] += n
        self.total += n

    def density(self, error_len: int) -> float:
        if self.total == 0:
            return 0.0
        return self.counts[error_len] / self.total

    def densities(self) -> list[float]:
        """Raw densities indexed 0..121; index 0 is always 0."""
        if self.total == 0:
            return [0.0] * (MAX_ERROR_LEN + 1)
        return [c / self.total for c in self.counts]

    def reset(self) -> None:
        self.counts = [0] * (MAX_ERROR_LEN + 1)
        self.total = 0

    def to_csv(self) -> str:
        lines = ["error_len,count,density"]
        for k in range(1, MAX_ERROR_LEN + 1):
            lines.append(f"{k},{self.counts[k]},{self.density(k):.9f}")
        return "\n".join(lines) + "\n"


def on_corrupted(
    queue: CorruptedPacketQueue,
    source_id: str,
    seq: int,
    payload: bytes,
    time_us: int,
) -> bool:
    """Store a corrupted-but-received packet; returns True (nack emitted)."""
    queue.push(QueueEntry(source_id=source_id, seq=seq, payload=payload, time_us=time_us))
    return True


def on_correct(
    queue: CorruptedPacketQueue,
    histogram: ErrorHistogram,
    source_id: str,
    seq: int,
    payload: bytes,
    time_us: int,
) -> int:
    """Match a correctly received packet against queued corrupted copies.

    Every queued copy of the same (source, seq) contributes one
    histogram sample.  Returns the number of matches (0 allowed).
    """
    matched = 0
    for entry in queue.pop_matches(source_id, seq):
        if len(entry.payload) != len(payload):
            continue  # length changed mid-flight (reconfiguration); not comparable
        errors = diff_count(entry.payload, payload)
        if errors > 0:
            histogram.add(min(errors, MAX_ERROR_LEN))
            matched += 1
    return matched


@dataclass(frozen=True, slots=True)
class Peak:
    position: int      # raw-density mode within the smoothed maximum
    density: float     # raw density at that position
    prominence: float  # smoothed height above the higher flanking minimum


def smoothed_densities(histogram: ErrorHistogram, halfwidth: int = 1) -> list[float]:
    """Moving average over 2*halfwidth+1 bins, truncated at the edges."""
    raw = histogram.densities()
    out = [0.0] * (MAX_ERROR_LEN + 1)
    for k in range(1, MAX_ERROR_LEN + 1):
        lo = max(1, k - halfwidth)
        hi = min(MAX_ERROR_LEN, k + halfwidth)
        out[k] = sum(raw[lo : hi + 1]) / (hi - lo + 1)
    return out


def _prominence(s: list[float], k: int) -> float:
    """Height above the higher of the two flanking minima.

    Each flank extends until terrain higher than the peak (or the edge);
    the minimum within that span is the flank base.  A peak sitting on
    the domain edge has only one flank and keys off that one alone.
    """
    peak = s[k]
    left_min = None
    i = k - 1
    while i >= 1 and s[i] <= peak:
        left_min = s[i] if left_min is None else min(left_min, s[i])
        i -= 1
    right_min = None
    i = k + 1
    while i <= MAX_ERROR_LEN and s[i] <= peak:
        right_min = s[i] if right_min is None else min(right_min, s[i])
        i += 1
    flanks = [m for m in (left_min, right_min) if m is not None]
    if not flanks:
        return peak
    return peak - max(flanks)


def detect_peaks(
    histogram: ErrorHistogram,
    smoothing_halfwidth: int = 1,
    min_density: float = 0.05,
    min_prominence: float = 0.03,
) -> list[Peak]:
    """Strict local maxima of the smoothed density.

    A bin qualifies when its smoothed density clears min_density and its
    prominence clears min_prominence; ties resolve toward the smaller
    error length.  Each qualifying maximum is then pinned to the raw
    mode inside its smoothing window, so a single-bin spike reports its
    own position and full density rather than the plateau the moving
    average spreads it into.  Peaks return sorted by descending density.
    """
    if histogram.total < 1:
        return []
    raw = histogram.densities()
    s = smoothed_densities(histogram, smoothing_halfwidth)
    peaks: list[Peak] = []
    seen: set[int] = set()
    for k in range(1, MAX_ERROR_LEN + 1):
        left_ok = k == 1 or s[k] > s[k - 1]
        right_ok = k == MAX_ERROR_LEN or s[k] >= s[k + 1]
        if not (left_ok and right_ok):
            continue
        if s[k] < min_density:
            continue
        prom = _prominence(s, k)
        if prom < min_prominence:
            continue
        lo = max(1, k - smoothing_halfwidth)
        hi = min(MAX_ERROR_LEN, k + smoothing_halfwidth)
        pos = max(range(lo, hi + 1), key=lambda i: (raw[i], -i))
        if pos in seen:
            continue
        seen.add(pos)
        peaks.append(Peak(position=pos, density=raw[pos], prominence=prom))
    peaks.sort(key=lambda p: (-p.density, p.position))
    return peaks


class Verdict(str, Enum):
    WEAK_LINK = "weak_link"
    ZIGBEE_HIDDEN = "zigbee_hidden"
    BLUETOOTH = "bluetooth"
    WIFI_CONTROL_ONLY = "wifi_control_only"
    WIFI_CONTROL_DATA = "wifi_control_data"
    GENERIC_COEXISTENCE = "generic_coexistence"
    UNKNOWN = "unknown"


@dataclass(frozen=True, slots=True)
class Classification:
    verdict: Verdict
    sample_count: int
    peaks: tuple[Peak, ...] = ()
    interferer_length: int | None = None  # hidden-terminal frame length estimate

    @property
    def detail(self) -> str:
        if self.verdict is Verdict.ZIGBEE_HIDDEN:
            return f"len={self.interferer_length}"
        return ""


def classify(
    histogram: ErrorHistogram,
    min_samples: int = DEFAULT_MIN_SAMPLES,
    smoothing_halfwidth: int = 1,
    min_density: float = 0.05,
    min_prominence: float = 0.03,
) -> Classification:
    """Rule-based verdict from the histogram's peak structure.

    Rules apply in a fixed order, first match wins; the function is a
    pure function of (histogram, thresholds).
    """
    total = histogram.total
    if total < min_samples:
        return Classification(verdict=Verdict.UNKNOWN, sample_count=total)

    peaks = detect_peaks(histogram, smoothing_halfwidth, min_density, min_prominence)
    kw = dict(sample_count=total, peaks=tuple(peaks))
    d = histogram.densities()
    s = smoothed_densities(histogram, smoothing_halfwidth)

    def in_band(pos, band):
        return band[0] <= pos <= band[1]

    # 1: data burst peak plus control-band peak, the saddle shape
    data_peak = next((p for p in peaks if in_band(p.position, DATA_BAND)), None)
    ctrl_peak = next((p for p in peaks if in_band(p.position, CONTROL_BAND)), None)
    if data_peak and ctrl_peak:
        return Classification(verdict=Verdict.WIFI_CONTROL_DATA, **kw)

    # 2: a lone control-band peak
    if len(peaks) == 1 and in_band(peaks[0].position, CONTROL_BAND):
        return Classification(verdict=Verdict.WIFI_CONTROL_ONLY, **kw)

    # 3: everything shallow with extra mass at 80..90 byte bursts
    if max(d[1:]) < 0.08:
        tail = sum(d[80:91])
        mid = sum(d[40:80]) / 40.0
        if tail >= 2.0 * mid:
            return Classification(verdict=Verdict.BLUETOOTH, **kw)

    # 4: dominant peak away from both the 1-byte edge and the control band
    if peaks:
        dominant = peaks[0]
        if dominant.position >= 7 and not in_band(dominant.position, CONTROL_BAND):
            return Classification(
                verdict=Verdict.ZIGBEE_HIDDEN,
                interferer_length=dominant.position + PHY_OVERHEAD_BYTES,
                **kw,
            )

    # 5: dominant 1-byte peak with a wide base
    if any(p.position == 1 for p in peaks) and d[1] >= 0.2 and sum(d[2:21]) >= 0.3:
        return Classification(verdict=Verdict.GENERIC_COEXISTENCE, **kw)

    # 6: monotone decay from a dominant 1-byte mass
    if d[1] >= max(d[1:]) and all(s[k] >= s[k + 1] for k in range(1, 10)):
        return Classification(verdict=Verdict.WEAK_LINK, **kw)

    return Classification(verdict=Verdict.UNKNOWN, **kw)
