"""Link adaptation: map a fingerprint verdict to a countermeasure, feed
it back into the running scenario, and measure throughput around the
adaptation instant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .engine import Outcome, SimTrace
from .fingerprint import (
    Classification,
    CorruptedPacketQueue,
    DEFAULT_MIN_SAMPLES,
    DEFAULT_QUEUE_CAPACITY,
    ErrorHistogram,
    Verdict,
    classify,
    on_correct,
    on_corrupted,
)
from .spectrum import (
    RadioChannel,
    Technology,
    spectral_overlap,
    zigbee_channel,
    INDEX_RANGE,
)


class ActionKind(str, Enum):
    SWAP_CHANNEL = "swap_channel"
    REDUCE_PACKET_LENGTH = "reduce_packet_length"
    ENABLE_REDUNDANCY = "enable_redundancy"
    ENABLE_RTS_CTS = "enable_rts_cts"
    NONE = "none"


REDUCED_LENGTH_BYTES = 64  # halves the per-frame exposure window


@dataclass(frozen=True, slots=True)
class Action:
    kind: ActionKind
    channel_index: int | None = None
    length_bytes: int | None = None

    @property
    def detail(self) -> str:
        if self.kind is ActionKind.SWAP_CHANNEL:
            return f"channel={self.channel_index}"
        if self.kind is ActionKind.REDUCE_PACKET_LENGTH:
            return f"length={self.length_bytes}"
        return ""


NO_ACTION = Action(kind=ActionKind.NONE)


def overlap_free_channel(
    current_index: int, wifi_channels: list[RadioChannel]
) -> int | None:
    """First ZigBee channel with zero overlap against every given WiFi
    channel, skipping the current one."""
    lo, hi = INDEX_RANGE[Technology.ZIGBEE]
    for idx in range(lo, hi + 1):
        if idx == current_index:
            continue
        candidate = zigbee_channel(idx)
        if all(
            spectral_overlap(candidate, w).fraction == 0.0 for w in wifi_channels
        ):
            return idx
    return None


def policy(
    classification: Classification,
    current_channel_index: int,
    wifi_channels: list[RadioChannel],
) -> Action:
    """Countermeasure for a verdict; pure and total over the verdicts."""
    v = classification.verdict
    if v in (Verdict.WIFI_CONTROL_DATA, Verdict.WIFI_CONTROL_ONLY):
        target = overlap_free_channel(current_channel_index, wifi_channels)
        if target is None:
            return NO_ACTION  # no escape channel exists; stay put
        return Action(kind=ActionKind.SWAP_CHANNEL, channel_index=target)
    if v is Verdict.BLUETOOTH:
        return Action(
            kind=ActionKind.REDUCE_PACKET_LENGTH, length_bytes=REDUCED_LENGTH_BYTES
        )
    if v is Verdict.WEAK_LINK:
        return Action(kind=ActionKind.ENABLE_REDUNDANCY)
    if v is Verdict.ZIGBEE_HIDDEN:
        return Action(kind=ActionKind.ENABLE_RTS_CTS)
    return NO_ACTION


class LinkController:
    """Live fingerprint pipeline for one victim link.

    Owns the corrupted-packet queue and the histogram; consulted by the
    engine on every victim reception.  When adaptation is enabled, a
    conclusive verdict returns an Action for the engine to apply; the
    histogram and queue reset after every applied action so the next
    detection starts fresh.
    """

    def __init__(
        self,
        victim_channel_index: int,
        wifi_channels: list[RadioChannel],
        queue_capacity: int = DEFAULT_QUEUE_CAPACITY,
        min_samples: int = DEFAULT_MIN_SAMPLES,
        adapt_enabled: bool = True,
        source_id: str = "victim",
    ):
        self.queue = CorruptedPacketQueue(capacity=queue_capacity)
        self.histogram = ErrorHistogram()
        self.min_samples = min_samples
        self.adapt_enabled = adapt_enabled
        self.source_id = source_id
        self.channel_index = victim_channel_index
        self.wifi_channels = wifi_channels
        self.matched_total = 0
        self.nacks = 0
        self.classification_log: list[tuple[int, str, str, int]] = []
        self.detection_time_us: int | None = None
        self.detection_matches: int | None = None
        self._pending_action: Action | None = None

    def observe_corrupted(self, time_us: int, seq: int, received: bytes) -> None:
        if on_corrupted(self.queue, self.source_id, seq, received, time_us):
            self.nacks += 1

    def observe_clean(self, time_us: int, seq: int, payload: bytes) -> Action | None:
        matched = on_correct(
            self.queue, self.histogram, self.source_id, seq, payload, time_us
        )
        if matched == 0:
            return None
        self.matched_total += matched
        cls = classify(self.histogram, min_samples=self.min_samples)
        self.classification_log.append(
            (time_us, cls.verdict.value, cls.detail, cls.sample_count)
        )
        if not self.adapt_enabled:
            return None
        action = policy(cls, self.channel_index, self.wifi_channels)
        if action.kind is ActionKind.NONE:
            return None
        if self.detection_time_us is None:
            self.detection_time_us = time_us
            self.detection_matches = self.matched_total
        self._pending_action = action
        return action

    def on_action_applied(self, time_us: int) -> None:
        action = self._pending_action
        self._pending_action = None
        if action is not None and action.kind is ActionKind.SWAP_CHANNEL:
            self.channel_index = action.channel_index
        # stale pre-action samples would smear the next fingerprint
        self.histogram.reset()
        self.queue.clear()


@dataclass(slots=True)
class LinkStats:
    timeline: list[int] = field(default_factory=list)  # clean receptions per bin
    bin_us: int = 1_000_000
    detection_time_us: int | None = None
    detection_matches: int | None = None
    actions: list[tuple[int, str, str]] = field(default_factory=list)
    pre_action_pps: float | None = None
    post_action_pps: float | None = None
    gain: float | None = None

    def timeline_csv(self) -> str:
        lines = ["second,clean_pps"]
        for i, n in enumerate(self.timeline):
            lines.append(f"{i},{n}")
        return "\n".join(lines) + "\n"


def measure(
    trace: SimTrace,
    bin_us: int = 1_000_000,
    detection_time_us: int | None = None,
    detection_matches: int | None = None,
) -> LinkStats:
    """Throughput timeline plus the step around the first action.

    The pre/post means exclude the bin containing the action instant so
    the step is measured between settled regimes.
    """
    n_bins = max(1, -(-trace.duration_us // bin_us))
    timeline = [0] * n_bins
    for e in trace.events:
        if e.outcome is Outcome.CLEAN:
            timeline[min(e.time_us // bin_us, n_bins - 1)] += 1
    action_time = detection_time_us
    if action_time is None and trace.actions:
        action_time = trace.actions[0][0]
    stats = LinkStats(
        timeline=timeline,
        bin_us=bin_us,
        detection_time_us=action_time,
        detection_matches=detection_matches,
        actions=list(trace.actions),
    )
    if action_time is not None:
        action_bin = action_time // bin_us
        pre = timeline[:action_bin]
        post = timeline[action_bin + 1 :]
        if pre:
            stats.pre_action_pps = sum(pre) / len(pre)
        if post:
            stats.post_action_pps = sum(post) / len(post)
        if stats.pre_action_pps and stats.post_action_pps is not None:
            stats.gain = (
                stats.post_action_pps - stats.pre_action_pps
            ) / stats.pre_action_pps
    return stats
