"""Discrete-event coexistence simulator.

Merges the victim ZigBee stream with interferer timelines, applies
carrier-sense gating and the retransmission loop, resolves every victim
transmission into Dropped / Corrupted / Clean, and records a
deterministic trace.  Event time is integer microseconds.
"""

from __future__ import annotations

import bisect
import heapq
import random
from dataclasses import dataclass, field, replace
from enum import Enum

from .corruption import (
    HEADER_BYTES,
    CorruptionMask,
    WeakLinkParams,
    collision_mask,
    header_hit,
    merge,
    weak_link_mask,
)
from .spectrum import (
    InterfererClass,
    IntensityTable,
    RadioChannel,
    Technology,
    spectral_overlap,
    zigbee_channel,
)
from .traffic import (
    BluetoothMode,
    Frame,
    FrameKind,
    StreamConfig,
    ZIGBEE_BITRATE_BPS,
    airtime_us,
    bluetooth_stream,
    derive_seed,
    payload_bytes,
    wifi_stream,
    zigbee_schedule,
)

WEAK_LINK_SOURCE = "weak_link"


class ConfigError(ValueError):
    """Scenario inconsistency detected before the simulation starts."""


@dataclass(frozen=True, slots=True)
class ZigbeeInterferer:
    channel_index: int
    stream: StreamConfig
    source_id: str = ""


@dataclass(frozen=True, slots=True)
class WifiInterferer:
    channel_index: int
    control_interval_us: int = 102_400
    control_length_bytes: int = 208
    control_phase_us: int = 0
    data_rate_pps: float = 0.0
    data_length_bytes: int = 1500
    source_id: str = ""


@dataclass(frozen=True, slots=True)
class BluetoothInterferer:
    mode: BluetoothMode = BluetoothMode.STEADY
    slots_per_packet: int = 5
    source_id: str = ""


InterfererSpec = ZigbeeInterferer | WifiInterferer | BluetoothInterferer


@dataclass(frozen=True, slots=True)
class CcaConfig:
    """Carrier-sense rules per technology pair.

    WiFi senses only WiFi (serialized inside its own stream); Bluetooth
    never senses.  ZigBee senders sense co-channel ZigBee and, when
    enabled, WiFi frames that fully cover their channel.  A sender gives
    up carrier sensing after max_attempts failed checks and transmits:
    energy detection routinely misses wideband interferers, which is why
    collisions persist even with sensing re-enabled.
    """

    zigbee_cca_enabled: bool = False
    wifi_senses_zigbee: bool = False
    wifi_senses_wifi: bool = True
    bluetooth_senses_any: bool = False
    max_attempts: int = 3
    backoff_max_us: int = 2560


@dataclass(frozen=True, slots=True)
class ArqConfig:
    enabled: bool = False
    timeout_us: int = 10_000
    max_attempts: int = 8  # total transmissions per packet, first included


class Outcome(str, Enum):
    DROPPED = "dropped"
    CORRUPTED = "corrupted"
    CLEAN = "clean"


@dataclass(frozen=True, slots=True)
class ReceptionEvent:
    time_us: int          # end of the frame on air
    stream_id: str
    seq: int
    attempt: int
    outcome: Outcome
    error_count: int
    contributors: tuple[str, ...] = ()


@dataclass(slots=True)
class SimTrace:
    events: list[ReceptionEvent] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)
    interferer_sent: dict[str, int] = field(default_factory=dict)
    duration_us: int = 0
    actions: list[tuple[int, str, str]] = field(default_factory=list)
    classifications: list[tuple[int, str, str, int]] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["time_us,stream_id,seq,outcome,error_count"]
        for e in self.events:
            lines.append(
                f"{e.time_us},{e.stream_id},{e.seq},{e.outcome.value},{e.error_count}"
            )
        return "\n".join(lines) + "\n"


def parse_trace_csv(text: str) -> list[ReceptionEvent]:
    """Parse the reception-event CSV; diagnostics carry line numbers."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != "time_us,stream_id,seq,outcome,error_count":
        raise ValueError("trace line 1: missing or wrong header")
    events = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ValueError(f"trace line {lineno}: expected 5 fields, got {len(parts)}")
        try:
            events.append(
                ReceptionEvent(
                    time_us=int(parts[0]),
                    stream_id=parts[1],
                    seq=int(parts[2]),
                    attempt=0,
                    outcome=Outcome(parts[3]),
                    error_count=int(parts[4]),
                )
            )
        except ValueError as exc:
            raise ValueError(f"trace line {lineno}: {exc}") from exc
    return events


@dataclass(slots=True)
class ScenarioConfig:
    name: str
    victim: StreamConfig
    victim_channel_index: int
    interferers: list[InterfererSpec] = field(default_factory=list)
    weak_link: WeakLinkParams | None = None
    cca: CcaConfig = field(default_factory=CcaConfig)
    arq: ArqConfig = field(default_factory=ArqConfig)
    intensity: IntensityTable | None = None
    duration_us: int = 1_000_000
    master_seed: int = 1
    wifi_data_min_airtime_us: int = 800  # shorter data bursts are despread away

    def validate(self) -> None:
        if self.duration_us <= 0:
            raise ConfigError("scenario duration must be positive")
        victim_channel = zigbee_channel(self.victim_channel_index)
        air = airtime_us(self.victim.length_bytes, ZIGBEE_BITRATE_BPS)
        if air > self.victim.period_us:
            raise ConfigError("victim stream overruns its own period")
        table = self.intensity or IntensityTable.default()
        for i, spec in enumerate(self.interferers):
            if isinstance(spec, ZigbeeInterferer):
                ch = zigbee_channel(spec.channel_index)
                cls = InterfererClass.ZIGBEE_COCHANNEL
            elif isinstance(spec, WifiInterferer):
                ch = RadioChannel.of(Technology.WIFI, spec.channel_index)
                cls = InterfererClass.WIFI_DATA
            else:
                ch = None
                cls = InterfererClass.BLUETOOTH_SLOT
            if ch is not None:
                ov = spectral_overlap(victim_channel, ch)
                if ov.fraction > 0:
                    table.lookup(cls, ov)  # raises when the class has no rows


def carrier_sense_gate(
    sender_tech: Technology,
    sender_channel: RadioChannel,
    concurrent: list[Frame],
    cca: CcaConfig,
) -> int | None:
    """Return the end time of the blocking transmission, or None to
    transmit now.

    WiFi defers only to WiFi, Bluetooth never defers.  ZigBee defers to
    co-channel ZigBee and, when sensing is enabled, to WiFi frames whose
    overlap fraction over the sender's channel is 1.0 (wideband energy
    only rises above the detection threshold at full overlap).
    """
    block_end = None
    for frame in concurrent:
        defer = False
        if sender_tech is Technology.BLUETOOTH:
            defer = cca.bluetooth_senses_any
        elif sender_tech is Technology.WIFI:
            if frame.technology is Technology.WIFI:
                defer = cca.wifi_senses_wifi
            elif frame.technology is Technology.ZIGBEE:
                defer = cca.wifi_senses_zigbee
        else:  # zigbee sender
            if not cca.zigbee_cca_enabled:
                defer = False
            elif frame.technology is Technology.ZIGBEE:
                defer = spectral_overlap(sender_channel, frame.channel).fraction > 0
            elif frame.technology is Technology.WIFI:
                defer = spectral_overlap(sender_channel, frame.channel).fraction == 1.0
        if defer:
            block_end = frame.end_us if block_end is None else max(block_end, frame.end_us)
    return block_end


class _FrameIndex:
    """Committed frames sorted by start time, queryable by time window."""

    def __init__(self):
        self.starts: list[int] = []
        self.frames: list[Frame] = []
        self.max_air = 0

    def add(self, frame: Frame) -> None:
        pos = bisect.bisect_right(self.starts, frame.start_us)
        self.starts.insert(pos, frame.start_us)
        self.frames.insert(pos, frame)
        self.max_air = max(self.max_air, frame.airtime_us)

    def extend_sorted(self, frames: list[Frame]) -> None:
        for f in frames:
            self.add(f)

    def overlapping(self, start_us: int, end_us: int) -> list[Frame]:
        """Frames with [start, end) intersecting the given interval."""
        lo = bisect.bisect_left(self.starts, start_us - self.max_air)
        hi = bisect.bisect_left(self.starts, end_us)
        return [f for f in self.frames[lo:hi] if f.end_us > start_us]

    def on_air(self, t_us: int) -> list[Frame]:
        return self.overlapping(t_us, t_us + 1)


@dataclass(slots=True)
class _Sender:
    index: int
    source_id: str
    technology: Technology
    channel: RadioChannel
    length_bytes: int
    schedule: list[tuple[int, int]]  # (seq, nominal start)
    is_victim: bool
    busy_until: int = 0
    cca_rng: random.Random | None = None


_RESOLVE, _ATTEMPT, _DISPATCH = 0, 1, 2


def run(scenario: ScenarioConfig, controller=None) -> SimTrace:
    """Execute the scenario; deterministic for a given master seed."""
    scenario.validate()
    master = scenario.master_seed
    duration = scenario.duration_us
    table = scenario.intensity or IntensityTable.default()
    trace = SimTrace(duration_us=duration)

    static_index = _FrameIndex()
    dynamic_index = _FrameIndex()
    senders: list[_Sender] = []

    victim_cfg = replace(scenario.victim, rng_seed=derive_seed(master, "stream", 0))
    victim = _Sender(
        index=0,
        source_id="victim",
        technology=Technology.ZIGBEE,
        channel=zigbee_channel(scenario.victim_channel_index),
        length_bytes=scenario.victim.length_bytes,
        schedule=zigbee_schedule(victim_cfg, duration),
        is_victim=True,
        cca_rng=random.Random(derive_seed(master, "cca", 0)),
    )
    senders.append(victim)

    for i, spec in enumerate(scenario.interferers, start=1):
        seed = derive_seed(master, "stream", i)
        if isinstance(spec, ZigbeeInterferer):
            sid = spec.source_id or f"zigbee{i}"
            cfg = replace(spec.stream, rng_seed=seed)
            senders.append(
                _Sender(
                    index=i,
                    source_id=sid,
                    technology=Technology.ZIGBEE,
                    channel=zigbee_channel(spec.channel_index),
                    length_bytes=spec.stream.length_bytes,
                    schedule=zigbee_schedule(cfg, duration),
                    is_victim=False,
                    cca_rng=random.Random(derive_seed(master, "cca", i)),
                )
            )
            trace.interferer_sent[sid] = 0
        elif isinstance(spec, WifiInterferer):
            sid = spec.source_id or f"wifi{i}"
            frames = wifi_stream(
                control_interval_us=spec.control_interval_us,
                control_length_bytes=spec.control_length_bytes,
                data_rate_pps=spec.data_rate_pps,
                data_length_bytes=spec.data_length_bytes,
                duration_us=duration,
                channel=RadioChannel.of(Technology.WIFI, spec.channel_index),
                source_id=sid,
                control_phase_us=spec.control_phase_us,
            )
            static_index.extend_sorted(frames)
            trace.interferer_sent[sid] = len(frames)
        else:
            sid = spec.source_id or f"bluetooth{i}"
            frames = bluetooth_stream(
                mode=spec.mode,
                slots_per_packet=spec.slots_per_packet,
                duration_us=duration,
                seed=seed,
                source_id=sid,
            )
            static_index.extend_sorted(frames)
            trace.interferer_sent[sid] = len(frames)

    # mutable run state touched by adaptation actions
    state = {
        "victim_channel": victim.channel,
        "victim_length": victim.length_bytes,
        "weak_link": scenario.weak_link,
        "rts_cts": False,
    }
    packet_meta: dict[int, tuple[int, bytes]] = {}  # seq -> (length, content)
    counters = {"sent": 0, "dropped": 0, "corrupted": 0, "clean": 0, "skipped_originals": 0}
    overlap_cache: dict[tuple, object] = {}
    intensity_cache: dict[tuple, float] = {}

    def overlap_for(vch: RadioChannel, ich: RadioChannel):
        key = (vch.technology, vch.index, ich.technology, ich.index)
        if key not in overlap_cache:
            overlap_cache[key] = spectral_overlap(vch, ich)
        return overlap_cache[key]

    def intensity_for(cls: InterfererClass, vch: RadioChannel, ich: RadioChannel) -> float:
        key = (cls, vch.technology, vch.index, ich.technology, ich.index)
        if key not in intensity_cache:
            intensity_cache[key] = table.lookup(cls, overlap_for(vch, ich))
        return intensity_cache[key]

    def classify_frame(frame: Frame) -> InterfererClass:
        if frame.technology is Technology.ZIGBEE:
            return InterfererClass.ZIGBEE_COCHANNEL
        if frame.technology is Technology.BLUETOOTH:
            return InterfererClass.BLUETOOTH_SLOT
        if frame.kind is FrameKind.CONTROL:
            return InterfererClass.WIFI_CONTROL
        return InterfererClass.WIFI_DATA

    def resolve(frame: Frame, seq: int, attempt: int) -> None:
        length = frame.length_bytes
        masks: list[CorruptionMask] = []
        contributors: list[str] = []
        candidates = static_index.overlapping(frame.start_us, frame.end_us)
        candidates += [
            f
            for f in dynamic_index.overlapping(frame.start_us, frame.end_us)
            if f.source_id != frame.source_id
        ]
        for g in candidates:
            if g.technology is Technology.ZIGBEE and state["rts_cts"]:
                continue  # handshake keeps hidden co-channel senders off the air
            cls = classify_frame(g)
            if (
                cls is InterfererClass.WIFI_DATA
                and g.airtime_us < scenario.wifi_data_min_airtime_us
            ):
                continue
            ov = overlap_for(frame.channel, g.channel)
            if ov.fraction == 0.0:
                continue
            p = intensity_for(cls, frame.channel, g.channel)
            if p == 0.0:
                continue
            rng = random.Random(
                derive_seed(master, "mask", g.source_id, g.seq, seq, attempt)
            )
            m = collision_mask(frame, g, p, rng)
            if m.error_count:
                masks.append(m)
                if g.source_id not in contributors:
                    contributors.append(g.source_id)
        weak = state["weak_link"]
        if weak is not None:
            m = weak_link_mask(
                length, weak, random.Random(derive_seed(master, "weak", seq, attempt))
            )
            if m.error_count:
                masks.append(m)
                contributors.append(WEAK_LINK_SOURCE)
        mask = merge([CorruptionMask.clean(length)] + masks)

        if header_hit(mask):
            outcome = Outcome.DROPPED
        elif mask.error_count > 0:
            outcome = Outcome.CORRUPTED
        else:
            outcome = Outcome.CLEAN
        counters["sent"] += 1
        counters[outcome.value] += 1
        trace.events.append(
            ReceptionEvent(
                time_us=frame.end_us,
                stream_id=frame.source_id,
                seq=seq,
                attempt=attempt,
                outcome=outcome,
                error_count=mask.error_count,
                contributors=tuple(contributors),
            )
        )

        action = None
        if controller is not None:
            correct = packet_meta[seq][1][HEADER_BYTES:]
            if outcome is Outcome.CORRUPTED:
                received = bytearray(correct)
                grng = random.Random(derive_seed(master, "garble", seq, attempt))
                for i in range(HEADER_BYTES, length):
                    if mask.bits[i]:
                        received[i - HEADER_BYTES] ^= grng.randint(1, 255)
                controller.observe_corrupted(frame.end_us, seq, bytes(received))
            elif outcome is Outcome.CLEAN:
                action = controller.observe_clean(frame.end_us, seq, correct)
        if action is not None:
            apply_action(action, frame.end_us)

        if (
            outcome is not Outcome.CLEAN
            and scenario.arq.enabled
            and attempt < scenario.arq.max_attempts
        ):
            heapq.heappush(
                events,
                (
                    frame.end_us + scenario.arq.timeout_us,
                    _ATTEMPT,
                    next(counter),
                    victim.index,
                    seq,
                    attempt + 1,
                    0,
                ),
            )
        else:
            # stop-and-wait: the next original is dispatched only once the
            # current packet is delivered or abandoned
            heapq.heappush(events, (frame.end_us, _DISPATCH, next(counter)))

    def apply_action(action, now_us: int) -> None:
        from .adapt import ActionKind  # local import keeps modules acyclic

        if action.kind is ActionKind.NONE:
            return
        if action.kind is ActionKind.SWAP_CHANNEL:
            state["victim_channel"] = zigbee_channel(action.channel_index)
        elif action.kind is ActionKind.REDUCE_PACKET_LENGTH:
            state["victim_length"] = action.length_bytes
        elif action.kind is ActionKind.ENABLE_REDUNDANCY:
            weak = state["weak_link"]
            if weak is not None:
                state["weak_link"] = replace(weak, p_symbol=weak.p_symbol / 2.0)
        elif action.kind is ActionKind.ENABLE_RTS_CTS:
            state["rts_cts"] = True
        trace.actions.append((now_us, action.kind.value, action.detail))
        if controller is not None:
            controller.on_action_applied(now_us)

    def _count():
        n = 0
        while True:
            yield n
            n += 1

    counter = _count()
    events: list[tuple] = []
    for sender in senders:
        if sender.is_victim:
            continue
        for seq, nominal in sender.schedule:
            heapq.heappush(
                events, (nominal, _ATTEMPT, next(counter), sender.index, seq, 1, 0)
            )

    # the victim sender is strictly serial: one packet in service at a time,
    # originals that expire a full period while it retries are skipped
    stale_us = max(1, round(scenario.victim.period_us))
    dispatch_idx = 0
    if victim.schedule:
        heapq.heappush(events, (victim.schedule[0][1], _DISPATCH, next(counter)))

    def dispatch(now_us: int) -> None:
        nonlocal dispatch_idx
        while (
            dispatch_idx < len(victim.schedule)
            and victim.schedule[dispatch_idx][1] < now_us - stale_us
        ):
            dispatch_idx += 1
            counters["skipped_originals"] += 1
        if dispatch_idx >= len(victim.schedule):
            return
        seq, nominal = victim.schedule[dispatch_idx]
        if nominal > now_us:
            heapq.heappush(events, (nominal, _DISPATCH, next(counter)))
            return
        dispatch_idx += 1
        heapq.heappush(
            events, (now_us, _ATTEMPT, next(counter), victim.index, seq, 1, 0)
        )

    sender_by_index = {s.index: s for s in senders}

    while events:
        entry = heapq.heappop(events)
        time_us, kind = entry[0], entry[1]
        if kind == _RESOLVE:
            _, _, _, frame, seq, attempt = entry
            resolve(frame, seq, attempt)
            continue
        if kind == _DISPATCH:
            dispatch(time_us)
            continue
        _, _, _, idx, seq, attempt, cca_tries = entry
        sender = sender_by_index[idx]
        t = time_us
        if t < sender.busy_until:
            heapq.heappush(
                events, (sender.busy_until, _ATTEMPT, next(counter), idx, seq, attempt, cca_tries)
            )
            continue
        channel = state["victim_channel"] if sender.is_victim else sender.channel
        if sender.technology is Technology.ZIGBEE and scenario.cca.zigbee_cca_enabled:
            on_air = static_index.on_air(t) + [
                f for f in dynamic_index.on_air(t) if f.source_id != sender.source_id
            ]
            block_end = carrier_sense_gate(sender.technology, channel, on_air, scenario.cca)
            if block_end is not None and cca_tries < scenario.cca.max_attempts:
                backoff = sender.cca_rng.randint(0, scenario.cca.backoff_max_us)
                heapq.heappush(
                    events,
                    (block_end + backoff, _ATTEMPT, next(counter), idx, seq, attempt, cca_tries + 1),
                )
                continue
        if sender.is_victim:
            if seq not in packet_meta:
                length = state["victim_length"]
                packet_meta[seq] = (
                    length,
                    payload_bytes(victim_cfg.rng_seed, seq, length),
                )
            length = packet_meta[seq][0]
        else:
            length = sender.length_bytes
        frame = Frame(
            technology=sender.technology,
            source_id=sender.source_id,
            seq=seq,
            kind=FrameKind.DATA,
            channel=channel,
            start_us=t,
            length_bytes=length,
            bitrate_bps=ZIGBEE_BITRATE_BPS,
        )
        sender.busy_until = frame.end_us
        dynamic_index.add(frame)
        if not sender.is_victim:
            trace.interferer_sent[sender.source_id] += 1
        else:
            heapq.heappush(
                events, (frame.end_us, _RESOLVE, next(counter), frame, seq, attempt)
            )

    trace.counters = counters
    if controller is not None:
        trace.classifications = list(controller.classification_log)
    return trace
