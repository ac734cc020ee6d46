"""Deterministic 2.4 GHz coexistence simulator for an IEEE 802.15.4
victim link, with corrupted-packet fingerprint classification and link
adaptation."""

from .spectrum import (
    InterfererClass,
    IntensityTable,
    OverlapDescriptor,
    RadioChannel,
    Technology,
    bluetooth_channel,
    center_frequency,
    corruption_intensity,
    spectral_overlap,
    wifi_channel,
    zigbee_channel,
)
from .traffic import (
    BluetoothMode,
    Frame,
    FrameKind,
    StreamConfig,
    airtime_us,
    bluetooth_stream,
    wifi_stream,
    zigbee_stream,
)
from .corruption import (
    CorruptionMask,
    WeakLinkParams,
    collision_mask,
    corrupting_window,
    header_hit,
    merge,
    weak_link_mask,
)
from .fingerprint import (
    Classification,
    CorruptedPacketQueue,
    ErrorHistogram,
    Peak,
    Verdict,
    classify,
    detect_peaks,
    diff_count,
    on_correct,
    on_corrupted,
)
from .engine import (
    ArqConfig,
    BluetoothInterferer,
    CcaConfig,
    ConfigError,
    Outcome,
    ReceptionEvent,
    ScenarioConfig,
    SimTrace,
    WifiInterferer,
    ZigbeeInterferer,
    carrier_sense_gate,
    run,
)
from .adapt import Action, ActionKind, LinkController, LinkStats, measure, policy

__version__ = "0.1.0"
