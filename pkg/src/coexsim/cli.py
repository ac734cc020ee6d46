"""Command-line front end.

Subcommands: run (one scenario), fixtures (the shipped scenario suite
with expected-vs-observed checks), replay (offline classification of a
recorded trace).  Exit codes: 0 success, 1 validation failure, 2 fixture
mismatch.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .adapt import LinkController, measure
from .engine import (
    ArqConfig,
    BluetoothInterferer,
    CcaConfig,
    ConfigError,
    Outcome,
    ScenarioConfig,
    SimTrace,
    WifiInterferer,
    ZigbeeInterferer,
    parse_trace_csv,
    run as run_engine,
)
from .corruption import WeakLinkParams
from .fingerprint import (
    Classification,
    DEFAULT_MIN_SAMPLES,
    DEFAULT_QUEUE_CAPACITY,
    ErrorHistogram,
    MAX_ERROR_LEN,
    classify,
)
from .spectrum import INDEX_RANGE, IntensityTable, RadioChannel, Technology
from .traffic import BluetoothMode, StreamConfig


@dataclass(slots=True)
class FingerprintOptions:
    enabled: bool = False
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY
    min_samples: int = DEFAULT_MIN_SAMPLES


@dataclass(slots=True)
class RunConfig:
    scenario: ScenarioConfig
    fingerprint: FingerprintOptions = field(default_factory=FingerprintOptions)
    adapt_enabled: bool = False


class ConfigParseError(ValueError):
    pass


def _parse_bool(value: str, key: str, lineno: int) -> bool:
    v = value.strip().lower()
    if v in ("on", "true", "yes", "1"):
        return True
    if v in ("off", "false", "no", "0"):
        return False
    raise ConfigParseError(f"line {lineno}: key {key}: expected on/off, got {value!r}")


def _parse_num(value: str, key: str, lineno: int, kind=float):
    try:
        return kind(value)
    except ValueError:
        raise ConfigParseError(
            f"line {lineno}: key {key}: expected {kind.__name__}, got {value!r}"
        ) from None


# every accepted key; anything else is rejected with its line number
_SCALAR_KEYS = {
    "scenario.name": str,
    "scenario.duration_s": float,
    "scenario.seed": int,
    "victim.channel": int,
    "victim.rate_pps": float,
    "victim.length_bytes": int,
    "victim.jitter_us": int,
    "victim.phase_us": int,
    "weak_link.enabled": bool,
    "weak_link.p_symbol": float,
    "weak_link.burst_continue": float,
    "cca.zigbee": bool,
    "cca.max_attempts": int,
    "cca.backoff_max_us": int,
    "arq.enabled": bool,
    "arq.timeout_us": int,
    "arq.max_attempts": int,
    "fingerprint.enabled": bool,
    "fingerprint.queue_capacity": int,
    "fingerprint.min_samples": int,
    "adapt.enabled": bool,
    "engine.wifi_data_min_airtime_us": int,
    "intensity.file": str,
}

_INTERFERER_KEYS = {
    "zigbee": {"technology", "channel", "rate_pps", "length_bytes", "jitter_us", "phase_us"},
    "wifi": {
        "technology",
        "channel",
        "control_interval_us",
        "control_length_bytes",
        "control_phase_us",
        "data_rate_pps",
        "data_length_bytes",
    },
    "bluetooth": {"technology", "mode", "slots_per_packet"},
}


def parse_config(text: str) -> RunConfig:
    """Parse the flat dotted key-value scenario format.

    Unknown keys, malformed values, and invalid channels raise
    ConfigParseError naming the exact key and line.
    """
    values: dict[str, tuple[str, int]] = {}
    interferers: dict[int, dict[str, tuple[str, int]]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigParseError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key.startswith("interferer."):
            parts = key.split(".")
            if len(parts) != 3 or not parts[1].isdigit():
                raise ConfigParseError(
                    f"line {lineno}: key {key}: expected interferer.<n>.<field>"
                )
            idx = int(parts[1])
            interferers.setdefault(idx, {})
            if parts[2] in interferers[idx]:
                raise ConfigParseError(f"line {lineno}: key {key}: duplicate key")
            interferers[idx][parts[2]] = (value, lineno)
            continue
        if key not in _SCALAR_KEYS:
            raise ConfigParseError(f"line {lineno}: unknown key {key}")
        if key in values:
            raise ConfigParseError(f"line {lineno}: key {key}: duplicate key")
        values[key] = (value, lineno)

    def get(key: str, default=None):
        if key not in values:
            if default is None and key in ("victim.channel", "victim.rate_pps"):
                raise ConfigParseError(f"missing required key {key}")
            return default
        value, lineno = values[key]
        kind = _SCALAR_KEYS[key]
        if kind is bool:
            return _parse_bool(value, key, lineno)
        if kind is str:
            return value
        return _parse_num(value, key, lineno, kind)

    victim_channel = int(get("victim.channel"))
    zb_lo, zb_hi = INDEX_RANGE[Technology.ZIGBEE]
    if not zb_lo <= victim_channel <= zb_hi:
        _, lineno = values["victim.channel"]
        raise ConfigParseError(
            f"line {lineno}: key victim.channel: {victim_channel} outside "
            f"[{zb_lo}, {zb_hi}]"
        )
    victim = StreamConfig(
        rate_pps=get("victim.rate_pps"),
        length_bytes=int(get("victim.length_bytes", 122)),
        jitter_us=int(get("victim.jitter_us", 0)),
        phase_us=int(get("victim.phase_us", 0)),
    )

    weak = None
    if get("weak_link.enabled", False):
        weak = WeakLinkParams(
            p_symbol=get("weak_link.p_symbol", 0.004),
            burst_continue=get("weak_link.burst_continue", 0.25),
        )

    specs = []
    for idx in sorted(interferers):
        fields = interferers[idx]
        if "technology" not in fields:
            raise ConfigParseError(f"interferer.{idx}: missing technology")
        tech, tline = fields["technology"]
        if tech not in _INTERFERER_KEYS:
            raise ConfigParseError(
                f"line {tline}: key interferer.{idx}.technology: unknown technology {tech!r}"
            )
        allowed = _INTERFERER_KEYS[tech]
        for fname, (_, lineno) in fields.items():
            if fname not in allowed:
                raise ConfigParseError(
                    f"line {lineno}: unknown key interferer.{idx}.{fname}"
                )

        def ifield(fname: str, kind, default=None):
            if fname not in fields:
                if default is None:
                    raise ConfigParseError(f"interferer.{idx}: missing {fname}")
                return default
            value, lineno = fields[fname]
            if kind is str:
                return value
            return _parse_num(value, f"interferer.{idx}.{fname}", lineno, kind)

        if tech == "zigbee":
            ch = ifield("channel", int)
            if not zb_lo <= ch <= zb_hi:
                _, lineno = fields["channel"]
                raise ConfigParseError(
                    f"line {lineno}: key interferer.{idx}.channel: {ch} outside "
                    f"[{zb_lo}, {zb_hi}]"
                )
            specs.append(
                ZigbeeInterferer(
                    channel_index=ch,
                    stream=StreamConfig(
                        rate_pps=ifield("rate_pps", float),
                        length_bytes=int(ifield("length_bytes", int, 122)),
                        jitter_us=int(ifield("jitter_us", int, 0)),
                        phase_us=int(ifield("phase_us", int, 0)),
                    ),
                )
            )
        elif tech == "wifi":
            ch = ifield("channel", int)
            wf_lo, wf_hi = INDEX_RANGE[Technology.WIFI]
            if not wf_lo <= ch <= wf_hi:
                _, lineno = fields["channel"]
                raise ConfigParseError(
                    f"line {lineno}: key interferer.{idx}.channel: {ch} outside "
                    f"[{wf_lo}, {wf_hi}]"
                )
            specs.append(
                WifiInterferer(
                    channel_index=ch,
                    control_interval_us=int(ifield("control_interval_us", int, 102_400)),
                    control_length_bytes=int(ifield("control_length_bytes", int, 208)),
                    control_phase_us=int(ifield("control_phase_us", int, 0)),
                    data_rate_pps=ifield("data_rate_pps", float, 0.0),
                    data_length_bytes=int(ifield("data_length_bytes", int, 1500)),
                )
            )
        else:
            mode_s = ifield("mode", str, "steady")
            try:
                mode = BluetoothMode(mode_s)
            except ValueError:
                _, lineno = fields["mode"]
                raise ConfigParseError(
                    f"line {lineno}: key interferer.{idx}.mode: unknown mode {mode_s!r}"
                ) from None
            specs.append(
                BluetoothInterferer(
                    mode=mode,
                    slots_per_packet=int(ifield("slots_per_packet", int, 5)),
                )
            )

    intensity_ref = get("intensity.file", "default")
    if intensity_ref == "default":
        intensity = IntensityTable.default()
    else:
        shipped = resources.files("coexsim.data").joinpath(f"intensity_{intensity_ref}.csv")
        if shipped.is_file():
            intensity = IntensityTable.from_csv(shipped.read_text(encoding="utf-8"))
        else:
            intensity = IntensityTable.from_csv(Path(intensity_ref).read_text())

    scenario = ScenarioConfig(
        name=get("scenario.name", "scenario"),
        victim=victim,
        victim_channel_index=victim_channel,
        interferers=specs,
        weak_link=weak,
        cca=CcaConfig(
            zigbee_cca_enabled=get("cca.zigbee", False),
            max_attempts=int(get("cca.max_attempts", 3)),
            backoff_max_us=int(get("cca.backoff_max_us", 2560)),
        ),
        arq=ArqConfig(
            enabled=get("arq.enabled", False),
            timeout_us=int(get("arq.timeout_us", 10_000)),
            max_attempts=int(get("arq.max_attempts", 8)),
        ),
        intensity=intensity,
        duration_us=int(round(get("scenario.duration_s", 10.0) * 1_000_000)),
        master_seed=int(get("scenario.seed", 1)),
    )
    scenario.wifi_data_min_airtime_us = int(get("engine.wifi_data_min_airtime_us", 800))
    cfg = RunConfig(
        scenario=scenario,
        fingerprint=FingerprintOptions(
            enabled=get("fingerprint.enabled", False),
            queue_capacity=int(get("fingerprint.queue_capacity", DEFAULT_QUEUE_CAPACITY)),
            min_samples=int(get("fingerprint.min_samples", DEFAULT_MIN_SAMPLES)),
        ),
        adapt_enabled=get("adapt.enabled", False),
    )
    try:
        scenario.validate()
    except ConfigError as exc:
        raise ConfigParseError(str(exc)) from exc
    return cfg


def tally_histogram(trace: SimTrace) -> ErrorHistogram:
    """Histogram of error counts over corrupted-but-received frames."""
    hist = ErrorHistogram()
    for e in trace.events:
        if e.outcome is Outcome.CORRUPTED and e.error_count >= 1:
            hist.add(min(e.error_count, MAX_ERROR_LEN))
    return hist


@dataclass(slots=True)
class RunReport:
    scenario_name: str
    seed: int
    counters: dict
    verdict: Classification
    out_dir: Path
    histogram_path: Path
    classification_path: Path
    timeline_path: Path
    trace_path: Path
    summary_path: Path
    detection_matches: int | None = None
    detection_verdict: str | None = None
    gain: float | None = None


def execute(cfg: RunConfig, out_dir: Path) -> RunReport:
    """Run the scenario and write all artifacts."""
    scenario = cfg.scenario
    controller = None
    if cfg.fingerprint.enabled:
        wifi_channels = [
            RadioChannel.of(Technology.WIFI, spec.channel_index)
            for spec in scenario.interferers
            if isinstance(spec, WifiInterferer)
        ]
        controller = LinkController(
            victim_channel_index=scenario.victim_channel_index,
            wifi_channels=wifi_channels,
            queue_capacity=cfg.fingerprint.queue_capacity,
            min_samples=cfg.fingerprint.min_samples,
            adapt_enabled=cfg.adapt_enabled,
        )
    trace = run_engine(scenario, controller=controller)

    hist = tally_histogram(trace)
    verdict = classify(hist, min_samples=cfg.fingerprint.min_samples)
    stats = measure(
        trace,
        detection_time_us=controller.detection_time_us if controller else None,
        detection_matches=controller.detection_matches if controller else None,
    )

    out_dir.mkdir(parents=True, exist_ok=True)
    trace_path = out_dir / "trace.csv"
    trace_path.write_text(trace.to_csv())
    histogram_path = out_dir / "histogram.csv"
    histogram_path.write_text(hist.to_csv())
    classification_path = out_dir / "classification_log.csv"
    lines = ["time_us,verdict,detail,sample_count"]
    if controller is not None:
        for t, v, d, n in controller.classification_log:
            lines.append(f"{t},{v},{d},{n}")
    lines.append(
        f"{trace.duration_us},{verdict.verdict.value},{verdict.detail},{hist.total}"
    )
    classification_path.write_text("\n".join(lines) + "\n")
    timeline_path = out_dir / "timeline.csv"
    timeline_path.write_text(stats.timeline_csv())
    actions_path = out_dir / "actions.csv"
    actions_path.write_text(
        "time_us,action,detail\n"
        + "".join(f"{t},{a},{d}\n" for t, a, d in trace.actions)
    )

    detection_verdict = None
    if controller is not None and controller.detection_time_us is not None:
        for t, v, d, n in controller.classification_log:
            if t == controller.detection_time_us:
                detection_verdict = v
                break

    report = RunReport(
        scenario_name=scenario.name,
        seed=scenario.master_seed,
        counters=dict(trace.counters),
        verdict=verdict,
        out_dir=out_dir,
        histogram_path=histogram_path,
        classification_path=classification_path,
        timeline_path=timeline_path,
        trace_path=trace_path,
        summary_path=out_dir / "summary.txt",
        detection_matches=controller.detection_matches if controller else None,
        detection_verdict=detection_verdict,
        gain=stats.gain,
    )
    _write_summary(report, trace, stats)
    return report


def _write_summary(report: RunReport, trace: SimTrace, stats) -> None:
    c = report.counters
    sent = max(c.get("sent", 0), 1)
    lines = [
        f"scenario: {report.scenario_name}",
        f"seed: {report.seed}",
        f"sent: {c.get('sent', 0)}",
        f"dropped: {c.get('dropped', 0)}",
        f"corrupted: {c.get('corrupted', 0)}",
        f"clean: {c.get('clean', 0)}",
        f"loss_rate: {c.get('dropped', 0) / sent:.6f}",
        f"verdict: {report.verdict.verdict.value}"
        + (f" {report.verdict.detail}" if report.verdict.detail else ""),
    ]
    if report.detection_verdict is not None:
        lines.append(f"detection_verdict: {report.detection_verdict}")
        lines.append(f"detection_matches: {report.detection_matches}")
    if stats.pre_action_pps is not None:
        lines.append(f"pre_action_pps: {stats.pre_action_pps:.3f}")
    if stats.post_action_pps is not None:
        lines.append(f"post_action_pps: {stats.post_action_pps:.3f}")
    if report.gain is not None:
        lines.append(f"gain: {report.gain:.4f}")
    for t, a, d in trace.actions:
        lines.append(f"action: {t} {a} {d}")
    lines.append(f"trace: {report.trace_path.name}")
    lines.append(f"histogram: {report.histogram_path.name}")
    lines.append(f"classification_log: {report.classification_path.name}")
    lines.append(f"timeline: {report.timeline_path.name}")
    report.summary_path.write_text("\n".join(lines) + "\n")


def load_fixture_text(name: str) -> str:
    return (
        resources.files("coexsim.data").joinpath(f"{name}.cfg").read_text(encoding="utf-8")
    )


def cmd_run(args) -> int:
    try:
        text = Path(args.config).read_text()
        cfg = parse_config(text)
    except (OSError, ConfigParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.seed is not None:
        cfg.scenario.master_seed = args.seed
    try:
        report = execute(cfg, Path(args.out))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(report.summary_path.read_text(), end="")
    return 0


def cmd_replay(args) -> int:
    try:
        text = Path(args.trace).read_text()
        events = parse_trace_csv(text)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    hist = ErrorHistogram()
    for e in events:
        if e.outcome is Outcome.CORRUPTED and e.error_count >= 1:
            hist.add(min(e.error_count, MAX_ERROR_LEN))
    verdict = classify(hist)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "histogram.csv").write_text(hist.to_csv())
    last_time = events[-1].time_us if events else 0
    (out_dir / "classification_log.csv").write_text(
        "time_us,verdict,detail,sample_count\n"
        f"{last_time},{verdict.verdict.value},{verdict.detail},{hist.total}\n"
    )
    summary = out_dir / "summary.txt"
    summary.write_text(
        f"replayed_events: {len(events)}\n"
        f"matched_samples: {hist.total}\n"
        f"verdict: {verdict.verdict.value}"
        + (f" {verdict.detail}" if verdict.detail else "")
        + "\n"
    )
    print(summary.read_text(), end="")
    return 0


def cmd_fixtures(args) -> int:
    from .fixtures import FIXTURE_NAMES, evaluate_fixture

    names = args.only.split(",") if args.only else FIXTURE_NAMES
    out_root = Path(args.out)
    rows = []
    all_ok = True
    for name in names:
        if name not in FIXTURE_NAMES:
            print(f"error: unknown fixture {name!r}", file=sys.stderr)
            return 1
        cfg = parse_config(load_fixture_text(name))
        report = execute(cfg, out_root / name)
        checks = evaluate_fixture(name, report, out_root / name)
        for chk in checks:
            rows.append((name, chk))
            all_ok = all_ok and chk.ok
    width = max(len(r[0]) for r in rows) if rows else 10
    print(f"{'fixture':<{width}}  {'result':<6}  expected vs observed")
    for name, chk in rows:
        status = "pass" if chk.ok else "FAIL"
        print(f"{name:<{width}}  {status:<6}  {chk.name}: expected {chk.expected}, observed {chk.observed}")
    failed = sum(1 for _, chk in rows if not chk.ok)
    print(f"{len(rows) - failed}/{len(rows)} checks passed")
    return 0 if all_ok else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="coexsim",
        description="Deterministic 2.4 GHz coexistence simulator with "
        "corrupted-packet fingerprint classification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario config")
    p_run.add_argument("--config", required=True, help="scenario config path")
    p_run.add_argument("--seed", type=int, default=None, help="master seed override")
    p_run.add_argument("--out", required=True, help="artifact output directory")
    p_run.set_defaults(func=cmd_run)

    p_fix = sub.add_parser("fixtures", help="run the shipped scenario suite")
    p_fix.add_argument("--out", required=True, help="artifact output directory")
    p_fix.add_argument("--only", default=None, help="comma-separated fixture names")
    p_fix.set_defaults(func=cmd_fixtures)

    p_rep = sub.add_parser("replay", help="classify a recorded trace CSV")
    p_rep.add_argument("--trace", required=True, help="trace CSV path")
    p_rep.add_argument("--out", required=True, help="artifact output directory")
    p_rep.set_defaults(func=cmd_replay)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
