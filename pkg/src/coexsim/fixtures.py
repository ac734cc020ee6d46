"""Shipped scenario suite with expected-vs-observed checks.

Each fixture reproduces one measured interference pattern at desk scale;
the checks pin the histogram peak structure, the verdict, and the loss
or throughput figures the scenario was calibrated against.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .engine import Outcome, parse_trace_csv
from .fingerprint import ErrorHistogram, Peak, Verdict, classify, detect_peaks
from .spectrum import Technology

FIXTURE_NAMES = [
    "weak-snr",
    "zb16",
    "zb90",
    "zb122",
    "zb12",
    "bt-steady",
    "wifi-ctrl-11",
    "wifi-ctrl-13",
    "wifi-ctrl-14",
    "wifi-full-13",
    "len-1100",
    "len-1000",
    "mixed-ch11",
    "adapt-458",
    "adapt-916",
]


@dataclass(frozen=True, slots=True)
class CheckResult:
    name: str
    ok: bool
    expected: str
    observed: str


def _hist_from_artifacts(out_dir: Path) -> ErrorHistogram:
    hist = ErrorHistogram()
    for e in parse_trace_csv((out_dir / "trace.csv").read_text()):
        if e.outcome is Outcome.CORRUPTED and e.error_count >= 1:
            hist.add(min(e.error_count, 121))
    return hist


def _mode(hist: ErrorHistogram) -> int:
    return max(range(1, 122), key=lambda k: hist.counts[k])


def _peak_in(peaks: list[Peak], lo: int, hi: int) -> Peak | None:
    for p in peaks:
        if lo <= p.position <= hi:
            return p
    return None


def evaluate_fixture(name: str, report, out_dir: Path) -> list[CheckResult]:
    hist = _hist_from_artifacts(out_dir)
    peaks = detect_peaks(hist)
    verdict = classify(hist)
    counters = report.counters
    sent = max(counters.get("sent", 0), 1)
    loss = counters.get("dropped", 0) / sent
    disturbed = (counters.get("dropped", 0) + counters.get("corrupted", 0)) / sent
    checks: list[CheckResult] = []

    def check(label: str, ok: bool, expected: str, observed: str):
        checks.append(CheckResult(name=label, ok=ok, expected=expected, observed=observed))

    if name == "weak-snr":
        check("verdict", verdict.verdict is Verdict.WEAK_LINK, "weak_link", verdict.verdict.value)
        check(
            "corrupted_fraction",
            0.10 <= disturbed <= 0.30,
            "in [0.10, 0.30]",
            f"{disturbed:.3f}",
        )
    elif name == "zb16":
        mode = _mode(hist)
        check("mode", 10 <= mode <= 12, "11 +/- 1", str(mode))
        check("mode_density", hist.density(mode) >= 0.20, ">= 0.20", f"{hist.density(mode):.3f}")
        ok = verdict.verdict is Verdict.ZIGBEE_HIDDEN and verdict.interferer_length in (15, 16, 17)
        check("verdict", ok, "zigbee_hidden len=16 +/- 1", f"{verdict.verdict.value} {verdict.detail}")
    elif name == "zb90":
        mode = _mode(hist)
        check("mode", 84 <= mode <= 86, "85 +/- 1", str(mode))
        check("mode_density", hist.density(mode) >= 0.15, ">= 0.15", f"{hist.density(mode):.3f}")
        ok = verdict.verdict is Verdict.ZIGBEE_HIDDEN and verdict.interferer_length in (89, 90, 91)
        check("verdict", ok, "zigbee_hidden len=90 +/- 1", f"{verdict.verdict.value} {verdict.detail}")
    elif name == "zb122":
        one = _peak_in(peaks, 1, 1)
        late = _peak_in(peaks, 103, 109)
        check("peak_at_1", one is not None, "peak at 1", _fmt_peaks(peaks))
        check("peak_at_106", late is not None, "peak in [103, 109]", _fmt_peaks(peaks))
    elif name == "zb12":
        check(
            "verdict",
            verdict.verdict is Verdict.GENERIC_COEXISTENCE,
            "generic_coexistence",
            verdict.verdict.value,
        )
    elif name == "bt-steady":
        check("loss_plus_corruption", disturbed < 0.04, "< 0.04", f"{disturbed:.4f}")
        max_d = max(hist.densities()[1:]) if hist.total else 0.0
        check("max_density", max_d < 0.12, "< 0.12", f"{max_d:.3f}")
        tail = sum(hist.densities()[80:91])
        check("tail_mass_80_90", tail >= 0.05, ">= 0.05", f"{tail:.3f}")
        check("verdict", verdict.verdict is Verdict.BLUETOOTH, "bluetooth", verdict.verdict.value)
    elif name in ("wifi-ctrl-11", "wifi-ctrl-13"):
        ctrl = _peak_in(peaks, 25, 28)
        check("control_peak", ctrl is not None and len(peaks) == 1, "single peak in 26-27 +/- 1", _fmt_peaks(peaks))
        check(
            "verdict",
            verdict.verdict is Verdict.WIFI_CONTROL_ONLY,
            "wifi_control_only",
            verdict.verdict.value,
        )
    elif name == "wifi-ctrl-14":
        check(
            "verdict",
            verdict.verdict is not Verdict.WIFI_CONTROL_DATA,
            "not wifi_control_data",
            verdict.verdict.value,
        )
    elif name == "wifi-full-13":
        data = _peak_in(peaks, 2, 6)
        ctrl = _peak_in(peaks, 25, 29)
        check("data_peak", data is not None, "peak in 4 +/- 2", _fmt_peaks(peaks))
        check("control_peak", ctrl is not None, "peak in 27 +/- 2", _fmt_peaks(peaks))
        check(
            "verdict",
            verdict.verdict is Verdict.WIFI_CONTROL_DATA,
            "wifi_control_data",
            verdict.verdict.value,
        )
        check("loss", 0.12 <= loss <= 0.24, "0.18 +/- 0.06", f"{loss:.3f}")
    elif name == "len-1100":
        data = _peak_in(peaks, 2, 6)
        ctrl = _peak_in(peaks, 24, 30)
        check("data_peak_present", data is not None, "data peak present", _fmt_peaks(peaks))
        check("control_peak_present", ctrl is not None, "control peak present", _fmt_peaks(peaks))
    elif name == "len-1000":
        data = _peak_in(peaks, 2, 6)
        ctrl = _peak_in(peaks, 24, 30)
        check("data_peak_absent", data is None, "data peak absent", _fmt_peaks(peaks))
        check("control_peak_present", ctrl is not None, "control peak present", _fmt_peaks(peaks))
    elif name == "mixed-ch11":
        data = _peak_in(peaks, 2, 6)
        zb = _peak_in(peaks, 84, 86)
        ctrl = _peak_in(peaks, 24, 30)
        check("data_peak", data is not None, "peak in [2, 6]", _fmt_peaks(peaks))
        check("zigbee_peak", zb is not None, "peak at 85 +/- 1", _fmt_peaks(peaks))
        check("control_peak", ctrl is not None, "peak in [24, 30]", _fmt_peaks(peaks))
    elif name in ("adapt-458", "adapt-916"):
        budget = 150 if name == "adapt-458" else 30
        matches = report.detection_matches
        check(
            "detection_matches",
            matches is not None and matches <= budget,
            f"<= {budget}",
            str(matches),
        )
        check(
            "detection_verdict",
            report.detection_verdict in ("wifi_control_data", "wifi_control_only"),
            "wifi verdict",
            str(report.detection_verdict),
        )
        check(
            "gain",
            report.gain is not None and report.gain >= 0.5,
            ">= 0.5",
            f"{report.gain:.3f}" if report.gain is not None else "none",
        )
        if name == "adapt-458":
            summary = (out_dir / "summary.txt").read_text()
            pre = _summary_value(summary, "pre_action_pps")
            post = _summary_value(summary, "post_action_pps")
            check("pre_action_pps", pre is not None and 14.0 <= pre <= 22.0, "18 +/- 4", f"{pre}")
            check("post_action_pps", post is not None and 24.0 <= post <= 32.0, "28 +/- 4", f"{post}")
    return checks


def _summary_value(summary: str, key: str) -> float | None:
    for line in summary.splitlines():
        if line.startswith(key + ":"):
            return float(line.split(":", 1)[1])
    return None


def _fmt_peaks(peaks: list[Peak]) -> str:
    if not peaks:
        return "no peaks"
    return " ".join(f"{p.position}@{p.density:.3f}" for p in peaks)
