"""Deterministic synthetic-trace generation with ground truth.

Stands in for real battery telemetry in every desk-scale experiment: all
tests that need "what actually happened" run against traces built here.

Determinism contract: one spec (seed included) produces a bit-identical
trace on every run.  Randomness comes from the package's splitmix64 +
Box-Muller generator (see rng.py for the exact algorithm) in a documented
draw order:

1. per event, in list order - app/UI loads draw (start_offset,
   length_offset) as two symmetric uniforms of half-width jitter_ms and
   jitter_ms/2; keystroke events draw one symmetric uniform of half-width
   spacing_jitter_ms per pulse;
2. then, only if noise_sigma > 0, one standard normal per output sample,
   in sample order.

Event waveforms are piecewise-linear multi-phase load profiles (shape ids
select from SHAPE_LIBRARY; all start and end at zero) and raised-cosine
keystroke pulses.  Values are baseline + noise + waveforms, clamped at
zero, then quantized to 1 uA (0.001 mA) - the resolution of integer-
microampere telemetry - which also makes the emitted polling-log CSV
re-ingest bit-exactly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

from .errors import FileFormatError, InvalidSpec, UnknownLabel
from .rng import SplitMix64
from .trace import Channel, PowerTrace, Segment, format_trace_log

SYNTH_FORMAT_VERSION = "psc-synth/1"
TRUTH_FORMAT_VERSION = "psc-truth/1"

# (time fraction, level fraction) breakpoints; amplitude scales the level.
# Multi-phase load profiles.  All four open with the same launch spike -
# so none of them can be mistaken for a time-shifted slice of another
# against quiet baseline - and differ in the mid/tail structure, which a
# band-limited warp cannot relocate: sustained-then-idle, idle-then-render,
# triple burst, single center peak.
SHAPE_LIBRARY: tuple[tuple[tuple[float, float], ...], ...] = (
    # 0: spike, then one sustained work plateau across most of the load
    ((0.0, 0.0), (0.04, 1.0), (0.12, 0.74), (0.34, 0.64), (0.58, 0.72),
     (0.78, 0.68), (0.84, 0.14), (1.0, 0.0)),
    # 1: spike, long idle stretch, heavy render phase at the end
    ((0.0, 0.0), (0.04, 1.0), (0.12, 0.16), (0.50, 0.12), (0.62, 0.55),
     (0.78, 0.92), (0.92, 0.85), (1.0, 0.0)),
    # 2: spike plus two short sharp work bursts
    ((0.0, 0.0), (0.04, 1.0), (0.12, 0.10), (0.26, 0.10), (0.32, 0.90),
     (0.38, 0.10), (0.58, 0.10), (0.64, 0.92), (0.70, 0.10), (1.0, 0.0)),
    # 3: spike, settle, one broad flat-topped mid-load phase, quiet tail
    ((0.0, 0.0), (0.04, 1.0), (0.14, 0.24), (0.34, 0.30), (0.44, 0.86),
     (0.62, 0.92), (0.72, 0.30), (0.90, 0.12), (1.0, 0.0)),
)


@dataclass(frozen=True)
class AppLoadEvent:
    at_ms: float
    label: str
    shape_id: int
    amplitude: float
    length_ms: float
    jitter_ms: float = 0.0

    kind = "app_load"


@dataclass(frozen=True)
class UiLoadEvent:
    at_ms: float
    label: str
    shape_id: int
    amplitude: float
    length_ms: float
    jitter_ms: float = 0.0

    kind = "ui_load"


@dataclass(frozen=True)
class KeystrokeEvent:
    at_ms: float
    label: str
    count: int
    amplitude: float
    spacing_ms: float
    spacing_jitter_ms: float = 0.0
    burst_width_ms: float = 60.0

    kind = "keystrokes"


EventSpec = Union[AppLoadEvent, UiLoadEvent, KeystrokeEvent]


@dataclass(frozen=True)
class SynthSpec:
    duration_ms: float
    baseline: float
    noise_sigma: float
    events: tuple[EventSpec, ...] = ()
    rate: float = 100.0
    seed: int = 0


@dataclass(frozen=True)
class TruthSpan:
    label: str
    start_ms: float
    end_ms: float
    keystrokes: int | None = None


def _max_extent(ev: EventSpec) -> tuple[float, float]:
    """Earliest possible start and latest possible end, jitter included."""
    if isinstance(ev, KeystrokeEvent):
        last = ev.at_ms + (ev.count - 1) * ev.spacing_ms
        return (ev.at_ms - ev.spacing_jitter_ms,
                last + ev.spacing_jitter_ms + ev.burst_width_ms)
    return (ev.at_ms - ev.jitter_ms,
            ev.at_ms + ev.jitter_ms + ev.length_ms + ev.jitter_ms / 2.0)


def validate_spec(spec: SynthSpec) -> None:
    if not (math.isfinite(spec.rate) and spec.rate > 0):
        raise InvalidSpec(f"rate must be positive, got {spec.rate}")
    if not (math.isfinite(spec.duration_ms) and spec.duration_ms > 0):
        raise InvalidSpec(f"duration must be positive, got {spec.duration_ms}")
    if not (math.isfinite(spec.noise_sigma) and spec.noise_sigma >= 0):
        raise InvalidSpec(f"noise_sigma must be >= 0, got {spec.noise_sigma}")
    if not math.isfinite(spec.baseline) or spec.baseline < 0:
        raise InvalidSpec(f"baseline must be >= 0, got {spec.baseline}")
    for pos, ev in enumerate(spec.events):
        where = f"event {pos + 1} ({ev.label!r})"
        if ev.amplitude <= 0:
            raise InvalidSpec(f"{where}: amplitude must be positive")
        if isinstance(ev, KeystrokeEvent):
            if ev.count < 0:
                raise InvalidSpec(f"{where}: count must be >= 0")
            if ev.spacing_ms <= 0 or ev.burst_width_ms <= 0:
                raise InvalidSpec(f"{where}: spacing and width must be positive")
            if not 0 <= ev.spacing_jitter_ms < ev.spacing_ms / 2.0:
                raise InvalidSpec(f"{where}: spacing jitter must stay below "
                                  "half the spacing")
        else:
            if ev.shape_id not in range(len(SHAPE_LIBRARY)):
                raise InvalidSpec(f"{where}: shape_id must be in "
                                  f"[0, {len(SHAPE_LIBRARY) - 1}]")
            if ev.length_ms <= 0:
                raise InvalidSpec(f"{where}: length must be positive")
            if ev.jitter_ms < 0 or ev.jitter_ms >= ev.length_ms:
                raise InvalidSpec(f"{where}: jitter must be in [0, length)")
        lo, hi = _max_extent(ev)
        if lo < 0 or hi > spec.duration_ms:
            raise InvalidSpec(f"{where}: may extend to [{lo}, {hi}] ms, "
                              f"outside the {spec.duration_ms} ms trace")


def _sample_count(duration_ms: float, rate: float) -> int:
    return int(math.floor(duration_ms * rate / 1000.0 + 1e-9)) + 1


def _render_profile(t_ms: np.ndarray, start: float, length: float,
                    shape_id: int, amplitude: float, wave: np.ndarray) -> None:
    mask = (t_ms >= start) & (t_ms <= start + length)
    if not mask.any():
        return
    u = (t_ms[mask] - start) / length
    pts = SHAPE_LIBRARY[shape_id]
    fr = np.array([p[0] for p in pts])
    lv = np.array([p[1] for p in pts])
    wave[mask] += amplitude * np.interp(u, fr, lv)


def _render_pulse(t_ms: np.ndarray, start: float, width: float,
                  amplitude: float, wave: np.ndarray) -> None:
    mask = (t_ms >= start) & (t_ms <= start + width)
    if not mask.any():
        return
    phase = (t_ms[mask] - start) / width
    wave[mask] += amplitude * 0.5 * (1.0 - np.cos(2.0 * math.pi * phase))


def _place_events(spec: SynthSpec, rng: SplitMix64,
                  t_ms: np.ndarray) -> tuple[np.ndarray, list[TruthSpan]]:
    """Draw jitters and rasterize every event waveform; returns (wave, truth)."""
    wave = np.zeros(t_ms.size)
    truth: list[TruthSpan] = []
    for ev in spec.events:
        if isinstance(ev, KeystrokeEvent):
            offsets = [rng.uniform_symmetric(ev.spacing_jitter_ms)
                       for _ in range(ev.count)]
            starts = [ev.at_ms + p * ev.spacing_ms + offsets[p]
                      for p in range(ev.count)]
            for s in starts:
                _render_pulse(t_ms, s, ev.burst_width_ms, ev.amplitude, wave)
            if starts:
                truth.append(TruthSpan(ev.label, min(starts),
                                       max(starts) + ev.burst_width_ms,
                                       keystrokes=ev.count))
        else:
            start = ev.at_ms + rng.uniform_symmetric(ev.jitter_ms)
            length = ev.length_ms + rng.uniform_symmetric(ev.jitter_ms / 2.0)
            _render_profile(t_ms, start, length, ev.shape_id, ev.amplitude,
                            wave)
            truth.append(TruthSpan(ev.label, start, start + length))
    truth.sort(key=lambda ts: (ts.start_ms, ts.label))
    return wave, truth


def generate(spec: SynthSpec) -> tuple[PowerTrace, list[TruthSpan]]:
    """Render the spec into a current-magnitude trace plus truth spans."""
    validate_spec(spec)
    n = _sample_count(spec.duration_ms, spec.rate)
    t_ms = np.arange(n) * (1000.0 / spec.rate)
    rng = SplitMix64(spec.seed)
    wave, truth = _place_events(spec, rng, t_ms)
    values = np.full(n, float(spec.baseline))
    if spec.noise_sigma > 0:
        values += spec.noise_sigma * np.array(rng.normals(n))
    values += wave
    values = np.maximum(values, 0.0)
    values = np.round(values * 1000.0) / 1000.0
    meta = {"source": "synth", "seed": str(spec.seed)}
    return PowerTrace(values, spec.rate, Channel.CURRENT_MAGNITUDE, meta), truth


def waveform_only(spec: SynthSpec) -> tuple[np.ndarray, list[TruthSpan]]:
    """Noise-free event waveform (no baseline), same jitter draws as generate."""
    validate_spec(spec)
    n = _sample_count(spec.duration_ms, spec.rate)
    t_ms = np.arange(n) * (1000.0 / spec.rate)
    return _place_events(spec, SplitMix64(spec.seed), t_ms)


def event_rms(spec: SynthSpec, label: str) -> float:
    """RMS deviation from baseline over the labeled event span(s)."""
    wave, truth = waveform_only(spec)
    spans = [ts for ts in truth if ts.label == label]
    if not spans:
        raise UnknownLabel(f"no event labeled {label!r} in spec")
    t_ms = np.arange(wave.size) * (1000.0 / spec.rate)
    mask = np.zeros(wave.size, dtype=bool)
    for ts in spans:
        mask |= (t_ms >= ts.start_ms - 1e-9) & (t_ms <= ts.end_ms + 1e-9)
    return float(np.sqrt(np.mean(wave[mask] ** 2)))


def snr_of(spec: SynthSpec, label: str) -> float:
    """Event-to-noise power ratio in dB; +inf for noiseless specs."""
    rms = event_rms(spec, label)
    if spec.noise_sigma == 0:
        return math.inf
    return 10.0 * math.log10(rms ** 2 / spec.noise_sigma ** 2)


def sigma_for_snr(spec: SynthSpec, label: str, snr_db: float) -> float:
    """Noise sigma that puts the labeled event at the target SNR."""
    return event_rms(spec, label) / (10.0 ** (snr_db / 20.0))


def with_sigma(spec: SynthSpec, sigma: float) -> SynthSpec:
    return replace(spec, noise_sigma=sigma)


# --- persistence ----------------------------------------------------------------


def _event_to_doc(ev: EventSpec) -> dict:
    doc = {"kind": ev.kind, "at_ms": ev.at_ms, "label": ev.label,
           "amplitude": ev.amplitude}
    if isinstance(ev, KeystrokeEvent):
        doc.update(count=ev.count, spacing_ms=ev.spacing_ms,
                   spacing_jitter_ms=ev.spacing_jitter_ms,
                   burst_width_ms=ev.burst_width_ms)
    else:
        doc.update(shape_id=ev.shape_id, length_ms=ev.length_ms,
                   jitter_ms=ev.jitter_ms)
    return doc


def _event_from_doc(doc: dict) -> EventSpec:
    kind = doc.get("kind")
    common = dict(at_ms=float(doc["at_ms"]), label=str(doc["label"]),
                  amplitude=float(doc["amplitude"]))
    if kind == "keystrokes":
        return KeystrokeEvent(count=int(doc["count"]),
                              spacing_ms=float(doc["spacing_ms"]),
                              spacing_jitter_ms=float(doc.get("spacing_jitter_ms", 0.0)),
                              burst_width_ms=float(doc.get("burst_width_ms", 60.0)),
                              **common)
    cls = {"app_load": AppLoadEvent, "ui_load": UiLoadEvent}.get(kind)
    if cls is None:
        raise FileFormatError(f"unknown event kind {kind!r}")
    return cls(shape_id=int(doc["shape_id"]), length_ms=float(doc["length_ms"]),
               jitter_ms=float(doc.get("jitter_ms", 0.0)), **common)


def spec_to_json(spec: SynthSpec) -> str:
    doc = {
        "version": SYNTH_FORMAT_VERSION,
        "rate_hz": spec.rate,
        "duration_ms": spec.duration_ms,
        "baseline": spec.baseline,
        "noise_sigma": spec.noise_sigma,
        "seed": spec.seed,
        "events": [_event_to_doc(ev) for ev in spec.events],
    }
    return json.dumps(doc, indent=2) + "\n"


def spec_from_json(text: str) -> SynthSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"spec file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("version") != SYNTH_FORMAT_VERSION:
        raise FileFormatError(f"expected a {SYNTH_FORMAT_VERSION} document")
    try:
        spec = SynthSpec(
            rate=float(doc.get("rate_hz", 100.0)),
            duration_ms=float(doc["duration_ms"]),
            baseline=float(doc["baseline"]),
            noise_sigma=float(doc["noise_sigma"]),
            seed=int(doc.get("seed", 0)),
            events=tuple(_event_from_doc(e) for e in doc.get("events", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"bad spec document: {exc}") from None
    validate_spec(spec)
    return spec


def truth_to_json(truth: Sequence[TruthSpan]) -> str:
    doc = {
        "version": TRUTH_FORMAT_VERSION,
        "spans": [{"label": ts.label, "start_ms": ts.start_ms,
                   "end_ms": ts.end_ms, "keystrokes": ts.keystrokes}
                  for ts in truth],
    }
    return json.dumps(doc, indent=2) + "\n"


def truth_from_json(text: str) -> list[TruthSpan]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"truth file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("version") != TRUTH_FORMAT_VERSION:
        raise FileFormatError(f"expected a {TRUTH_FORMAT_VERSION} document")
    return [TruthSpan(str(s["label"]), float(s["start_ms"]), float(s["end_ms"]),
                      None if s.get("keystrokes") is None else int(s["keystrokes"]))
            for s in doc.get("spans", [])]


def trace_log_with_truth(trace: PowerTrace, truth: Sequence[TruthSpan],
                         voltage_uv: float = 4_200_000.0) -> str:
    """Emit the polling-log CSV with ground truth as mark/keys comments."""
    marks = [Segment(ts.start_ms, ts.end_ms, ts.label) for ts in truth]
    extra = [f"keys,{ts.label},{ts.keystrokes}"
             for ts in truth if ts.keystrokes is not None]
    return format_trace_log(trace, voltage_uv, marks, extra)
