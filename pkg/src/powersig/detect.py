"""Target detection: segment classification, stream scanning, stage scripts.

Scanning slides a window of 1.5x template length over the trace (default
step: a quarter template), conditions each window exactly like a training
segment (smooth, z-normalize), and runs open-begin/open-end DTW inside it.
Sub-threshold matches become DetectionEvents; overlapping same-label events
merge down to the minimum-distance one.

The StreamScanner is incremental: feed it chunks of any size and the events
after finish() are identical to scanning the whole trace at once, because
windows are conditioned independently and sit on a fixed global grid.

Stage scripts chain detections in time (app load, then login UI, then an
optional keystroke count on what follows), re-anchoring each search at the
previous match's end.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import bursts as bursts_mod
from .dtw import band_width, dtw_distance, subsequence_match_windows
from .preprocess import smooth
from .errors import (
    BandInfeasible,
    ChannelMismatch,
    InvalidScript,
    RateMismatch,
    TraceTooShort,
)
from .signature import Signature, condition_segment
from .trace import Channel, PowerTrace, format_float

UNKNOWN = "Unknown"

WINDOW_FACTOR = 1.5  # scan window length as a multiple of template length


@dataclass(frozen=True)
class DetectionEvent:
    label: str
    start_ms: float
    end_ms: float
    norm_distance: float
    threshold: float

    def __post_init__(self):
        if not self.start_ms < self.end_ms:
            raise ValueError("event start must precede end")
        if self.norm_distance > self.threshold:
            raise ValueError("events must be at or below their threshold")


def _check_compatible(rate: float, channel: Channel, sig: Signature) -> None:
    if not math.isclose(rate, sig.rate, rel_tol=1e-9):
        raise RateMismatch(
            f"trace at {rate} Hz vs signature {sig.label!r} at {sig.rate} Hz")
    if channel is not sig.channel:
        raise ChannelMismatch(
            f"trace channel {channel.value} vs signature {sig.label!r} "
            f"channel {sig.channel.value}")


def classify_segment(segment: PowerTrace,
                     signatures: Sequence[Signature]
                     ) -> tuple[str, dict[str, float]]:
    """Nearest-signature label for a segment, or Unknown.

    Each signature replays its own conditioning pipeline on the segment
    before measuring normalized DTW distance to its template.  A template
    the band cannot align to (length mismatch beyond the band) scores
    inf.  Returns (label, per-label distances); the winning distance must
    be at or below the winning signature's threshold, ties go to the
    lexicographically smallest label.
    """
    signatures = list(signatures)
    if not signatures:
        raise ValueError("need at least one signature")
    for sig in signatures:
        _check_compatible(segment.rate, segment.channel, sig)

    conditioned: dict[int, np.ndarray] = {}
    distances: dict[str, float] = {}
    best: tuple[float, str, float] | None = None  # (distance, label, threshold)
    for sig in signatures:
        window = sig.smoothing_window
        if window not in conditioned:
            conditioned[window] = condition_segment(segment, window)
        try:
            raw, plen = dtw_distance(conditioned[window], sig.template, sig.dtw)
            norm = raw / plen
        except BandInfeasible:
            norm = math.inf
        if sig.label not in distances or norm < distances[sig.label]:
            distances[sig.label] = norm
        key = (norm, sig.label, sig.threshold)
        if best is None or key[:2] < best[:2]:
            best = key
    norm, label, threshold = best
    if norm <= threshold:
        return label, distances
    return UNKNOWN, distances


# --- stream scanning -----------------------------------------------------------


def _smooth_rows(mat: np.ndarray, window: int) -> np.ndarray:
    if window == 1:
        return mat
    n = mat.shape[1]
    half = window // 2
    cs = np.concatenate((np.zeros((mat.shape[0], 1)), np.cumsum(mat, axis=1)),
                        axis=1)
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    return (cs[:, hi] - cs[:, lo]) / (hi - lo)


def _znorm_rows(mat: np.ndarray, epsilon: float = 1e-9) -> np.ndarray:
    mean = mat.mean(axis=1, keepdims=True)
    centered = mat - mean
    std = np.sqrt(np.mean(centered ** 2, axis=1, keepdims=True))
    flat = std < epsilon
    safe = np.where(flat, 1.0, std)
    return np.where(flat, 0.0, centered / safe)


@dataclass
class _SigState:
    sig: Signature
    window_len: int
    step: int
    next_start: int = 0


class StreamScanner:
    """Incremental scan_stream; feed chunks, then finish() for the events."""

    def __init__(self, signatures: Sequence[Signature], rate: float,
                 channel: Channel, step: int | None = None):
        signatures = list(signatures)
        if not signatures:
            raise ValueError("need at least one signature")
        if step is not None and step < 1:
            raise ValueError(f"step must be >= 1 samples, got {step}")
        self._rate = rate
        self._step_ms = 1000.0 / rate
        self._states: list[_SigState] = []
        for sig in signatures:
            _check_compatible(rate, channel, sig)
            win = int(round(WINDOW_FACTOR * len(sig)))
            self._states.append(
                _SigState(sig, win, step if step is not None
                          else max(1, len(sig) // 4)))
        self._chunks: list[np.ndarray] = []
        self._total = 0
        self._buf: np.ndarray | None = None
        self._raw_events: list[DetectionEvent] = []
        self._refined: set[tuple] = set()
        self._finished = False

    def feed(self, values) -> None:
        if self._finished:
            raise RuntimeError("scanner already finished")
        arr = np.ascontiguousarray(values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("chunks must be 1-d")
        if arr.size == 0:
            return
        self._chunks.append(arr)
        self._total += arr.size
        self._buf = None
        self._process_ready()

    def _values(self) -> np.ndarray:
        if self._buf is None:
            self._buf = (self._chunks[0] if len(self._chunks) == 1
                         else np.concatenate(self._chunks))
        return self._buf

    def _process_ready(self) -> None:
        for st in self._states:
            starts = []
            while st.next_start + st.window_len <= self._total:
                starts.append(st.next_start)
                st.next_start += st.step
            if starts:
                self._run_windows(st.sig, starts, st.window_len)

    def _run_windows(self, sig: Signature, starts: list[int], win: int) -> None:
        buf = self._values()
        mat = np.ascontiguousarray(sliding_window_view(buf, win)[starts])
        smoothed = _smooth_rows(mat, sig.smoothing_window)
        zn = _znorm_rows(smoothed)
        s, e, norm = subsequence_match_windows(sig.template, zn, sig.dtw)
        # the open-begin pass localizes; candidate spans anchored at the
        # matched start are then re-scored under the training metric
        # (span-local z-norm, banded whole-sequence DTW) so one threshold
        # serves training, classification and scanning.  The open-end pass
        # likes to clip quiet event tails, hence the swept end positions.
        # windows whose rough score is far past the threshold skip all this.
        gate = 3.0 * sig.threshold + 0.05
        n = len(sig)
        w = band_width(sig.dtw.band, n, n)
        for row, wstart in enumerate(starts):
            if norm[row] > gate:
                continue
            lo, hi = int(s[row]), int(e[row])
            span_len = hi - lo
            if abs(span_len - n) > band_width(sig.dtw.band, span_len, n):
                # the matcher fell back to a span no banded alignment can
                # cover; nothing event-like in this window
                continue
            ends = sorted({end for end in
                           (lo + n - w, lo + n, min(lo + n + w, win))
                           if lo < end <= win})
            anchor = (id(sig), wstart + lo, tuple(wstart + end for end in ends))
            if anchor in self._refined:
                continue  # same candidate spans already scored elsewhere
            self._refined.add(anchor)
            best: tuple[float, int] | None = None
            for end in ends:
                span = _znorm_rows(smoothed[row:row + 1, lo:end])[0]
                try:
                    raw, plen = dtw_distance(span, sig.template, sig.dtw)
                except BandInfeasible:
                    continue
                if best is None or raw / plen < best[0]:
                    best = (raw / plen, end)
            if best is not None and best[0] <= sig.threshold:
                self._raw_events.append(DetectionEvent(
                    sig.label,
                    (wstart + lo) * self._step_ms,
                    (wstart + best[1]) * self._step_ms,
                    best[0],
                    sig.threshold))

    def finish(self) -> list[DetectionEvent]:
        if self._finished:
            raise RuntimeError("scanner already finished")
        self._finished = True
        longest = max(len(st.sig) for st in self._states)
        if self._total <= longest:
            raise TraceTooShort(
                f"trace of {self._total} samples cannot be scanned against a "
                f"{longest}-sample template")
        for st in self._states:
            if self._total >= st.window_len:
                tail = self._total - st.window_len
                if tail % st.step != 0:
                    self._run_windows(st.sig, [tail], st.window_len)
            else:
                self._run_windows(st.sig, [0], self._total)
        return merge_events(self._raw_events)


def scan_stream(trace: PowerTrace, signatures: Sequence[Signature],
                step: int | None = None) -> list[DetectionEvent]:
    """Scan a whole trace; see StreamScanner for the incremental form."""
    scanner = StreamScanner(signatures, trace.rate, trace.channel, step)
    scanner.feed(trace.values)
    return scanner.finish()


def merge_events(events: Sequence[DetectionEvent]) -> list[DetectionEvent]:
    """Collapse overlapping same-label events, keeping the best-scoring one."""
    by_label: dict[str, list[DetectionEvent]] = {}
    for ev in events:
        by_label.setdefault(ev.label, []).append(ev)
    merged: list[DetectionEvent] = []
    for label in sorted(by_label):
        evs = sorted(by_label[label],
                     key=lambda e: (e.start_ms, e.end_ms, e.norm_distance))
        cur = evs[0]
        for nxt in evs[1:]:
            if nxt.start_ms < cur.end_ms:
                if ((nxt.norm_distance, nxt.start_ms, nxt.end_ms)
                        < (cur.norm_distance, cur.start_ms, cur.end_ms)):
                    cur = nxt
            else:
                merged.append(cur)
                cur = nxt
        merged.append(cur)
    return sorted(merged, key=lambda e: (e.start_ms, e.label))


def events_to_csv(events: Sequence[DetectionEvent]) -> str:
    lines = ["label,start_ms,end_ms,norm_distance,threshold"]
    for e in events:
        lines.append(f"{e.label},{format_float(e.start_ms)},"
                     f"{format_float(e.end_ms)},{repr(e.norm_distance)},"
                     f"{repr(e.threshold)}")
    return "\n".join(lines) + "\n"


# --- stage scripts --------------------------------------------------------------

ON_MATCH_ADVANCE = "advance"
ON_MATCH_COUNT_BURSTS = "count-bursts"


@dataclass(frozen=True)
class Stage:
    signatures: tuple[Signature, ...]
    on_match: str = ON_MATCH_ADVANCE


@dataclass(frozen=True)
class StageScript:
    """Ordered detection plan; the last stage is the terminal one.

    A terminal count-bursts stage runs the burst counter on the trace that
    follows its match, bounded by horizon_ms when set.
    """

    stages: tuple[Stage, ...]
    burst_k: float = bursts_mod.DEFAULT_K
    burst_refractory_ms: float = bursts_mod.DEFAULT_REFRACTORY_MS
    burst_smoothing: int = 1
    horizon_ms: float | None = None
    step: int | None = None


@dataclass(frozen=True)
class StageReport:
    events: tuple[DetectionEvent | None, ...]
    bursts: bursts_mod.BurstReport | None
    complete: bool

    @property
    def password_length(self) -> int | None:
        if self.bursts is None:
            return None
        return bursts_mod.estimate_password_length(self.bursts)


def _validate_script(script: StageScript) -> None:
    if not script.stages:
        raise InvalidScript("script needs at least one stage")
    for pos, stage in enumerate(script.stages):
        if not stage.signatures:
            raise InvalidScript(f"stage {pos + 1} has no signatures")
        if stage.on_match not in (ON_MATCH_ADVANCE, ON_MATCH_COUNT_BURSTS):
            raise InvalidScript(f"stage {pos + 1}: unknown action "
                                f"{stage.on_match!r}")
        if stage.on_match == ON_MATCH_COUNT_BURSTS and pos != len(script.stages) - 1:
            raise InvalidScript("count-bursts is only valid on the final stage")


def run_stage_script(trace: PowerTrace, script: StageScript) -> StageReport:
    """Execute the staged attack plan over one trace.

    Each stage scans from the previous match's end; the first match (by
    start, then distance) wins and advances the origin.  A stage with no
    match leaves the report incomplete.
    """
    _validate_script(script)
    origin = 0
    stage_events: list[DetectionEvent | None] = []
    complete = True
    for stage in script.stages:
        event = None
        rest = trace.values[origin:]
        if rest.size >= 2:
            sub = PowerTrace(rest, trace.rate, trace.channel, dict(trace.meta))
            try:
                found = scan_stream(sub, stage.signatures, script.step)
            except TraceTooShort:
                found = []
            if found:
                first = min(found, key=lambda e: (e.start_ms, e.norm_distance,
                                                  e.label))
                offset = origin * trace.step_ms
                event = DetectionEvent(first.label,
                                       first.start_ms + offset,
                                       first.end_ms + offset,
                                       first.norm_distance,
                                       first.threshold)
        stage_events.append(event)
        if event is None:
            complete = False
            break
        origin = trace.index_of_ms(event.end_ms)
    while len(stage_events) < len(script.stages):
        stage_events.append(None)

    burst_report = None
    if complete and script.stages[-1].on_match == ON_MATCH_COUNT_BURSTS:
        end = len(trace)
        if script.horizon_ms is not None:
            end = min(end, origin + int(round(
                script.horizon_ms * trace.rate / 1000.0)))
        rest = trace.values[origin:end]
        if rest.size >= max(4, script.burst_smoothing):
            tail = PowerTrace(rest, trace.rate, trace.channel,
                              dict(trace.meta))
            if script.burst_smoothing > 1:
                tail = smooth(tail, script.burst_smoothing)
            burst_report = bursts_mod.detect_bursts(
                tail, script.burst_k, script.burst_refractory_ms)
        else:
            complete = False
    return StageReport(tuple(stage_events), burst_report, complete)


def stage_report_to_json(report: StageReport) -> str:
    def event_doc(e: DetectionEvent | None):
        if e is None:
            return None
        return {"label": e.label, "start_ms": e.start_ms, "end_ms": e.end_ms,
                "norm_distance": e.norm_distance, "threshold": e.threshold}

    doc = {
        "version": "psc-attack/1",
        "complete": report.complete,
        "stages": [event_doc(e) for e in report.events],
        "bursts": None,
        "password_length": report.password_length,
    }
    if report.bursts is not None:
        doc["bursts"] = {
            "count": report.bursts.count,
            "baseline": report.bursts.baseline,
            "threshold": report.bursts.threshold_used,
            "bursts": [{"start_ms": b.start_ms, "peak_ms": b.peak_ms,
                        "peak_value": b.peak_value}
                       for b in report.bursts.bursts],
        }
    return json.dumps(doc, indent=2) + "\n"
