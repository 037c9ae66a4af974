"""Obfuscation transforms and their effect on the detection pipeline.

Two trace-level defenses: random power bursts (modeling injected busy-work
in the protected app) and a piecewise-constant offset schedule (modeling
randomized display colors shifting the power floor).  Both preserve
length, rate and channel, and configurations that add nothing (rate or
amplitude zero, offset levels [0]) are bit-exact identities.

evaluate_countermeasure runs the identical detection pipeline over a clean
suite and its transformed copy and reports the metric deltas, which is how
"does this defense actually degrade the attack" becomes a number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .detect import scan_stream, classify_segment
from .errors import InvalidDwell, InvalidSpec
from .metrics import (
    DetectionMetrics,
    confusion,
    detection_metrics,
    pool_detection_metrics,
)
from .rng import SplitMix64, derive_seed
from .signature import Signature
from .synth import TruthSpan
from .trace import PowerTrace, format_float

# transform takes (trace, trial_index); the index lets seeded transforms
# decorrelate across a suite while staying reproducible
Transform = Callable[[PowerTrace, int], PowerTrace]


def inject_obfuscation_bursts(trace: PowerTrace, rate_per_s: float,
                              amplitude: float, width_ms: float,
                              seed: int) -> PowerTrace:
    """Add raised-cosine bursts at Poisson-process times.

    rate_per_s or amplitude zero returns the trace unchanged.
    """
    if rate_per_s < 0 or not math.isfinite(rate_per_s):
        raise InvalidSpec(f"burst rate must be >= 0 /s, got {rate_per_s}")
    if amplitude < 0 or not math.isfinite(amplitude):
        raise InvalidSpec(f"amplitude must be >= 0, got {amplitude}")
    if width_ms <= 0:
        raise InvalidSpec(f"width must be positive ms, got {width_ms}")
    if rate_per_s == 0 or amplitude == 0:
        return trace
    rng = SplitMix64(seed)
    t_ms = trace.times_ms
    wave = np.zeros(len(trace))
    at = 0.0
    end = trace.duration_ms
    while True:
        at += -math.log(rng.uniform_oc()) / rate_per_s * 1000.0
        if at >= end:
            break
        mask = (t_ms >= at) & (t_ms <= at + width_ms)
        if mask.any():
            phase = (t_ms[mask] - at) / width_ms
            wave[mask] += amplitude * 0.5 * (1.0 - np.cos(2.0 * math.pi * phase))
    return trace.with_values(trace.values + wave,
                             obfuscation=f"bursts:{rate_per_s}/s")


def apply_color_offset_schedule(trace: PowerTrace, levels: Sequence[float],
                                dwell_ms: float, seed: int) -> PowerTrace:
    """Add an offset that hops uniformly among ``levels`` every ``dwell_ms``."""
    if dwell_ms <= 0 or not math.isfinite(dwell_ms):
        raise InvalidDwell(f"dwell must be positive ms, got {dwell_ms}")
    levels = [float(v) for v in levels]
    if not levels or not all(math.isfinite(v) for v in levels):
        raise InvalidSpec("levels must be a non-empty list of finite offsets")
    rng = SplitMix64(seed)
    n_dwells = int(math.floor(trace.duration_ms / dwell_ms)) + 1
    chosen = np.array([levels[min(int(rng.uniform() * len(levels)),
                                  len(levels) - 1)]
                       for _ in range(n_dwells)])
    slot = np.minimum((trace.times_ms / dwell_ms).astype(np.int64), n_dwells - 1)
    return trace.with_values(trace.values + chosen[slot],
                             obfuscation=f"color:{len(levels)}x{dwell_ms}ms")


def identity_transform(trace: PowerTrace, _index: int) -> PowerTrace:
    return trace


def burst_injection_transform(rate_per_s: float, amplitude: float,
                              width_ms: float, seed: int) -> Transform:
    def transform(trace: PowerTrace, index: int) -> PowerTrace:
        return inject_obfuscation_bursts(trace, rate_per_s, amplitude,
                                         width_ms, derive_seed(seed, index))
    return transform


def color_offset_transform(levels: Sequence[float], dwell_ms: float,
                           seed: int) -> Transform:
    def transform(trace: PowerTrace, index: int) -> PowerTrace:
        return apply_color_offset_schedule(trace, levels, dwell_ms,
                                           derive_seed(seed, index))
    return transform


# --- evaluation harness ----------------------------------------------------------


@dataclass(frozen=True)
class EvalSuite:
    """Ground-truthed inputs for before/after comparisons.

    labeled_segments feed classification accuracy; scan_trials feed
    detection recall/precision/false positives.
    """

    signatures: tuple[Signature, ...]
    labeled_segments: tuple[tuple[PowerTrace, str], ...]
    scan_trials: tuple[tuple[PowerTrace, tuple[TruthSpan, ...]], ...] = ()
    tolerance_ms: float = 200.0
    step: int | None = None


@dataclass(frozen=True)
class DegradationReport:
    name: str
    accuracy_clean: float
    accuracy_transformed: float
    recall_clean: float
    recall_transformed: float
    precision_clean: float
    precision_transformed: float
    false_events_clean: int
    false_events_transformed: int

    @property
    def accuracy_delta(self) -> float:
        return self.accuracy_transformed - self.accuracy_clean

    @property
    def recall_delta(self) -> float:
        return self.recall_transformed - self.recall_clean

    @property
    def precision_delta(self) -> float:
        return self.precision_transformed - self.precision_clean

    @property
    def false_events_delta(self) -> int:
        return self.false_events_transformed - self.false_events_clean


def _suite_metrics(suite: EvalSuite, transform: Transform
                   ) -> tuple[float, DetectionMetrics]:
    index = 0
    truths = []
    predictions = []
    for segment, label in suite.labeled_segments:
        predicted, _ = classify_segment(transform(segment, index),
                                        suite.signatures)
        truths.append(label)
        predictions.append(predicted)
        index += 1
    accuracy = confusion(truths, predictions).accuracy if truths else 1.0

    per_trial = []
    for trial_trace, truth_spans in suite.scan_trials:
        events = scan_stream(transform(trial_trace, index), suite.signatures,
                             suite.step)
        per_trial.append(detection_metrics(events, truth_spans,
                                           suite.tolerance_ms))
        index += 1
    pooled = pool_detection_metrics(per_trial)
    return accuracy, pooled


def evaluate_countermeasure(suite: EvalSuite, transform: Transform,
                            name: str = "transform") -> DegradationReport:
    """Identical pipeline on clean vs transformed inputs; report both."""
    acc_clean, det_clean = _suite_metrics(suite, identity_transform)
    acc_tf, det_tf = _suite_metrics(suite, transform)
    return DegradationReport(
        name=name,
        accuracy_clean=acc_clean, accuracy_transformed=acc_tf,
        recall_clean=det_clean.recall, recall_transformed=det_tf.recall,
        precision_clean=det_clean.precision,
        precision_transformed=det_tf.precision,
        false_events_clean=det_clean.false_positives,
        false_events_transformed=det_tf.false_positives,
    )


def degradation_reports_csv(reports: Sequence[DegradationReport]) -> str:
    header = ("config,accuracy_clean,accuracy_transformed,accuracy_delta,"
              "recall_clean,recall_transformed,recall_delta,"
              "precision_clean,precision_transformed,precision_delta,"
              "false_events_clean,false_events_transformed,false_events_delta")
    lines = [header]
    for r in reports:
        lines.append(",".join([
            r.name,
            format_float(r.accuracy_clean), format_float(r.accuracy_transformed),
            format_float(r.accuracy_delta),
            format_float(r.recall_clean), format_float(r.recall_transformed),
            format_float(r.recall_delta),
            format_float(r.precision_clean),
            format_float(r.precision_transformed),
            format_float(r.precision_delta),
            str(r.false_events_clean), str(r.false_events_transformed),
            str(r.false_events_delta),
        ]))
    return "\n".join(lines) + "\n"
