"""Shared evaluation metrics: confusion matrices and detection scoring.

Detection scoring matches events to ground-truth spans of the same label
whose start lies within a tolerance, greedily in ascending start-error
order, one-to-one.  Greedy (rather than optimal assignment) is deliberate:
event streams here are sparse, and the test suite cross-checks greedy
against an exhaustive assignment oracle on small instances.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import LengthMismatch

UNKNOWN = "Unknown"


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: tuple[str, ...]       # lexicographic, Unknown last
    counts: np.ndarray            # rows = truth, cols = predicted

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        total = self.total
        if total == 0:
            return 1.0
        return float(np.trace(self.counts)) / total

    def to_json(self) -> str:
        return json.dumps({
            "labels": list(self.labels),
            "counts": self.counts.tolist(),
            "accuracy": self.accuracy,
        }, indent=2) + "\n"


def confusion(truth: Sequence[str], predicted: Sequence[str]) -> ConfusionMatrix:
    """Standard tally of predicted vs true labels."""
    if len(truth) != len(predicted):
        raise LengthMismatch(
            f"{len(truth)} truth labels vs {len(predicted)} predictions")
    plain = sorted(set(truth) | set(predicted) - {UNKNOWN})
    labels = tuple(l for l in plain if l != UNKNOWN) + (UNKNOWN,)
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(truth, predicted):
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(labels, counts)


@dataclass(frozen=True)
class DetectionMetrics:
    recall: float
    precision: float
    mean_start_error_ms: float
    matched: int
    false_positives: int
    missed: int

    def to_json(self) -> str:
        return json.dumps({
            "recall": self.recall,
            "precision": self.precision,
            "mean_start_error_ms": self.mean_start_error_ms,
            "matched": self.matched,
            "false_positives": self.false_positives,
            "missed": self.missed,
        }, indent=2) + "\n"


def match_events(events, truth_spans, tolerance_ms: float
                 ) -> list[tuple[int, int, float]]:
    """Greedy one-to-one matching; returns (event_idx, truth_idx, error) triples.

    Events and spans need ``label`` and ``start_ms`` attributes.  A pair is
    eligible when labels agree and |event start - truth start| <= tolerance;
    pairs are consumed in ascending error order (ties by event start, truth
    start) and nothing is assigned twice.
    """
    if tolerance_ms < 0:
        raise ValueError(f"tolerance must be >= 0 ms, got {tolerance_ms}")
    pairs = []
    for ei, ev in enumerate(events):
        for ti, ts in enumerate(truth_spans):
            if ev.label != ts.label:
                continue
            err = abs(ev.start_ms - ts.start_ms)
            if err <= tolerance_ms:
                pairs.append((err, ev.start_ms, ts.start_ms, ei, ti))
    pairs.sort()
    used_e: set[int] = set()
    used_t: set[int] = set()
    matches = []
    for err, _, _, ei, ti in pairs:
        if ei in used_e or ti in used_t:
            continue
        used_e.add(ei)
        used_t.add(ti)
        matches.append((ei, ti, err))
    return matches


def detection_metrics(events, truth_spans,
                      tolerance_ms: float) -> DetectionMetrics:
    """Recall/precision/localization for one event list against one truth list.

    Conventions: precision is 1 when no events were emitted, recall is 1
    when there was nothing to find, and the mean error is 0 with no matches.
    """
    matches = match_events(events, truth_spans, tolerance_ms)
    matched = len(matches)
    n_events = len(list(events))
    n_truth = len(list(truth_spans))
    recall = matched / n_truth if n_truth else 1.0
    precision = matched / n_events if n_events else 1.0
    mean_error = (sum(err for _, _, err in matches) / matched) if matched else 0.0
    return DetectionMetrics(recall, precision, mean_error, matched,
                            n_events - matched, n_truth - matched)


def pool_detection_metrics(per_trial: Sequence[DetectionMetrics]
                           ) -> DetectionMetrics:
    """Aggregate per-trial metrics by total counts, not by averaging ratios."""
    matched = sum(m.matched for m in per_trial)
    fp = sum(m.false_positives for m in per_trial)
    missed = sum(m.missed for m in per_trial)
    truth_total = matched + missed
    event_total = matched + fp
    err_sum = sum(m.mean_start_error_ms * m.matched for m in per_trial)
    return DetectionMetrics(
        recall=matched / truth_total if truth_total else 1.0,
        precision=matched / event_total if event_total else 1.0,
        mean_start_error_ms=err_sum / matched if matched else 0.0,
        matched=matched, false_positives=fp, missed=missed)
