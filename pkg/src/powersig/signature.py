"""Signature training: template selection and threshold calibration.

A signature is the medoid of its training segments - the segment whose
summed normalized DTW distance to the others is smallest - after each
segment went through the same conditioning (smooth, then z-normalize).
The acceptance threshold is mean + k*std of the medoid-to-others
distances, floored so identical training segments still leave a usable
acceptance margin.  The conditioning parameters ride along in the
signature so detection can replay the identical pipeline; a mismatch at
detection time is a hard error, never a silent degradation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dtw import CostFn, DtwConfig, normalized_dtw_distance
from .errors import (
    FileFormatError,
    InvalidWindow,
    MixedChannels,
    MixedLabels,
    MixedRates,
    NoSegments,
    SegmentTooShort,
)
from .preprocess import smooth, znormalize_values
from .trace import Channel, PowerTrace

SIGNATURE_FORMAT_VERSION = "psc-sig/1"

DEFAULT_K = 3.0
DEFAULT_FLOOR = 0.05
DEFAULT_SMOOTHING = 5
MIN_SEGMENT_SAMPLES = 8


@dataclass(frozen=True)
class Signature:
    label: str
    template: np.ndarray
    rate: float
    channel: Channel
    threshold: float
    training_count: int
    dtw: DtwConfig
    smoothing_window: int

    def __post_init__(self):
        template = np.asarray(self.template, dtype=np.float64)
        if template.ndim != 1 or template.size == 0:
            raise FileFormatError("signature template must be non-empty")
        if self.threshold < 0:
            raise FileFormatError("signature threshold must be >= 0")
        if self.training_count < 1:
            raise FileFormatError("training_count must be >= 1")
        mean = float(template.mean())
        std = float(np.sqrt(np.mean((template - mean) ** 2)))
        degenerate = np.all(template == 0.0)
        if not degenerate and (abs(mean) > 1e-6 or abs(std - 1.0) > 1e-6):
            raise FileFormatError(
                f"template is not z-normalized (mean={mean:g}, std={std:g})")
        template = template.copy()
        template.setflags(write=False)
        object.__setattr__(self, "template", template)

    def __len__(self) -> int:
        return self.template.size


def condition_segment(segment: PowerTrace, smoothing_window: int) -> np.ndarray:
    """The training/detection conditioning pipeline: smooth, z-normalize."""
    return znormalize_values(smooth(segment, smoothing_window).values)


def calibrate_threshold(distances: Sequence[float],
                        k: float = DEFAULT_K,
                        floor: float = DEFAULT_FLOOR) -> float:
    """max(floor, mean + k*std) of the distances; floor alone below 2 values."""
    if k <= 0 or not math.isfinite(k):
        raise ValueError(f"k must be positive, got {k}")
    if floor < 0:
        raise ValueError(f"floor must be >= 0, got {floor}")
    ds = np.asarray(distances, dtype=np.float64)
    if ds.size < 2:
        return float(floor)
    mean = ds.mean()
    std = np.sqrt(np.mean((ds - mean) ** 2))
    return float(max(floor, mean + k * std))


def _resolve_label(segments: Sequence[PowerTrace], label: str | None) -> str:
    seen = {s.meta["label"] for s in segments if "label" in s.meta}
    if label is not None:
        if seen and seen != {label}:
            raise MixedLabels(f"segments labeled {sorted(seen)} but asked "
                              f"to train {label!r}")
        return label
    if len(seen) == 1:
        return next(iter(seen))
    if not seen:
        raise MixedLabels("segments carry no label; pass label= explicitly")
    raise MixedLabels(f"segments carry multiple labels: {sorted(seen)}")


def train_signature(segments: Sequence[PowerTrace],
                    cfg: DtwConfig = DtwConfig(),
                    smoothing: int = DEFAULT_SMOOTHING,
                    k: float = DEFAULT_K,
                    floor: float = DEFAULT_FLOOR,
                    label: str | None = None) -> Signature:
    """Build a signature from one or more labeled training segments.

    All segments must share rate, channel and label and have at least
    MIN_SEGMENT_SAMPLES samples.  Deterministic given input order: medoid
    ties go to the shortest segment, then the earliest.
    """
    segments = list(segments)
    if not segments:
        raise NoSegments("training needs at least one segment")
    rates = {s.rate for s in segments}
    if len(rates) != 1:
        raise MixedRates(f"segments mix sampling rates: {sorted(rates)}")
    channels = {s.channel for s in segments}
    if len(channels) != 1:
        raise MixedChannels(
            f"segments mix channels: {sorted(c.value for c in channels)}")
    resolved = _resolve_label(segments, label)
    shortest = min(len(s) for s in segments)
    if shortest < MIN_SEGMENT_SAMPLES:
        raise SegmentTooShort(
            f"segments need >= {MIN_SEGMENT_SAMPLES} samples, got {shortest}")
    if smoothing > shortest:
        raise InvalidWindow(
            f"smoothing window {smoothing} exceeds shortest segment {shortest}")

    conditioned = [condition_segment(s, smoothing) for s in segments]
    count = len(conditioned)
    if count == 1:
        medoid = 0
        medoid_distances: list[float] = []
    else:
        dist = np.zeros((count, count))
        for i in range(count):
            for j in range(i + 1, count):
                d = normalized_dtw_distance(conditioned[i], conditioned[j], cfg)
                dist[i, j] = d
                dist[j, i] = d
        sums = dist.sum(axis=1)
        order = sorted(range(count),
                       key=lambda i: (sums[i], conditioned[i].size, i))
        medoid = order[0]
        medoid_distances = [dist[medoid, j] for j in range(count) if j != medoid]

    return Signature(
        label=resolved,
        template=conditioned[medoid],
        rate=segments[0].rate,
        channel=segments[0].channel,
        threshold=calibrate_threshold(medoid_distances, k, floor),
        training_count=count,
        dtw=cfg,
        smoothing_window=smoothing,
    )


# --- persistence ---------------------------------------------------------------


def signature_to_json(sig: Signature) -> str:
    doc = {
        "version": SIGNATURE_FORMAT_VERSION,
        "label": sig.label,
        "template": [float(v) for v in sig.template],
        "rate": sig.rate,
        "channel": sig.channel.value,
        "threshold": sig.threshold,
        "training_count": sig.training_count,
        "dtw": {"band": sig.dtw.band, "cost": sig.dtw.cost.value},
        "smoothing_window": sig.smoothing_window,
    }
    return json.dumps(doc, indent=2) + "\n"


def signature_from_json(text: str) -> Signature:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"signature file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("version") != SIGNATURE_FORMAT_VERSION:
        raise FileFormatError(
            f"expected a {SIGNATURE_FORMAT_VERSION} document")
    try:
        return Signature(
            label=str(doc["label"]),
            template=np.array(doc["template"], dtype=np.float64),
            rate=float(doc["rate"]),
            channel=Channel.parse(doc["channel"]),
            threshold=float(doc["threshold"]),
            training_count=int(doc["training_count"]),
            dtw=DtwConfig(band=float(doc["dtw"]["band"]),
                          cost=CostFn.parse(doc["dtw"]["cost"])),
            smoothing_window=int(doc["smoothing_window"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"bad signature document: {exc}") from None
