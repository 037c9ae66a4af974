"""Trace conditioning: smoothing, z-normalization, robust baseline.

All three are pure functions over immutable traces; smoothing and
normalization preserve length and rate.  Spread is measured with the
median absolute deviation rather than the standard deviation because
burst-laden traces are anything but Gaussian.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSamples, InvalidWindow
from .trace import PowerTrace

DEFAULT_EPSILON = 1e-9

# MAD of a normal distribution is 0.6745 sigma; this factor rescales it to
# a consistent sigma estimate so burst thresholds read in sigma units
MAD_TO_SIGMA = 1.4826


@dataclass(frozen=True)
class NormalizationParams:
    mean: float
    std: float
    epsilon: float = DEFAULT_EPSILON


def smooth(trace: PowerTrace, window: int) -> PowerTrace:
    """Centered moving average; edges use truncated windows.

    ``window`` must be odd and within [1, len(trace)].  window=1 returns
    the input unchanged.
    """
    n = len(trace)
    if window < 1 or window > n or window % 2 == 0:
        raise InvalidWindow(
            f"window must be odd and within [1, {n}], got {window}")
    if window == 1:
        return trace
    half = window // 2
    cs = np.concatenate(([0.0], np.cumsum(trace.values)))
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    out = (cs[hi] - cs[lo]) / (hi - lo)
    return trace.with_values(out)


def znormalize(trace: PowerTrace,
               epsilon: float = DEFAULT_EPSILON
               ) -> tuple[PowerTrace, NormalizationParams]:
    """Shift/scale to mean 0, population (1/N) std 1.

    A trace flatter than ``epsilon`` maps to all zeros with std recorded
    as 0, so degenerate inputs stay finite instead of exploding.
    """
    if len(trace) < 2:
        raise InsufficientSamples("z-normalization needs at least 2 samples")
    values = trace.values
    mean = float(values.mean())
    std = float(np.sqrt(np.mean((values - mean) ** 2)))
    if std < epsilon:
        return (trace.with_values(np.zeros(len(trace))),
                NormalizationParams(mean, 0.0, epsilon))
    return (trace.with_values((values - mean) / std),
            NormalizationParams(mean, std, epsilon))


def znormalize_values(values: np.ndarray,
                      epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Array-level z-normalization with the same degenerate-case rule."""
    values = np.asarray(values, dtype=np.float64)
    mean = values.mean()
    std = np.sqrt(np.mean((values - mean) ** 2))
    if std < epsilon:
        return np.zeros_like(values)
    return (values - mean) / std


def estimate_baseline(trace: PowerTrace) -> tuple[float, float]:
    """(median, MAD) of the trace values, both in channel units.

    The median shrugs off bursts, so the pair gives a stable quiet-level
    estimate even when a third of the trace is keystroke spikes.
    """
    if len(trace) < 4:
        raise InsufficientSamples("baseline estimation needs >= 4 samples")
    values = trace.values
    baseline = float(np.median(values))
    spread = float(np.median(np.abs(values - baseline)))
    return baseline, spread
