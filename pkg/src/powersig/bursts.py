"""Keystroke burst detection and password-length inference.

A burst is a transient excursion above a robust threshold: the trace
median plus k sigma-equivalents of spread (MAD * 1.4826).  Each
upward crossing either starts a new burst or, when it lands inside the
refractory window of the previous burst's start, extends that burst -
so a noisy spike that dips briefly below threshold is still one
keystroke.  A burst's peak is the largest sample of its above-threshold
runs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSamples
from .preprocess import MAD_TO_SIGMA, estimate_baseline
from .trace import PowerTrace

DEFAULT_K = 4.0
DEFAULT_REFRACTORY_MS = 150.0


@dataclass(frozen=True)
class Burst:
    start_ms: float
    peak_ms: float
    peak_value: float


@dataclass(frozen=True)
class BurstReport:
    bursts: tuple[Burst, ...]
    count: int
    baseline: float
    threshold_used: float

    def __post_init__(self):
        if self.count != len(self.bursts):
            raise ValueError("count must equal len(bursts)")


def detect_bursts(trace: PowerTrace,
                  k: float = DEFAULT_K,
                  refractory_ms: float = DEFAULT_REFRACTORY_MS) -> BurstReport:
    """Count threshold-crossing bursts, one per keystroke.

    ``k`` is the threshold in sigma-equivalents above the robust baseline;
    ``refractory_ms`` is the minimum spacing between burst starts.
    """
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if refractory_ms < 0:
        raise ValueError(f"refractory must be >= 0 ms, got {refractory_ms}")
    if len(trace) < 4:
        raise InsufficientSamples("burst detection needs >= 4 samples")

    baseline, mad = estimate_baseline(trace)
    threshold = baseline + k * (MAD_TO_SIGMA * mad)
    # relative guard: a zero-spread trace has a zero-width threshold, and
    # upstream float dust (smoothing sums) must not read as a crossing
    threshold += 1e-9 * max(1.0, abs(baseline))

    values = trace.values
    above = values > threshold
    if not above.any():
        return BurstReport((), 0, baseline, threshold)

    # contiguous above-threshold runs: [start, end] sample indices
    edges = np.diff(above.astype(np.int8))
    run_starts = np.flatnonzero(edges == 1) + 1
    run_ends = np.flatnonzero(edges == -1)
    if above[0]:
        run_starts = np.concatenate(([0], run_starts))
    if above[-1]:
        run_ends = np.concatenate((run_ends, [len(values) - 1]))

    step = trace.step_ms
    bursts: list[list] = []  # [start_idx, peak_idx, peak_value]
    for rs, re in zip(run_starts, run_ends):
        peak_off = int(np.argmax(values[rs:re + 1]))
        peak_idx = rs + peak_off
        peak_val = float(values[peak_idx])
        if bursts and (rs - bursts[-1][0]) * step < refractory_ms:
            # re-crossing inside the refractory window extends the burst
            if peak_val > bursts[-1][2]:
                bursts[-1][1] = peak_idx
                bursts[-1][2] = peak_val
        else:
            bursts.append([rs, peak_idx, peak_val])

    return BurstReport(
        tuple(Burst(si * step, pi * step, pv) for si, pi, pv in bursts),
        len(bursts), baseline, threshold)


def estimate_password_length(report: BurstReport) -> int:
    """Inferred password length; today simply the burst count.

    Kept as a separate seam so a correction model (dropped or merged
    keystrokes) can slot in without touching callers.
    """
    return report.count


def burst_report_to_csv(report: BurstReport) -> str:
    from .trace import format_float
    lines = ["start_ms,peak_ms,peak_value"]
    for b in report.bursts:
        lines.append(f"{format_float(b.start_ms)},{format_float(b.peak_ms)},"
                     f"{format_float(b.peak_value)}")
    lines.append(f"# summary,count,{report.count},"
                 f"baseline,{format_float(report.baseline)},"
                 f"threshold,{format_float(report.threshold_used)}")
    return "\n".join(lines) + "\n"
