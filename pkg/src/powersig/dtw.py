"""Dynamic time warping distances and best-subsequence matching.

Two entry points:

``dtw_distance``
    Whole-sequence alignment under a Sakoe-Chiba band.  The band half-width
    is a fraction of the longer input's length; cells with |i - j| beyond
    it are excluded.  The returned distance is the raw cumulative cost
    (callers divide by ``path_len`` when they want a length-free number).

``subsequence_best_match``
    Open-begin/open-end alignment of a template against any contiguous
    span of a longer stream.  The returned distance IS normalized by the
    optimal path length, so one threshold works across template lengths.
    Here the band constrains eligible span lengths: a candidate span is
    kept only when banded whole-sequence DTW of template-vs-span would be
    feasible, i.e. the lengths differ by at most the band half-width.
    That stops the template from collapsing onto a few stream samples.
    Amplitude is not part of a match; pass ``normalize_stream=True`` to
    z-normalize the stream before matching, the way the detector does per
    window.

Ties on cumulative cost prefer the diagonal step, then the vertical, then
the horizontal, which keeps path lengths (and therefore normalized
distances) identical across backends.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _backend
from ._dtw_py import COST_ABS, COST_SQUARED
from .errors import BandInfeasible, EmptySequence, TemplateLongerThanStream
from .preprocess import znormalize_values


class CostFn(str, enum.Enum):
    ABS_DIFF = "abs_diff"
    SQUARED_DIFF = "squared_diff"

    @property
    def kernel_id(self) -> int:
        return COST_SQUARED if self is CostFn.SQUARED_DIFF else COST_ABS

    @classmethod
    def parse(cls, text: str) -> "CostFn":
        aliases = {"abs": cls.ABS_DIFF, "abs_diff": cls.ABS_DIFF,
                   "squared": cls.SQUARED_DIFF, "squared_diff": cls.SQUARED_DIFF}
        try:
            return aliases[text.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown cost function {text!r}") from None


@dataclass(frozen=True)
class DtwConfig:
    """Band fraction in (0, 1] (1 = unconstrained) and pointwise cost."""

    band: float = 0.1
    cost: CostFn = CostFn.SQUARED_DIFF

    def __post_init__(self):
        if not (0.0 < self.band <= 1.0) or not math.isfinite(self.band):
            raise ValueError(f"band fraction must be in (0, 1], got {self.band}")


DEFAULT_CONFIG = DtwConfig()


class DtwDistance(NamedTuple):
    distance: float
    path_len: int


class SubsequenceMatch(NamedTuple):
    start: int
    end: int  # exclusive
    norm_distance: float


def _as_array(seq: Sequence[float], name: str) -> np.ndarray:
    arr = np.ascontiguousarray(seq, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise EmptySequence(f"{name} must be a non-empty 1-d sequence")
    return arr


def band_width(band: float, n: int, m: int) -> int:
    """Band half-width in cells for the given sequence lengths."""
    return int(math.ceil(band * max(n, m)))


def dtw_distance(a: Sequence[float], b: Sequence[float],
                 cfg: DtwConfig = DEFAULT_CONFIG) -> DtwDistance:
    """Minimal cumulative alignment cost and one optimal path's cell count."""
    av = _as_array(a, "a")
    bv = _as_array(b, "b")
    w = band_width(cfg.band, av.size, bv.size)
    if w < abs(av.size - bv.size):
        raise BandInfeasible(
            f"band {cfg.band} allows width {w} but lengths differ by "
            f"{abs(av.size - bv.size)}; no monotone path exists")
    raw, plen = _backend.active().full_dtw(av, bv, w, cfg.cost.kernel_id)
    return DtwDistance(raw, plen)


def normalized_dtw_distance(a: Sequence[float], b: Sequence[float],
                            cfg: DtwConfig = DEFAULT_CONFIG) -> float:
    raw, plen = dtw_distance(a, b, cfg)
    return raw / plen


def subsequence_best_match(template: Sequence[float], stream: Sequence[float],
                           cfg: DtwConfig = DEFAULT_CONFIG,
                           normalize_stream: bool = False) -> SubsequenceMatch:
    """Best-matching stream span for the template.

    Returns the span [start, end) minimizing path-length-normalized DTW
    cost; ties prefer the smallest start, then the shortest span.
    """
    tv = _as_array(template, "template")
    sv = _as_array(stream, "stream")
    if tv.size > sv.size:
        raise TemplateLongerThanStream(
            f"template ({tv.size}) longer than stream ({sv.size})")
    if normalize_stream:
        sv = znormalize_values(sv)
    starts, ends, raws, plens = _backend.active().subseq_dtw_batch(
        tv, sv[None, :], cfg.cost.kernel_id, cfg.band)
    return SubsequenceMatch(int(starts[0]), int(ends[0]),
                            float(raws[0] / plens[0]))


def subsequence_match_windows(template: np.ndarray, windows: np.ndarray,
                              cfg: DtwConfig = DEFAULT_CONFIG):
    """Batch form over a (n_windows, window_len) matrix; detector hot path.

    Returns (starts, ends_exclusive, norm_distances) arrays with indices
    relative to each window.
    """
    starts, ends, raws, plens = _backend.active().subseq_dtw_batch(
        np.ascontiguousarray(template, dtype=np.float64),
        np.ascontiguousarray(windows, dtype=np.float64),
        cfg.cost.kernel_id, cfg.band)
    return starts, ends, raws / plens


def backend_name() -> str:
    """Which kernel implementation is active ('compiled' or 'python')."""
    return _backend.active_name()
