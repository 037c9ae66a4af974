"""Trace data types and battery-log ingestion.

Raw polling logs are CSV with one sample per line, ``t_ms,voltage_uV,
current_uA`` (an optional header line is tolerated).  Comment lines start
with ``#`` and may carry segment markers::

    # mark,<label>,<start_ms>,<end_ms>

Parsing rebases timestamps so the first sample sits at t=0; markers are
rebased with them.  ``to_power_trace`` converts raw samples to the scalar
analysis channel (current magnitude in mA, or computed power in W) and
resamples the irregular series onto a uniform grid by linear interpolation.

Uniform traces have their own on-disk format (``psc-trace/1``), a CSV of
``t_ms,value`` rows preceded by ``#``-prefixed header lines recording the
rate, channel and metadata.  ``read_any_trace`` accepts either format.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    EmptyTrace,
    FileFormatError,
    InsufficientSamples,
    InvalidRate,
    MalformedLine,
    NonMonotonicTime,
    OutOfBounds,
)

TRACE_FORMAT_VERSION = "psc-trace/1"

# grid nudge: absorbs float error in ms*Hz products without ever moving a
# clean grid point to a neighbour
_GRID_EPS = 1e-9


class Channel(str, enum.Enum):
    """Scalar analysis channel of a uniform trace."""

    CURRENT_MAGNITUDE = "current_magnitude"  # |current| in mA
    POWER = "power"                          # voltage * |current| in W

    @classmethod
    def parse(cls, text: str) -> "Channel":
        aliases = {
            "current": cls.CURRENT_MAGNITUDE,
            "current_magnitude": cls.CURRENT_MAGNITUDE,
            "power": cls.POWER,
        }
        try:
            return aliases[text.strip().lower()]
        except KeyError:
            raise FileFormatError(f"unknown channel {text!r}") from None


@dataclass(frozen=True)
class RawSample:
    """One battery-status poll: milliseconds, microvolts, microamperes."""

    t_ms: float
    voltage_uv: float
    current_ua: float


@dataclass(frozen=True)
class Segment:
    """A labeled [start_ms, end_ms] span of some trace."""

    start_ms: float
    end_ms: float
    label: str
    trace_ref: str = ""


@dataclass(frozen=True)
class PowerTrace:
    """Uniformly sampled scalar trace.

    ``values[k]`` sits at time ``k * 1000 / rate`` milliseconds.  Instances
    are immutable: the value array is marked read-only and ``meta`` is a
    mapping proxy, so traces are safe to share across workers.
    """

    values: np.ndarray
    rate: float
    channel: Channel
    meta: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise InsufficientSamples("a trace needs at least one sample")
        if not np.all(np.isfinite(values)):
            raise InsufficientSamples("trace values must be finite")
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise InvalidRate(f"rate must be positive Hz, got {self.rate!r}")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    def __len__(self) -> int:
        return self.values.size

    @property
    def step_ms(self) -> float:
        return 1000.0 / self.rate

    @property
    def duration_ms(self) -> float:
        return (len(self) - 1) * self.step_ms

    @property
    def times_ms(self) -> np.ndarray:
        return np.arange(len(self)) * self.step_ms

    def with_values(self, values: np.ndarray, **meta_updates: str) -> "PowerTrace":
        """Same rate/channel, new samples; used by the pure transforms."""
        meta = dict(self.meta)
        meta.update(meta_updates)
        return PowerTrace(values, self.rate, self.channel, meta)

    def index_of_ms(self, t_ms: float) -> int:
        return int(round(t_ms * self.rate / 1000.0))

    def ms_of_index(self, idx: int) -> float:
        return idx * self.step_ms


# --- raw log parsing ---------------------------------------------------------


def _iter_lines(data) -> Iterable[tuple[int, str]]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    for line_no, line in enumerate(data.split("\n"), start=1):
        yield line_no, line.rstrip("\r").strip()


def _parse_fields(line_no: int, line: str) -> tuple[float, float, float]:
    parts = line.split(",")
    if len(parts) != 3:
        raise MalformedLine(line_no, f"expected 3 fields, got {len(parts)}")
    try:
        t, v, i = (float(p) for p in parts)
    except ValueError:
        raise MalformedLine(line_no, f"non-numeric field in {line!r}") from None
    if not (math.isfinite(t) and math.isfinite(v) and math.isfinite(i)):
        raise MalformedLine(line_no, "non-finite value")
    if v <= 0:
        raise MalformedLine(line_no, f"voltage must be positive, got {v}")
    return t, v, i


def _looks_like_header(line: str) -> bool:
    first = line.split(",")[0].strip()
    try:
        float(first)
        return False
    except ValueError:
        return True


def parse_trace_log(data) -> list[RawSample]:
    """Parse a raw polling log into samples, rebased so the first t is 0.

    Accepts ``str`` or ``bytes``.  Raises EmptyTrace, MalformedLine or
    NonMonotonicTime.
    """
    samples: list[RawSample] = []
    prev_t = None
    saw_header = False
    for line_no, line in _iter_lines(data):
        if not line or line.startswith("#"):
            continue
        if not samples and not saw_header and _looks_like_header(line):
            saw_header = True
            continue
        t, v, i = _parse_fields(line_no, line)
        if prev_t is not None and t <= prev_t:
            raise NonMonotonicTime(
                line_no, f"t={t} does not increase past previous t={prev_t}")
        prev_t = t
        samples.append(RawSample(t, v, i))
    if not samples:
        raise EmptyTrace("no data lines in trace log")
    t0 = samples[0].t_ms
    if t0 != 0.0:
        samples = [RawSample(s.t_ms - t0, s.voltage_uv, s.current_ua)
                   for s in samples]
    return samples


def parse_markers(data) -> list[Segment]:
    """Extract ``# mark`` segment comments, rebased like parse_trace_log."""
    markers: list[Segment] = []
    t0 = None
    for line_no, line in _iter_lines(data):
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.lower().startswith("mark,"):
                parts = body.split(",")
                if len(parts) != 4:
                    raise MalformedLine(line_no, f"bad marker {line!r}")
                try:
                    start, end = float(parts[2]), float(parts[3])
                except ValueError:
                    raise MalformedLine(line_no, f"bad marker {line!r}") from None
                markers.append(Segment(start, end, parts[1].strip()))
            continue
        if t0 is None and not _looks_like_header(line):
            t0 = float(line.split(",")[0])
    if t0:
        markers = [Segment(m.start_ms - t0, m.end_ms - t0, m.label, m.trace_ref)
                   for m in markers]
    return markers


# --- channel conversion and resampling ---------------------------------------


def to_power_trace(samples: Sequence[RawSample],
                   channel: Channel = Channel.CURRENT_MAGNITUDE,
                   rate: float = 100.0,
                   meta: Mapping[str, str] | None = None) -> PowerTrace:
    """Convert raw samples to the analysis channel on a uniform grid.

    Current magnitude is |current_uA| / 1000 (mA); power is
    voltage_uV * |current_uA| * 1e-12 (W).  The irregular series is then
    linearly interpolated onto ``floor(last_t * rate / 1000) + 1`` grid
    points spanning [0, last_t].  The observed current polarity is recorded
    in ``meta['polarity']`` rather than guessed at.
    """
    if len(samples) < 2:
        raise InsufficientSamples("need at least 2 raw samples to resample")
    if not (math.isfinite(rate) and rate > 0):
        raise InvalidRate(f"rate must be positive Hz, got {rate!r}")

    t = np.array([s.t_ms for s in samples], dtype=np.float64)
    if np.any(np.diff(t) <= 0):
        bad = int(np.flatnonzero(np.diff(t) <= 0)[0]) + 2
        raise NonMonotonicTime(bad, "raw sample times must strictly increase")
    current = np.array([s.current_ua for s in samples], dtype=np.float64)
    if channel is Channel.CURRENT_MAGNITUDE:
        values = np.abs(current) / 1000.0
    elif channel is Channel.POWER:
        voltage = np.array([s.voltage_uv for s in samples], dtype=np.float64)
        values = voltage * np.abs(current) * 1e-12
    else:  # pragma: no cover - enum is closed
        raise FileFormatError(f"unsupported channel {channel}")

    negative = int(np.count_nonzero(current < 0))
    if negative == 0:
        polarity = "positive"
    elif negative == len(samples):
        polarity = "negative"
    else:
        polarity = "mixed"

    last_t = float(t[-1]) - float(t[0])
    t = t - t[0]
    n_out = int(math.floor(last_t * rate / 1000.0 + _GRID_EPS)) + 1
    grid = np.arange(n_out) * (1000.0 / rate)

    # manual interpolation so grid points landing exactly on raw knots copy
    # the raw value bit-for-bit (format round-trips rely on it)
    j = np.searchsorted(t, grid, side="right") - 1
    j = np.clip(j, 0, len(t) - 2)
    w = (grid - t[j]) / (t[j + 1] - t[j])
    w = np.clip(w, 0.0, 1.0)
    out = values[j] + w * (values[j + 1] - values[j])
    exact_last = grid == t[-1]
    out[exact_last] = values[-1]

    full_meta = dict(meta or {})
    full_meta.setdefault("polarity", polarity)
    return PowerTrace(out, rate, channel, full_meta)


def extract_segment(trace: PowerTrace, seg: Segment) -> PowerTrace:
    """Sub-trace over [start_ms, end_ms], timestamps rebased to zero."""
    if not (0.0 <= seg.start_ms < seg.end_ms):
        raise OutOfBounds(f"bad segment bounds [{seg.start_ms}, {seg.end_ms}]")
    if seg.end_ms > trace.duration_ms + _GRID_EPS:
        raise OutOfBounds(
            f"segment end {seg.end_ms} ms past trace end {trace.duration_ms} ms")
    lo = int(math.ceil(seg.start_ms * trace.rate / 1000.0 - _GRID_EPS))
    hi = int(math.floor(seg.end_ms * trace.rate / 1000.0 + _GRID_EPS))
    hi = min(hi, len(trace) - 1)
    if lo > hi:
        raise OutOfBounds(
            f"segment [{seg.start_ms}, {seg.end_ms}] ms contains no samples "
            f"at {trace.rate} Hz")
    meta = dict(trace.meta)
    if seg.label:
        meta["label"] = seg.label
    meta["segment_of"] = seg.trace_ref or trace.meta.get("source", "")
    return PowerTrace(trace.values[lo:hi + 1], trace.rate, trace.channel, meta)


# --- serialization ------------------------------------------------------------


def format_float(x: float) -> str:
    """Shortest decimal that round-trips; integers drop the trailing .0."""
    x = float(x)
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def format_trace_log(trace: PowerTrace,
                     voltage_uv: float = 4_200_000.0,
                     marks: Sequence[Segment] = (),
                     extra_comments: Sequence[str] = ()) -> str:
    """Render a CURRENT_MAGNITUDE trace in the raw polling-log format.

    Values are written as integer microamperes, which is why synthetic
    traces quantize to 1 uA: the emitted log re-ingests bit-exactly.
    """
    if trace.channel is not Channel.CURRENT_MAGNITUDE:
        raise FileFormatError("only current-magnitude traces can be written "
                              "as raw polling logs")
    lines = ["# t_ms,voltage_uV,current_uA"]
    for comment in extra_comments:
        lines.append(f"# {comment}")
    for m in marks:
        lines.append(f"# mark,{m.label},{format_float(m.start_ms)},"
                     f"{format_float(m.end_ms)}")
    step = trace.step_ms
    volt = format_float(voltage_uv)
    for k, v in enumerate(trace.values):
        ua = float(v) * 1000.0
        nearest = round(ua)
        # quantized traces land on whole microamps bar float dust; writing
        # the integer is what makes reingestion bit-exact
        ua_str = str(int(nearest)) if abs(ua - nearest) < 1e-6 else repr(ua)
        lines.append(f"{format_float(k * step)},{volt},{ua_str}")
    return "\n".join(lines) + "\n"


def format_trace_csv(trace: PowerTrace, marks: Sequence[Segment] = ()) -> str:
    """Render a uniform trace in the psc-trace/1 format."""
    lines = [f"# {TRACE_FORMAT_VERSION}",
             f"# channel,{trace.channel.value}",
             f"# rate_hz,{format_float(trace.rate)}"]
    for key in sorted(trace.meta):
        lines.append(f"# meta,{key},{trace.meta[key]}")
    for m in marks:
        lines.append(f"# mark,{m.label},{format_float(m.start_ms)},"
                     f"{format_float(m.end_ms)}")
    lines.append("t_ms,value")
    step = trace.step_ms
    for k, v in enumerate(trace.values):
        lines.append(f"{format_float(k * step)},{format_float(float(v))}")
    return "\n".join(lines) + "\n"


def parse_trace_csv(data) -> PowerTrace:
    """Parse the psc-trace/1 format back into a PowerTrace."""
    rate = None
    channel = None
    meta: dict[str, str] = {}
    values: list[float] = []
    saw_version = False
    saw_header = False
    for line_no, line in _iter_lines(data):
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body == TRACE_FORMAT_VERSION:
                saw_version = True
            elif body.startswith("channel,"):
                channel = Channel.parse(body.split(",", 1)[1])
            elif body.startswith("rate_hz,"):
                rate = float(body.split(",", 1)[1])
            elif body.startswith("meta,"):
                parts = body.split(",", 2)
                if len(parts) == 3:
                    meta[parts[1]] = parts[2]
            continue
        if not saw_header and _looks_like_header(line):
            saw_header = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise MalformedLine(line_no, f"expected 2 fields, got {len(parts)}")
        try:
            values.append(float(parts[1]))
        except ValueError:
            raise MalformedLine(line_no, f"non-numeric value in {line!r}") from None
    if not saw_version:
        raise FileFormatError(f"missing {TRACE_FORMAT_VERSION} header")
    if rate is None or channel is None:
        raise FileFormatError("trace file must declare rate_hz and channel")
    if not values:
        raise EmptyTrace("no data lines in trace file")
    return PowerTrace(np.array(values), rate, channel, meta)


def read_any_trace(data,
                   channel: Channel = Channel.CURRENT_MAGNITUDE,
                   rate: float = 100.0,
                   meta: Mapping[str, str] | None = None) -> PowerTrace:
    """Load either a psc-trace/1 file or a raw polling log.

    Raw logs are converted with the given channel/rate; trace files carry
    their own and ignore both arguments.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if TRACE_FORMAT_VERSION in text.split("\n", 1)[0]:
        return parse_trace_csv(text)
    return to_power_trace(parse_trace_log(text), channel, rate, meta)
