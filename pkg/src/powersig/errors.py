"""Exception hierarchy.

Every error raised on purpose by this package derives from PowerSigError,
so callers (and the CLI) can distinguish data problems from bugs.
"""


class PowerSigError(Exception):
    """Base class for all errors raised by powersig."""


# --- trace parsing / construction ---

class EmptyTrace(PowerSigError):
    """A trace log contained no data lines."""


class MalformedLine(PowerSigError):
    """A trace log line could not be parsed; carries the 1-based line number."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class NonMonotonicTime(PowerSigError):
    """Timestamps in a trace log are not strictly increasing."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class InsufficientSamples(PowerSigError):
    """An operation needs more samples than the input provides."""


class InvalidRate(PowerSigError):
    """Sampling rate must be a positive, finite number of Hz."""


class OutOfBounds(PowerSigError):
    """A segment lies (partly) outside its source trace."""


class InvalidWindow(PowerSigError):
    """Smoothing window must be odd and within the trace length."""


# --- DTW engine ---

class EmptySequence(PowerSigError):
    """DTW inputs must be non-empty."""


class BandInfeasible(PowerSigError):
    """The warping band is too narrow for any monotone alignment to exist."""


class TemplateLongerThanStream(PowerSigError):
    """Subsequence matching needs the stream to be at least template-length."""


# --- signature training ---

class NoSegments(PowerSigError):
    """Training requires at least one segment."""


class MixedRates(PowerSigError):
    """Training segments must share one sampling rate."""


class MixedChannels(PowerSigError):
    """Training segments must share one analysis channel."""


class MixedLabels(PowerSigError):
    """Training segments must share one label."""


class SegmentTooShort(PowerSigError):
    """Training segments must have a minimum number of samples."""


# --- detection ---

class RateMismatch(PowerSigError):
    """Trace and signature sampling rates differ."""


class ChannelMismatch(PowerSigError):
    """Trace and signature analysis channels differ."""


class TraceTooShort(PowerSigError):
    """The scanned trace is shorter than a signature template."""


class InvalidScript(PowerSigError):
    """A stage script violates its structural rules."""


# --- synthesis ---

class InvalidSpec(PowerSigError):
    """A synthetic-trace spec violates its invariants."""


class UnknownLabel(PowerSigError):
    """The requested label does not occur in the spec or suite."""


# --- metrics / countermeasures ---

class LengthMismatch(PowerSigError):
    """Paired label sequences must have equal lengths."""


class InvalidDwell(PowerSigError):
    """Offset-schedule dwell must be a positive duration."""


# --- file formats ---

class FileFormatError(PowerSigError):
    """A structured input file has the wrong shape or version."""
