"""Canned synthetic experiments.

Builders for the ground-truthed suites behind the eval/obfuscate/bench
commands and the acceptance tests: N-class app/UI identification at a
target SNR, stream-scan trials, staged app-then-UI-then-keystrokes traces,
keystroke-count trials, and a throughput workload.

Everything is seeded; trial i of purpose p draws from the sub-stream
derive_seed(derive_seed(seed, SALT_p), i), so suites are reproducible and
independent of each other.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .detect import Stage, StageScript
from .dtw import DtwConfig
from .metrics import ConfusionMatrix, DetectionMetrics, confusion, \
    detection_metrics, pool_detection_metrics
from .rng import derive_seed
from .signature import DEFAULT_SMOOTHING, Signature, train_signature
from .synth import (
    AppLoadEvent,
    KeystrokeEvent,
    SynthSpec,
    TruthSpan,
    UiLoadEvent,
    generate,
    sigma_for_snr,
)
from .trace import PowerTrace, Segment, extract_segment
from .countermeasures import EvalSuite

DEFAULT_RATE = 100.0
DEFAULT_BASELINE = 120.0

_SALT_TRAIN = 101
_SALT_TEST = 202
_SALT_SCAN = 303
_SALT_STAGED = 404
_SALT_BACKGROUND = 505
_SALT_BURSTS = 606
_SALT_BENCH = 707


@dataclass(frozen=True)
class ClassSpec:
    """One synthetic event class: a shape at an amplitude and duration."""

    label: str
    shape_id: int
    amplitude: float = 200.0
    length_ms: float = 1500.0
    jitter_ms: float = 80.0


def default_classes(n: int = 3, kind_prefix: str = "app") -> list[ClassSpec]:
    return [ClassSpec(f"{kind_prefix}_{chr(ord('a') + i)}", shape_id=i)
            for i in range(n)]


def _event_for(cs: ClassSpec, kind: str, at_ms: float):
    ctor = {"app_load": AppLoadEvent, "ui_load": UiLoadEvent}[kind]
    return ctor(at_ms=at_ms, label=cs.label, shape_id=cs.shape_id,
                amplitude=cs.amplitude, length_ms=cs.length_ms,
                jitter_ms=cs.jitter_ms)


def single_event_spec(cs: ClassSpec, kind: str, sigma: float, seed: int,
                      rate: float = DEFAULT_RATE,
                      baseline: float = DEFAULT_BASELINE,
                      at_ms: float | None = None,
                      duration_ms: float | None = None) -> SynthSpec:
    at = at_ms if at_ms is not None else cs.jitter_ms + 400.0
    if duration_ms is None:
        duration_ms = at + cs.length_ms + 1.5 * cs.jitter_ms + 500.0
    return SynthSpec(duration_ms=duration_ms, baseline=baseline,
                     noise_sigma=sigma, events=(_event_for(cs, kind, at),),
                     rate=rate, seed=seed)


def class_sigma(cs: ClassSpec, kind: str, snr_db: float,
                rate: float = DEFAULT_RATE,
                baseline: float = DEFAULT_BASELINE) -> float:
    """Noise sigma that puts this class's event at the requested SNR."""
    nominal = single_event_spec(replace(cs, jitter_ms=0.0), kind,
                                sigma=0.0, seed=0, rate=rate,
                                baseline=baseline)
    return sigma_for_snr(nominal, cs.label, snr_db)


def make_class_segments(cs: ClassSpec, kind: str, count: int, sigma: float,
                        stream_seed: int, rate: float = DEFAULT_RATE,
                        baseline: float = DEFAULT_BASELINE
                        ) -> list[PowerTrace]:
    """Generate ``count`` fresh event traces and cut out the truth spans."""
    segments = []
    for i in range(count):
        spec = single_event_spec(cs, kind, sigma, derive_seed(stream_seed, i),
                                 rate, baseline)
        trace, truth = generate(spec)
        span = truth[0]
        segments.append(extract_segment(
            trace, Segment(span.start_ms, span.end_ms, cs.label)))
    return segments


def build_classification_suite(classes: list[ClassSpec], n_train: int,
                               n_test: int, snr_db: float, seed: int,
                               kind: str = "app_load",
                               cfg: DtwConfig = DtwConfig(),
                               smoothing: int = DEFAULT_SMOOTHING,
                               rate: float = DEFAULT_RATE,
                               baseline: float = DEFAULT_BASELINE
                               ) -> tuple[list[Signature],
                                          list[tuple[PowerTrace, str]]]:
    """Train one signature per class; return them plus labeled test segments."""
    signatures = []
    test_pairs: list[tuple[PowerTrace, str]] = []
    for ci, cs in enumerate(classes):
        sigma = class_sigma(cs, kind, snr_db, rate, baseline)
        train_stream = derive_seed(derive_seed(seed, _SALT_TRAIN), ci)
        test_stream = derive_seed(derive_seed(seed, _SALT_TEST), ci)
        train_segs = make_class_segments(cs, kind, n_train, sigma,
                                         train_stream, rate, baseline)
        signatures.append(train_signature(train_segs, cfg, smoothing))
        for seg in make_class_segments(cs, kind, n_test, sigma,
                                       test_stream, rate, baseline):
            test_pairs.append((seg, cs.label))
    return signatures, test_pairs


def run_classification(signatures: list[Signature],
                       labeled_segments: list[tuple[PowerTrace, str]]
                       ) -> ConfusionMatrix:
    from .detect import classify_segment
    truths = [label for _, label in labeled_segments]
    predictions = [classify_segment(seg, signatures)[0]
                   for seg, _ in labeled_segments]
    return confusion(truths, predictions)


# --- stream-scan trials ---------------------------------------------------------


def build_scan_trials(classes: list[ClassSpec], n_trials: int, snr_db: float,
                      seed: int, kind: str = "ui_load",
                      duration_ms: float = 8000.0,
                      rate: float = DEFAULT_RATE,
                      baseline: float = DEFAULT_BASELINE
                      ) -> list[tuple[PowerTrace, list[TruthSpan]]]:
    """One embedded event per trial, class round-robin, varied position."""
    trials = []
    stream = derive_seed(seed, _SALT_SCAN)
    for i in range(n_trials):
        cs = classes[i % len(classes)]
        sigma = class_sigma(cs, kind, snr_db, rate, baseline)
        at = 1200.0 + 420.0 * (i % 7)
        spec = single_event_spec(cs, kind, sigma, derive_seed(stream, i),
                                 rate, baseline, at_ms=at,
                                 duration_ms=duration_ms)
        trials.append(generate(spec))
    return trials


def run_scan_trials(signatures: list[Signature],
                    trials: list[tuple[PowerTrace, list[TruthSpan]]],
                    tolerance_ms: float = 200.0,
                    step: int | None = None) -> DetectionMetrics:
    from .detect import scan_stream
    per_trial = []
    for trace, truth in trials:
        events = scan_stream(trace, signatures, step)
        per_trial.append(detection_metrics(events, truth, tolerance_ms))
    return pool_detection_metrics(per_trial)


def build_background_trace(sigma: float, seed: int,
                           duration_ms: float = 8000.0,
                           rate: float = DEFAULT_RATE,
                           baseline: float = DEFAULT_BASELINE) -> PowerTrace:
    spec = SynthSpec(duration_ms=duration_ms, baseline=baseline,
                     noise_sigma=sigma, events=(), rate=rate, seed=seed)
    return generate(spec)[0]


# --- staged attack trials --------------------------------------------------------

KEY_AMPLITUDE = 300.0
KEY_SPACING_MS = 450.0
KEY_WIDTH_MS = 200.0
KEY_JITTER_MS = 40.0


def build_staged_trial(app_cs: ClassSpec, ui_cs: ClassSpec, key_count: int,
                       sigma: float, trial_seed: int,
                       rate: float = DEFAULT_RATE,
                       baseline: float = DEFAULT_BASELINE
                       ) -> tuple[PowerTrace, list[TruthSpan]]:
    """App load, then login UI, then ``key_count`` keystrokes."""
    app_at = 500.0
    ui_at = app_at + app_cs.length_ms + 1.5 * app_cs.jitter_ms + 600.0
    keys_at = ui_at + ui_cs.length_ms + 1.5 * ui_cs.jitter_ms + 600.0
    keys_end = keys_at + (key_count - 1) * KEY_SPACING_MS + KEY_WIDTH_MS
    spec = SynthSpec(
        duration_ms=keys_end + KEY_JITTER_MS + 600.0,
        baseline=baseline,
        noise_sigma=sigma,
        events=(
            _event_for(app_cs, "app_load", app_at),
            _event_for(ui_cs, "ui_load", ui_at),
            KeystrokeEvent(at_ms=keys_at, label="keys", count=key_count,
                           amplitude=KEY_AMPLITUDE, spacing_ms=KEY_SPACING_MS,
                           spacing_jitter_ms=KEY_JITTER_MS,
                           burst_width_ms=KEY_WIDTH_MS),
        ),
        rate=rate, seed=trial_seed)
    return generate(spec)


def staged_script(app_sig: Signature, ui_sig: Signature,
                  horizon_ms: float | None = None) -> StageScript:
    if horizon_ms is None:
        horizon_ms = 12 * KEY_SPACING_MS + KEY_WIDTH_MS + 800.0
    return StageScript(stages=(
        Stage((app_sig,), on_match="advance"),
        Stage((ui_sig,), on_match="count-bursts"),
    ), burst_smoothing=BURST_SMOOTHING, horizon_ms=horizon_ms)


def staged_seed(seed: int, i: int) -> int:
    return derive_seed(derive_seed(seed, _SALT_STAGED), i)


def background_seed(seed: int, i: int) -> int:
    return derive_seed(derive_seed(seed, _SALT_BACKGROUND), i)


# --- keystroke-count trials -------------------------------------------------------

# conditioning ahead of burst counting; dampens sample noise without
# blurring 200 ms pulses together
BURST_SMOOTHING = 7


def count_keystrokes(trace, smoothing: int = BURST_SMOOTHING,
                     k: float = 4.0, refractory_ms: float = 150.0) -> int:
    """Standard keystroke pipeline: smooth, detect bursts, count."""
    from .bursts import detect_bursts, estimate_password_length
    from .preprocess import smooth
    conditioned = smooth(trace, smoothing) if smoothing > 1 else trace
    return estimate_password_length(
        detect_bursts(conditioned, k, refractory_ms))


def build_burst_trial(length: int, noise_fraction: float, trial_seed: int,
                      amplitude: float = 180.0,
                      spacing_ms: float = KEY_SPACING_MS,
                      width_ms: float = KEY_WIDTH_MS,
                      jitter_ms: float = KEY_JITTER_MS,
                      rate: float = DEFAULT_RATE,
                      baseline: float = DEFAULT_BASELINE
                      ) -> tuple[PowerTrace, int]:
    """A lone keystroke burst train; noise scales with burst amplitude."""
    at = 600.0
    end = at + (length - 1) * spacing_ms + width_ms
    spec = SynthSpec(
        duration_ms=end + jitter_ms + 600.0,
        baseline=baseline,
        noise_sigma=noise_fraction * amplitude,
        events=(KeystrokeEvent(at_ms=at, label="keys", count=length,
                               amplitude=amplitude, spacing_ms=spacing_ms,
                               spacing_jitter_ms=jitter_ms,
                               burst_width_ms=width_ms),),
        rate=rate, seed=trial_seed)
    return generate(spec)[0], length


def burst_seed(seed: int, length: int, i: int) -> int:
    return derive_seed(derive_seed(derive_seed(seed, _SALT_BURSTS), length), i)


# --- throughput workload ----------------------------------------------------------


def throughput_workload(seed: int, n_signatures: int = 5,
                        seconds: float = 60.0,
                        rate: float = DEFAULT_RATE,
                        baseline: float = DEFAULT_BASELINE,
                        snr_db: float = 10.0
                        ) -> tuple[PowerTrace, list[Signature]]:
    """A one-minute trace with sparse events plus n trained signatures."""
    classes = [ClassSpec(f"sig_{i}", shape_id=i % 4,
                         length_ms=1200.0 + 150.0 * (i % 3))
               for i in range(n_signatures)]
    signatures = []
    for ci, cs in enumerate(classes):
        sigma = class_sigma(cs, "app_load", snr_db, rate, baseline)
        stream = derive_seed(derive_seed(seed, _SALT_BENCH), ci)
        segs = make_class_segments(cs, "app_load", 3, sigma, stream,
                                   rate, baseline)
        signatures.append(train_signature(segs))
    sigma = class_sigma(classes[0], "app_load", snr_db, rate, baseline)
    events = []
    at = 4000.0
    for i, cs in enumerate(classes):
        if at + cs.length_ms + 2000.0 > seconds * 1000.0:
            break
        events.append(_event_for(cs, "app_load", at))
        at += cs.length_ms + 6000.0
    spec = SynthSpec(duration_ms=seconds * 1000.0, baseline=baseline,
                     noise_sigma=sigma, events=tuple(events), rate=rate,
                     seed=derive_seed(seed, _SALT_BENCH + 1))
    return generate(spec)[0], signatures


# --- countermeasure suite ---------------------------------------------------------


def build_countermeasure_suite(classes: list[ClassSpec], n_train: int,
                               n_test: int, n_scan: int, snr_db: float,
                               seed: int, kind: str = "app_load",
                               rate: float = DEFAULT_RATE,
                               baseline: float = DEFAULT_BASELINE
                               ) -> EvalSuite:
    signatures, test_pairs = build_classification_suite(
        classes, n_train, n_test, snr_db, seed, kind, rate=rate,
        baseline=baseline)
    scan_trials = build_scan_trials(classes, n_scan, snr_db, seed,
                                    kind="ui_load" if kind == "ui_load"
                                    else "app_load",
                                    rate=rate, baseline=baseline)
    return EvalSuite(
        signatures=tuple(signatures),
        labeled_segments=tuple(test_pairs),
        scan_trials=tuple((tr, tuple(truth)) for tr, truth in scan_trials),
    )
