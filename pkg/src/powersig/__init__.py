"""powersig: learn, detect, and stress power-consumption signatures.

Pipeline: ingest battery polling logs into uniform traces (trace), condition
them (preprocess), learn DTW template signatures from labeled segments
(signature), detect occurrences in continuous traces and drive staged
attacks (detect), count keystroke bursts (bursts), and measure how well
obfuscation defenses break all of the above (countermeasures) - with a
deterministic synthetic generator (synth) supplying ground truth and
shared metrics (metrics).

The DTW inner loops run on a compiled extension when it built, with a
numpy fallback selected automatically; see powersig.dtw.backend_name().
"""
from .bursts import Burst, BurstReport, detect_bursts, estimate_password_length
from .detect import (
    DetectionEvent,
    Stage,
    StageReport,
    StageScript,
    StreamScanner,
    classify_segment,
    merge_events,
    run_stage_script,
    scan_stream,
    UNKNOWN,
)
from .dtw import (
    CostFn,
    DtwConfig,
    backend_name,
    dtw_distance,
    normalized_dtw_distance,
    subsequence_best_match,
)
from .errors import PowerSigError
from .metrics import ConfusionMatrix, DetectionMetrics, confusion, detection_metrics
from .preprocess import NormalizationParams, estimate_baseline, smooth, znormalize
from .countermeasures import (
    EvalSuite,
    apply_color_offset_schedule,
    evaluate_countermeasure,
    inject_obfuscation_bursts,
)
from .signature import Signature, calibrate_threshold, train_signature
from .synth import (
    AppLoadEvent,
    KeystrokeEvent,
    SynthSpec,
    TruthSpan,
    UiLoadEvent,
    generate,
    snr_of,
)
from .trace import (
    Channel,
    PowerTrace,
    RawSample,
    Segment,
    extract_segment,
    parse_trace_log,
    to_power_trace,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
