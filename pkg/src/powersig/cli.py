"""Command-line front end.

Subcommands wire the library into the full pipeline: ingest raw polling
logs, train signatures from segments, classify segments, scan continuous
traces, run staged attacks, count keystroke bursts, synthesize
ground-truthed traces, sweep obfuscation countermeasures, evaluate the
built-in suites, and benchmark the detector.

Exit codes: 0 success, 1 usage error, 2 data error (bad file content,
missing file, infeasible inputs).  All outputs are CSV or JSON; --out
writes atomically, otherwise stdout.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

from . import __version__
from . import _backend
from ._util import atomic_write
from .bursts import burst_report_to_csv, detect_bursts
from .countermeasures import (
    burst_injection_transform,
    color_offset_transform,
    degradation_reports_csv,
    evaluate_countermeasure,
    identity_transform,
)
from .detect import (
    Stage,
    StageScript,
    classify_segment,
    events_to_csv,
    run_stage_script,
    scan_stream,
    stage_report_to_json,
)
from .dtw import CostFn, DtwConfig
from .errors import PowerSigError
from .preprocess import smooth
from .experiments import (
    build_classification_suite,
    build_countermeasure_suite,
    build_scan_trials,
    default_classes,
    run_classification,
    run_scan_trials,
    throughput_workload,
)
from .signature import (
    DEFAULT_FLOOR,
    DEFAULT_K,
    DEFAULT_SMOOTHING,
    signature_from_json,
    signature_to_json,
    train_signature,
)
from .synth import spec_from_json, generate, trace_log_with_truth, truth_to_json
from .trace import Channel, format_trace_csv, parse_markers, read_any_trace, \
    extract_segment

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rate", type=float, default=100.0,
                        help="sampling rate in Hz for raw logs (default 100)")
    parser.add_argument("--channel", default="current_magnitude",
                        help="analysis channel: current_magnitude | power")
    parser.add_argument("--band", type=float, default=0.1,
                        help="warping band fraction in (0, 1] (default 0.1)")
    parser.add_argument("--cost", default="squared_diff",
                        help="pointwise cost: squared_diff | abs_diff")
    parser.add_argument("--step", type=int, default=None,
                        help="scan step in samples (default: template/4)")
    parser.add_argument("--k", type=float, default=None,
                        help="sigma multiplier (threshold calibration or "
                             "burst threshold, per subcommand)")
    parser.add_argument("--refractory", type=float, default=150.0,
                        help="burst refractory period in ms (default 150)")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for anything randomized (default 0)")
    parser.add_argument("--out", default=None,
                        help="output file (default: stdout)")


def _emit(args, text: str) -> None:
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_trace(path: str, args):
    return read_any_trace(_read(path), Channel.parse(args.channel), args.rate,
                          {"source": path})


def _load_signatures(paths) -> list:
    return [signature_from_json(_read(p)) for p in paths]


def _dtw_config(args) -> DtwConfig:
    try:
        return DtwConfig(band=args.band, cost=CostFn.parse(args.cost))
    except ValueError as exc:
        raise PowerSigError(str(exc)) from None


# --- subcommand handlers ---------------------------------------------------------


def _cmd_ingest(args) -> int:
    trace = _load_trace(args.log, args)
    marks = parse_markers(_read(args.log))
    _emit(args, format_trace_csv(trace, marks))
    return 0


def _cmd_train(args) -> int:
    segments = []
    for path in args.segments:
        text = _read(path)
        trace = read_any_trace(text, Channel.parse(args.channel), args.rate,
                               {"source": path})
        marks = [m for m in parse_markers(text) if m.label == args.label]
        if marks:
            segments.extend(extract_segment(trace, m) for m in marks)
        else:
            segments.append(trace)
    sig = train_signature(segments, _dtw_config(args),
                          smoothing=args.smoothing,
                          k=args.k if args.k is not None else DEFAULT_K,
                          floor=args.floor, label=args.label)
    _emit(args, signature_to_json(sig))
    return 0


def _cmd_classify(args) -> int:
    text = _read(args.segment)
    seg = read_any_trace(text, Channel.parse(args.channel), args.rate,
                         {"source": args.segment})
    if args.mark:
        marks = [m for m in parse_markers(text) if m.label == args.mark]
        if not marks:
            raise PowerSigError(
                f"{args.segment} has no '# mark,{args.mark},...' comment")
        seg = extract_segment(seg, marks[0])
    signatures = _load_signatures(args.sig)
    label, distances = classify_segment(seg, signatures)
    _emit(args, json.dumps({"label": label, "distances": distances},
                           indent=2) + "\n")
    return 0


def _cmd_scan(args) -> int:
    trace = _load_trace(args.trace, args)
    signatures = _load_signatures(args.sig)
    events = scan_stream(trace, signatures, args.step)
    _emit(args, events_to_csv(events))
    return 0


def _cmd_attack(args) -> int:
    trace = _load_trace(args.trace, args)
    stages = []
    for pos, stage_arg in enumerate(args.stage):
        sigs = _load_signatures(stage_arg.split(","))
        terminal = pos == len(args.stage) - 1
        action = "count-bursts" if (terminal and args.count_bursts) else "advance"
        stages.append(Stage(tuple(sigs), action))
    script = StageScript(
        stages=tuple(stages),
        burst_k=args.k if args.k is not None else 4.0,
        burst_refractory_ms=args.refractory,
        burst_smoothing=args.smoothing,
        horizon_ms=args.horizon,
        step=args.step)
    report = run_stage_script(trace, script)
    _emit(args, stage_report_to_json(report))
    return 0


def _cmd_bursts(args) -> int:
    trace = _load_trace(args.trace, args)
    if args.smoothing > 1:
        trace = smooth(trace, args.smoothing)
    report = detect_bursts(trace, args.k if args.k is not None else 4.0,
                           args.refractory)
    _emit(args, burst_report_to_csv(report))
    return 0


def _cmd_synth(args) -> int:
    spec = spec_from_json(_read(args.spec))
    if args.seed:
        spec = dataclasses.replace(spec, seed=args.seed)
    trace, truth = generate(spec)
    _emit(args, trace_log_with_truth(trace, truth))
    if args.truth:
        atomic_write(args.truth, truth_to_json(truth))
    return 0


def _cmd_obfuscate(args) -> int:
    classes = default_classes(args.classes)
    suite = build_countermeasure_suite(classes, args.train, args.test,
                                       args.scan_trials, args.snr, args.seed)
    amplitude = (classes[0].amplitude if args.amplitude is None
                 else args.amplitude)
    reports = []
    if args.mode == "bursts":
        for rate in args.rates:
            if rate == 0:
                transform = identity_transform
            else:
                transform = burst_injection_transform(rate, amplitude,
                                                      args.width, args.seed)
            reports.append(evaluate_countermeasure(
                suite, transform, name=f"bursts_{rate}per_s"))
    else:
        for span in args.levels:
            if span == 0:
                transform = identity_transform
            else:
                levels = [-span, 0.0, span]
                transform = color_offset_transform(levels, args.dwell,
                                                   args.seed)
            reports.append(evaluate_countermeasure(
                suite, transform, name=f"color_pm{span}"))
    _emit(args, degradation_reports_csv(reports))
    return 0


def _cmd_eval(args) -> int:
    classes = default_classes(args.classes)
    signatures, test_pairs = build_classification_suite(
        classes, args.train, args.test, args.snr, args.seed)
    cm = run_classification(signatures, test_pairs)
    ui_classes = default_classes(args.classes, kind_prefix="ui")
    ui_sigs, _ = build_classification_suite(
        ui_classes, args.train, 0, args.snr, args.seed, kind="ui_load")
    trials = build_scan_trials(ui_classes, args.scan_trials, args.snr,
                               args.seed)
    det = run_scan_trials(ui_sigs, trials, args.tolerance, args.step)
    doc = {
        "classification": json.loads(cm.to_json()),
        "detection": json.loads(det.to_json()),
        "config": {"classes": args.classes, "train": args.train,
                   "test": args.test, "scan_trials": args.scan_trials,
                   "snr_db": args.snr, "seed": args.seed,
                   "tolerance_ms": args.tolerance},
    }
    _emit(args, json.dumps(doc, indent=2) + "\n")
    return 0


def _cmd_bench(args) -> int:
    if args.backend in ("python", "compiled"):
        if args.backend not in _backend.available():
            print(f"powersig: backend {args.backend!r} is not available "
                  f"(built: {_backend.available()})", file=sys.stderr)
            return USAGE_ERROR
        backends = [args.backend]
    else:
        backends = _backend.available()
    trace, signatures = throughput_workload(args.seed,
                                            n_signatures=args.signatures,
                                            seconds=args.seconds)
    rows = []
    previous = _backend.active_name()
    try:
        for name in backends:
            _backend.use_backend(name)
            t0 = time.perf_counter()
            events = scan_stream(trace, signatures, args.step)
            elapsed = time.perf_counter() - t0
            rows.append({
                "backend": name,
                "trace_seconds": args.seconds,
                "samples": len(trace),
                "signatures": len(signatures),
                "events": len(events),
                "scan_seconds": elapsed,
                "samples_per_second": len(trace) / elapsed,
            })
    finally:
        _backend.use_backend(previous)
    _emit(args, json.dumps(rows, indent=2) + "\n")
    return 0


# --- parser wiring ----------------------------------------------------------------


def _float_list(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p.strip() != ""]


def build_parser() -> _Parser:
    parser = _Parser(prog="powersig",
                     description="Power-trace signature toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("ingest", help="raw polling log -> uniform trace file")
    p.add_argument("log")
    _common_flags(p)
    p.set_defaults(handler=_cmd_ingest)

    p = sub.add_parser("train", help="training segments -> signature file")
    p.add_argument("segments", nargs="+",
                   help="trace files; files with matching '# mark' comments "
                        "contribute those spans, others train whole")
    p.add_argument("--label", required=True)
    p.add_argument("--smoothing", type=int, default=DEFAULT_SMOOTHING)
    p.add_argument("--floor", type=float, default=DEFAULT_FLOOR)
    _common_flags(p)
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("classify", help="label one segment against signatures")
    p.add_argument("segment")
    p.add_argument("--sig", action="append", required=True,
                   help="signature file (repeatable)")
    p.add_argument("--mark", default=None,
                   help="classify the '# mark' span with this label instead "
                        "of the whole file")
    _common_flags(p)
    p.set_defaults(handler=_cmd_classify)

    p = sub.add_parser("scan", help="scan a trace for signature occurrences")
    p.add_argument("trace")
    p.add_argument("--sig", action="append", required=True)
    _common_flags(p)
    p.set_defaults(handler=_cmd_scan)

    p = sub.add_parser("attack", help="staged detection script over a trace")
    p.add_argument("trace")
    p.add_argument("--stage", action="append", required=True,
                   help="signature file(s) for one stage, comma separated "
                        "(repeat per stage, in order)")
    p.add_argument("--count-bursts", action="store_true",
                   help="count keystroke bursts after the final stage match")
    p.add_argument("--horizon", type=float, default=None,
                   help="burst-count horizon in ms after the final match")
    p.add_argument("--smoothing", type=int, default=1,
                   help="smoothing window before burst counting (default 1)")
    _common_flags(p)
    p.set_defaults(handler=_cmd_attack)

    p = sub.add_parser("bursts", help="count power bursts in a trace")
    p.add_argument("trace")
    p.add_argument("--smoothing", type=int, default=1,
                   help="smoothing window before burst counting (default 1)")
    _common_flags(p)
    p.set_defaults(handler=_cmd_bursts)

    p = sub.add_parser("synth", help="spec JSON -> trace log with ground truth")
    p.add_argument("spec")
    p.add_argument("--truth", default=None,
                   help="also write ground truth JSON to this path")
    _common_flags(p)
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("obfuscate",
                       help="sweep a countermeasure on a built-in suite")
    p.add_argument("--mode", choices=("bursts", "color"), default="bursts")
    p.add_argument("--rates", type=_float_list, default=[0, 1, 2, 5, 10],
                   help="burst rates per second (comma separated)")
    p.add_argument("--levels", type=_float_list, default=[0, 100, 200],
                   help="color-offset spans (comma separated)")
    p.add_argument("--amplitude", type=float, default=None,
                   help="injected burst amplitude (default: class amplitude)")
    p.add_argument("--width", type=float, default=120.0,
                   help="injected burst width in ms")
    p.add_argument("--dwell", type=float, default=200.0,
                   help="color offset dwell in ms")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--train", type=int, default=10)
    p.add_argument("--test", type=int, default=30)
    p.add_argument("--scan-trials", type=int, default=10)
    p.add_argument("--snr", type=float, default=10.0)
    _common_flags(p)
    p.set_defaults(handler=_cmd_obfuscate)

    p = sub.add_parser("eval", help="run the built-in suites, report metrics")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--train", type=int, default=10)
    p.add_argument("--test", type=int, default=30)
    p.add_argument("--scan-trials", type=int, default=20)
    p.add_argument("--snr", type=float, default=10.0)
    p.add_argument("--tolerance", type=float, default=200.0)
    _common_flags(p)
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("bench", help="detector throughput benchmark")
    p.add_argument("--seconds", type=float, default=60.0)
    p.add_argument("--signatures", type=int, default=5)
    p.add_argument("--backend", choices=("auto", "python", "compiled", "both"),
                   default="auto",
                   help="kernel backend to time (both = compare)")
    _common_flags(p)
    p.set_defaults(handler=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    if getattr(args, "backend", None) == "auto":
        args.backend = _backend.active_name()
    try:
        return args.handler(args)
    except PowerSigError as exc:
        print(f"powersig: error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except OSError as exc:
        print(f"powersig: error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
