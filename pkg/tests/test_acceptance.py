"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
summary lines; every tolerance is asserted, nothing is advisory.
"""
import math
import time

import numpy as np
import pytest

from powersig import _backend
from powersig.bursts import detect_bursts
from powersig.countermeasures import (
    burst_injection_transform,
    evaluate_countermeasure,
    identity_transform,
)
from powersig.detect import (
    StreamScanner,
    classify_segment,
    run_stage_script,
    scan_stream,
)
from powersig.dtw import DtwConfig, dtw_distance
from powersig.experiments import (
    build_background_trace,
    build_burst_trial,
    build_classification_suite,
    build_countermeasure_suite,
    build_scan_trials,
    build_staged_trial,
    burst_seed,
    background_seed,
    class_sigma,
    count_keystrokes,
    default_classes,
    run_classification,
    run_scan_trials,
    staged_script,
    staged_seed,
    throughput_workload,
)

from oracles import enumerate_dtw, sq

SEED = 20260808


def report(criterion: str, passed: bool, detail: str) -> None:
    print(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
    assert passed, f"{criterion}: {detail}"


@pytest.fixture(scope="module")
def app_suite():
    classes = default_classes(3)
    signatures, test_pairs = build_classification_suite(
        classes, n_train=10, n_test=30, snr_db=10.0, seed=SEED)
    return classes, signatures, test_pairs


@pytest.fixture(scope="module")
def ui_suite():
    classes = default_classes(3, "ui")
    signatures, _ = build_classification_suite(
        classes, n_train=10, n_test=0, snr_db=10.0, seed=SEED,
        kind="ui_load")
    return classes, signatures


def test_criterion_1_dtw_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    cfg = DtwConfig(band=1.0)
    checked = 0
    for _ in range(500):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, 7))
        a = rng.integers(-5, 6, n).astype(float)
        b = rng.integers(-5, 6, m).astype(float)
        dist, plen = dtw_distance(a, b, cfg)
        want, lens = enumerate_dtw(a, b, sq)
        assert dist == want, (a, b, dist, want)
        assert plen in lens, (a, b, plen, lens)
        checked += 1
    elapsed = time.perf_counter() - t0
    report("criterion 1 (DTW oracle equivalence)",
           checked == 500 and elapsed < 10.0,
           f"{checked} random pairs exact, {elapsed:.2f} s (< 10 s)")


def test_criterion_2_app_identification(app_suite):
    t0 = time.perf_counter()
    classes, signatures, test_pairs = app_suite
    accuracy = run_classification(signatures, test_pairs).accuracy

    clean_sigs, clean_test = build_classification_suite(
        classes, n_train=10, n_test=30, snr_db=math.inf, seed=SEED)
    clean_accuracy = run_classification(clean_sigs, clean_test).accuracy
    elapsed = time.perf_counter() - t0
    report("criterion 2 (app identification)",
           accuracy >= 0.90 and clean_accuracy == 1.0 and elapsed < 30.0,
           f"accuracy {accuracy:.3f} @10dB (>= 0.90), "
           f"{clean_accuracy:.3f} noiseless (= 1.0), {elapsed:.1f} s (< 30 s)")


def test_criterion_3_ui_scan_recall_precision(ui_suite):
    classes, signatures = ui_suite
    trials = build_scan_trials(classes, n_trials=100, snr_db=10.0, seed=SEED)
    metrics = run_scan_trials(signatures, trials, tolerance_ms=200.0)
    report("criterion 3 (UI inference by scanning)",
           metrics.recall >= 0.95 and metrics.precision >= 0.95,
           f"recall {metrics.recall:.3f}, precision {metrics.precision:.3f} "
           f"(both >= 0.95), mean start error "
           f"{metrics.mean_start_error_ms:.0f} ms @ 200 ms tolerance")


def test_criterion_4_password_lengths():
    clean_bad = []
    noisy_hits = {}
    for length in range(4, 13):
        clean_ok = 0
        noisy_ok = 0
        for i in range(50):
            trace, want = build_burst_trial(length, 0.0,
                                            burst_seed(SEED, length, i))
            clean_ok += count_keystrokes(trace) == want
            trace, want = build_burst_trial(length, 0.2,
                                            burst_seed(SEED, length, 1000 + i))
            noisy_ok += count_keystrokes(trace) == want
        if clean_ok != 50:
            clean_bad.append(length)
        noisy_hits[length] = noisy_ok
    worst = min(noisy_hits.values())
    report("criterion 4 (password length counting)",
           not clean_bad and worst >= 45,
           f"clean lengths wrong: {clean_bad or 'none'} (want none); "
           f"noisy worst length {min(noisy_hits, key=noisy_hits.get)} "
           f"at {worst}/50 (>= 45)")


def test_criterion_5_staged_attack(app_suite, ui_suite):
    app_classes, app_sigs, _ = app_suite
    ui_classes, ui_sigs = ui_suite
    app_cs, ui_cs = app_classes[0], ui_classes[1]
    sigma = class_sigma(app_cs, "app_load", 10.0)
    script = staged_script(app_sigs[0], ui_sigs[1])

    correct = 0
    for i in range(100):
        key_count = 4 + (i % 9)
        trace, _ = build_staged_trial(app_cs, ui_cs, key_count, sigma,
                                      staged_seed(SEED, i))
        rep = run_stage_script(trace, script)
        correct += (rep.complete
                    and rep.events[0].label == app_cs.label
                    and rep.events[1].label == ui_cs.label
                    and rep.password_length == key_count)

    background_completed = 0
    for i in range(100):
        trace = build_background_trace(sigma, background_seed(SEED, i),
                                       duration_ms=10000.0)
        background_completed += run_stage_script(trace, script).complete

    report("criterion 5 (staged attack)",
           correct >= 85 and background_completed == 0,
           f"{correct}/100 composite traces fully correct (>= 85), "
           f"{background_completed}/100 background traces completed (= 0)")


def test_criterion_6_countermeasures():
    classes = default_classes(3)
    suite = build_countermeasure_suite(classes, n_train=10, n_test=30,
                                       n_scan=0, snr_db=10.0, seed=SEED)
    identity = evaluate_countermeasure(suite, identity_transform, "identity")
    injected = evaluate_countermeasure(
        suite,
        burst_injection_transform(5.0, classes[0].amplitude, 120.0, SEED),
        "bursts_5_per_s")
    drop = identity.accuracy_clean - injected.accuracy_transformed
    zero_delta = (identity.accuracy_delta == 0.0
                  and identity.recall_delta == 0.0
                  and identity.false_events_delta == 0)
    report("criterion 6 (countermeasure degradation)",
           drop >= 0.20 and zero_delta,
           f"burst injection at 5/s drops accuracy "
           f"{identity.accuracy_clean:.3f} -> "
           f"{injected.accuracy_transformed:.3f} "
           f"({100 * drop:.0f} points, >= 20); identity deltas all zero")


def test_criterion_7_invariance_suite(app_suite, make_trace):
    _, signatures, test_pairs = app_suite
    rng = np.random.default_rng(SEED)

    # affine invariance of classification
    affine_ok = True
    for seg, _ in test_pairs[:6]:
        base_label, base_dist = classify_segment(seg, signatures)
        a, b = 2.0 + rng.uniform(0, 5), rng.uniform(-20, 50)
        label, dist = classify_segment(seg.with_values(a * seg.values + b),
                                       signatures)
        affine_ok &= label == base_label
        affine_ok &= all(
            math.isclose(dist[k], base_dist[k], rel_tol=1e-9, abs_tol=1e-12)
            for k in base_dist)

    # scale/offset invariance of burst counts
    burst_ok = True
    for i in range(10):
        trace, _ = build_burst_trial(6, 0.15, burst_seed(SEED, 6, 2000 + i))
        base = detect_bursts(trace).count
        burst_ok &= detect_bursts(trace.with_values(trace.values * 3.5)).count == base
        burst_ok &= detect_bursts(trace.with_values(trace.values + 250.0)).count == base

    # band monotonicity
    band_ok = True
    for _ in range(20):
        a = rng.normal(size=40)
        b = rng.normal(size=40)
        dists = [dtw_distance(a, b, DtwConfig(band=f)).distance
                 for f in (0.05, 0.1, 0.25, 0.5, 1.0)]
        band_ok &= all(x >= y - 1e-12 for x, y in zip(dists, dists[1:]))

    # streaming/batch equivalence on random chunkings
    stream_ok = True
    ui_classes = default_classes(3, "ui")
    ui_sigs, _ = build_classification_suite(ui_classes, 10, 0, 10.0,
                                            seed=SEED, kind="ui_load")
    for trace, _ in build_scan_trials(ui_classes, 4, 10.0, seed=SEED + 1):
        batch = scan_stream(trace, ui_sigs)
        for _ in range(3):
            scanner = StreamScanner(ui_sigs, trace.rate, trace.channel)
            pos = 0
            while pos < len(trace):
                size = int(rng.integers(1, 500))
                scanner.feed(trace.values[pos:pos + size])
                pos += size
            stream_ok &= scanner.finish() == batch

    report("criterion 7 (invariance suite)",
           affine_ok and burst_ok and band_ok and stream_ok,
           f"affine classification {affine_ok}, burst scale/offset "
           f"{burst_ok}, band monotonicity {band_ok}, "
           f"streaming equivalence {stream_ok}")


def test_criterion_8_throughput_gate():
    trace, signatures = throughput_workload(seed=SEED, n_signatures=5,
                                            seconds=60.0, rate=100.0)
    t0 = time.perf_counter()
    scan_stream(trace, signatures)
    elapsed = time.perf_counter() - t0
    report("criterion 8 (detector throughput)",
           elapsed < 1.0,
           f"60 s x 100 Hz x 5 signatures scanned in {elapsed * 1000:.0f} ms "
           f"(< 1000 ms, {_backend.active_name()} backend)")
