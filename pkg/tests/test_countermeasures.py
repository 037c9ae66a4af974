import numpy as np
import pytest

from powersig.countermeasures import (
    apply_color_offset_schedule,
    burst_injection_transform,
    color_offset_transform,
    degradation_reports_csv,
    evaluate_countermeasure,
    identity_transform,
    inject_obfuscation_bursts,
)
from powersig.bursts import detect_bursts
from powersig.errors import InvalidDwell, InvalidSpec
from powersig.experiments import build_countermeasure_suite, default_classes


@pytest.fixture(scope="module")
def small_suite():
    return build_countermeasure_suite(default_classes(3), n_train=6,
                                      n_test=9, n_scan=3, snr_db=10.0,
                                      seed=111)


class TestInjectBursts:
    def test_zero_rate_identity(self, make_trace):
        trace = make_trace(np.linspace(100, 200, 50))
        assert inject_obfuscation_bursts(trace, 0.0, 50.0, 100.0, 1) is trace

    def test_zero_amplitude_identity(self, make_trace):
        trace = make_trace(np.linspace(100, 200, 50))
        assert inject_obfuscation_bursts(trace, 5.0, 0.0, 100.0, 1) is trace

    def test_additive_nonnegative(self, make_trace):
        rng = np.random.default_rng(0)
        trace = make_trace(120 + rng.normal(0, 5, 800))
        out = inject_obfuscation_bursts(trace, 5.0, 80.0, 100.0, seed=3)
        assert np.all(out.values >= trace.values)
        assert len(out) == len(trace)
        assert out.rate == trace.rate and out.channel is trace.channel

    def test_deterministic_given_seed(self, make_trace):
        trace = make_trace(np.full(500, 120.0))
        a = inject_obfuscation_bursts(trace, 3.0, 60.0, 120.0, seed=9)
        b = inject_obfuscation_bursts(trace, 3.0, 60.0, 120.0, seed=9)
        c = inject_obfuscation_bursts(trace, 3.0, 60.0, 120.0, seed=10)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_rate_scales_added_energy(self, make_trace):
        trace = make_trace(np.full(2000, 120.0))
        low = inject_obfuscation_bursts(trace, 1.0, 80.0, 100.0, seed=5)
        high = inject_obfuscation_bursts(trace, 8.0, 80.0, 100.0, seed=5)
        assert (high.values - 120.0).sum() > (low.values - 120.0).sum()

    def test_invalid_params(self, make_trace):
        trace = make_trace(np.full(10, 1.0))
        with pytest.raises(InvalidSpec):
            inject_obfuscation_bursts(trace, -1.0, 10.0, 10.0, 0)
        with pytest.raises(InvalidSpec):
            inject_obfuscation_bursts(trace, 1.0, -10.0, 10.0, 0)
        with pytest.raises(InvalidSpec):
            inject_obfuscation_bursts(trace, 1.0, 10.0, 0.0, 0)


class TestColorOffsets:
    def test_zero_level_identity_bits(self, make_trace):
        trace = make_trace(np.linspace(50, 80, 64))
        out = apply_color_offset_schedule(trace, [0.0], 200.0, seed=1)
        assert np.array_equal(out.values, trace.values)

    def test_single_level_uniform_offset(self, make_trace):
        trace = make_trace(np.linspace(50, 80, 64))
        out = apply_color_offset_schedule(trace, [25.0], 200.0, seed=1)
        assert np.array_equal(out.values, trace.values + 25.0)

    def test_offset_does_not_change_burst_count(self, make_trace):
        rng = np.random.default_rng(4)
        values = 120 + rng.normal(0, 4, 900)
        for s in (100, 300, 500, 700):
            values[s:s + 10] += 140
        trace = make_trace(values)
        base = detect_bursts(trace).count
        shifted = apply_color_offset_schedule(trace, [60.0], 150.0, seed=2)
        assert detect_bursts(shifted).count == base

    def test_dwell_switching(self, make_trace):
        trace = make_trace(np.zeros(1000), rate=100.0)
        out = apply_color_offset_schedule(trace, [-50.0, 0.0, 50.0], 100.0,
                                          seed=7)
        # offsets constant within each 100 ms dwell (10 samples)
        for k in range(0, 1000, 10):
            chunk = out.values[k:k + 10]
            assert np.all(chunk == chunk[0])
        assert len(np.unique(out.values)) > 1

    def test_invalid_dwell_and_levels(self, make_trace):
        trace = make_trace(np.zeros(10))
        with pytest.raises(InvalidDwell):
            apply_color_offset_schedule(trace, [1.0], 0.0, seed=0)
        with pytest.raises(InvalidSpec):
            apply_color_offset_schedule(trace, [], 100.0, seed=0)


class TestEvaluate:
    def test_identity_zero_deltas(self, small_suite):
        report = evaluate_countermeasure(small_suite, identity_transform,
                                         "identity")
        assert report.accuracy_delta == 0.0
        assert report.recall_delta == 0.0
        assert report.precision_delta == 0.0
        assert report.false_events_delta == 0

    def test_zero_amplitude_zero_deltas(self, small_suite):
        transform = burst_injection_transform(5.0, 0.0, 120.0, seed=1)
        report = evaluate_countermeasure(small_suite, transform, "null")
        assert report.accuracy_delta == 0.0

    def test_burst_injection_degrades_accuracy(self, small_suite):
        transform = burst_injection_transform(5.0, 200.0, 120.0, seed=1)
        report = evaluate_countermeasure(small_suite, transform, "bursts5")
        assert report.accuracy_clean - report.accuracy_transformed >= 0.2

    def test_reports_deterministic(self, small_suite):
        transform = burst_injection_transform(3.0, 200.0, 120.0, seed=1)
        a = evaluate_countermeasure(small_suite, transform, "x")
        b = evaluate_countermeasure(small_suite, transform, "x")
        assert a == b

    def test_rate_sweep_monotone_within_noise(self, small_suite):
        accuracies = []
        for rate in (0.0, 1.0, 2.0, 5.0, 10.0):
            transform = (identity_transform if rate == 0 else
                         burst_injection_transform(rate, 200.0, 120.0, seed=6))
            report = evaluate_countermeasure(small_suite, transform,
                                             f"r{rate}")
            accuracies.append(report.accuracy_transformed)
        for harder, easier in zip(accuracies[1:], accuracies):
            assert harder <= easier + 0.05  # single-step noise allowance

    def test_color_offsets_direction(self, small_suite):
        transform = color_offset_transform([-200.0, 0.0, 200.0], 200.0, seed=2)
        report = evaluate_countermeasure(small_suite, transform, "color")
        assert report.recall_transformed <= report.recall_clean

    def test_csv_emission(self, small_suite):
        reports = [evaluate_countermeasure(small_suite, identity_transform,
                                           "identity")]
        text = degradation_reports_csv(reports)
        lines = text.strip().split("\n")
        assert lines[0].startswith("config,accuracy_clean,")
        assert lines[1].startswith("identity,")
        assert len(lines[1].split(",")) == len(lines[0].split(","))
