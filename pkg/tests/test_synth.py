import json
import math

import numpy as np
import pytest

from powersig.errors import FileFormatError, InvalidSpec, UnknownLabel
from powersig.synth import (
    SHAPE_LIBRARY,
    AppLoadEvent,
    KeystrokeEvent,
    SynthSpec,
    event_rms,
    generate,
    sigma_for_snr,
    snr_of,
    spec_from_json,
    spec_to_json,
    trace_log_with_truth,
    truth_from_json,
    truth_to_json,
    waveform_only,
)
from powersig.trace import Channel, parse_markers, parse_trace_log, to_power_trace


def demo_spec(**overrides):
    base = dict(
        duration_ms=6000.0,
        baseline=120.0,
        noise_sigma=5.0,
        events=(
            AppLoadEvent(at_ms=500.0, label="app", shape_id=0,
                         amplitude=200.0, length_ms=1500.0, jitter_ms=50.0),
            KeystrokeEvent(at_ms=3000.0, label="keys", count=4,
                           amplitude=150.0, spacing_ms=400.0,
                           spacing_jitter_ms=30.0, burst_width_ms=80.0),
        ),
        rate=100.0,
        seed=42,
    )
    base.update(overrides)
    return SynthSpec(**base)


class TestGenerate:
    def test_flat_when_no_noise_no_events(self):
        trace, truth = generate(SynthSpec(duration_ms=1000.0, baseline=120.0,
                                          noise_sigma=0.0, seed=1))
        assert truth == []
        assert np.all(trace.values == 120.0)
        assert len(trace) == 101

    def test_bit_identical_repeats(self):
        spec = demo_spec()
        one, truth_one = generate(spec)
        two, truth_two = generate(spec)
        assert np.array_equal(one.values, two.values)
        assert truth_one == truth_two

    def test_different_seeds_differ(self):
        a, _ = generate(demo_spec(seed=1))
        b, _ = generate(demo_spec(seed=2))
        assert not np.array_equal(a.values, b.values)

    def test_noise_mean_statistics(self):
        # no events, 10k samples: sample mean within 3 sigma / sqrt(N)
        spec = SynthSpec(duration_ms=99_990.0, baseline=120.0,
                         noise_sigma=5.0, rate=100.0, seed=7)
        trace, _ = generate(spec)
        n = len(trace)
        assert n == 10_000
        bound = 3 * 5.0 / math.sqrt(n)
        assert abs(trace.values.mean() - 120.0) < bound + 0.001

    def test_truth_spans_cover_waveform(self):
        spec = demo_spec(noise_sigma=0.0)
        wave, truth = waveform_only(spec)
        t_ms = np.arange(wave.size) * 10.0
        covered = np.zeros(wave.size, dtype=bool)
        for ts in truth:
            covered |= (t_ms >= ts.start_ms - 1e-9) & (t_ms <= ts.end_ms + 1e-9)
        assert np.all(wave[~covered] == 0.0)
        for ts in truth:
            inside = (t_ms >= ts.start_ms) & (t_ms <= ts.end_ms)
            assert np.any(wave[inside] != 0.0)

    def test_keystroke_truth_counts(self):
        _, truth = generate(demo_spec())
        keys = [ts for ts in truth if ts.keystrokes is not None]
        assert len(keys) == 1 and keys[0].keystrokes == 4

    def test_values_quantized_to_microamps(self):
        trace, _ = generate(demo_spec())
        scaled = trace.values * 1000.0
        assert np.allclose(scaled, np.round(scaled), atol=1e-6)

    def test_trace_invariants(self):
        trace, _ = generate(demo_spec())
        assert np.all(np.isfinite(trace.values))
        assert np.all(trace.values >= 0.0)
        assert trace.channel is Channel.CURRENT_MAGNITUDE

    def test_shape_library_has_enough_distinct_shapes(self):
        assert len(SHAPE_LIBRARY) >= 3
        for pts in SHAPE_LIBRARY:
            fracs = [p[0] for p in pts]
            assert fracs[0] == 0.0 and fracs[-1] == 1.0
            assert fracs == sorted(fracs)
            assert pts[0][1] == 0.0 and pts[-1][1] == 0.0

    def test_validation_errors(self):
        with pytest.raises(InvalidSpec):
            generate(demo_spec(duration_ms=-5.0))
        with pytest.raises(InvalidSpec):
            generate(demo_spec(noise_sigma=-1.0))
        with pytest.raises(InvalidSpec):
            generate(demo_spec(events=(
                AppLoadEvent(at_ms=5500.0, label="x", shape_id=0,
                             amplitude=100.0, length_ms=1500.0),)))
        with pytest.raises(InvalidSpec):
            generate(demo_spec(events=(
                AppLoadEvent(at_ms=500.0, label="x", shape_id=99,
                             amplitude=100.0, length_ms=500.0),)))
        with pytest.raises(InvalidSpec):
            generate(demo_spec(events=(
                KeystrokeEvent(at_ms=500.0, label="x", count=3,
                               amplitude=100.0, spacing_ms=100.0,
                               spacing_jitter_ms=60.0),)))


class TestSnr:
    def test_zero_db_when_sigma_equals_rms(self):
        spec = demo_spec(noise_sigma=0.0,
                         events=(demo_spec().events[0],), seed=0)
        rms = event_rms(spec, "app")
        at_rms = SynthSpec(duration_ms=spec.duration_ms, baseline=120.0,
                           noise_sigma=rms, events=spec.events, seed=0)
        assert snr_of(at_rms, "app") == pytest.approx(0.0, abs=1e-9)

    def test_infinite_when_noiseless(self):
        assert snr_of(demo_spec(noise_sigma=0.0), "app") == math.inf

    def test_doubling_amplitude_adds_6dB(self):
        ev = demo_spec().events[0]
        spec1 = demo_spec(events=(ev,), noise_sigma=10.0)
        ev2 = AppLoadEvent(at_ms=ev.at_ms, label=ev.label, shape_id=ev.shape_id,
                           amplitude=2 * ev.amplitude, length_ms=ev.length_ms,
                           jitter_ms=ev.jitter_ms)
        spec2 = demo_spec(events=(ev2,), noise_sigma=10.0)
        assert snr_of(spec2, "app") - snr_of(spec1, "app") == \
            pytest.approx(20 * math.log10(2), abs=1e-9)

    def test_unknown_label(self):
        with pytest.raises(UnknownLabel):
            snr_of(demo_spec(), "nope")

    def test_sigma_for_snr_roundtrip(self):
        spec = demo_spec()
        sigma = sigma_for_snr(spec, "app", 10.0)
        tuned = SynthSpec(duration_ms=spec.duration_ms, baseline=spec.baseline,
                          noise_sigma=sigma, events=spec.events,
                          rate=spec.rate, seed=spec.seed)
        assert snr_of(tuned, "app") == pytest.approx(10.0, abs=1e-9)


class TestSpecJson:
    def test_roundtrip(self):
        spec = demo_spec()
        again = spec_from_json(spec_to_json(spec))
        assert again == spec

    def test_version_required(self):
        with pytest.raises(FileFormatError):
            spec_from_json(json.dumps({"duration_ms": 100}))

    def test_truth_roundtrip(self):
        _, truth = generate(demo_spec())
        again = truth_from_json(truth_to_json(truth))
        assert again == truth


class TestLogEmission:
    def test_roundtrips_to_identical_trace(self):
        trace, truth = generate(demo_spec())
        text = trace_log_with_truth(trace, truth)
        samples = parse_trace_log(text)
        again = to_power_trace(samples, Channel.CURRENT_MAGNITUDE, trace.rate)
        assert np.array_equal(again.values, trace.values)
        marks = parse_markers(text)
        assert len(marks) == len(truth)
        for mark, ts in zip(marks, sorted(truth, key=lambda t: (t.start_ms, t.label))):
            assert mark.label == ts.label

    def test_golden_trace_file(self):
        from pathlib import Path
        golden_path = Path(__file__).parent / "data" / "golden_trace.csv"
        trace, truth = generate(demo_spec())
        text = trace_log_with_truth(trace, truth)
        assert text == golden_path.read_text(encoding="utf-8")
