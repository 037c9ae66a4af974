import json

import numpy as np
import pytest

from powersig.dtw import CostFn, DtwConfig, normalized_dtw_distance
from powersig.errors import (
    FileFormatError,
    MixedChannels,
    MixedLabels,
    MixedRates,
    NoSegments,
    SegmentTooShort,
)
from powersig.experiments import ClassSpec, class_sigma, make_class_segments
from powersig.signature import (
    calibrate_threshold,
    condition_segment,
    signature_from_json,
    signature_to_json,
    train_signature,
)
from powersig.trace import Channel


def labeled(make_trace, values, label="app", rate=100.0,
            channel=Channel.CURRENT_MAGNITUDE):
    return make_trace(values, rate=rate, channel=channel, label=label)


class TestCalibrateThreshold:
    def test_empty_distances_floor(self):
        assert calibrate_threshold([], floor=0.05) == 0.05

    def test_single_distance_floor(self):
        assert calibrate_threshold([0.4], floor=0.05) == 0.05

    def test_zero_spread(self):
        assert calibrate_threshold([0.1, 0.1, 0.1], k=3.0, floor=0.05) == \
            pytest.approx(0.1)

    def test_floor_wins_when_higher(self):
        assert calibrate_threshold([0.001, 0.001, 0.001], k=3.0,
                                   floor=0.05) == 0.05

    def test_mean_plus_k_std(self):
        ds = [0.1, 0.2, 0.3]
        want = np.mean(ds) + 2.0 * np.std(ds)
        assert calibrate_threshold(ds, k=2.0, floor=0.0) == pytest.approx(want)

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            calibrate_threshold([0.1, 0.2], k=0.0)


class TestTrainSignature:
    def test_identical_segments(self, make_trace):
        values = np.sin(np.linspace(0, 6, 40)) * 50 + 120
        segments = [labeled(make_trace, values) for _ in range(5)]
        sig = train_signature(segments)
        assert sig.label == "app"
        assert sig.training_count == 5
        assert sig.threshold == 0.05  # zero spread -> configured floor
        assert np.array_equal(sig.template,
                              condition_segment(segments[0], 5))

    def test_single_segment(self, make_trace):
        values = np.linspace(0, 100, 20)
        sig = train_signature([labeled(make_trace, values)], smoothing=3)
        assert sig.training_count == 1
        assert sig.threshold == 0.05
        assert np.array_equal(sig.template,
                              condition_segment(labeled(make_trace, values), 3))

    def test_medoid_matches_pairwise_oracle(self, make_trace):
        cs = ClassSpec("app_a", shape_id=0)
        sigma = class_sigma(cs, "app_load", 10.0)
        segments = make_class_segments(cs, "app_load", 10, sigma,
                                       stream_seed=99)
        cfg = DtwConfig()
        sig = train_signature(segments, cfg)
        conditioned = [condition_segment(s, 5) for s in segments]
        n = len(conditioned)
        matrix = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i != j:
                    matrix[i, j] = normalized_dtw_distance(
                        conditioned[i], conditioned[j], cfg)
        medoid = int(np.argmin(matrix.sum(axis=1)))
        assert np.array_equal(sig.template, conditioned[medoid])
        # medoid property: its row sum is minimal
        assert matrix.sum(axis=1)[medoid] == matrix.sum(axis=1).min()

    def test_threshold_accepts_fresh_segments(self, make_trace):
        # calibrated on 20 jittered segments, >= 95% of 100 fresh ones accepted
        cs = ClassSpec("app_a", shape_id=0)
        sigma = class_sigma(cs, "app_load", 10.0)
        train = make_class_segments(cs, "app_load", 20, sigma, stream_seed=1)
        sig = train_signature(train)
        fresh = make_class_segments(cs, "app_load", 100, sigma, stream_seed=2)
        accepted = 0
        for seg in fresh:
            d = normalized_dtw_distance(condition_segment(seg, 5),
                                        sig.template, sig.dtw)
            accepted += d <= sig.threshold
        assert accepted >= 95

    def test_deterministic(self, make_trace):
        cs = ClassSpec("app_b", shape_id=1)
        segs = make_class_segments(cs, "app_load", 6, 30.0, stream_seed=5)
        one = train_signature(segs)
        two = train_signature(segs)
        assert np.array_equal(one.template, two.template)
        assert one.threshold == two.threshold

    def test_affine_scaling_bit_identical_template(self, make_trace):
        rng = np.random.default_rng(12)
        base_values = [rng.normal(120, 30, 40) for _ in range(4)]
        plain = train_signature([labeled(make_trace, v) for v in base_values])
        scaled = train_signature(
            [labeled(make_trace, 8.0 * v) for v in base_values])
        assert np.array_equal(plain.template, scaled.template)

    def test_general_affine_template_close(self, make_trace):
        rng = np.random.default_rng(13)
        base_values = [rng.normal(120, 30, 40) for _ in range(4)]
        plain = train_signature([labeled(make_trace, v) for v in base_values])
        moved = train_signature(
            [labeled(make_trace, 3.7 * v + 55.0) for v in base_values])
        np.testing.assert_allclose(moved.template, plain.template,
                                   rtol=1e-9, atol=1e-9)

    def test_label_from_meta_and_mismatch(self, make_trace):
        seg_a = labeled(make_trace, np.arange(20.0), label="a")
        seg_b = labeled(make_trace, np.arange(20.0), label="b")
        with pytest.raises(MixedLabels):
            train_signature([seg_a, seg_b])
        with pytest.raises(MixedLabels):
            train_signature([seg_a], label="b")
        assert train_signature([seg_a]).label == "a"

    def test_unlabeled_needs_explicit_label(self, make_trace):
        seg = make_trace(np.arange(20.0))
        with pytest.raises(MixedLabels):
            train_signature([seg])
        assert train_signature([seg], label="x").label == "x"

    def test_error_cases(self, make_trace):
        with pytest.raises(NoSegments):
            train_signature([])
        a = labeled(make_trace, np.arange(20.0), rate=100.0)
        b = labeled(make_trace, np.arange(20.0), rate=50.0)
        with pytest.raises(MixedRates):
            train_signature([a, b])
        c = labeled(make_trace, np.arange(20.0), channel=Channel.POWER)
        with pytest.raises(MixedChannels):
            train_signature([a, c])
        with pytest.raises(SegmentTooShort):
            train_signature([labeled(make_trace, np.arange(7.0))])


class TestSignatureJson:
    def test_roundtrip_bit_exact(self, make_trace):
        rng = np.random.default_rng(21)
        segs = [labeled(make_trace, rng.normal(120, 40, 30)) for _ in range(3)]
        sig = train_signature(segs, DtwConfig(band=0.2, cost=CostFn.ABS_DIFF),
                              smoothing=3)
        again = signature_from_json(signature_to_json(sig))
        assert np.array_equal(again.template, sig.template)
        assert again.label == sig.label
        assert again.threshold == sig.threshold
        assert again.dtw == sig.dtw
        assert again.smoothing_window == sig.smoothing_window
        assert again.rate == sig.rate and again.channel is sig.channel

    def test_version_checked(self):
        with pytest.raises(FileFormatError):
            signature_from_json(json.dumps({"version": "psc-sig/999"}))
        with pytest.raises(FileFormatError):
            signature_from_json("not json at all")

    def test_template_normalization_validated(self):
        doc = {
            "version": "psc-sig/1", "label": "x",
            "template": [5.0, 6.0, 7.0],  # not z-normalized
            "rate": 100.0, "channel": "current_magnitude",
            "threshold": 0.1, "training_count": 1,
            "dtw": {"band": 0.1, "cost": "squared_diff"},
            "smoothing_window": 5,
        }
        with pytest.raises(FileFormatError):
            signature_from_json(json.dumps(doc))
