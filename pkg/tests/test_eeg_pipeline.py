import numpy as np
import pytest

from bciqoe.eeg import (
    EegSegment,
    Recording,
    ZScoreNormalizer,
    corrupt,
    segment,
    split,
)


def ramp_recording(n_channels=2, length=64, rate=160.0, events=((0, 0),)):
    samples = np.arange(n_channels * length, dtype=np.float64).reshape(n_channels, length)
    return Recording("u0", rate, samples, list(events))


class TestSegmentation:
    def test_full_corpus_count(self):
        rec = Recording("u0", 160.0, np.zeros((1, 255_680)), [(0, 0)])
        segs = segment(rec, width=16, overlap=0.5)
        assert len(segs) == 31_959

    def test_single_window(self):
        rec = ramp_recording(length=16)
        segs = segment(rec, width=16, overlap=0.5)
        assert len(segs) == 1
        np.testing.assert_array_equal(segs[0].window, rec.samples)

    def test_disjoint_windows_no_overlap(self):
        rec = ramp_recording(length=32)
        segs = segment(rec, width=16, overlap=0.0)
        assert len(segs) == 2
        np.testing.assert_array_equal(segs[0].window, rec.samples[:, :16])
        np.testing.assert_array_equal(segs[1].window, rec.samples[:, 16:])

    def test_label_from_event_at_first_sample(self):
        rec = ramp_recording(length=64, events=[(0, 0), (32, 3)])
        segs = segment(rec, width=16, overlap=0.0)
        assert [s.label for s in segs] == [0, 0, 3, 3]

    def test_windows_before_first_event_dropped(self):
        rec = ramp_recording(length=64, events=[(32, 1)])
        segs = segment(rec, width=16, overlap=0.0)
        assert [s.label for s in segs] == [1, 1]

    def test_too_short_recording(self):
        with pytest.raises(ValueError):
            segment(ramp_recording(length=8), width=16)

    def test_segment_ids_unique(self):
        rec = ramp_recording(length=256)
        segs = segment(rec, width=16, overlap=0.5)
        ids = {s.seg_id for s in segs}
        assert len(ids) == len(segs)


class TestZScore:
    def make_segments(self, rng, n=40, mean=5.0, scale=3.0):
        segs = []
        for i in range(n):
            window = mean + scale * rng.standard_normal((4, 16))
            segs.append(EegSegment("u0", i, window, label=i % 2))
        return segs

    def test_train_statistics_standardized(self):
        rng = np.random.default_rng(0)
        segs = self.make_segments(rng)
        out = ZScoreNormalizer().fit_transform(segs)
        stacked = np.concatenate([s.window for s in out], axis=1)
        np.testing.assert_allclose(stacked.mean(axis=1), 0.0, atol=1e-9)
        np.testing.assert_allclose(stacked.std(axis=1), 1.0, atol=1e-6)
        assert all(s.normalized for s in out)

    def test_idempotent_on_own_output(self):
        rng = np.random.default_rng(1)
        first = ZScoreNormalizer().fit_transform(self.make_segments(rng))
        second = ZScoreNormalizer().fit_transform(first)
        for a, b in zip(first, second):
            np.testing.assert_allclose(a.window, b.window, atol=1e-6)

    def test_test_partition_uses_train_stats(self):
        rng = np.random.default_rng(2)
        train = self.make_segments(rng, mean=0.0, scale=1.0)
        test = self.make_segments(rng, mean=10.0, scale=5.0)
        norm = ZScoreNormalizer().fit(train)
        out = norm.transform(test)
        stacked = np.concatenate([s.window for s in out], axis=1)
        # transformed with train stats, the shifted test set keeps its offset
        assert np.all(np.abs(stacked.mean(axis=1)) > 1.0)

    def test_zero_variance_channel_centered_only(self):
        rng = np.random.default_rng(3)
        segs = []
        for i in range(10):
            window = rng.standard_normal((2, 16))
            window[1] = 7.0  # constant channel
            segs.append(EegSegment("u0", i, window, label=0))
        norm = ZScoreNormalizer().fit(segs)
        assert list(norm.degenerate_channels_) == [1]
        out = norm.transform(segs)
        np.testing.assert_allclose(out[0].window[1], 0.0, atol=1e-12)

    def test_transform_before_fit_raises(self):
        with pytest.raises(RuntimeError):
            ZScoreNormalizer().transform([])

    def test_get_params_roundtrip(self):
        norm = ZScoreNormalizer(eps=1e-9)
        assert norm.get_params() == {"eps": 1e-9}
        norm.set_params(eps=1e-6)
        assert norm.eps == 1e-6


class TestSplit:
    def make_balanced(self, n_per_class=25, n_classes=4, user="u0"):
        segs = []
        idx = 0
        for c in range(n_classes):
            for _ in range(n_per_class):
                segs.append(EegSegment(user, idx, np.zeros((2, 4)), label=c))
                idx += 1
        return segs

    def test_counts_per_class(self):
        segs = self.make_balanced()
        train, test = split(segs, ratio=0.8, rng=0)
        assert len(train) == 80 and len(test) == 20
        for c in range(4):
            assert sum(s.label == c for s in train) == 20
            assert sum(s.label == c for s in test) == 5

    def test_same_seed_same_split(self):
        segs = self.make_balanced()
        a = split(segs, rng=np.random.default_rng(7))
        b = split(segs, rng=np.random.default_rng(7))
        assert [s.seg_id for s in a[0]] == [s.seg_id for s in b[0]]

    def test_union_and_disjoint(self):
        segs = self.make_balanced(n_per_class=13)
        train, test = split(segs, ratio=0.8, rng=1)
        train_ids = {s.seg_id for s in train}
        test_ids = {s.seg_id for s in test}
        assert not train_ids & test_ids
        assert train_ids | test_ids == {s.seg_id for s in segs}

    def test_stratified_within_one_segment(self):
        segs = self.make_balanced(n_per_class=13)
        train, _ = split(segs, ratio=0.8, rng=2)
        for c in range(4):
            got = sum(s.label == c for s in train)
            assert abs(got - 0.8 * 13) <= 1.0

    def test_tiny_stratum_rejected(self):
        segs = [EegSegment("u0", 0, np.zeros((1, 2)), label=0)]
        with pytest.raises(ValueError):
            split(segs, rng=0)


class TestCorrupt:
    def seg(self):
        return EegSegment("u0", 0, np.ones((2, 4)), label=1)

    def test_error_free(self):
        out = corrupt(self.seg(), 0.0, mode="sample-drop", rng=0)
        np.testing.assert_array_equal(out.window, np.ones((2, 4)))
        assert out.eps_star == 0.0 and not out.dropped

    def test_certain_loss(self):
        for seed in range(5):
            out = corrupt(self.seg(), 1.0, mode="sample-drop", rng=seed)
            np.testing.assert_array_equal(out.window, 0.0)

    def test_analytical_keeps_window(self):
        out = corrupt(self.seg(), 0.7, mode="analytical")
        np.testing.assert_array_equal(out.window, np.ones((2, 4)))
        assert out.eps_star == 0.7

    def test_drop_frequency_matches_probability(self):
        rng = np.random.default_rng(11)
        eps = 0.31
        drops = sum(corrupt(self.seg(), eps, "sample-drop", rng).dropped for _ in range(100_000))
        assert abs(drops / 100_000 - eps) < 0.005

    def test_invalid_probability(self):
        with pytest.raises(ValueError):
            corrupt(self.seg(), 1.5, "analytical")
