"""EDF writer -> parser round trips, quantization bounds, and fuzz totality."""

import numpy as np
import pytest

from bciqoe.eeg import EdfError, Recording, parse_edf, write_edf
from bciqoe.eeg.edf import default_run_label_map, load_edf_directory


def ramp_recording(n_channels=2, length=32, rate=16.0, events=((0, 0), (16, 1))):
    samples = np.linspace(-50, 50, n_channels * length).reshape(n_channels, length)
    return Recording("S001", rate, samples, list(events))


def quant_step(blob_rec):
    return (np.max(np.abs(blob_rec.samples)) * 2.0) / 65535.0


class TestRoundTrip:
    def test_ramp_roundtrip(self):
        rec = ramp_recording()
        parsed = parse_edf(write_edf(rec))
        assert parsed.samples.shape == rec.samples.shape
        step = quant_step(rec)
        assert np.max(np.abs(parsed.samples - rec.samples)) <= step
        assert parsed.events == rec.events
        assert parsed.rate == rec.rate

    def test_physical_zero_survives_symmetric_range(self):
        # symmetric physical range (here +-187.5) maps a zero sample onto
        # digital ~0 and back to within one quantization step of zero
        samples = np.zeros((1, 32))
        samples[0, 0] = 187.5
        samples[0, 1] = -187.5
        rec = Recording("S001", 16.0, samples, [(0, 0)])
        parsed = parse_edf(write_edf(rec))
        step = (2.0 * 187.5) / 65535.0
        assert np.all(np.abs(parsed.samples[0, 2:]) <= step)

    def test_empty_annotations(self):
        rec = Recording("S001", 16.0, np.ones((1, 32)), [])
        parsed = parse_edf(write_edf(rec))
        assert parsed.events == []

    def test_no_annotation_channel(self):
        rec = ramp_recording()
        parsed = parse_edf(write_edf(rec, include_annotations=False))
        assert parsed.events == []
        assert parsed.samples.shape == rec.samples.shape

    def test_non_integral_second_falls_back_to_single_record(self):
        rec = Recording("S001", 16.0, np.ones((2, 40)), [(0, 0)])  # 2.5 s
        parsed = parse_edf(write_edf(rec))
        assert parsed.samples.shape == (2, 40)
        assert parsed.rate == pytest.approx(16.0)

    def test_fifty_fuzzed_recordings(self):
        rng = np.random.default_rng(0)
        for trial in range(50):
            n_ch = int(rng.integers(1, 5))
            n_sec = int(rng.integers(1, 4))
            rate = int(rng.choice([8, 16, 32]))
            length = n_sec * rate
            scale = float(rng.uniform(0.1, 500.0))
            samples = scale * rng.standard_normal((n_ch, length))
            n_events = int(rng.integers(0, 4))
            onsets = sorted(rng.choice(length, size=n_events, replace=False).tolist())
            events = [(int(o), int(rng.integers(0, 4))) for o in onsets]
            rec = Recording(f"S{trial:03d}", float(rate), samples, events)
            parsed = parse_edf(write_edf(rec))
            step = (np.max(np.abs(samples)) * 2.0 * 1.0000001) / 65535.0
            assert np.max(np.abs(parsed.samples - samples)) <= step, f"trial {trial}"
            assert parsed.events == events, f"trial {trial}"


class TestErrors:
    def test_bad_version(self):
        with pytest.raises(EdfError):
            parse_edf(b"9" + b" " * 300)

    def test_truncation_fuzz_always_structured(self):
        blob = write_edf(ramp_recording())
        rng = np.random.default_rng(1)
        cuts = set(rng.integers(0, len(blob), size=120).tolist()) | {0, 1, 255, 256, len(blob) - 1}
        for cut in cuts:
            try:
                parse_edf(blob[:cut])
            except EdfError:
                continue
            except Exception as exc:  # pragma: no cover
                pytest.fail(f"truncation at {cut} raised {type(exc).__name__}: {exc}")
            else:
                pytest.fail(f"truncation at {cut} parsed successfully")

    def test_byte_flip_fuzz_never_crashes(self):
        blob = bytearray(write_edf(ramp_recording()))
        rng = np.random.default_rng(2)
        for _ in range(200):
            pos = int(rng.integers(0, len(blob)))
            mutated = bytearray(blob)
            mutated[pos] = int(rng.integers(0, 256))
            try:
                parse_edf(bytes(mutated))
            except EdfError:
                pass  # structured failure is fine

    def test_garbage_annotation_syntax(self):
        rec = ramp_recording()
        blob = bytearray(write_edf(rec))
        marker = blob.find(b"\x14\x14")
        assert marker > 0
        blob[marker - 2 : marker] = b"xx"  # corrupt the TAL onset
        with pytest.raises(EdfError, match="annotation"):
            parse_edf(bytes(blob))

    def test_error_carries_offset(self):
        try:
            parse_edf(b"0" + b" " * 100)
        except EdfError as exc:
            assert exc.offset is not None
        else:
            pytest.fail("expected EdfError")


class TestDirectoryLoading:
    def test_run_label_mapping(self, tmp_path):
        rate, length = 16.0, 64
        rng = np.random.default_rng(3)
        # run 1: baseline-open (T0 -> 0); run 3: fist task (T1/T2 -> 2)
        rec1 = Recording("S001", rate, rng.standard_normal((2, length)), [(0, 0)])
        rec3 = Recording("S001", rate, rng.standard_normal((2, length)), [(0, 1), (32, 2)])
        write_edf(rec1, tmp_path / "S001R01.edf")
        write_edf(rec3, tmp_path / "S001R03.edf")
        by_user = load_edf_directory(tmp_path)
        assert set(by_user) == {"S001"}
        runs = by_user["S001"]
        assert runs[0].events == [(0, 0)]
        assert runs[1].events == [(0, 2), (32, 2)]

    def test_default_map_covers_all_runs(self):
        mapping = default_run_label_map()
        assert set(mapping) == set(range(1, 15)) - {0}
        labels = {lbl for runs in mapping.values() for lbl in runs.values()}
        assert labels == {0, 1, 2, 3}

    def test_missing_directory_contents(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_edf_directory(tmp_path)
