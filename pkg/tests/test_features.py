"""Feature file format, fallback extraction, and resampling contracts."""

import numpy as np
import pytest

from speechrig.errors import DataError, FeatureFileError
from speechrig.features import (
    AudioClip,
    FallbackConfig,
    FeatureSequence,
    extract_fallback_features,
    load_features,
    read_feature_csv,
    read_feature_file,
    resample_features,
    write_feature_file,
)


class TestFeatureFile:
    def test_header_echo(self, tmp_path):
        rng = np.random.default_rng(0)
        seq = FeatureSequence(rng.normal(0, 1, (50, 768)).astype(np.float32), 50.0)
        path = tmp_path / "f.emof"
        write_feature_file(path, seq)
        back = read_feature_file(path)
        assert back.n_frames == 50 and back.n_features == 768
        assert back.rate_hz == 50.0

    def test_roundtrip_bitwise(self, tmp_path):
        rng = np.random.default_rng(1)
        seq = FeatureSequence(rng.normal(0, 1, (13, 7)).astype(np.float32), 50.0)
        path = tmp_path / "f.emof"
        write_feature_file(path, seq)
        back = read_feature_file(path)
        assert np.array_equal(back.data, seq.data)
        path2 = tmp_path / "g.emof"
        write_feature_file(path2, back)
        assert path.read_bytes() == path2.read_bytes()

    def test_truncated_payload_rejected(self, tmp_path):
        seq = FeatureSequence(np.ones((4, 3), dtype=np.float32), 50.0)
        path = tmp_path / "f.emof"
        write_feature_file(path, seq)
        blob = path.read_bytes()
        path.write_bytes(blob[:-5])
        with pytest.raises(FeatureFileError, match="truncated"):
            read_feature_file(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "f.emof"
        path.write_bytes(b"NOPE" + bytes(60))
        with pytest.raises(FeatureFileError, match="magic"):
            read_feature_file(path)

    def test_nan_payload_rejected(self, tmp_path):
        data = np.ones((4, 3), dtype=np.float32)
        seq = FeatureSequence(data, 50.0)
        path = tmp_path / "f.emof"
        write_feature_file(path, seq)
        blob = bytearray(path.read_bytes())
        blob[20:24] = np.array([np.nan], dtype="<f4").tobytes()
        path.write_bytes(bytes(blob))
        with pytest.raises(FeatureFileError, match="non-finite"):
            read_feature_file(path)

    def test_csv_import(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("1.0,2.0\n3.0,4.0\n")
        seq = read_feature_csv(path, 50.0)
        assert seq.data.shape == (2, 2)
        assert seq.rate_hz == 50.0
        # load_features dispatches on magic
        assert load_features(path).data.shape == (2, 2)


class TestFallbackExtractor:
    def test_one_second_at_16k_gives_50_frames(self):
        rng = np.random.default_rng(2)
        clip = AudioClip(rng.uniform(-0.5, 0.5, 16000), 16000)
        seq = extract_fallback_features(clip, FallbackConfig(frame_hop=320))
        assert seq.n_frames == 50
        assert seq.rate_hz == 50.0
        assert seq.n_features == FallbackConfig().n_coeffs

    def test_silence_gives_identical_frames(self):
        clip = AudioClip(np.zeros(8000), 16000)
        seq = extract_fallback_features(clip)
        assert np.all(seq.data == seq.data[0])

    def test_amplitude_scaling_shifts_only_coefficient_zero(self):
        # Broadband noise keeps every mel band far above the log floor, so
        # doubling the waveform shifts the log spectrum uniformly: only the
        # DC cepstral coefficient moves.
        rng = np.random.default_rng(3)
        samples = rng.uniform(-0.4, 0.4, 16000)
        a = extract_fallback_features(AudioClip(samples, 16000))
        b = extract_fallback_features(AudioClip(2.0 * samples, 16000))
        diff = b.data.astype(np.float64) - a.data.astype(np.float64)
        shift = np.log(4.0) * np.sqrt(FallbackConfig().n_mels)
        np.testing.assert_allclose(diff[:, 0], shift, atol=1e-4)
        np.testing.assert_allclose(diff[:, 1:], 0.0, atol=1e-4)

    def test_spectrum_matches_naive_dft(self):
        # One frame of the pipeline's FFT against an explicit DFT sum.
        rng = np.random.default_rng(4)
        frame = rng.uniform(-1, 1, 640) * np.hanning(640)
        n_fft = 1024
        padded = np.concatenate([frame, np.zeros(n_fft - frame.size)])
        k = np.arange(n_fft // 2 + 1)
        n = np.arange(n_fft)
        naive = (padded[None, :] * np.exp(-2j * np.pi * k[:, None] * n[None, :] / n_fft)).sum(axis=1)
        fast = np.fft.rfft(frame, n=n_fft)
        np.testing.assert_allclose(fast, naive, atol=1e-8)

    def test_too_short_clip_rejected(self):
        clip = AudioClip(np.zeros(100), 16000)
        with pytest.raises(DataError, match="too short"):
            extract_fallback_features(clip)


class TestResampling:
    def test_constant_matrix_reproduced_exactly(self):
        seq = FeatureSequence(np.full((50, 3), 0.7, dtype=np.float32), 50.0)
        out = resample_features(seq, 60.0)
        assert out.n_frames == 60
        assert np.all(out.data == np.float32(0.7))

    def test_50_frames_at_50hz_give_60(self):
        rng = np.random.default_rng(5)
        seq = FeatureSequence(rng.normal(0, 1, (50, 4)).astype(np.float32), 50.0)
        assert resample_features(seq, 60.0).n_frames == 60

    def test_linear_column_interpolates_exactly(self):
        ramp = np.arange(50, dtype=np.float32)[:, None]
        seq = FeatureSequence(ramp, 50.0)
        out = resample_features(seq, 60.0)
        expected = (np.arange(60) * 49 / 59).astype(np.float32)
        assert np.array_equal(out.data[:, 0], expected)

    def test_identity_at_equal_rates(self):
        rng = np.random.default_rng(6)
        seq = FeatureSequence(rng.normal(0, 1, (37, 5)).astype(np.float32), 50.0)
        out = resample_features(seq, 50.0)
        assert np.array_equal(out.data, seq.data)

    def test_endpoints_preserved(self):
        rng = np.random.default_rng(7)
        seq = FeatureSequence(rng.normal(0, 1, (23, 6)).astype(np.float32), 50.0)
        out = resample_features(seq, 60.0)
        assert np.array_equal(out.data[0], seq.data[0])
        assert np.array_equal(out.data[-1], seq.data[-1])

    def test_envelope_preserved(self):
        rng = np.random.default_rng(8)
        seq = FeatureSequence(rng.normal(0, 1, (40, 8)).astype(np.float32), 50.0)
        out = resample_features(seq, 60.0)
        assert np.all(out.data.max(axis=0) <= seq.data.max(axis=0))
        assert np.all(out.data.min(axis=0) >= seq.data.min(axis=0))

    def test_downsampling_works(self):
        rng = np.random.default_rng(9)
        seq = FeatureSequence(rng.normal(0, 1, (60, 2)).astype(np.float32), 60.0)
        assert resample_features(seq, 50.0).n_frames == 50

    def test_errors(self):
        seq = FeatureSequence(np.ones((1, 2), dtype=np.float32), 50.0)
        with pytest.raises(DataError):
            resample_features(seq, 60.0)
        two = FeatureSequence(np.ones((2, 2), dtype=np.float32), 50.0)
        with pytest.raises(DataError):
            resample_features(two, -1.0)
