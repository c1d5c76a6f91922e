"""Audio front end: PCM decoding, resampling, framing, log-mel."""

import base64

import numpy as np
import pytest

from musicxplain_bridge import (
    MelConfig,
    decode_pcm_b64,
    fit_frames,
    frame_signal,
    hz_to_mel,
    log_mel,
    mel_filterbank,
    mel_to_hz,
    normalize,
    resample_to,
)
from musicxplain_bridge.features import LOG_FLOOR


def encode(wave: np.ndarray) -> str:
    return base64.b64encode(np.asarray(wave, dtype="<f4").tobytes()).decode("ascii")


class TestDecodePcm:
    def test_round_trip(self):
        wave = np.linspace(-1.0, 1.0, 37, dtype=np.float32)
        out = decode_pcm_b64(encode(wave))
        assert out.dtype == np.float32
        np.testing.assert_array_equal(out, wave)

    def test_empty_string_is_empty_wave(self):
        assert decode_pcm_b64("").size == 0

    def test_rejects_non_base64(self):
        with pytest.raises(ValueError, match="base64"):
            decode_pcm_b64("%%%not-base64%%%")

    def test_rejects_partial_sample(self):
        text = base64.b64encode(b"\x00" * 6).decode("ascii")
        with pytest.raises(ValueError, match="multiple of 4"):
            decode_pcm_b64(text)

    def test_rejects_non_finite(self):
        wave = np.array([0.0, np.inf], dtype=np.float32)
        with pytest.raises(ValueError, match="non-finite"):
            decode_pcm_b64(encode(wave))

    def test_rejects_non_string(self):
        with pytest.raises(ValueError, match="string"):
            decode_pcm_b64(b"AAAA")


class TestResample:
    def test_identity_rate_returns_input(self):
        wave = np.ones(100, dtype=np.float32)
        assert resample_to(wave, 8000, 8000) is wave

    def test_upsampling_doubles_length(self):
        wave = np.zeros(1000, dtype=np.float32)
        assert resample_to(wave, 22050, 44100).shape == (2000,)

    def test_downsampling_halves_length(self):
        wave = np.zeros(1000, dtype=np.float32)
        assert resample_to(wave, 44100, 22050).shape == (500,)

    def test_output_dtype_float32(self):
        wave = np.random.default_rng(0).standard_normal(500).astype(np.float32)
        assert resample_to(wave, 8000, 16000).dtype == np.float32

    def test_tone_frequency_preserved(self):
        sr, target = 8000, 16000
        t = np.arange(sr) / sr
        wave = np.sin(2 * np.pi * 440.0 * t).astype(np.float32)
        out = resample_to(wave, sr, target)
        spectrum = np.abs(np.fft.rfft(out.astype(np.float64)))
        peak_hz = np.fft.rfftfreq(out.size, d=1.0 / target)[np.argmax(spectrum)]
        assert abs(peak_hz - 440.0) < 2.0


class TestMelScale:
    def test_zero_maps_to_zero(self):
        assert hz_to_mel(0.0) == 0.0

    def test_round_trip(self):
        hz = np.array([50.0, 440.0, 4000.0, 12000.0])
        np.testing.assert_allclose(mel_to_hz(hz_to_mel(hz)), hz, rtol=1e-12)

    def test_monotone(self):
        mels = hz_to_mel(np.linspace(0, 20000, 200))
        assert np.all(np.diff(mels) > 0)


class TestFilterbank:
    def test_shape(self):
        bank = mel_filterbank(128, 512, 44100)
        assert bank.shape == (128, 257)

    def test_nonnegative(self):
        bank = mel_filterbank(64, 512, 22050)
        assert np.all(bank >= 0.0)

    def test_coarse_bank_covers_every_filter(self):
        # wide triangles at this resolution, so every filter owns >= 1 bin
        bank = mel_filterbank(16, 512, 8000)
        assert np.all(bank.sum(axis=1) > 0.0)

    def test_responses_bounded_by_one(self):
        bank = mel_filterbank(32, 1024, 16000)
        assert bank.max() <= 1.0 + 1e-12


class TestFraming:
    def test_frame_count_and_content(self):
        wave = np.arange(8000, dtype=np.float64)
        frames = frame_signal(wave, 512, 256)
        assert frames.shape == (1 + (8000 - 512) // 256, 512)
        np.testing.assert_array_equal(frames[1], wave[256:768])

    def test_short_input_zero_padded_to_one_frame(self):
        wave = np.ones(100)
        frames = frame_signal(wave, 512, 256)
        assert frames.shape == (1, 512)
        assert np.all(frames[0, :100] == 1.0)
        assert np.all(frames[0, 100:] == 0.0)


class TestLogMel:
    MEL = MelConfig(n_mels=32, n_fft=512, hop=256, sample_rate=8000)

    def test_shape(self):
        wave = np.random.default_rng(1).standard_normal(8000)
        spec = log_mel(wave, self.MEL)
        assert spec.shape == (1 + (8000 - 512) // 256, 32)

    def test_deterministic(self):
        wave = np.random.default_rng(2).standard_normal(4000)
        np.testing.assert_array_equal(log_mel(wave, self.MEL), log_mel(wave, self.MEL))

    def test_silence_sits_on_log_floor(self):
        spec = log_mel(np.zeros(2048), self.MEL)
        np.testing.assert_allclose(spec, np.log(LOG_FLOOR), rtol=0, atol=1e-12)

    def test_tone_concentrates_energy_in_matching_band(self):
        t = np.arange(8000) / 8000
        wave = 0.5 * np.sin(2 * np.pi * 1000.0 * t)
        spec = log_mel(wave, self.MEL)
        hot = int(np.argmax(spec.mean(axis=0)))
        bank = mel_filterbank(32, 512, 8000)
        bins = np.fft.rfftfreq(512, d=1.0 / 8000)
        center_hz = bins[np.argmax(bank[hot])]
        assert abs(center_hz - 1000.0) < 200.0


class TestFitFrames:
    def test_truncates(self):
        spec = np.arange(40.0).reshape(10, 4)
        out = fit_frames(spec, 6)
        np.testing.assert_array_equal(out, spec[:6])

    def test_pads_with_log_floor(self):
        spec = np.zeros((3, 4))
        out = fit_frames(spec, 5)
        assert out.shape == (5, 4)
        np.testing.assert_array_equal(out[:3], spec)
        np.testing.assert_allclose(out[3:], np.log(LOG_FLOOR))

    def test_exact_fit_unchanged(self):
        spec = np.random.default_rng(3).standard_normal((7, 4))
        np.testing.assert_array_equal(fit_frames(spec, 7), spec)


class TestNormalize:
    def test_zero_mean_unit_std(self):
        spec = np.random.default_rng(4).standard_normal((20, 8)) * 3.0 + 5.0
        out = normalize(spec)
        assert abs(out.mean()) < 1e-12
        assert abs(out.std() - 1.0) < 1e-12

    def test_constant_input_maps_to_zeros(self):
        np.testing.assert_array_equal(normalize(np.full((4, 4), 2.5)), np.zeros((4, 4)))
